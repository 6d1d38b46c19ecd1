from __future__ import annotations

import csv
import io

import numpy as np
import pytest

from projfinsler import catalog
from projfinsler.geodesics import (
    ball_domain,
    endpoint_error_ratio,
    integrate_geodesic,
    pointset_compare,
    probe_conditions,
    write_csv,
)


def test_euclidean_straight_line():
    tr = integrate_geodesic(catalog.euclidean(1), [0], [1], 0.01, 100)
    assert len(tr) == 101
    assert np.abs(tr.z[:, 0] - tr.s).max() <= 1e-12
    assert np.allclose(np.diff(tr.s), 0.01)


def test_bergman_diameter_stays_real():
    tr = integrate_geodesic(catalog.bergman(1), [0], [1], 0.01, 100, domain=ball_domain(), weakly_kahler_tol=1e-9)
    assert np.abs(tr.z[:, 0].imag).max() <= 1e-9
    # speed decays towards the boundary but the trace stays inside
    assert 0 < tr.z[-1, 0].real < 1


def test_rk4_order():
    ratio = endpoint_error_ratio(catalog.bergman(1), [0.3], [1j])
    assert 12 <= ratio <= 20


def test_domain_exit_truncates():
    tr = integrate_geodesic(catalog.euclidean(1), [0.9], [1], 0.05, 10, domain=ball_domain())
    assert tr.truncated
    assert np.abs(tr.z[-1]).max() < 1


def test_weakly_kahler_assertion():
    with pytest.raises(AssertionError):
        integrate_geodesic(catalog.conformal(2), [0.5, 0], [1, 1], 0.01, 5, weakly_kahler_tol=1e-9)
    tr = integrate_geodesic(catalog.conformal(2), [0.5, 0], [1, 1], 0.01, 5)
    assert tr.max_theta > 0.1


@pytest.mark.parametrize("z0, eta0", [([0], [0]), ([0, 0], [1])])
def test_bad_initial_data(z0, eta0):
    with pytest.raises(ValueError):
        integrate_geodesic(catalog.euclidean(1), z0, eta0)


def test_identical_traces_coincide():
    tr = integrate_geodesic(catalog.bergman(1), [0.3], [1j], 0.01, 30)
    assert pointset_compare(tr, tr) == {"coincide": True, "max_deviation": 0.0}


def test_euclidean_and_bergman_diameters_coincide():
    a = integrate_geodesic(catalog.euclidean(1), [0], [1], 0.01, 100)
    b = integrate_geodesic(catalog.bergman(1), [0], [1], 0.01, 100, domain=ball_domain())
    assert pointset_compare(a, b, tol=1e-6)["coincide"]


@pytest.mark.parametrize("n", [1, 2])
def test_probe_conditions_coincide(n):
    for z0, e0 in probe_conditions(n):
        a = integrate_geodesic(catalog.euclidean(n), z0, e0, 0.01, 60)
        b = integrate_geodesic(catalog.bergman(n), z0, e0, 0.01, 60, domain=ball_domain())
        assert pointset_compare(a, b)["max_deviation"] <= 1e-5


def test_off_diameter_geodesic_bends():
    # away from diameters the disc geodesic is a circular arc, not a chord
    a = integrate_geodesic(catalog.euclidean(1), [0.3], [1j], 0.01, 60)
    b = integrate_geodesic(catalog.bergman(1), [0.3], [1j], 0.01, 60, domain=ball_domain())
    assert pointset_compare(a, b)["max_deviation"] > 1e-2


def test_pointset_compare_ignores_parameterization():
    s = np.linspace(0, 1, 11)
    fast = (s * (1 + 1j))[:, None]
    slow = (s**2 * 0.5 * (1 + 1j))[:, None]
    assert pointset_compare(fast, slow)["max_deviation"] <= 1e-15


def test_pointset_compare_errors():
    short = np.zeros((2, 1), dtype=complex)
    with pytest.raises(ValueError):
        pointset_compare(short, short)
    a = np.zeros((3, 1), dtype=complex)
    with pytest.raises(ValueError):
        pointset_compare(a, a + 1)


def test_csv_export():
    tr = integrate_geodesic(catalog.euclidean(2), [0, 0], [1, 1j], 0.1, 3)
    buf = io.StringIO()
    write_csv(tr, buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["s", "re_z1", "im_z1", "re_z2", "im_z2"]
    assert len(rows) == 5
    assert [float(x) for x in rows[2]] == pytest.approx([0.1, 0.1, 0, 0, 0.1])
