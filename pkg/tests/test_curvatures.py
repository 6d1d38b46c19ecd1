from __future__ import annotations

import numpy as np
import pytest

from projfinsler import catalog
from projfinsler.connections import connection_bundle
from projfinsler.curvatures import (
    berwald_curvatures,
    chern_finsler_curvature,
    covariant_derivative,
    curvature_derivative_symmetries,
    curvature_identity_residuals,
    generalized_berwald_residuals,
    holomorphic_curvature,
    lowered_K,
    weyl_ricci_suite,
)
from projfinsler.expr import EvalPoint
from projfinsler.tensors import max_abs, sample_points

P_B1 = EvalPoint([0.5], [1])
METRICS = {
    "euclidean": lambda: catalog.euclidean(2),
    "bergman1": lambda: catalog.bergman(1),
    "bergman2": lambda: catalog.bergman(2),
    "quartic": lambda: catalog.quartic(2),
    "conformal": lambda: catalog.conformal(2),
}


def test_bergman1_curvature_values():
    m = catalog.bergman(1)
    # K = R = -2/(1 - |z|^2)^2 at |z| = 1/2
    assert berwald_curvatures(m).Kjkbh.at(P_B1)[0, 0, 0, 0] == pytest.approx(-32 / 9, abs=1e-12)
    assert chern_finsler_curvature(m).R.at(P_B1)[0, 0, 0, 0] == pytest.approx(-32 / 9, abs=1e-12)
    assert lowered_K(m).at(P_B1)[0, 0, 0, 0] == pytest.approx(-512 / 81, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_bergman_holomorphic_curvature_is_minus_four(n):
    m = catalog.bergman(n)
    for p in sample_points(n, 8, seed=1):
        assert holomorphic_curvature(m, p) == pytest.approx(-4, abs=1e-10)


def test_euclidean_is_flat():
    m = catalog.euclidean(2)
    bc = berwald_curvatures(m)
    assert bc.Kjkh.is_zero() and bc.Kjkbh.is_zero()
    assert holomorphic_curvature(m, EvalPoint([0.1, 0.2], [1, 1j])) == 0


@pytest.mark.parametrize("name", sorted(METRICS))
def test_identities(name):
    m = METRICS[name]()
    bc = berwald_curvatures(m)
    for p in sample_points(m.n, 4, seed=3):
        res = curvature_identity_residuals(bc, p)
        assert max(res.values()) <= 1e-10 * connection_bundle(m).scale(p), res


def test_identities_on_mixed_metric():
    m = catalog.mixed(2)
    bc = berwald_curvatures(m)
    p = sample_points(2, 1, seed=8)[0]
    res = curvature_identity_residuals(bc, p)
    assert max(res.values()) <= 1e-10 * connection_bundle(m).scale(p), res


@pytest.mark.parametrize("name", ["euclidean", "bergman2", "quartic", "conformal"])
def test_generalized_berwald_metrics(name):
    m = METRICS[name]()
    bc = berwald_curvatures(m)
    for p in sample_points(2, 3, seed=6):
        assert max(generalized_berwald_residuals(bc, p).values()) <= 1e-12


def test_curvature_derivative_symmetries():
    p = EvalPoint([0.5, 0.1], [1, 0.3j])
    assert max(curvature_derivative_symmetries(catalog.bergman(2), p).values()) <= 1e-12
    # conformal is not complex Berwald; the |h symmetry breaks
    res = curvature_derivative_symmetries(catalog.conformal(2), p)
    assert res["K_jrbk|h = K_jrbh|k"] == pytest.approx(0.25, abs=1e-12)


def test_covariant_derivative_of_metric_vanishes():
    m = catalog.bergman(2)
    cb = connection_bundle(m)
    p = EvalPoint([0.2, -0.3j], [0.5, 1])
    for direction in ("h", "hbar"):
        assert max_abs(covariant_derivative(m.g, direction, cb).at(p)) <= 1e-12
    with pytest.raises(ValueError):
        covariant_derivative(m.g, "x", cb)


def test_covariant_derivative_signature():
    cb = connection_bundle(catalog.conformal(2))
    t = covariant_derivative(berwald_curvatures(cb.m).Kjkbh, "hbar", cb)
    assert t.signature.code() == "^ _ _b _ _b"


def test_ricci_contractions_on_bergman():
    out = weyl_ricci_suite(catalog.bergman(2), EvalPoint([0.5, 0.1], [1, 0.3j]))
    assert max_abs(out["K_kh"]) <= 1e-14
    assert max_abs(out["H_k"]) <= 1e-14
    assert float(out["link_residual"]) <= 1e-14
    assert max_abs(out["K_kbh"]) > 1


def test_ricci_link_on_conformal():
    out = weyl_ricci_suite(catalog.conformal(2), EvalPoint([0.5, 0.1], [1, 0.3j]))
    assert float(out["link_residual"]) <= 1e-14
    assert np.all(np.isfinite(out["H_k"]))
