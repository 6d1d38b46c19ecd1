from __future__ import annotations

import numpy as np
import pytest

from projfinsler import catalog
from projfinsler import expr as ex
from projfinsler.connections import connection_bundle
from projfinsler.curvatures import BerwaldCurvature
from projfinsler.expr import EvalPoint
from projfinsler.pair import (
    HomogeneityError,
    ProjectiveChange,
    projective_relatedness_test,
    recover_projective_factor,
    synthetic_change,
)
from projfinsler.projective import DouglasBundle, WeylBundle
from projfinsler.tensors import FinslerMetric, max_abs, sample_points

P1 = EvalPoint([0.5], [1])
BERGMAN_P = "zb1*e1/(1 - z1*zb1)"


def test_identity_change_is_zero():
    v = recover_projective_factor(catalog.conformal(2), catalog.conformal(2), EvalPoint([0.3, 0.1], [1, 0.4j]))
    assert v == {"S": 0, "Q": 0, "P": 0}


def test_euclidean_to_bergman_factor():
    v = recover_projective_factor(catalog.euclidean(1), catalog.bergman(1), P1)
    # S = (1/2)(4/3 - 0), Q = 0
    assert v["S"] == pytest.approx(2 / 3, abs=1e-14)
    assert v["Q"] == pytest.approx(0, abs=1e-14)
    assert v["P"] == pytest.approx(2 / 3, abs=1e-14)


def test_constant_scaling_leaves_spray_unchanged():
    m = catalog.quartic(2)
    mt = FinslerMetric(2, ex.mul(ex.const(3.0), m.L))
    p = EvalPoint([0.2, 0.1j], [0.7, -0.3])
    assert abs(recover_projective_factor(m, mt, p)["P"]) <= 1e-14


def test_change_invariants():
    pc = ProjectiveChange(catalog.euclidean(2), catalog.bergman(2))
    for p in sample_points(2, 4, seed=21):
        v = pc.values(p)
        assert v["S"] - 0.5 * v["Q"] == pytest.approx(v["P"], abs=1e-14)
        assert pc.homogeneity_defect(p) <= 1e-12
        assert pc.connection_residual(p) <= 1e-12
        res, scale = pc.spray_residual(p)
        assert res <= 1e-12 * scale
        # metric-level route gives the same factor
        assert pc.metric_route_factor(p) == pytest.approx(v["P"], abs=1e-12)


def test_mismatched_dimensions_rejected():
    with pytest.raises(ValueError):
        ProjectiveChange(catalog.euclidean(1), catalog.bergman(2))


@pytest.mark.parametrize(
    "a, b, expected",
    [
        (lambda: catalog.euclidean(1), lambda: catalog.bergman(1), "related"),
        (lambda: catalog.euclidean(2), lambda: catalog.bergman(2), "related"),
        (lambda: catalog.bergman(2), lambda: catalog.quartic(2), "related"),
        (lambda: catalog.conformal(2), lambda: catalog.conformal(2), "related"),
        (lambda: catalog.euclidean(2), lambda: catalog.conformal(2), "not related"),
    ],
)
def test_relatedness_verdicts(a, b, expected):
    ma, mb = a(), b()
    v = projective_relatedness_test(ma, mb, sample_points(ma.n, 10, seed=3, z_radius=0.8))
    assert v.verdict == expected
    assert v.paths_agree
    if expected == "related":
        assert v.residual_spray <= 1e-8 and v.residual_metric <= 1e-8


def test_self_relatedness_residual_is_zero():
    m = catalog.conformal(2)
    v = projective_relatedness_test(m, m, sample_points(2, 5))
    assert v.residual_spray == 0
    assert v.residual_metric <= 1e-15


def test_relatedness_needs_points():
    with pytest.raises(ValueError):
        projective_relatedness_test(catalog.euclidean(1), catalog.bergman(1), [])


def test_zero_change_keeps_data():
    m = catalog.bergman(2)
    ch = synthetic_change(m, "0")
    base = connection_bundle(m).spray
    for i in range(2):
        assert ch.spray.G[i] is base.G[i]
    assert max_abs(ch.spray.Nc.at(EvalPoint([0.1, 0.2], [1, 1])) - base.Nc.at(EvalPoint([0.1, 0.2], [1, 1]))) == 0


def test_synthetic_change_reproduces_bergman():
    ch = synthetic_change(catalog.euclidean(1), BERGMAN_P)
    cb = connection_bundle(catalog.bergman(1))
    for p in [P1, *sample_points(1, 5, seed=2)]:
        assert ex.evaluate(ch.spray.G[0], p) == pytest.approx(ex.evaluate(cb.G[0], p), abs=1e-13)
        assert np.allclose(ch.spray.Nc.at(p), cb.Nc.at(p), atol=1e-13)
        assert np.allclose(ch.spray.Gjk.at(p), cb.Gjk.at(p), atol=1e-13)
        assert np.allclose(ch.spray.Gjkb.at(p), cb.Gjkb.at(p), atol=1e-13)
    assert ex.evaluate(ch.spray.G[0], P1) == pytest.approx(2 / 3, abs=1e-14)
    assert ch.spray.Nc.at(P1)[0, 0] == pytest.approx(4 / 3, abs=1e-14)


@pytest.mark.parametrize("P", ["e1*eb1", "z1", "e1^2"])
def test_non_homogeneous_factor_rejected(P):
    with pytest.raises(HomogeneityError):
        synthetic_change(catalog.euclidean(1), P)


def test_douglas_and_weyl_invariance():
    P = "(z1*e1^2*eb1 + zb2*e2^2*eb2)/(e1*eb1 + e2*eb2) + (1 + z2*zb1)*e1"
    for m in (catalog.bergman(2), catalog.conformal(2)):
        base = connection_bundle(m).spray
        ch = synthetic_change(m, P)
        d0, d1 = DouglasBundle(base), DouglasBundle(ch.spray)
        for p in sample_points(2, 3, seed=22):
            D0 = np.array([ex.evaluate(x, p) for x in d0.D])
            D1 = np.array([ex.evaluate(x, p) for x in d1.D])
            assert max_abs(D1 - D0) <= 1e-12 * (1 + max_abs(D0))
            for k, v in d0.at(p).items():
                assert max_abs(d1.at(p)[k] - v) <= 1e-12 * (1 + max_abs(v))
    # Weyl invariance is claimed for weakly Kähler metrics
    base = connection_bundle(catalog.bergman(2)).spray
    ch = synthetic_change(catalog.bergman(2), P)
    w0, w1 = WeylBundle(BerwaldCurvature(base)), WeylBundle(BerwaldCurvature(ch.spray))
    p = EvalPoint([0.3, -0.2j], [1, 0.5])
    assert max_abs(w1.W2.at(p) - w0.W2.at(p)) <= 1e-12
    assert max_abs(w1.W3.at(p) - w0.W3.at(p)) <= 1e-12


def test_weyl_change_law():
    ch = synthetic_change(catalog.bergman(2), "zb1*e1 + zb2*e2 + z1*e2")
    for p in sample_points(2, 3, seed=23):
        assert ch.curvature_change_residual(p) <= 1e-12
        X = ch.X_kh.at(p)
        assert max_abs(X + X.T) <= 1e-14
