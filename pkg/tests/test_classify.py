from __future__ import annotations

import pytest

from projfinsler import catalog
from projfinsler.classify import PREDICATES, classify, gberwald_probe, flat_spray_residual, rho_family_check
from projfinsler.expr import EvalPoint
from projfinsler.tensors import sample_points

PTS2 = sample_points(2, 6, seed=31)


def test_euclidean_everything_true():
    rep = classify(catalog.euclidean(2), PTS2)
    assert all(rep.verdicts[k] for k in PREDICATES)
    assert rep.constant_KF == 0
    assert not rep.violations


@pytest.mark.parametrize("n", [1, 2])
def test_bergman(n):
    rep = classify(catalog.bergman(n), sample_points(n, 6, seed=31))
    for key in ("purely_hermitian", "kahler", "complex_berwald", "douglas", "projectively_flat"):
        assert rep.verdicts[key], key
    assert not rep.verdicts["locally_minkowski"]
    assert rep.constant_KF == pytest.approx(-4, abs=1e-8)
    assert not rep.violations


def test_quartic_is_berwald_but_not_hermitian():
    rep = classify(catalog.quartic(2), PTS2)
    assert not rep.verdicts["purely_hermitian"]
    assert rep.verdicts["complex_berwald"] and rep.verdicts["locally_minkowski"]
    assert rep.constant_KF == pytest.approx(0, abs=1e-12)
    assert not rep.violations


def test_conformal():
    rep = classify(catalog.conformal(2), PTS2)
    v = rep.verdicts
    assert v["purely_hermitian"] and not v["weakly_kahler"]
    assert not v["projectively_flat"] and not v["complex_berwald"]
    # generalized Berwald with a bilinear theta*, hence Douglas
    assert v["generalized_berwald"] and v["douglas"]
    assert not rep.violations


def test_mixed_metric_is_not_douglas():
    rep = classify(catalog.mixed(2), sample_points(2, 2, seed=31))
    v = rep.verdicts
    assert v["generalized_berwald"] and not v["douglas"] and not v["weakly_kahler"]
    assert rep.max_residual("douglas_theta_jets") > 1e-3
    assert not rep.violations


def test_report_records_every_residual():
    rep = classify(catalog.bergman(2), PTS2[:2])
    assert len(rep.points) == 2
    for rec in rep.points:
        assert set(PREDICATES) - {"projectively_flat"} <= set(rec.residuals)
        assert rec.min_eigenvalue > 0


def test_probes():
    p = EvalPoint([0.3, 0.1], [1, 0.2j])
    assert gberwald_probe(catalog.bergman(2), p) <= 1e-14
    assert flat_spray_residual(catalog.bergman(2), p) <= 1e-14
    # conformal has G^i = (1/2) zb1 eta^1 eta^i, which is of this form; flatness fails on weak Kähler alone
    assert flat_spray_residual(catalog.conformal(2), p) <= 1e-14


@pytest.mark.parametrize("n", [1, 2])
def test_rho_family_bergman(n):
    rep = rho_family_check(catalog.bergman(n), catalog.bergman_potential(n), sample_points(n, 8, seed=32))
    assert rep.passed, rep.residuals
    assert rep.KF_constant == pytest.approx(-4, abs=1e-9)


def test_rho_family_flags_violation():
    # rho = |z1|^2 induces the flat metric; rho_{1 1̄ 1} = 0 but 2 rho_1 rho_{1 1̄} = 2 zb1
    rep = rho_family_check(catalog.euclidean(1), "z1*zb1", sample_points(1, 5, seed=33))
    assert not rep.passed
    assert rep.residuals["pde"] > 0.01


def test_rho_must_not_depend_on_eta():
    with pytest.raises(ValueError):
        rho_family_check(catalog.euclidean(1), "z1*e1", sample_points(1, 1))


def test_warped_is_neither_generalized_berwald_nor_douglas():
    rep = classify(catalog.warped(2), sample_points(2, 1, seed=31))
    assert not rep.verdicts["generalized_berwald"] and not rep.verdicts["douglas"]
    assert not rep.violations


def test_route_diagnostics_are_reported():
    rep = classify(catalog.conformal(2), sample_points(2, 3))
    names = {c.name: c.passed for c in rep.consistency}
    assert names["douglas_dual_path agrees"] and names["theta_derivative_identity agrees"]
    assert rep.max_residual("douglas_dual_path") <= 1e-12
    assert rep.max_residual("theta_derivative_identity") <= 1e-12
