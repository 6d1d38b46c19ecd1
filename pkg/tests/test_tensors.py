from __future__ import annotations

import numpy as np
import pytest

from projfinsler import catalog
from projfinsler import expr as ex
from projfinsler.expr import EvalPoint, Var
from projfinsler.syntax import parse
from projfinsler.tensors import (
    FinslerMetric,
    IndexSignature,
    NotPositiveDefinite,
    Sampling,
    TensorField,
    cartan_tensor,
    contract,
    inverse_metric,
    sample_points,
    validate,
)


def test_signature_codes_and_conjugation():
    sig = IndexSignature("^ _ _b _")
    assert sig.rank == 4
    assert sig.code() == "^ _ _b _"
    assert sig.conj().code() == "^b _b _ _b"
    with pytest.raises(ValueError):
        IndexSignature("^x")


def test_metric_tensor_of_euclidean_is_identity():
    m = catalog.euclidean(2)
    assert m.g[0, 0] is ex.ONE and m.g[1, 1] is ex.ONE
    assert m.g[0, 1] is ex.ZERO
    assert cartan_tensor(m).is_zero()


def test_bergman_metric_value():
    g = catalog.bergman(1).g.at(EvalPoint([0.5], [1]))
    assert g[0, 0] == pytest.approx(16 / 9, abs=1e-12)


def test_bergman2_metric_is_complex_hessian_of_potential():
    m = catalog.bergman(2)
    pot = parse(catalog.bergman_potential(2), 2)
    p = EvalPoint([0.3 + 0.2j, -0.1 + 0.4j], [0.7, 0.2 - 0.5j])
    hess = np.array(
        [[ex.evaluate(ex.wirtinger_d(ex.wirtinger_d(pot, Var.Z, i), Var.ZBAR, j), p) for j in (1, 2)] for i in (1, 2)]
    )
    assert np.allclose(m.g.at(p), hess, atol=1e-13)


def test_derivative_slot_is_appended():
    m = catalog.conformal(2)
    dg = m.g.d(Var.Z)
    assert dg.signature.code() == "_ _b _"
    p = EvalPoint([0.5, 0.1], [1, 0.3])
    # d/dz1 exp(|z1|^2) = zb1 exp(|z1|^2)
    assert dg.at(p)[0, 0, 0] == pytest.approx(0.5 * np.exp(0.25), rel=1e-13)
    assert dg.at(p)[0, 0, 1] == 0


def test_contract_with_eta_recovers_lower_eta():
    m = catalog.quartic(2)
    e = [ex.eta(1), ex.eta(2)]
    low = contract(m.g, 0, e, signature="_b")
    p = EvalPoint([0.1, 0.2], [0.6 + 0.1j, -0.4j])
    want = [ex.evaluate(m.dL(Var.ETABAR, j), p) for j in range(2)]
    assert np.allclose(low.at(p), want, atol=1e-14)


def test_tensor_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        TensorField(2, "^ _", [[ex.ONE]])


def test_inverse_metric_rejects_degenerate():
    m = catalog.degenerate_quartic(2)
    g = m.g.at(EvalPoint([0, 0], [1, 0]))
    with pytest.raises(NotPositiveDefinite):
        inverse_metric(g)


def test_inverse_metric_round_trip():
    g = catalog.bergman(2).g.at(EvalPoint([0.2, 0.3j], [1, 1j]))
    assert np.allclose(inverse_metric(g) @ g, np.eye(2), atol=1e-13)


@pytest.mark.parametrize("name, n", [("euclidean", 1), ("euclidean", 3), ("bergman", 1), ("bergman", 2), ("quartic", 2), ("conformal", 2)])
def test_catalog_metrics_validate(name, n):
    m = catalog.get(name, n)
    rep = validate(m, sample_points(n, 12, seed=4))
    assert rep.passed, rep.worst_by_check()
    assert rep.max_residual <= 1e-10


def test_validate_flags_broken_homogeneity():
    rep = validate(FinslerMetric(1, "e1*e1"), sample_points(1, 5))
    assert not rep.passed
    assert rep.worst_by_check()["euler_dL_eta"] > 0.1


def test_validate_flags_indefinite_metric():
    rep = validate(FinslerMetric(2, "e1*eb1 - e2*eb2"), sample_points(2, 5))
    assert not rep.passed
    assert rep.min_eigenvalue < 0


def test_validate_records_singular_points():
    rep = validate(catalog.bergman(1), [EvalPoint([1.0], [1])])
    assert rep.errors and not rep.passed


def test_metric_rejects_out_of_range_index():
    with pytest.raises(ValueError):
        FinslerMetric(1, "e1*eb1 + z2")


def test_sampling_is_deterministic():
    a = Sampling(count=5, seed=11).points(2)
    b = sample_points(2, 5, 11)
    for p, q in zip(a, b):
        assert np.array_equal(p.z, q.z) and np.array_equal(p.eta, q.eta)
    for p in a:
        assert np.all(np.abs(p.z) <= 0.7)
        assert np.all(np.abs(p.eta) >= 0.05) and np.all(np.abs(p.eta) <= 1)
