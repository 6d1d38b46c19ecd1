"""Acceptance battery: one test per criterion, each printing a single PASS/FAIL line.

Criteria 1-9 come from one ``run_suite`` pass (seed 0, 20 points); the
stated tolerances are asserted here independently of the thresholds the
suite records.  Criterion 10 runs the CLI twice in fresh processes.
"""

from __future__ import annotations

import subprocess
import sys

import pytest

from projfinsler.suite import run_suite


@pytest.fixture(scope="module")
def checks():
    return run_suite()


def _report(number: int, title: str, ok: bool, detail: str) -> None:
    print(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")


def _by(checks, number):
    return [c for c in checks if c.criterion == number]


def test_criterion_01_oracle_equivalence(checks):
    (c,) = _by(checks, 1)
    ok = c.value <= 1e-6
    _report(1, "symbolic vs finite differences", ok, f"max rel gap {c.value:.3e} <= 1e-6")
    assert ok


def test_criterion_02_euler_homogeneity(checks):
    (c,) = _by(checks, 2)
    ok = c.value <= 1e-10
    _report(2, "Euler/homogeneity identities", ok, f"max residual {c.value:.3e} <= 1e-10")
    assert ok


def test_criterion_03_dbar_spray_contraction(checks):
    (c,) = _by(checks, 3)
    ok = c.value <= 1e-9
    _report(3, "(d_kbar G^i) eta_i", ok, f"max |.|/L {c.value:.3e} <= 1e-9")
    assert ok


def test_criterion_04_curvature_identities(checks):
    (c,) = _by(checks, 4)
    ok = c.value <= 1e-8
    _report(4, "curvature identities", ok, f"max residual/scale {c.value:.3e} <= 1e-8")
    assert ok


def test_criterion_05_bergman_family(checks):
    (c,) = _by(checks, 5)
    rows = c.detail.values()
    ok = all(
        d["pde"] <= 1e-9
        and d["KF_max_dev"] <= 1e-8
        and d["constant_KF"] is not None
        and d["classes"]
        and d["W_jkbh"] <= 1e-8
        and d["constant_curvature_form"] <= 1e-7
        for d in rows
    )
    worst = {k: max(d[k] for d in rows) for k in ("pde", "KF_max_dev", "W_jkbh", "constant_curvature_form")}
    _report(5, "Bergman family n=1,2", ok, ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))
    assert ok


def test_criterion_06_douglas_weyl_invariance(checks):
    douglas, weyl = _by(checks, 6)
    ok = douglas.value <= 1e-7 and weyl.value <= 1e-7
    _report(6, "projective invariance", ok, f"Douglas {douglas.value:.2e}, Weyl {weyl.value:.2e} <= 1e-7")
    assert ok


def test_criterion_07_pair_relatedness(checks):
    (c,) = _by(checks, 7)
    d = c.detail
    flat = d["euclidean(n=1)|bergman(n=1)"]
    flat2 = d["euclidean(n=2)|bergman(n=2)"]
    conf = d["euclidean(n=2)|conformal(n=2)"]
    ok = (
        flat["verdict"] == "related"
        and flat["residual_spray"] <= 1e-8
        and flat2["verdict"] == "related"
        and flat2["residual_spray"] <= 1e-8
        and d["P_vs_rho_eta"] <= 1e-8
        and conf["verdict"] == "not related"
        and c.passed  # includes agreement of both decision paths on every pair
    )
    _report(
        7,
        "pair relatedness",
        ok,
        f"flat residual {max(flat['residual_spray'], flat2['residual_spray']):.2e}, |P - rho_r eta^r| {d['P_vs_rho_eta']:.2e}",
    )
    assert ok


def test_criterion_08_geodesics(checks):
    (c,) = _by(checks, 8)
    ratio, straight = c.detail["rk4_ratio"], c.detail["straightness"]
    ok = 12 <= ratio <= 20 and c.value <= 1e-5 and straight <= 1e-12
    _report(8, "geodesic corroboration", ok, f"ratio {ratio:.2f}, coincidence {c.value:.2e}, straightness {straight:.1e}")
    assert ok


def test_criterion_09_implication_lattice(checks):
    (c,) = _by(checks, 9)
    ok = not c.detail["violations"]
    _report(9, "implication lattice", ok, f"{len(c.detail['violations'])} violations")
    assert ok


def test_criterion_10_determinism(tmp_path):
    outputs = []
    for name in ("first.json", "second.json"):
        path = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "projfinsler.cli", "suite", "--seed", "0", "-o", str(path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(path.read_bytes())
    ok = outputs[0] == outputs[1]
    _report(10, "determinism", ok, f"two suite reports, {len(outputs[0])} bytes, identical={ok}")
    assert ok
