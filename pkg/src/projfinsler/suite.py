"""The end-to-end check battery run by ``projfinsler suite``."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import catalog
from . import expr as ex
from .classify import classify, rho_family_check
from .connections import connection_bundle, dbar_spray_residual
from .curvatures import BerwaldCurvature, berwald_curvatures, curvature_identity_residuals, holomorphic_curvature
from .expr import Var
from .geodesics import ball_domain, endpoint_error_ratio, integrate_geodesic, pointset_compare, probe_conditions
from .pair import ProjectiveChange, projective_relatedness_test, synthetic_change
from .projective import DouglasBundle, WeylBundle, constant_curvature_residual, weyl_berwald_invariant
from .tensors import FinslerMetric, Sampling, max_abs, sample_points, validate


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    value: float
    threshold: float
    detail: dict = field(default_factory=dict)


def suite_metrics() -> list[FinslerMetric]:
    return [
        catalog.euclidean(1),
        catalog.euclidean(2),
        catalog.bergman(1),
        catalog.bergman(2),
        catalog.quartic(2),
        catalog.conformal(2),
    ]


def oracle_residual(m: FinslerMetric, points) -> float:
    """Worst relative gap between symbolic and central-difference derivatives of L and g."""
    kinds = list(Var)
    firsts = {(k, i): ex.wirtinger_d(m.L, k, i + 1) for k in kinds for i in range(m.n)}
    worst = 0.0
    for p in points:
        for (k, i), dL in firsts.items():
            exact = ex.evaluate(dL, p)
            worst = max(worst, abs(exact - ex.fd_oracle(m.L, k, i + 1, p)) / (1 + abs(exact)))
            for k2, j in product(kinds, range(m.n)):
                exact2 = ex.evaluate(ex.wirtinger_d(dL, k2, j + 1), p)
                fd2 = ex.fd_oracle(dL, k2, j + 1, p)
                worst = max(worst, abs(exact2 - fd2) / (1 + abs(exact2)))
    return worst


def run_suite(sampling: Sampling | None = None, tol: float = 1e-8) -> list[Check]:
    s = sampling or Sampling(count=20, seed=0)
    metrics = suite_metrics()
    pts = {n: s.points(n) for n in (1, 2)}
    checks: list[Check] = []

    # 1 oracle equivalence
    w = max(oracle_residual(m, sample_points(m.n, 50, s.seed + 1)) for m in metrics)
    checks.append(Check(1, "symbolic vs finite-difference derivatives", w <= 1e-6, w, 1e-6))

    # 2 Euler/homogeneity
    w = max(validate(m, pts[m.n], 1e-10).max_residual for m in metrics)
    checks.append(Check(2, "Euler and homogeneity identities", w <= 1e-10, w, 1e-10))

    # 3 contraction of d_kbar G^i with eta_i; warped is the witness where d_kbar G^i itself is nonzero
    w = 0.0
    for m in metrics + [catalog.warped(2)]:
        for p in sample_points(m.n, 50, s.seed + 2):
            w = max(w, dbar_spray_residual(m, p) / ex.evaluate(m.L, p).real)
    checks.append(Check(3, "(d_kbar G^i) eta_i vanishes", w <= 1e-9, w, 1e-9))

    # 4 curvature identities
    w = 0.0
    for m in metrics:
        bc = berwald_curvatures(m)
        for p in pts[m.n]:
            scale = connection_bundle(m).scale(p)
            w = max(w, max(curvature_identity_residuals(bc, p).values()) / scale)
    checks.append(Check(4, "curvature identities and Bianchi symmetries", w <= 1e-8, w, 1e-8))

    # 5 Bergman family
    detail = {}
    ok = True
    for n in (1, 2):
        m = catalog.bergman(n)
        rho = catalog.bergman_potential(n)
        rr = rho_family_check(m, rho, pts[n], 1e-9)
        kfs = np.array([holomorphic_curvature(m, p) for p in pts[n]])
        rep = classify(m, pts[n], tol)
        wanted = ("purely_hermitian", "kahler", "complex_berwald", "douglas", "projectively_flat")
        W = weyl_berwald_invariant(m, pts[n])
        wres = max(max_abs(W.at(p)) / connection_bundle(m).scale(p) for p in pts[n])
        cres = max(constant_curvature_residual(m, p) / connection_bundle(m).scale(p) for p in pts[n])
        d = {
            "pde": rr.residuals["pde"],
            "KF_max_dev": float(np.abs(kfs + 4).max()),
            "constant_KF": rep.constant_KF,
            "classes": all(rep.verdicts[k] for k in wanted),
            "W_jkbh": wres,
            "constant_curvature_form": cres,
        }
        detail[f"n={n}"] = d
        ok &= (
            d["pde"] <= 1e-9
            and d["KF_max_dev"] <= 1e-8
            and rep.constant_KF is not None
            and d["classes"]
            and wres <= 1e-8
            and cres <= 1e-7
        )
    checks.append(Check(5, "Bergman family", bool(ok), 0.0, 0.0, detail))

    # 6 Douglas and Weyl invariance under synthetic changes
    changes = [
        "zb1*e1 + zb2*e2",
        "(z1*e1^2*eb1 + zb2*e2^2*eb2)/(e1*eb1 + e2*eb2) + (1 + z2*zb1)*e1",
    ]
    w_d = w_w = 0.0
    for m, P in product([catalog.bergman(2), catalog.conformal(2), catalog.quartic(2)], changes):
        base = connection_bundle(m).spray
        ch = synthetic_change(m, P)
        d0, d1 = DouglasBundle(base), DouglasBundle(ch.spray)
        weak = all(t.is_zero() for t in connection_bundle(m).theta)
        wb0 = WeylBundle(BerwaldCurvature(base)) if weak else None
        wb1 = WeylBundle(BerwaldCurvature(ch.spray)) if weak else None
        for p in pts[2]:
            D0 = np.array([ex.evaluate(x, p) for x in d0.D])
            D1 = np.array([ex.evaluate(x, p) for x in d1.D])
            w_d = max(w_d, max_abs(D1 - D0) / (1 + max_abs(D0)))
            a0, a1 = d0.at(p), d1.at(p)
            for k in a0:
                w_d = max(w_d, max_abs(a1[k] - a0[k]) / (1 + max_abs(a0[k])))
            if weak:
                for t0, t1 in ((wb0.W2, wb1.W2), (wb0.W3, wb1.W3)):
                    v0 = t0.at(p)
                    w_w = max(w_w, max_abs(t1.at(p) - v0) / (1 + max_abs(v0)))
    checks.append(Check(6, "Douglas invariance", w_d <= 1e-7, w_d, 1e-7))
    checks.append(Check(6, "Weyl invariance (weakly Kähler)", w_w <= 1e-7, w_w, 1e-7))

    # 7 pair relatedness
    pairs = [
        (catalog.euclidean(1), catalog.bergman(1), True),
        (catalog.euclidean(2), catalog.bergman(2), True),
        (catalog.euclidean(2), catalog.conformal(2), False),
        (catalog.bergman(2), catalog.quartic(2), True),
        (catalog.conformal(2), catalog.conformal(2), True),
    ]
    ok, detail = True, {}
    for a, b, expect in pairs:
        p_pts = sample_points(a.n, 20, s.seed + 3, z_radius=0.8)
        v = projective_relatedness_test(a, b, p_pts, tol)
        detail[f"{a.label}|{b.label}"] = {"verdict": v.verdict, "residual_spray": v.residual_spray, "residual_metric": v.residual_metric}
        ok &= v.related == expect and v.paths_agree
    m, mt = catalog.euclidean(1), catalog.bergman(1)
    pc = ProjectiveChange(m, mt)
    pdev = 0.0
    for p in sample_points(1, 20, s.seed + 3, z_radius=0.8):
        z = p.z[0]
        rho_eta = np.conj(z) / (1 - abs(z) ** 2) * p.eta[0]
        pdev = max(pdev, abs(pc.values(p)["P"] - rho_eta))
    detail["P_vs_rho_eta"] = pdev
    ok &= pdev <= 1e-8
    checks.append(Check(7, "pair relatedness", bool(ok), pdev, 1e-8, detail))

    # 8 geodesics
    eu = integrate_geodesic(catalog.euclidean(1), [0], [1], 0.01, 100)
    straight = float(np.abs(eu.z[:, 0] - eu.s).max())
    ratio = endpoint_error_ratio(catalog.bergman(1), [0.3], [1j])
    cdev = 0.0
    for n in (1, 2):
        for z0, e0 in probe_conditions(n):
            a = integrate_geodesic(catalog.euclidean(n), z0, e0, 0.01, 60)
            b = integrate_geodesic(catalog.bergman(n), z0, e0, 0.01, 60, domain=ball_domain(), weakly_kahler_tol=1e-9)
            cdev = max(cdev, pointset_compare(a, b)["max_deviation"])
    ok = straight <= 1e-12 and 12 <= ratio <= 20 and cdev <= 1e-5
    checks.append(
        Check(8, "geodesic corroboration", ok, cdev, 1e-5, {"straightness": straight, "rk4_ratio": ratio})
    )

    # 9 implication lattice
    violations = []
    for m in metrics:
        rep = classify(m, pts[m.n][:10], tol)
        violations += [f"{m.label}: {c.name}" for c in rep.violations]
    checks.append(Check(9, "implication lattice", not violations, float(len(violations)), 0.0, {"violations": violations}))
    return checks

