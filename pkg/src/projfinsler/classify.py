"""Per-metric classification: Kähler hierarchy, Berwald/Douglas classes, flatness and curvature constancy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .connections import EB, E, Z, ZB, connection_bundle, d, kahler_residuals, theta_derivative_sides
from .curvatures import holomorphic_curvature
from .expr import EvalPoint, Expr
from .projective import (
    ScopeError,
    constant_curvature_residual,
    douglas_bundle,
    is_d_homogeneous,
    theta_jet_residuals,
    weyl_berwald_invariant,
)
from .syntax import parse
from .tensors import FinslerMetric, max_abs

PREDICATES = (
    "purely_hermitian",
    "strongly_kahler",
    "kahler",
    "weakly_kahler",
    "generalized_berwald",
    "complex_berwald",
    "douglas",
    "locally_minkowski",
    "projectively_flat",
)

KF_VARIANCE_GATE = 1e-6


@dataclass
class PointRecord:
    z: np.ndarray
    eta: np.ndarray
    residuals: dict[str, float]
    min_eigenvalue: float
    KF: float | None


@dataclass
class Consistency:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ClassificationReport:
    label: str
    n: int
    tol: float
    points: list[PointRecord]
    verdicts: dict[str, bool]
    constant_KF: float | None
    KF_mean: float | None
    KF_variance: float | None
    consistency: list[Consistency] = field(default_factory=list)

    def max_residual(self, key: str) -> float:
        return max(r.residuals[key] for r in self.points)

    @property
    def violations(self) -> list[Consistency]:
        return [c for c in self.consistency if not c.passed]


def _scale(m: FinslerMetric, p: EvalPoint) -> float:
    return 1.0 + max_abs(m.g.at(p))


def gberwald_probe(m: FinslerMetric, p: EvalPoint, seed: int = 0) -> float:
    """Change of G^i_{jk} when eta is replaced by an unrelated direction at the same z."""
    rng = np.random.default_rng(seed)
    alt = rng.normal(size=m.n) + 1j * rng.normal(size=m.n)
    q = EvalPoint(p.z, alt)
    Gjk = connection_bundle(m).Gjk
    a, b = Gjk.at(p), Gjk.at(q)
    return max_abs(a - b) / (1.0 + max_abs(a))


def flat_spray_residual(m: FinslerMetric, p: EvalPoint) -> float:
    """max|G^i - (1/(2L))(∂L/∂z^k eta^k) eta^i| relative to 1 + max|G|."""
    cb = connection_bundle(m)
    n = m.n
    G = np.array([ex.evaluate(x, p) for x in cb.G])
    Lv = ex.evaluate(m.L, p)
    dz = sum(ex.evaluate(d(m.L, Z, k), p) * p.eta[k] for k in range(n))
    return max_abs(G - dz / (2 * Lv) * p.eta) / (1.0 + max_abs(G))


def point_residuals(m: FinslerMetric, p: EvalPoint) -> dict[str, float]:
    """All predicate residuals at ``p``, each divided by its scale."""
    cb = connection_bundle(m)
    s = _scale(m, p)
    kr = kahler_residuals(m, p)
    gb_raw = max_abs(cb.Gjkb.at(p))
    dl = max(max_abs(cb.L_conn.d(E).at(p)), max_abs(cb.L_conn.d(EB).at(p)))
    db = douglas_bundle(m)
    dt = db.at(p)
    eq4 = theta_jet_residuals(m, p)
    lm = max(max_abs(m.g.d(Z).at(p)), max_abs(m.g.d(ZB).at(p)))
    lhs, rhs = theta_derivative_sides(m, p)
    res = {k: v / s for k, v in kr.items()}
    res.update(
        {
            "generalized_berwald": gb_raw / s,
            "generalized_berwald_probe": gberwald_probe(m, p),
            "complex_berwald": max(kr["kahler"], dl) / s,
            "douglas": max(max_abs(v) for v in dt.values()) / s,
            "douglas_theta_jets": max(eq4.values()) / s,
            "locally_minkowski": lm / s,
            "flat_spray_form": flat_spray_residual(m, p),
            "D_kh": max_abs(db.D_kh.at(p)) / s,
            "D_kbhb": max_abs(db.D_kbhb.at(p)) / s,
            "D_kbh": max_abs(db.D_kbh.at(p)) / s,
            "D_homogeneity": is_d_homogeneous(m, p),
            # diagnostics: two independent routes that must agree
            "douglas_dual_path": db.dual_residual(p) / cb.scale(p),
            "theta_derivative_identity": max_abs(lhs - rhs) / cb.scale(p),
        }
    )
    return res


def _kf_stats(values: Sequence[float]) -> tuple[float | None, float | None, float | None]:
    if not values:
        return None, None, None
    arr = np.asarray(values)
    mean, var = float(arr.mean()), float(arr.var())
    const = mean if var <= KF_VARIANCE_GATE * (1.0 + abs(mean)) else None
    return mean, var, const


def classify(m: FinslerMetric, points: Sequence[EvalPoint], tol: float = 1e-8) -> ClassificationReport:
    records = []
    for p in points:
        res = point_residuals(m, p)
        eig = float(np.linalg.eigvalsh(m.g.at(p)).min())
        try:
            kf = holomorphic_curvature(m, p)
        except ArithmeticError:
            kf = None
        records.append(PointRecord(p.z, p.eta, res, eig, kf))

    def ok(key):
        return all(r.residuals[key] <= tol for r in records)

    v = {k: ok(k) for k in ("purely_hermitian", "strongly_kahler", "kahler", "weakly_kahler", "douglas")}
    v["generalized_berwald"] = ok("generalized_berwald") and ok("generalized_berwald_probe")
    v["complex_berwald"] = ok("complex_berwald")
    v["locally_minkowski"] = ok("locally_minkowski")
    v["projectively_flat"] = v["weakly_kahler"] and ok("flat_spray_form")
    kfs = [r.KF for r in records if r.KF is not None]
    mean, var, const = _kf_stats(kfs) if len(kfs) == len(records) else (None, None, None)
    report = ClassificationReport(m.label, m.n, tol, records, v, const, mean, var)
    report.consistency = _consistency(m, report, points, tol, ok)
    return report


def _consistency(m, report, points, tol, ok) -> list[Consistency]:
    v = report.verdicts
    out = []

    def imp(name, a, b):
        out.append(Consistency(name, (not a) or b))

    imp("strongly_kahler => kahler", v["strongly_kahler"], v["kahler"])
    imp("kahler => weakly_kahler", v["kahler"], v["weakly_kahler"])
    imp("complex_berwald => generalized_berwald", v["complex_berwald"], v["generalized_berwald"])
    imp("complex_berwald => kahler", v["complex_berwald"], v["kahler"])
    imp("complex_berwald => douglas", v["complex_berwald"], v["douglas"])
    imp("weakly_kahler & generalized_berwald => complex_berwald", v["weakly_kahler"] and v["generalized_berwald"], v["complex_berwald"])
    imp("weakly_kahler & douglas => complex_berwald", v["weakly_kahler"] and v["douglas"], v["complex_berwald"])
    route2 = v["generalized_berwald"] and ok("douglas_theta_jets")
    out.append(Consistency("douglas: invariants agree with generalized Berwald + theta relations", v["douglas"] == route2))
    flags = [ok("D_kh"), ok("D_kbhb"), ok("D_kbh")]
    out.append(Consistency("Ricci tensors D vanish together", all(flags) or not any(flags)))
    for key in ("douglas_dual_path", "theta_derivative_identity"):
        bad = sum(r.residuals[key] > tol for r in report.points)
        out.append(Consistency(f"{key} agrees", bad == 0, f"{bad} inconsistent points" if bad else ""))
    d_hom = all(r.residuals["D_homogeneity"] <= 1e-7 for r in report.points)
    out.append(Consistency("D^i homogeneous <=> weakly_kahler", d_hom == v["weakly_kahler"]))
    if m.n >= 2 and v["generalized_berwald"] and v["projectively_flat"]:
        passed = report.constant_KF is not None and (abs(report.constant_KF) <= 1e-8 or v["purely_hermitian"])
        out.append(Consistency("generalized_berwald & projectively_flat => constant K_F", passed))
    if v["complex_berwald"]:
        try:
            W = weyl_berwald_invariant(m, points)
        except ScopeError as err:
            out.append(Consistency("W_jkbh scope", False, str(err)))
        else:
            w_zero = all(max_abs(W.at(p)) <= tol * _scale(m, p) for p in points)
            cc = all(constant_curvature_residual(m, p) <= 10 * tol * _scale(m, p) ** 2 for p in points)
            out.append(Consistency("W_jkbh = 0 <=> constant holomorphic curvature form", w_zero == cc))
    return out


# rho-family ---------------------------------------------------------------------


@dataclass
class RhoFamilyReport:
    residuals: dict[str, float]
    KF_values: list[float]
    KF_constant: float | None
    min_eigenvalue: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            all(v <= self.tol for v in self.residuals.values())
            and self.KF_constant is not None
            and self.min_eigenvalue > self.tol
        )


def rho_family_check(
    m: FinslerMetric, rho: Expr | str, points: Sequence[EvalPoint], tol: float = 1e-9
) -> RhoFamilyReport:
    """Test a metric against the spray form G^i = ρ_r eta^r eta^i and its consequences."""
    n = m.n
    if isinstance(rho, str):
        rho = parse(rho, n)
    if any(v[0] in (ex.Var.ETA, ex.Var.ETABAR) for v in ex.free_vars(rho)):
        raise ValueError("rho must depend on z only")
    r1 = [d(rho, Z, r) for r in range(n)]
    r2 = [[d(r1[r], ZB, h) for h in range(n)] for r in range(n)]  # ρ_{r h̄}
    r3 = [[[d(r2[r][h], Z, k) for k in range(n)] for h in range(n)] for r in range(n)]
    cb = connection_bundle(m)
    worst = {"spray_form": 0.0, "pde": 0.0, "L_form": 0.0, "KF_form": 0.0, "hermitian": 0.0}
    kfs = []
    min_eig = np.inf
    for p in points:
        R1 = np.array([ex.evaluate(x, p) for x in r1])
        R2 = np.array([[ex.evaluate(x, p) for x in row] for row in r2])
        R3 = np.array([[[ex.evaluate(x, p) for x in col] for col in row] for row in r3])  # [r, h, k]
        e = p.eta
        G = np.array([ex.evaluate(x, p) for x in cb.G])
        worst["spray_form"] = max(worst["spray_form"], max_abs(G - (R1 @ e) * e) / (1 + max_abs(G)))
        pde = R3 - np.einsum("r,kh->rhk", R1, R2) - np.einsum("k,rh->rhk", R1, R2)
        worst["pde"] = max(worst["pde"], max_abs(pde) / (1 + max_abs(R3)))
        I = np.eye(n)
        Lc = cb.L_conn.at(p)
        model = np.einsum("k,ij->ijk", R1, I) + np.einsum("j,ik->ijk", R1, I)
        worst["L_form"] = max(worst["L_form"], max_abs(Lc - model) / (1 + max_abs(Lc)))
        kf = holomorphic_curvature(m, p)
        kfs.append(kf)
        Lv = ex.evaluate(m.L, p).real
        kf_model = -4.0 / Lv * np.einsum("r,rh,h->", e, R2, e.conj())
        worst["KF_form"] = max(worst["KF_form"], abs(kf - kf_model) / (1 + abs(kf)))
        worst["hermitian"] = max(worst["hermitian"], max_abs(R2.conj() - R2.T))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(0.5 * (R2 + R2.conj().T)).min()))
    _, _, const = _kf_stats(kfs)
    return RhoFamilyReport(worst, kfs, const, min_eig, tol)
