"""Projective relatedness of metric pairs and synthetic projective changes of spray data."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as ex
from .connections import E, EB, SprayData, connection_bundle, d, esum, eta_vec
from .curvatures import BerwaldCurvature
from .expr import EvalPoint, Expr
from .syntax import parse
from .tensors import FinslerMetric, TensorField, max_abs, sample_points


class HomogeneityError(ValueError):
    """The supplied projective factor is not (1,0)-homogeneous in eta."""


def _check_pair(m: FinslerMetric, mt: FinslerMetric) -> None:
    if m.n != mt.n:
        raise ValueError(f"dimension mismatch: {m.n} vs {mt.n}")


class ProjectiveChange:
    """Symbolic S, Q, P recovered from two metrics (S - Q/2 = P by construction)."""

    def __init__(self, m: FinslerMetric, mt: FinslerMetric):
        _check_pair(m, mt)
        self.m, self.mt = m, mt
        self.n = n = m.n
        cb, cbt = connection_bundle(m), connection_bundle(mt)
        self.cb, self.cbt = cb, cbt
        dN = ex.sub(esum(cbt.Nc[i, i] for i in range(n)), esum(cb.Nc[i, i] for i in range(n)))
        dth = ex.sub(cbt.theta_jets.trace1, cb.theta_jets.trace1)
        self.S = ex.mul(ex.const(1.0 / (n + 1)), dN)
        self.Q = ex.mul(ex.const(1.0 / n), dth)
        self.P = ex.sub(self.S, ex.mul(ex.const(0.5), self.Q))
        self.B = [ex.mul(ex.const(0.5), ex.sub(cbt.theta[i], cb.theta[i])) for i in range(n)]

    def values(self, p: EvalPoint) -> dict[str, complex]:
        return {"S": ex.evaluate(self.S, p), "Q": ex.evaluate(self.Q, p), "P": ex.evaluate(self.P, p)}

    def homogeneity_defect(self, p: EvalPoint, lam: complex = 0.6 - 0.8j) -> float:
        """Relative defect of S(z, λη) = λS and Q(z, λη) = λ̄Q."""
        v1 = self.values(p)
        v2 = self.values(EvalPoint(p.z, lam * p.eta))
        s = abs(v2["S"] - lam * v1["S"]) / (1 + abs(v1["S"]))
        q = abs(v2["Q"] - np.conj(lam) * v1["Q"]) / (1 + abs(v1["Q"]))
        return max(s, q)

    def spray_residual(self, p: EvalPoint) -> tuple[float, float]:
        """(max|r^i|, scale) for r^i = G̃^i - G^i - B^i - S eta^i + (Q/2) eta^i."""
        n = self.n
        Gt = np.array([ex.evaluate(x, p) for x in self.cbt.G])
        G = np.array([ex.evaluate(x, p) for x in self.cb.G])
        B = np.array([ex.evaluate(x, p) for x in self.B])
        v = self.values(p)
        r = Gt - G - B - (v["S"] - 0.5 * v["Q"]) * p.eta
        assert r.shape == (n,)
        return max_abs(r), 1.0 + max_abs(Gt) + max_abs(G)

    def connection_residual(self, p: EvalPoint) -> float:
        """max|N̊̃^i_j - N̊^i_j - S_j eta^i - S δ^i_j|."""
        n = self.n
        Sj = np.array([ex.evaluate(d(self.S, E, j), p) for j in range(n)])
        S = ex.evaluate(self.S, p)
        lhs = self.cbt.Nc.at(p) - self.cb.Nc.at(p)
        return max_abs(lhs - np.outer(p.eta, Sj) - S * np.eye(n))

    @cached_property
    def _metric_route(self):
        """Both sides of the metric-level criterion, per barred index r."""
        mt, n = self.mt, self.n
        sp = self.cb.spray
        Lt = mt.L
        e = eta_vec(n)
        dLt = [d(Lt, E, i) for i in range(n)]
        # δ_k uses the canonical connection of the first metric
        dkL = esum(ex.mul(sp.delta(Lt, k), e[k]) for k in range(n))
        th = self.cb.theta
        P = ex.mul(ex.div(ex.const(0.5), Lt), ex.add(dkL, esum(ex.mul(th[i], dLt[i]) for i in range(n))))
        lhs, rhs = [], []
        for r in range(n):
            l_r = ex.mul(
                ex.const(0.5),
                ex.add(d(dkL, EB, r), ex.mul(ex.const(2.0), esum(ex.mul(d(sp.G[l], EB, r), dLt[l]) for l in range(n)))),
            )
            r_r = ex.add(ex.mul(P, d(Lt, EB, r)), esum(ex.mul(self.B[i], mt.g[i, r]) for i in range(n)))
            lhs.append(l_r)
            rhs.append(r_r)
        return P, lhs, rhs

    def metric_route_residual(self, p: EvalPoint) -> tuple[float, float]:
        _, lhs, rhs = self._metric_route
        lv = np.array([ex.evaluate(x, p) for x in lhs])
        rv = np.array([ex.evaluate(x, p) for x in rhs])
        return max_abs(lv - rv), 1.0 + max_abs(lv) + max_abs(rv)

    def metric_route_factor(self, p: EvalPoint) -> complex:
        return ex.evaluate(self._metric_route[0], p)


def recover_projective_factor(m: FinslerMetric, mt: FinslerMetric, p: EvalPoint) -> dict[str, complex]:
    return ProjectiveChange(m, mt).values(p)


@dataclass
class RelatednessVerdict:
    verdict: str  # "related" | "not related" | "inconclusive"
    residual_spray: float
    residual_metric: float
    homogeneity_defect: float
    paths_agree: bool
    per_point: list[dict] = field(default_factory=list)

    @property
    def related(self) -> bool:
        return self.verdict == "related"


def projective_relatedness_test(
    m: FinslerMetric, mt: FinslerMetric, points: Sequence[EvalPoint], tol: float = 1e-8
) -> RelatednessVerdict:
    """Threshold both the spray-level and the metric-level criteria over ``points``.

    Residuals are reported relative to their scales.  The verdict is
    "inconclusive" when S or Q fail their homogeneity, or when the two paths
    disagree.
    """
    if not points:
        raise ValueError("need at least one point")
    pc = ProjectiveChange(m, mt)
    rows = []
    for p in points:
        r_spray, s_spray = pc.spray_residual(p)
        r_metric, s_metric = pc.metric_route_residual(p)
        rows.append(
            {
                "z": p.z,
                "eta": p.eta,
                "residual_spray": r_spray / s_spray,
                "residual_metric": r_metric / s_metric,
                "homogeneity": pc.homogeneity_defect(p),
                **pc.values(p),
            }
        )
    res_spray = max(r["residual_spray"] for r in rows)
    res_metric = max(r["residual_metric"] for r in rows)
    hom = max(r["homogeneity"] for r in rows)
    ok_spray, ok_metric = res_spray <= tol, res_metric <= tol
    agree = ok_spray == ok_metric
    if hom > 1e-6 or not agree:
        verdict = "inconclusive"
    else:
        verdict = "related" if ok_spray else "not related"
    return RelatednessVerdict(verdict, res_spray, res_metric, hom, agree, rows)


# synthetic changes ----------------------------------------------------------------


class SyntheticChange:
    """Spray data G̃^i = G^i + P eta^i built through the jet cascade.

    Holds the P-jets ``Pj``, ``Pjk``, ``Pkb``, ``Pjkb`` and the changed
    ``spray``; θ* is carried over unchanged.
    """

    def __init__(self, sp: SprayData, P: Expr, label: str = ""):
        self.base = sp
        self.P = P
        n = self.n = sp.n
        e = eta_vec(n)
        self.Pj = [d(P, E, j) for j in range(n)]
        self.Pkb = [d(P, EB, k) for k in range(n)]
        self.Pjk = TensorField.build(n, "_ _", lambda j, k: d(self.Pj[j], E, k), "Pjk")
        self.Pjkb = TensorField.build(n, "_ _b", lambda j, k: d(self.Pj[j], EB, k), "Pjkb")
        I = [[ex.ONE if a == b else ex.ZERO for b in range(n)] for a in range(n)]
        G = [ex.add(sp.G[i], ex.mul(P, e[i])) for i in range(n)]
        Nc = TensorField.build(
            n, "^ _", lambda i, j: ex.add(sp.Nc[i, j], ex.mul(self.Pj[j], e[i]), ex.mul(P, I[i][j])), "Nc~"
        )
        Gjk = TensorField.build(
            n,
            "^ _ _",
            lambda i, j, k: ex.add(
                sp.Gjk[i, j, k],
                ex.mul(self.Pjk[j, k], e[i]),
                ex.mul(self.Pj[k], I[i][j]),
                ex.mul(self.Pj[j], I[i][k]),
            ),
            "Gjk~",
        )
        Gjkb = TensorField.build(
            n,
            "^ _ _b",
            lambda i, j, k: ex.add(sp.Gjkb[i, j, k], ex.mul(self.Pjkb[j, k], e[i]), ex.mul(self.Pkb[k], I[i][j])),
            "Gjkb~",
        )
        self.spray = SprayData(n, G, Nc=Nc, Gjk=Gjk, Gjkb=Gjkb, theta=lambda: sp.theta, label=label)

    def homogeneity_defect(self, p: EvalPoint) -> float:
        """max(|P_k eta^k - P|, |P_k̄ etabar^k|) relative to 1 + |P|."""
        Pv = ex.evaluate(self.P, p)
        s = sum(ex.evaluate(self.Pj[k], p) * p.eta[k] for k in range(self.n))
        sb = sum(ex.evaluate(self.Pkb[k], p) * np.conj(p.eta[k]) for k in range(self.n))
        return max(abs(s - Pv), abs(sb)) / (1.0 + abs(Pv))

    # X-tensors via the Berwald horizontal covariant derivative of the base spray
    @cached_property
    def X_kh(self) -> TensorField:
        sp, n = self.base, self.n

        def cov(k, h):
            # P_{k B|h} = δ̊_h P_k - G^l_{kh} P_l
            return ex.sub(sp.delta(self.Pj[k], h), esum(ex.mul(sp.Gjk[l, k, h], self.Pj[l]) for l in range(n)))

        return TensorField.build(n, "_ _", lambda k, h: ex.sub(cov(k, h), cov(h, k)), "X_kh")

    @cached_property
    def X_h(self) -> list[Expr]:
        sp = self.base
        return [ex.sub(sp.delta(self.P, h), ex.mul(self.P, self.Pj[h])) for h in range(self.n)]

    @cached_property
    def X_k0(self) -> list[Expr]:
        e = eta_vec(self.n)
        return [esum(ex.mul(self.X_kh[k, j], e[j]) for j in range(self.n)) for k in range(self.n)]

    def curvature_change_residual(self, p: EvalPoint) -> float:
        """K̃^i_{jkh} - K^i_{jkh} against the X-tensor combination."""
        n = self.n
        K0 = BerwaldCurvature(self.base).Kjkh.at(p)
        K1 = BerwaldCurvature(self.spray).Kjkh.at(p)
        dXkh = self.X_kh.d(E).at(p)  # [k, h, j]
        Xkh = self.X_kh.at(p)
        dXh = np.array([[ex.evaluate(d(self.X_h[h], E, j), p) for h in range(n)] for j in range(n)])  # [j, h]
        I = np.eye(n)
        e = p.eta
        model = (
            np.einsum("khj,i->ijkh", dXkh, e)
            + np.einsum("kh,ij->ijkh", Xkh, I)
            + np.einsum("jh,ik->ijkh", dXh, I)
            - np.einsum("jk,ih->ijkh", dXh, I)
        )
        return max_abs(K1 - K0 - model)


def synthetic_change(
    m: FinslerMetric | SprayData,
    P: Expr | str,
    points: Sequence[EvalPoint] | None = None,
    tol: float = 1e-9,
) -> SyntheticChange:
    """Apply G̃ = G + P eta to the spray data of ``m`` after checking P_k eta^k = P."""
    sp = connection_bundle(m).spray if isinstance(m, FinslerMetric) else m
    if isinstance(P, str):
        P = parse(P, sp.n)
    ch = SyntheticChange(sp, P, label=f"synthetic({getattr(m, 'label', '')})")
    if points is None:
        points = sample_points(sp.n, 4, seed=5)
    worst = max(ch.homogeneity_defect(p) for p in points)
    if worst > tol:
        raise HomogeneityError(f"P is not (1,0)-homogeneous: defect {worst:.3g}")
    return ch
