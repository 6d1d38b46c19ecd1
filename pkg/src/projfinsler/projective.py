"""Projective invariants: the invariant spray D^i, Douglas-type and Weyl-type curvature invariants."""

from __future__ import annotations

from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as ex
from .connections import (
    E,
    EB,
    VANISH_REL,
    SprayData,
    ThetaJets,
    connection_bundle,
    d,
    esum,
    eta_vec,
    kahler_residuals,
)
from .curvatures import BerwaldCurvature, berwald_curvatures, holomorphic_curvature, lowered_K
from .expr import EvalPoint, Expr
from .tensors import FinslerMetric, TensorField, max_abs, sample_points


class ScopeError(ValueError):
    """Raised when an invariant is requested outside the class it is defined on."""


def _kron(a: int, b: int) -> Expr:
    return ex.ONE if a == b else ex.ZERO


class DouglasBundle:
    """D^i and the three Douglas-type invariants for a given spray datum.

    ``fast=True`` drops all θ* terms (the weakly Kähler form); the caller is
    responsible for checking that θ* vanishes.
    """

    def __init__(self, sp: SprayData, fast: bool = False):
        self.sp = sp
        self.n = sp.n
        self.fast = fast

    @cached_property
    def jets(self) -> ThetaJets:
        return ThetaJets(self.n, self.sp.theta)

    @cached_property
    def D(self) -> list[Expr]:
        """D^i = G^i - (1/(n+1)) N̊^l_l eta^i - ½(θ^i - (1/n) θ^l_l eta^i)."""
        n, sp = self.n, self.sp
        e = eta_vec(n)
        trN = esum(sp.Nc[l, l] for l in range(n))
        c1 = ex.const(1.0 / (n + 1))
        out = [ex.sub(sp.G[i], ex.mul(c1, trN, e[i])) for i in range(n)]
        if self.fast:
            return out
        th = sp.theta
        tr = self.jets.trace1
        cn = ex.const(1.0 / n)
        return [ex.sub(out[i], ex.mul(ex.const(0.5), ex.sub(th[i], ex.mul(cn, tr, e[i])))) for i in range(n)]

    # Ricci tensors of the spray
    @cached_property
    def D_kh(self) -> TensorField:
        G = self.sp.Gjkh
        return TensorField.build(self.n, "_ _", lambda k, h: esum(G[i, i, k, h] for i in range(self.n)))

    @cached_property
    def D_kbhb(self) -> TensorField:
        G = self.sp.Gjkbhb
        return TensorField.build(self.n, "_b _b", lambda k, h: esum(G[i, i, k, h] for i in range(self.n)))

    @cached_property
    def D_kbh(self) -> TensorField:
        G = self.sp.Gjkbh
        return TensorField.build(self.n, "_b _", lambda k, h: esum(G[i, i, k, h] for i in range(self.n)))

    # traced θ* jets: the l-index contracted against the upper index
    @cached_property
    def _th2(self) -> TensorField:
        """θ^{*l}_{ljk}."""
        t3 = self.jets.t3
        return TensorField.build(self.n, "_ _", lambda j, k: esum(t3[l, l, j, k] for l in range(self.n)))

    @cached_property
    def _th2_bh(self) -> TensorField:
        """θ^{*l}_{l k̄ j} = ∂̇_k̄ θ^{*l}_{lj}, stored [k, j]."""
        t = self.jets.t3bh
        return TensorField.build(self.n, "_b _", lambda k, j: esum(t[l, l, k, j] for l in range(self.n)))

    @cached_property
    def _th2_bb(self) -> TensorField:
        """θ^{*l}_{l k̄ h̄} = ∂̇_k̄ θ^{*l}_{l h̄}, stored [k, h]."""
        t = self.jets.t3bb
        return TensorField.build(self.n, "_b _b", lambda k, h: esum(t[l, l, k, h] for l in range(self.n)))

    @cached_property
    def Djkh(self) -> TensorField:
        n, G = self.n, self.sp.Gjkh
        e = eta_vec(n)
        c1, cn, half = ex.const(1.0 / (n + 1)), ex.const(1.0 / n), ex.const(0.5)
        Dkh = self.D_kh

        def cyc(T, j, k, h, i):
            # Σ_(j,k,h) T_{jh} δ^i_k over the three cyclic permutations
            return esum(ex.mul(T[a, c], _kron(i, b)) for a, b, c in ((j, k, h), (k, h, j), (h, j, k)))

        def entry(i, j, k, h):
            ricci = ex.add(ex.mul(d(Dkh[j, k], E, h), e[i]), cyc(Dkh, j, k, h, i))
            out = ex.sub(G[i, j, k, h], ex.mul(c1, ricci))
            if self.fast:
                return out
            th = self._th2
            inner = ex.add(ex.mul(d(th[j, k], E, h), e[i]), cyc(th, j, k, h, i))
            return ex.sub(out, ex.mul(half, ex.sub(self.jets.t3[i, j, k, h], ex.mul(cn, inner))))

        return TensorField.build(n, "^ _ _ _", entry, "Djkh")

    @cached_property
    def Djkbhb(self) -> TensorField:
        n, G = self.n, self.sp.Gjkbhb
        e = eta_vec(n)
        c1, cn, half = ex.const(1.0 / (n + 1)), ex.const(1.0 / n), ex.const(0.5)
        R = self.D_kbhb

        def entry(i, j, k, h):
            ricci = ex.add(ex.mul(d(R[k, h], E, j), e[i]), ex.mul(R[k, h], _kron(i, j)))
            out = ex.sub(G[i, j, k, h], ex.mul(c1, ricci))
            if self.fast:
                return out
            inner = ex.add(
                ex.mul(d(self._th2_bh[k, j], EB, h), e[i]),
                ex.mul(self._th2_bb[k, h], _kron(i, j)),
            )
            return ex.sub(out, ex.mul(half, ex.sub(self.jets.t3bb[i, j, k, h], ex.mul(cn, inner))))

        return TensorField.build(n, "^ _ _b _b", entry, "Djkbhb")

    @cached_property
    def Djkbh(self) -> TensorField:
        n, G = self.n, self.sp.Gjkbh
        e = eta_vec(n)
        c1, cn, half = ex.const(1.0 / (n + 1)), ex.const(1.0 / n), ex.const(0.5)
        R = self.D_kbh

        def entry(i, j, k, h):
            ricci = ex.add(
                ex.mul(d(R[k, j], E, h), e[i]), ex.mul(R[k, j], _kron(i, h)), ex.mul(R[k, h], _kron(i, j))
            )
            out = ex.sub(G[i, j, k, h], ex.mul(c1, ricci))
            if self.fast:
                return out
            th = self._th2_bh
            inner = ex.add(
                ex.mul(d(th[k, j], E, h), e[i]), ex.mul(th[k, j], _kron(i, h)), ex.mul(th[k, h], _kron(i, j))
            )
            return ex.sub(out, ex.mul(half, ex.sub(self.jets.t3bh[i, j, k, h], ex.mul(cn, inner))))

        return TensorField.build(n, "^ _ _b _", entry, "Djkbh")

    # dual path: third vertical derivatives of D^i
    @cached_property
    def dual(self) -> dict[str, TensorField]:
        Dv = TensorField.build(self.n, "^", lambda i: self.D[i], "D")
        d1 = Dv.d(E)
        d2 = d1.d(E)
        d2b = d1.d(EB)  # [i, j, k̄]
        return {
            "Djkh": d2.d(E),
            "Djkbhb": d2b.d(EB),
            "Djkbh": d2b.d(E),
        }

    def at(self, p: EvalPoint) -> dict[str, np.ndarray]:
        return {"Djkh": self.Djkh.at(p), "Djkbhb": self.Djkbhb.at(p), "Djkbh": self.Djkbh.at(p)}

    def dual_residual(self, p: EvalPoint) -> float:
        direct = self.at(p)
        return max(max_abs(direct[k] - t.at(p)) for k, t in self.dual.items())


def douglas_bundle(m: FinslerMetric, fast: bool = False) -> DouglasBundle:
    cb = connection_bundle(m)
    return m.cached(("douglas", fast), lambda: DouglasBundle(cb.spray, fast=fast))


def douglas_spray(m: FinslerMetric, p: EvalPoint) -> np.ndarray:
    return np.array([ex.evaluate(x, p) for x in douglas_bundle(m).D])


def douglas_invariants(m: FinslerMetric, points: Sequence[EvalPoint] | None = None, rel: float = VANISH_REL):
    """The Douglas bundle, using the weakly Kähler form when θ* vanishes at every point.

    With ``points=None`` the general form is returned without probing.
    """
    if points:
        cb = connection_bundle(m)
        weak = all(kahler_residuals(m, p)["weakly_kahler"] <= rel * cb.scale(p) for p in points)
        return douglas_bundle(m, fast=weak)
    return douglas_bundle(m)


def theta_jet_residuals(m: FinslerMetric, p: EvalPoint) -> dict[str, float]:
    """Residuals of the θ*-jet relations that characterize Douglas among generalized Berwald spaces."""
    db = douglas_bundle(m)
    zero = SprayData(m.n, [ex.ZERO] * m.n, theta=db.sp.theta)
    # with G = 0 the Douglas tensors reduce to -½(θ-jet defect)
    z = DouglasBundle(zero)
    return {k: 2.0 * max_abs(v) for k, v in z.at(p).items()}


def is_d_homogeneous(m: FinslerMetric, p: EvalPoint, lam: complex = 0.7 + 0.4j) -> float:
    """Relative defect of D^i(z, λη) = λ² D^i(z, η)."""
    D1 = douglas_spray(m, p)
    D2 = douglas_spray(m, EvalPoint(p.z, lam * p.eta))
    return max_abs(D2 - lam**2 * D1) / (1.0 + max_abs(D1))


# Weyl-type invariants -----------------------------------------------------------


class WeylBundle:
    def __init__(self, bc: BerwaldCurvature):
        if bc.n < 2:
            raise ValueError("Weyl invariants need n >= 2")
        self.bc = bc
        self.n = bc.n

    @cached_property
    def W2(self) -> TensorField:
        """W^i_{kh} = K^i_{kh} + (1/(n+1)) A_(k,h)(H_{kh} eta^i + H_h δ^i_k)."""
        n, bc = self.n, self.bc
        H, Hk = bc.H, bc.Hk
        c = ex.const(1.0 / (n + 1))
        e = eta_vec(n)

        def entry(i, k, h):
            alt = ex.add(
                ex.mul(ex.sub(H[k, h], H[h, k]), e[i]),
                ex.mul(Hk[h], _kron(i, k)),
                ex.neg(ex.mul(Hk[k], _kron(i, h))),
            )
            return ex.add(bc.K2[i, k, h], ex.mul(c, alt))

        return TensorField.build(n, "^ _ _", entry, "W2")

    @cached_property
    def W3(self) -> TensorField:
        """W^i_{jkh}, the Weyl-type invariant."""
        n, bc = self.n, self.bc
        H, Hk = bc.H, bc.Hk
        c = ex.const(1.0 / (n + 1))
        e = eta_vec(n)

        def entry(i, j, k, h):
            alt = ex.add(
                ex.mul(ex.sub(d(H[k, h], E, j), d(H[h, k], E, j)), e[i]),
                ex.mul(ex.sub(H[k, h], H[h, k]), _kron(i, j)),
                ex.mul(d(Hk[h], E, j), _kron(i, k)),
                ex.neg(ex.mul(d(Hk[k], E, j), _kron(i, h))),
            )
            return ex.add(bc.Kjkh[i, j, k, h], ex.mul(c, alt))

        return TensorField.build(n, "^ _ _ _", entry, "W3")

    def contraction_residual(self, p: EvalPoint) -> float:
        """max|W^i_{jkh} eta^j - W^i_{kh}|."""
        return max_abs(np.einsum("ijkh,j->ikh", self.W3.at(p), p.eta) - self.W2.at(p))


def weyl_invariants(m: FinslerMetric) -> WeylBundle:
    return m.cached("weyl", lambda: WeylBundle(berwald_curvatures(m)))


def complex_berwald_residuals(m: FinslerMetric, p: EvalPoint) -> dict[str, float]:
    """Kähler residual plus the η-dependence of L^i_{jk}."""
    cb = connection_bundle(m)
    return {
        "kahler": kahler_residuals(m, p)["kahler"],
        "d_eta L": max(max_abs(cb.L_conn.d(E).at(p)), max_abs(cb.L_conn.d(EB).at(p))),
    }


def weyl_berwald_invariant(
    m: FinslerMetric, points: Sequence[EvalPoint] | None = None, rel: float = VANISH_REL
) -> TensorField:
    """W^i_{j k̄ h} = K^i_{j k̄ h} - (1/(n+1))(K_{k̄ j} δ^i_h + K_{k̄ h} δ^i_j).

    Only meaningful for complex Berwald metrics; raises ScopeError otherwise.
    """
    if points is None:
        points = sample_points(m.n, 6, seed=11)
    cb = connection_bundle(m)
    for p in points:
        res = complex_berwald_residuals(m, p)
        worst = max(res.values())
        if worst > rel * cb.scale(p):
            raise ScopeError(f"{m.label or 'metric'} is not complex Berwald (residual {worst:.3g})")

    def build():
        bc = berwald_curvatures(m)
        K, Kr = bc.Kjkbh, bc.K_kbh
        n = m.n
        c = ex.const(1.0 / (n + 1))
        return TensorField.build(
            n,
            "^ _ _b _",
            lambda i, j, k, h: ex.sub(
                K[i, j, k, h], ex.mul(c, ex.add(ex.mul(Kr[k, j], _kron(i, h)), ex.mul(Kr[k, h], _kron(i, j))))
            ),
            "W_jkbh",
        )

    return m.cached("weyl_berwald", build)


def constant_curvature_residual(m: FinslerMetric, p: EvalPoint) -> float:
    """max|K_{m̄ j k̄ h} - (K_F/4)(g_{j k̄} g_{h m̄} + g_{h k̄} g_{j m̄})|."""
    K = lowered_K(m).at(p)  # [m, j, k, h]
    g = m.g.at(p)
    kf = holomorphic_curvature(m, p)
    model = 0.25 * kf * (np.einsum("jk,hm->mjkh", g, g) + np.einsum("hk,jm->mjkh", g, g))
    return max_abs(K - model)
