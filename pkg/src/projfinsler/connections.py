"""Nonlinear connections, spray, Chern-Finsler and Berwald coefficients, theta*.

Indices are 0-based in code.  Naming follows the usual placement: ``N[i, j]``
is N^i_j, ``Lc[i, j, k]`` is L^i_{jk}, ``Gbk[i, j, k]`` is G^i_{j k̄}, and so on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as ex
from .expr import EvalPoint, Expr, Var
from .tensors import FinslerMetric, TensorField, cartan_tensor, max_abs

E, EB, Z, ZB = Var.ETA, Var.ETABAR, Var.Z, Var.ZBAR

# a tensor is "zero" at a point when max|entry| <= VANISH_REL * (1 + max|g|)
VANISH_REL = 1e-8


def esum(terms) -> Expr:
    return ex.add(*list(terms))


def delta(n: int) -> np.ndarray:
    return np.eye(n, dtype=int)


def d(e: Expr, kind: Var, k: int) -> Expr:
    """Partial derivative with a 0-based index."""
    return ex.wirtinger_d(e, kind, k + 1)


def eta_vec(n: int) -> list[Expr]:
    return [ex.eta(k + 1) for k in range(n)]


def etab_vec(n: int) -> list[Expr]:
    return [ex.etab(k + 1) for k in range(n)]


class SprayData:
    """Spray coefficients G^i with the Berwald jet tower they induce.

    ``Nc`` (canonical c.n.c.), ``Gjk`` and ``Gjkb`` default to derivatives of
    ``G`` but may be supplied directly, which is how projective changes of
    spray data are represented.
    """

    def __init__(
        self,
        n: int,
        G: Sequence[Expr],
        Nc: TensorField | None = None,
        Gjk: TensorField | None = None,
        Gjkb: TensorField | None = None,
        theta=None,
        label: str = "",
    ):
        self.n = n
        self.G = list(G)
        self.label = label
        # a list of expressions, or a zero-argument callable producing one
        self._theta = theta
        if Nc is None:
            Nc = TensorField.build(n, "^ _", lambda i, j: d(self.G[i], E, j), "Nc")
        self.Nc = Nc
        self.Gjk = Gjk if Gjk is not None else Nc.d(E, name="Gjk")
        self.Gjkb = Gjkb if Gjkb is not None else Nc.d(EB, name="Gjkb")

    @property
    def theta(self) -> list[Expr]:
        if self._theta is None:
            return [ex.ZERO] * self.n
        if callable(self._theta):
            self._theta = list(self._theta())
        return self._theta

    @cached_property
    def Nc_bar(self) -> TensorField:
        """conj(N̊^i_j), the coefficients of the barred canonical connection."""
        return self.Nc.conj()

    def delta(self, f: Expr, k: int) -> Expr:
        """Horizontal derivative δ̊_k f = ∂f/∂z^k - N̊^j_k ∂̇_j f."""
        n = self.n
        return ex.sub(d(f, Z, k), esum(ex.mul(self.Nc[j, k], d(f, E, j)) for j in range(n)))

    def delta_bar(self, f: Expr, k: int) -> Expr:
        """δ̊_k̄ f = ∂f/∂z̄^k - conj(N̊^j_k) ∂̇_j̄ f."""
        n = self.n
        return ex.sub(d(f, ZB, k), esum(ex.mul(self.Nc_bar[j, k], d(f, EB, j)) for j in range(n)))

    # third-order Berwald jets (hv-, h̄v̄-, hv̄-curvatures)
    @cached_property
    def Gjkh(self) -> TensorField:
        return self.Gjk.d(E, name="Gjkh")

    @cached_property
    def Gjkbhb(self) -> TensorField:
        return self.Gjkb.d(EB, name="Gjkbhb")

    @cached_property
    def Gjkbh(self) -> TensorField:
        return self.Gjkb.d(E, name="Gjkbh")


class ConnectionBundle:
    """All connection data derived from one metric; entries are built lazily."""

    def __init__(self, m: FinslerMetric):
        self.m = m
        self.n = m.n

    # Chern-Finsler ----------------------------------------------------------
    @cached_property
    def dg_z(self) -> TensorField:
        """∂g_{l m̄}/∂z^j indexed [l, m, j]."""
        return self.m.g.d(Z)

    @cached_property
    def N(self) -> TensorField:
        """Chern-Finsler c.n.c. N^i_j = g^{m̄ i} (∂g_{l m̄}/∂z^j) eta^l."""
        n, gi, dg = self.n, self.m.ginv, self.dg_z
        e = eta_vec(n)
        return TensorField.build(
            n,
            "^ _",
            lambda i, j: esum(ex.mul(gi[mm][i], dg[l, mm, j], e[l]) for mm in range(n) for l in range(n)),
            "N",
        )

    @cached_property
    def G(self) -> list[Expr]:
        """Spray coefficients G^i = 1/2 N^i_j eta^j."""
        n = self.n
        e = eta_vec(n)
        return [ex.mul(ex.const(0.5), esum(ex.mul(self.N[i, j], e[j]) for j in range(n))) for i in range(n)]

    @cached_property
    def spray(self) -> SprayData:
        return SprayData(self.n, self.G, theta=lambda: self.theta, label=self.m.label)

    @property
    def Nc(self) -> TensorField:
        return self.spray.Nc

    @property
    def Gjk(self) -> TensorField:
        return self.spray.Gjk

    @property
    def Gjkb(self) -> TensorField:
        return self.spray.Gjkb

    @cached_property
    def N_bar(self) -> TensorField:
        return self.N.conj()

    def delta(self, f: Expr, k: int) -> Expr:
        """Chern-Finsler horizontal derivative δ_k f."""
        n = self.n
        return ex.sub(d(f, Z, k), esum(ex.mul(self.N[j, k], d(f, E, j)) for j in range(n)))

    def delta_bar(self, f: Expr, k: int) -> Expr:
        n = self.n
        return ex.sub(d(f, ZB, k), esum(ex.mul(self.N_bar[j, k], d(f, EB, j)) for j in range(n)))

    @cached_property
    def L_conn(self) -> TensorField:
        """L^i_{jk} := g^{l̄ i} δ_k g_{j l̄}."""
        n, gi, g = self.n, self.m.ginv, self.m.g
        dl = {}
        for j in range(n):
            for l in range(n):
                for k in range(n):
                    dl[j, l, k] = self.delta(g[j, l], k)
        return TensorField.build(n, "^ _ _", lambda i, j, k: esum(ex.mul(gi[l][i], dl[j, l, k]) for l in range(n)), "L")

    @cached_property
    def L_conn_alt(self) -> TensorField:
        """Second route: L^i_{jk} = ∂̇_j N^i_k."""
        return TensorField.build(self.n, "^ _ _", lambda i, j, k: d(self.N[i, k], E, j), "L_alt")

    @cached_property
    def C_conn(self) -> TensorField:
        """C^i_{jk} := g^{l̄ i} ∂̇_k g_{j l̄}."""
        n, gi, C = self.n, self.m.ginv, cartan_tensor(self.m)
        return TensorField.build(n, "^ _ _", lambda i, j, k: esum(ex.mul(gi[l][i], C[j, l, k]) for l in range(n)), "C")

    @cached_property
    def torsion(self) -> TensorField:
        L = self.L_conn
        return TensorField.build(self.n, "^ _ _", lambda i, j, k: ex.sub(L[i, j, k], L[i, k, j]), "T")

    # theta* -----------------------------------------------------------------
    @cached_property
    def theta(self) -> list[Expr]:
        """θ^{*k} = 2 g^{j̄ k} δ̊_j̄ L."""
        n, m = self.n, self.m
        dL = [self.spray.delta_bar(m.L, j) for j in range(n)]
        return [ex.mul(ex.const(2.0), esum(ex.mul(m.ginv[j][k], dL[j]) for j in range(n))) for k in range(n)]

    @cached_property
    def theta_alt(self) -> list[Expr]:
        """Torsion route: θ^{*k} = g^{m̄ k} g_{i p̄} conj(T^p_{j m}) eta^i etabar^j."""
        n, m = self.n, self.m
        g, gi = m.g, m.ginv
        Tb = self.torsion.conj()
        e, eb = eta_vec(n), etab_vec(n)
        # lowered contraction first: X_{m̄} = g_{i p̄} conj(T^p_{jm}) eta^i etabar^j
        X = [
            esum(ex.mul(g[i, p], Tb[p, j, mm], e[i], eb[j]) for i in range(n) for p in range(n) for j in range(n))
            for mm in range(n)
        ]
        return [esum(ex.mul(gi[mm][k], X[mm]) for mm in range(n)) for k in range(n)]

    @cached_property
    def theta_jets(self) -> "ThetaJets":
        return ThetaJets(self.n, self.theta)

    # derived scalars ---------------------------------------------------------
    def scale(self, p: EvalPoint) -> float:
        return 1.0 + max_abs(self.m.g.at(p))


class ThetaJets:
    """Vertical derivatives of θ^{*i}.

    t1[i, j]        = ∂̇_j θ^i                      θ^{*i}_j
    t1b[i, h]       = ∂̇_h̄ θ^i                      θ^{*i}_h̄
    t2[i, j, k]     = ∂̇_k θ^i_j                    θ^{*i}_{jk}
    t2b[i, j, h]    = ∂̇_h̄ θ^i_j                    θ^{*i}_{j h̄}
    t3[i, j, k, h]  = ∂̇_h θ^i_{jk}                 θ^{*i}_{jkh}
    t3bh[i,j,k,h]   = ∂̇_k̄ θ^i_{jh}                 θ^{*i}_{j k̄ h}
    t3bb[i,j,k,h]   = ∂̇_k̄ θ^i_{j h̄}               θ^{*i}_{j k̄ h̄}
    """

    def __init__(self, n: int, theta: Sequence[Expr]):
        self.n = n
        self.theta = list(theta)

    @cached_property
    def t1(self) -> TensorField:
        return TensorField.build(self.n, "^", lambda i: self.theta[i], "theta").d(E, name="t1")

    @cached_property
    def t1b(self) -> TensorField:
        return TensorField.build(self.n, "^", lambda i: self.theta[i], "theta").d(EB, name="t1b")

    @cached_property
    def t2(self) -> TensorField:
        return self.t1.d(E, name="t2")

    @cached_property
    def t2b(self) -> TensorField:
        return self.t1.d(EB, name="t2b")

    @cached_property
    def t3(self) -> TensorField:
        return self.t2.d(E, name="t3")

    @cached_property
    def t3bh(self) -> TensorField:
        n, t2 = self.n, self.t2
        return TensorField.build(n, "^ _ _b _", lambda i, j, k, h: d(t2[i, j, h], EB, k), "t3bh")

    @cached_property
    def t3bb(self) -> TensorField:
        n, t2b = self.n, self.t2b
        return TensorField.build(n, "^ _ _b _b", lambda i, j, k, h: d(t2b[i, j, h], EB, k), "t3bb")

    @cached_property
    def trace1(self) -> Expr:
        """θ^{*l}_l."""
        return esum(self.t1[l, l] for l in range(self.n))


def connection_bundle(m: FinslerMetric) -> ConnectionBundle:
    return m.cached("connections", lambda: ConnectionBundle(m))


def chern_finsler_cnc(m: FinslerMetric) -> TensorField:
    return connection_bundle(m).N


def spray(m: FinslerMetric) -> list[Expr]:
    return connection_bundle(m).G


def canonical_cnc(m: FinslerMetric) -> TensorField:
    return connection_bundle(m).Nc


def berwald_coefficients(m: FinslerMetric) -> tuple[TensorField, TensorField]:
    cb = connection_bundle(m)
    return cb.Gjk, cb.Gjkb


def chern_finsler_connection(m: FinslerMetric) -> tuple[TensorField, TensorField, TensorField]:
    cb = connection_bundle(m)
    return cb.L_conn, cb.C_conn, cb.torsion


def theta_star(m: FinslerMetric) -> list[Expr]:
    return connection_bundle(m).theta


def theta_jets(m: FinslerMetric) -> ThetaJets:
    return connection_bundle(m).theta_jets


# pointwise diagnostics --------------------------------------------------------


@dataclass
class KahlerClass:
    strongly_kahler: bool
    kahler: bool
    weakly_kahler: bool
    purely_hermitian: bool
    residuals: dict[str, float]


def kahler_residuals(m: FinslerMetric, p: EvalPoint) -> dict[str, float]:
    """Raw max-abs residuals of the four Kähler-type conditions at ``p``."""
    cb = connection_bundle(m)
    T = cb.torsion.at(p)
    g = m.g.at(p)
    e = p.eta
    T_eta = np.einsum("ijk,j->ik", T, e)
    weak = np.einsum("il,ik,l->k", g, T_eta, e.conj())
    return {
        "strongly_kahler": max_abs(T),
        "kahler": max_abs(T_eta),
        "weakly_kahler": max_abs(weak),
        "purely_hermitian": max(max_abs(m.g.d(E).at(p)), max_abs(m.g.d(EB).at(p))),
    }


def kahler_class(m: FinslerMetric, p: EvalPoint, rel: float = VANISH_REL) -> KahlerClass:
    res = kahler_residuals(m, p)
    thr = rel * connection_bundle(m).scale(p)
    return KahlerClass(
        strongly_kahler=res["strongly_kahler"] <= thr,
        kahler=res["kahler"] <= thr,
        weakly_kahler=res["weakly_kahler"] <= thr,
        purely_hermitian=res["purely_hermitian"] <= thr,
        residuals=res,
    )


def dbar_spray_residual(m: FinslerMetric, p: EvalPoint) -> float:
    """max_k |(∂̇_k̄ G^i) eta_i|."""
    cb = connection_bundle(m)
    n = m.n
    vals = []
    for k in range(n):
        s = sum(ex.evaluate(d(cb.G[i], EB, k), p) * ex.evaluate(m.eta_lower(i), p) for i in range(n))
        vals.append(abs(s))
    return max(vals)


def theta_derivative_sides(m: FinslerMetric, p: EvalPoint) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the ∂̇_k θ^{*i} identity, indexed [i, k]."""
    cb = connection_bundle(m)
    n = m.n
    lhs = cb.theta_jets.t1.at(p)  # [i, k]
    th = np.array([ex.evaluate(t, p) for t in cb.theta])
    C = cb.C_conn.at(p)
    gi = np.array([[ex.evaluate(cb.m.ginv[a][b], p) for b in range(n)] for a in range(n)])
    g = m.g.at(p)
    Nb = cb.N_bar.at(p)  # Nb[r, j] = conj(N^r_j) = N^r̄_j̄
    Ncb = cb.spray.Nc_bar.at(p)
    Gb = [ex.conj_expr(Gi) for Gi in cb.G]
    dGb = np.array([[ex.evaluate(d(Gb[r], E, k), p) for r in range(n)] for k in range(n)])  # [k, r]
    # C_{l r̄ j̄} eta^l := ∂̇_j̄ etabar_r with etabar_r = ∂̇_r̄ L
    Ceta = np.array([[ex.evaluate(d(m.dL(EB, r), EB, j), p) for j in range(n)] for r in range(n)])  # [r, j]
    rhs = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for k in range(n):
            s = -sum(th[l] * C[i, k, l] for l in range(n))
            acc = 0j
            for j in range(n):
                inner = sum((Nb[r, j] - Ncb[r, j]) * g[k, r] + dGb[k, r] * Ceta[r, j] for r in range(n))
                acc += gi[j, i] * inner
            rhs[i, k] = s + 2 * acc
    return lhs, rhs
