"""Curvature tensors of the Berwald-type connection and of the Chern-Finsler connection."""

from __future__ import annotations

from functools import cached_property

import numpy as np

from . import expr as ex
from .connections import (
    E,
    EB,
    ConnectionBundle,
    SprayData,
    connection_bundle,
    d,
    esum,
    eta_vec,
)
from .expr import EvalPoint, Expr
from .tensors import BARRED, PLAIN, UP, FinslerMetric, IndexSignature, TensorField, max_abs


class BerwaldCurvature:
    """K-, Θ- and G-families built from spray data (lazy, cached per instance).

    Slot order follows the index names: ``Kjkbh[i, j, k, h]`` is K^i_{j k̄ h}.
    """

    def __init__(self, sp: SprayData):
        self.sp = sp
        self.n = sp.n

    @cached_property
    def K2(self) -> TensorField:
        """K^i_{jk} = δ̊_k N̊^i_j - δ̊_j N̊^i_k."""
        sp, Nc = self.sp, self.sp.Nc
        return TensorField.build(
            self.n, "^ _ _", lambda i, j, k: ex.sub(sp.delta(Nc[i, j], k), sp.delta(Nc[i, k], j)), "K2"
        )

    @cached_property
    def Theta(self) -> TensorField:
        """Θ^i_{j k̄} = δ̊_k̄ N̊^i_j."""
        sp, Nc = self.sp, self.sp.Nc
        return TensorField.build(self.n, "^ _ _b", lambda i, j, k: sp.delta_bar(Nc[i, j], k), "Theta")

    @cached_property
    def Kjkh(self) -> TensorField:
        sp, G = self.sp, self.sp.Gjk
        n = self.n

        def entry(i, j, k, h):
            quad = esum(
                ex.sub(ex.mul(G[l, j, k], G[i, l, h]), ex.mul(G[l, j, h], G[i, l, k])) for l in range(n)
            )
            return ex.add(sp.delta(G[i, j, k], h), ex.neg(sp.delta(G[i, j, h], k)), quad)

        return TensorField.build(n, "^ _ _ _", entry, "Kjkh")

    @cached_property
    def Kjkbhb(self) -> TensorField:
        sp, Gb = self.sp, self.sp.Gjkb
        n = self.n

        def entry(i, j, k, h):
            quad = esum(
                ex.sub(ex.mul(Gb[l, j, k], Gb[i, l, h]), ex.mul(Gb[l, j, h], Gb[i, l, k])) for l in range(n)
            )
            return ex.add(sp.delta_bar(Gb[i, j, k], h), ex.neg(sp.delta_bar(Gb[i, j, h], k)), quad)

        return TensorField.build(n, "^ _ _b _b", entry, "Kjkbhb")

    @cached_property
    def Kjkbh(self) -> TensorField:
        """K^i_{j k̄ h} = δ̊_h G^i_{j k̄} - δ̊_k̄ G^i_{jh} + G^l_{j k̄} G^i_{lh} - G^l_{jh} G^i_{l k̄}."""
        sp, G, Gb = self.sp, self.sp.Gjk, self.sp.Gjkb
        n = self.n

        def entry(i, j, k, h):
            quad = esum(
                ex.sub(ex.mul(Gb[l, j, k], G[i, l, h]), ex.mul(G[l, j, h], Gb[i, l, k])) for l in range(n)
            )
            return ex.add(sp.delta(Gb[i, j, k], h), ex.neg(sp.delta_bar(G[i, j, h], k)), quad)

        return TensorField.build(n, "^ _ _b _", entry, "Kjkbh")

    @property
    def Gjkh(self) -> TensorField:
        return self.sp.Gjkh

    @property
    def Gjkbhb(self) -> TensorField:
        return self.sp.Gjkbhb

    @property
    def Gjkbh(self) -> TensorField:
        return self.sp.Gjkbh

    # Ricci-type contractions --------------------------------------------------
    @cached_property
    def D_kh(self) -> TensorField:
        """hv-Ricci D_{kh} := G^i_{ikh}."""
        G = self.Gjkh
        return TensorField.build(self.n, "_ _", lambda k, h: esum(G[i, i, k, h] for i in range(self.n)), "D_kh")

    @cached_property
    def D_kbhb(self) -> TensorField:
        G = self.Gjkbhb
        return TensorField.build(self.n, "_b _b", lambda k, h: esum(G[i, i, k, h] for i in range(self.n)), "D_kbhb")

    @cached_property
    def D_kbh(self) -> TensorField:
        G = self.Gjkbh
        return TensorField.build(self.n, "_b _", lambda k, h: esum(G[i, i, k, h] for i in range(self.n)), "D_kbh")

    @cached_property
    def K_kh(self) -> TensorField:
        """hh-Ricci K_{kh} := K^i_{ikh}."""
        K = self.Kjkh
        return TensorField.build(self.n, "_ _", lambda k, h: esum(K[i, i, k, h] for i in range(self.n)), "K_kh")

    @cached_property
    def H(self) -> TensorField:
        """H_{jk} := K^i_{jki}."""
        K = self.Kjkh
        return TensorField.build(self.n, "_ _", lambda j, k: esum(K[i, j, k, i] for i in range(self.n)), "H")

    @cached_property
    def H0k(self) -> list[Expr]:
        e = eta_vec(self.n)
        return [esum(ex.mul(e[j], self.H[j, k]) for j in range(self.n)) for k in range(self.n)]

    @cached_property
    def Hk0(self) -> list[Expr]:
        e = eta_vec(self.n)
        return [esum(ex.mul(self.H[k, j], e[j]) for j in range(self.n)) for k in range(self.n)]

    @cached_property
    def Hk(self) -> list[Expr]:
        """H_k := (n H_{0k} + H_{k0}) / (n - 1); needs n >= 2."""
        n = self.n
        if n < 2:
            raise ValueError("H_k needs n >= 2")
        c = ex.const(1.0 / (n - 1))
        return [ex.mul(c, ex.add(ex.mul(ex.const(n), self.H0k[k]), self.Hk0[k])) for k in range(n)]

    @cached_property
    def K_kbh(self) -> TensorField:
        """hh̄-Ricci K_{k̄ h} := K^i_{i k̄ h}."""
        K = self.Kjkbh
        return TensorField.build(self.n, "_b _", lambda k, h: esum(K[i, i, k, h] for i in range(self.n)), "K_kbh")


def berwald_curvatures(m: FinslerMetric) -> BerwaldCurvature:
    cb = connection_bundle(m)
    return m.cached("berwald_curv", lambda: BerwaldCurvature(cb.spray))


class ChernFinslerCurvature:
    def __init__(self, cb: ConnectionBundle):
        self.cb = cb
        self.n = cb.n

    @cached_property
    def R(self) -> TensorField:
        """R^i_{j k̄ h} = -δ_k̄ L^i_{jh} - (δ_k̄ N^l_h) C^i_{jl}."""
        cb, n = self.cb, self.n
        L, C, N = cb.L_conn, cb.C_conn, cb.N
        dN = {(l, h, k): cb.delta_bar(N[l, h], k) for l in range(n) for h in range(n) for k in range(n)}

        def entry(i, j, k, h):
            tail = esum(ex.mul(dN[l, h, k], C[i, j, l]) for l in range(n))
            return ex.neg(ex.add(cb.delta_bar(L[i, j, h], k), tail))

        return TensorField.build(n, "^ _ _b _", entry, "R")

    @cached_property
    def R_low(self) -> TensorField:
        """R_{r̄ j k̄ h} := R^i_{j k̄ h} g_{i r̄}."""
        g, R, n = self.cb.m.g, self.R, self.n
        return TensorField.build(
            n, "_b _ _b _", lambda r, j, k, h: esum(ex.mul(R[i, j, k, h], g[i, r]) for i in range(n)), "R_low"
        )


def chern_finsler_curvature(m: FinslerMetric) -> ChernFinslerCurvature:
    cb = connection_bundle(m)
    return m.cached("cf_curv", lambda: ChernFinslerCurvature(cb))


def holomorphic_curvature(m: FinslerMetric, p: EvalPoint) -> float:
    """K_F = (2/L^2) R_{r̄ j k̄ h} etabar^r eta^j etabar^k eta^h (imaginary part must vanish)."""
    cf = chern_finsler_curvature(m)
    R = cf.R.at(p)
    g = m.g.at(p)
    e = p.eta
    eb = e.conj()
    # contract R^i_{j k̄ h} with eta^j etabar^k eta^h first, then lower with g_{i r̄} etabar^r
    v = np.einsum("ijkh,j,k,h->i", R, e, eb, e)
    Lv = ex.evaluate(m.L, p)
    val = 2.0 * np.einsum("i,ir,r->", v, g, eb) / Lv**2
    scale = 2.0 * max_abs(R) * max_abs(g) * np.linalg.norm(e) ** 4 / abs(Lv) ** 2 + 1.0
    if abs(val.imag) > 1e-10 * scale:
        raise ArithmeticError(f"holomorphic curvature not real: {val}")
    return float(val.real)


def lowered_K(m: FinslerMetric) -> TensorField:
    """K_{r̄ j k̄ h} := K^i_{j k̄ h} g_{i r̄}."""

    def build():
        K = berwald_curvatures(m).Kjkbh
        g, n = m.g, m.n
        return TensorField.build(
            n, "_b _ _b _", lambda r, j, k, h: esum(ex.mul(K[i, j, k, h], g[i, r]) for i in range(n)), "K_low"
        )

    return m.cached("K_low", build)


# covariant derivatives ------------------------------------------------------


def covariant_derivative(t: TensorField, direction: str, cb: ConnectionBundle) -> TensorField:
    """Chern-Finsler covariant derivative of ``t``; appends one slot.

    ``direction`` is ``"h"`` (``|k``), ``"hbar"`` (``|k̄``) or ``"v"`` (``|_k``,
    vertical).  The connection is of (1,0) type: plain slots pick up L (or C)
    terms in the ``h``/``v`` directions, barred slots pick up conj(L) terms in
    the ``hbar`` direction, and mixed pairings vanish.
    """
    n = t.n
    sig = t.signature
    if direction == "h":
        coeff, base, slot_bar, new = cb.L_conn, cb.delta, PLAIN, "_"
    elif direction == "hbar":
        coeff, base, slot_bar, new = cb.m.cached("L_bar", lambda: cb.L_conn.conj()), cb.delta_bar, BARRED, "_b"
    elif direction == "v":
        coeff, base, slot_bar, new = cb.C_conn, lambda f, k: d(f, E, k), PLAIN, "_"
    else:
        raise ValueError(f"unknown direction {direction!r}")

    def entry(*idx):
        *rest, k = idx
        rest = tuple(rest)
        terms = [base(t.entries[rest], k)]
        for s, slot in enumerate(sig):
            if slot.bar != slot_bar:
                continue
            for b in range(n):
                moved = rest[:s] + (b,) + rest[s + 1 :]
                if slot.variance == UP:
                    terms.append(ex.mul(coeff[rest[s], b, k], t.entries[moved]))
                else:
                    terms.append(ex.neg(ex.mul(coeff[b, rest[s], k], t.entries[moved])))
        return esum(terms)

    return TensorField.build(n, sig + IndexSignature(new), entry, f"{t.name}|{direction}")


# identity suites ------------------------------------------------------------


def curvature_identity_residuals(bc: BerwaldCurvature, p: EvalPoint) -> dict[str, float]:
    """Max-abs residual of each displayed Berwald identity at ``p``."""
    e = p.eta
    eb = e.conj()
    sp = bc.sp
    K2 = bc.K2.at(p)
    Kjkh = bc.Kjkh.at(p)
    dK2 = bc.K2.d(E).at(p)  # [i, k, h, j] = ∂̇_j K^i_{kh}
    Kbb = bc.Kjkbhb.at(p)
    Gbh = bc.Gjkbh.at(p)
    Gbhb = bc.Gjkbhb.at(p)
    Gb = sp.Gjkb.at(p)
    res = {
        "K_jkh=d_j(K_kh)": max_abs(Kjkh - np.transpose(dK2, (0, 3, 1, 2))),
        "K_jkh.eta^j=K_kh": max_abs(np.einsum("ijkh,j->ikh", Kjkh, e) - K2),
        "K_jkbhb antisym": max_abs(Kbb + np.transpose(Kbb, (0, 1, 3, 2))),
        "G_jkbh.eta^j=G_hkb": max_abs(np.einsum("ijkh,j->ikh", Gbh, e) - np.transpose(Gb, (0, 2, 1))),
        "G_jkbhb.etabar^h=-G_jkb": max_abs(np.einsum("ijkh,h->ijk", Gbhb, eb) + Gb),
    }
    res.update(bianchi_residuals(bc, p))
    return res


def bianchi_residuals(bc: BerwaldCurvature, p: EvalPoint) -> dict[str, float]:
    """The displayed vertical Bianchi symmetries; arrays indexed [i, j, k, h, r]."""
    dGkh_r = bc.Gjkh.d(E).at(p)  # ∂̇_r G^i_{jkh}
    dGkh_rb = bc.Gjkh.d(EB).at(p)  # ∂̇_r̄ G^i_{jkh}
    dGbh_r = bc.Gjkbh.d(E).at(p)  # ∂̇_r G^i_{j k̄ h}
    dGbh_rb = bc.Gjkbh.d(EB).at(p)  # ∂̇_r̄ G^i_{j k̄ h}
    dGbb_r = bc.Gjkbhb.d(E).at(p)  # ∂̇_r G^i_{j k̄ h̄}
    dGbb_rb = bc.Gjkbhb.d(EB).at(p)  # ∂̇_r̄ G^i_{j k̄ h̄}
    sw = (0, 1, 2, 4, 3)  # swap h and r
    return {
        "d_r G_jkh = d_h G_jkr": max_abs(dGkh_r - np.transpose(dGkh_r, sw)),
        "d_r G_jkbh = d_h G_jkbr": max_abs(dGbh_r - np.transpose(dGbh_r, sw)),
        # ∂̇_r̄ G^i_{jkh} = ∂̇_h G^i_{j r̄ k}: dGbh_r[i, j, r, k, h]
        "d_rb G_jkh = d_h G_jrbk": max_abs(dGkh_rb - np.transpose(dGbh_r, (0, 1, 3, 4, 2))),
        # ∂̇_r G^i_{j k̄ h̄} = ∂̇_h̄ G^i_{j k̄ r}: dGbh_rb[i, j, k, r, h]
        "d_r G_jkbhb = d_hb G_jkbr": max_abs(dGbb_r - np.transpose(dGbh_rb, sw)),
        "d_rb G_jkbhb = d_hb G_jkbrb": max_abs(dGbb_rb - np.transpose(dGbb_rb, sw)),
        # ∂̇_r̄ G^i_{j h̄ k} = ∂̇_h̄ G^i_{j r̄ k}: dGbh_rb[i, j, h, k, r] vs [i, j, r, k, h]
        "d_rb G_jhbk = d_hb G_jrbk": max_abs(dGbh_rb - np.transpose(dGbh_rb, (0, 1, 4, 3, 2))),
    }


def generalized_berwald_residuals(bc: BerwaldCurvature, p: EvalPoint) -> dict[str, float]:
    """Vertical derivatives of K^i_{jkh} and K^i_{j k̄ h}; all vanish for generalized Berwald."""
    return {
        "d_r K_jkh": max_abs(bc.Kjkh.d(E).at(p)),
        "d_rb K_jkh": max_abs(bc.Kjkh.d(EB).at(p)),
        "d_r K_jkbh": max_abs(bc.Kjkbh.d(E).at(p)),
        "d_rb K_jkbh": max_abs(bc.Kjkbh.d(EB).at(p)),
    }


def curvature_derivative_symmetries(m: FinslerMetric, p: EvalPoint) -> dict[str, float]:
    """K^i_{j r̄ k|h̄} = K^i_{j h̄ k|r̄} and K^i_{j r̄ k|h} = K^i_{j r̄ h|k} (complex Berwald)."""
    cb = connection_bundle(m)
    K = berwald_curvatures(m).Kjkbh
    Kh = covariant_derivative(K, "h", cb).at(p)  # [i, j, r, k, h]
    Khb = covariant_derivative(K, "hbar", cb).at(p)  # [i, j, r, k, h]
    return {
        "K_jrbk|hb = K_jhbk|rb": max_abs(Khb - np.transpose(Khb, (0, 1, 4, 3, 2))),
        "K_jrbk|h = K_jrbh|k": max_abs(Kh - np.transpose(Kh, (0, 1, 2, 4, 3))),
    }


def weyl_ricci_suite(m: FinslerMetric, p: EvalPoint) -> dict[str, np.ndarray]:
    bc = berwald_curvatures(m)
    out = {
        "K_kh": bc.K_kh.at(p),
        "H_jk": bc.H.at(p),
        "H_0k": np.array([ex.evaluate(x, p) for x in bc.H0k]),
        "H_k0": np.array([ex.evaluate(x, p) for x in bc.Hk0]),
        "K_kbh": bc.K_kbh.at(p),
    }
    if m.n >= 2:
        out["H_k"] = np.array([ex.evaluate(x, p) for x in bc.Hk])
    H = out["H_jk"]
    out["link_residual"] = np.array(max_abs(H.T - H - out["K_kh"]))
    return out
