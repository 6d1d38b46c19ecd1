"""Index-typed tensor fields, the Finsler metric object and its validation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import expr as ex
from .expr import EvalPoint, Expr, Var
from .syntax import parse

UP, DOWN = "up", "down"
PLAIN, BARRED = "plain", "barred"


@dataclass(frozen=True)
class Slot:
    variance: str
    bar: str

    def __post_init__(self):
        if self.variance not in (UP, DOWN) or self.bar not in (PLAIN, BARRED):
            raise ValueError(f"bad slot {self.variance}/{self.bar}")

    def conj(self) -> "Slot":
        return Slot(self.variance, BARRED if self.bar == PLAIN else PLAIN)

    def code(self) -> str:
        return ("^" if self.variance == UP else "_") + ("b" if self.bar == BARRED else "")


class IndexSignature(tuple):
    """Ordered slot list.  Built from a compact code such as ``"^ _ _b _"``."""

    def __new__(cls, slots: Iterable[Slot] | str = ()):
        if isinstance(slots, str):
            slots = [_slot_from_code(c) for c in slots.split()]
        return super().__new__(cls, tuple(slots))

    @property
    def rank(self) -> int:
        return len(self)

    def conj(self) -> "IndexSignature":
        return IndexSignature(s.conj() for s in self)

    def code(self) -> str:
        return " ".join(s.code() for s in self)

    def __add__(self, other) -> "IndexSignature":
        return IndexSignature(tuple(self) + tuple(other))


def _slot_from_code(code: str) -> Slot:
    table = {"^": Slot(UP, PLAIN), "^b": Slot(UP, BARRED), "_": Slot(DOWN, PLAIN), "_b": Slot(DOWN, BARRED)}
    if code not in table:
        raise ValueError(f"unknown slot code {code!r}")
    return table[code]


class TensorField:
    """Dense multi-array of expressions with an index signature.

    Entries may contain inverse-matrix nodes, in which case the field is only
    meaningful pointwise; :meth:`at` evaluates every entry at one point.
    """

    __slots__ = ("n", "signature", "entries", "name")

    def __init__(self, n: int, signature: IndexSignature | str, entries, name: str = ""):
        self.n = n
        self.signature = IndexSignature(signature)
        arr = np.empty((n,) * self.signature.rank, dtype=object)
        src = np.asarray(entries, dtype=object) if not isinstance(entries, np.ndarray) else entries
        if src.shape != arr.shape:
            raise ValueError(f"entries shape {src.shape} does not match {arr.shape}")
        for idx in itertools.product(range(n), repeat=self.signature.rank):
            arr[idx] = ex._wrap(src[idx])
        self.entries = arr
        self.name = name

    @classmethod
    def build(cls, n: int, signature, fn: Callable[..., Expr], name: str = "") -> "TensorField":
        sig = IndexSignature(signature)
        arr = np.empty((n,) * sig.rank, dtype=object)
        for idx in itertools.product(range(n), repeat=sig.rank):
            arr[idx] = ex._wrap(fn(*idx))
        return cls(n, sig, arr, name)

    @property
    def rank(self) -> int:
        return self.signature.rank

    def __getitem__(self, idx) -> Expr:
        return self.entries[idx]

    def indices(self):
        return itertools.product(range(self.n), repeat=self.rank)

    def at(self, p: EvalPoint) -> np.ndarray:
        out = np.empty(self.entries.shape, dtype=complex)
        for idx in self.indices():
            out[idx] = ex.evaluate(self.entries[idx], p)
        return out

    def map(self, fn: Callable[[Expr], Expr], signature=None, name: str = "") -> "TensorField":
        return TensorField.build(
            self.n, self.signature if signature is None else signature, lambda *i: fn(self.entries[i]), name or self.name
        )

    def conj(self) -> "TensorField":
        return TensorField.build(self.n, self.signature.conj(), lambda *i: ex.conj_expr(self.entries[i]), self.name)

    def d(self, kind: Var, slot_sig: str | None = None, name: str = "") -> "TensorField":
        """Append one derivative slot: entry ``[..., k]`` is d/d(kind^k) of entry ``[...]``."""
        sig = self.signature + IndexSignature(slot_sig or ("_b" if kind.barred else "_"))
        return TensorField.build(
            self.n, sig, lambda *i: ex.wirtinger_d(self.entries[i[:-1]], kind, i[-1] + 1), name or self.name
        )

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries.flat)

    def __repr__(self) -> str:
        return f"TensorField({self.name or '?'}, n={self.n}, sig='{self.signature.code()}')"


def max_abs(arr) -> float:
    arr = np.asarray(arr)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


# metric -------------------------------------------------------------------


@dataclass(frozen=True)
class Sampling:
    count: int = 32
    z_radius: float = 0.7
    eta_floor: float = 0.05
    seed: int = 0

    def points(self, n: int) -> list[EvalPoint]:
        return sample_points(n, self.count, self.seed, self.z_radius, self.eta_floor)


def sample_points(n: int, count: int, seed: int = 0, z_radius: float = 0.7, eta_floor: float = 0.05) -> list[EvalPoint]:
    """Deterministic sample: z uniform in the polydisc, eta on the unit polycircle.

    Each ``|eta^k|`` is drawn from ``[eta_floor, 1]`` so no component sits on
    an axis.
    """
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        r = z_radius * np.sqrt(rng.uniform(0, 1, n))
        zs = r * np.exp(2j * np.pi * rng.uniform(0, 1, n))
        mod = rng.uniform(eta_floor, 1.0, n)
        es = mod * np.exp(2j * np.pi * rng.uniform(0, 1, n))
        pts.append(EvalPoint(zs, es))
    return pts


class FinslerMetric:
    """Fundamental function ``L(z, eta)`` of a complex Finsler space of dimension n."""

    def __init__(self, n: int, L: Expr | str, label: str = ""):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        self.n = n
        self.L = parse(L, n) if isinstance(L, str) else L
        self.label = label or str(self.L)
        for kind, idx in ex.free_vars(self.L):
            if idx > n:
                raise ValueError(f"L uses index {idx} beyond n={n}")
        self._cache: dict = {}

    def __repr__(self) -> str:
        return f"FinslerMetric({self.label!r}, n={self.n})"

    @property
    def is_real_symbolically(self) -> bool:
        return ex.conj_expr(self.L) is self.L

    def cached(self, key, build):
        hit = self._cache.get(key)
        if hit is None:
            hit = build()
            self._cache[key] = hit
        return hit

    @property
    def g(self) -> TensorField:
        return metric_tensor(self)

    @property
    def ginv(self) -> list[list[Expr]]:
        """``ginv[j][i]`` is g^{j̄ i}: sum_j g_{k j̄} g^{j̄ i} = delta_k^i."""

        def build():
            g = self.g
            mat = [[g[a, b] for b in range(self.n)] for a in range(self.n)]
            return ex.inverse_matrix(mat, hermitian=self.is_real_symbolically)

        return self.cached("ginv", build)

    def dL(self, kind: Var, k: int) -> Expr:
        return ex.wirtinger_d(self.L, kind, k + 1)

    def eta_lower(self, i: int) -> Expr:
        """eta_i := d L / d eta^i."""
        return self.dL(Var.ETA, i)


def metric_tensor(m: FinslerMetric) -> TensorField:
    """g_{i j̄} = d^2 L / d eta^i d etabar^j."""

    def build():
        return TensorField.build(
            m.n,
            "_ _b",
            lambda i, j: ex.wirtinger_d(ex.wirtinger_d(m.L, Var.ETA, i + 1), Var.ETABAR, j + 1),
            name="g",
        )

    return m.cached("g", build)


def cartan_tensor(m: FinslerMetric) -> TensorField:
    """C_{j m̄ h} := d g_{j m̄} / d eta^h."""
    return m.cached("C_low", lambda: m.g.d(Var.ETA, name="C_low"))


class NotPositiveDefinite(ArithmeticError):
    def __init__(self, min_eig: float, threshold: float):
        self.min_eig = min_eig
        self.threshold = threshold
        super().__init__(f"metric not positive definite: smallest eigenvalue {min_eig:.3e} <= {threshold:.3e}")


def inverse_metric(g_at_p: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Inverse of a Hermitian positive-definite matrix, indexed ``[j̄, i]``.

    Positive definiteness is decided on the Hermitian part with threshold
    ``tol * trace``.
    """
    g = np.asarray(g_at_p, dtype=complex)
    herm = 0.5 * (g + g.conj().T)
    eig = np.linalg.eigvalsh(herm)
    threshold = tol * float(np.real(np.trace(herm)))
    if eig[0] <= threshold:
        raise NotPositiveDefinite(float(eig[0]), threshold)
    return np.linalg.inv(g)


@dataclass
class PointValidation:
    point: EvalPoint
    L: float
    residuals: dict[str, float]
    min_eig: float
    scale: float

    @property
    def worst(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0


@dataclass
class ValidationReport:
    metric: str
    tol: float
    points: list[PointValidation] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max((p.worst for p in self.points), default=0.0)

    @property
    def min_eigenvalue(self) -> float:
        return min((p.min_eig for p in self.points), default=float("nan"))

    @property
    def passed(self) -> bool:
        if self.errors or not self.points:
            return False
        return all(p.worst <= self.tol and p.min_eig > self.tol * p.scale for p in self.points)

    def worst_by_check(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for p in self.points:
            for k, v in p.residuals.items():
                out[k] = max(out.get(k, 0.0), v)
        return out


def validate(m: FinslerMetric, points: Sequence[EvalPoint], tol: float = 1e-10) -> ValidationReport:
    """Euler identities, reality, Hermitian symmetry and positivity at each point.

    Residuals are relative to ``1 + |L|`` (to ``1 + max|g|`` for identities of g).
    """
    if not points:
        raise ValueError("validate needs at least one point")
    n = m.n
    report = ValidationReport(m.label, tol)
    g = m.g
    dg_eta = g.d(Var.ETA)
    dg_etab = g.d(Var.ETABAR)
    e, eb = _eta_vectors(n)
    euler_L = ex.sub(ex.add(*(ex.mul(m.dL(Var.ETA, k), e[k]) for k in range(n))), m.L)
    euler_Lb = ex.sub(ex.add(*(ex.mul(m.dL(Var.ETABAR, k), eb[k]) for k in range(n))), m.L)
    contract_L = ex.sub(ex.add(*(ex.mul(g[i, j], e[i], eb[j]) for i in range(n) for j in range(n))), m.L)
    reality = ex.sub(m.L, ex.conj_expr(m.L))
    for p in points:
        try:
            Lv = ex.evaluate(m.L, p)
            gv = g.at(p)
            scale_L = 1.0 + abs(Lv)
            scale_g = 1.0 + max_abs(gv)
            res = {
                "euler_dL_eta": abs(ex.evaluate(euler_L, p)) / scale_L,
                "euler_dL_etabar": abs(ex.evaluate(euler_Lb, p)) / scale_L,
                "euler_dg_eta": max_abs(np.einsum("ijk,k->ij", dg_eta.at(p), p.eta)) / scale_g,
                "euler_dg_etabar": max_abs(np.einsum("ijk,k->ij", dg_etab.at(p), p.eta.conj())) / scale_g,
                "L_equals_g_eta_etabar": abs(ex.evaluate(contract_L, p)) / scale_L,
                "reality": abs(ex.evaluate(reality, p)) / scale_L,
                "hermitian": max_abs(gv - gv.conj().T) / scale_g,
            }
            herm = 0.5 * (gv + gv.conj().T)
            eig = np.linalg.eigvalsh(herm)
            report.points.append(
                PointValidation(p, float(Lv.real), res, float(eig[0]), float(np.real(np.trace(herm))))
            )
        except ex.EvaluationError as err:
            report.errors.append(f"{p!r}: {err}")
    return report


def _eta_vectors(n: int):
    return [ex.eta(k + 1) for k in range(n)], [ex.etab(k + 1) for k in range(n)]


def contract(t: TensorField, slot: int, vec: Sequence[Expr], signature=None) -> TensorField:
    """Contract slot ``slot`` of ``t`` with a vector of expressions."""
    sig = list(t.signature)
    del sig[slot]

    def entry(*idx):
        terms = []
        for a in range(t.n):
            full = idx[:slot] + (a,) + idx[slot:]
            terms.append(ex.mul(t.entries[full], vec[a]))
        return ex.add(*terms)

    return TensorField.build(t.n, IndexSignature(sig) if signature is None else signature, entry)
