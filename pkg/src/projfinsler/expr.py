"""Hash-consed expression trees over independent Wirtinger variables.

Every expression is built through the smart constructors in this module, which
apply a conservative simplification (constant folding, 0/1 identities,
flattening, like-term collection by handle) and intern the result.  Two
structurally identical expressions are therefore the *same* Python object and
identity comparison is the equality test.

Besides the user-facing node kinds there is one internal kind, ``INV``: entry
``(a, b)`` of the inverse of a square matrix of expressions.  It is evaluated
numerically at a point and differentiated with ``d(M^-1) = -M^-1 (dM) M^-1``,
which is how the inverse metric enters every downstream object without ever
being formed symbolically.
"""

from __future__ import annotations

import cmath
import enum
import itertools
import threading
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Expr",
    "ExprError",
    "EvaluationError",
    "Kind",
    "Var",
    "EvalPoint",
    "const",
    "var",
    "z",
    "zb",
    "eta",
    "etab",
    "add",
    "mul",
    "neg",
    "sub",
    "div",
    "power",
    "exp",
    "log",
    "sqrt",
    "inverse_matrix",
    "simplify",
    "wirtinger_d",
    "conj_expr",
    "evaluate",
    "fd_oracle",
    "free_vars",
    "ZERO",
    "ONE",
]


class ExprError(ValueError):
    """Invalid expression construction (e.g. division by a zero constant)."""


class EvaluationError(ArithmeticError):
    """Numerical singularity hit while evaluating an expression."""

    def __init__(self, message: str, subtree: "Expr | None" = None):
        self.subtree = subtree
        if subtree is not None:
            text = str(subtree)
            if len(text) > 200:
                text = text[:200] + "..."
            message = f"{message} in subtree {text}"
        super().__init__(message)


class Var(enum.Enum):
    Z = "z"
    ZBAR = "zb"
    ETA = "e"
    ETABAR = "eb"

    @property
    def conjugate(self) -> "Var":
        return _CONJ_VAR[self]

    @property
    def barred(self) -> bool:
        return self in (Var.ZBAR, Var.ETABAR)


_CONJ_VAR = {Var.Z: Var.ZBAR, Var.ZBAR: Var.Z, Var.ETA: Var.ETABAR, Var.ETABAR: Var.ETA}


class Kind(enum.IntEnum):
    CONST = 0
    VAR = 1
    ADD = 2
    MUL = 3
    POW = 4  # integer power; negative powers encode quotients
    RPOW = 5  # real power, principal branch
    EXP = 6
    LOG = 7
    INV = 8  # (a, b) entry of a numerically inverted matrix


class Expr:
    """Immutable, interned expression node.  Do not instantiate directly."""

    __slots__ = ("kind", "payload", "args", "id", "_hash", "__weakref__")

    def __init__(self, kind: Kind, payload, args: tuple["Expr", ...], ident: int):
        self.kind = kind
        self.payload = payload
        self.args = args
        self.id = ident
        self._hash = hash(ident)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:  # identity is equality for interned nodes
        return self is other

    def __repr__(self) -> str:
        return f"Expr({self})"

    def __str__(self) -> str:
        from .syntax import to_source

        return to_source(self)

    # arithmetic sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    @property
    def is_const(self) -> bool:
        return self.kind is Kind.CONST

    @property
    def value(self) -> complex:
        if self.kind is not Kind.CONST:
            raise ExprError("not a constant")
        return self.payload

    def is_zero(self) -> bool:
        return self.kind is Kind.CONST and self.payload == 0


_lock = threading.RLock()
_table: dict[tuple, Expr] = {}
_counter = itertools.count()


def _intern(kind: Kind, payload, args: tuple[Expr, ...]) -> Expr:
    key = (kind, payload, tuple(a.id for a in args))
    node = _table.get(key)
    if node is not None:
        return node
    with _lock:
        node = _table.get(key)
        if node is None:
            node = Expr(kind, payload, args, next(_counter))
            _table[key] = node
    return node


def _wrap(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return const(x)
    raise TypeError(f"cannot use {type(x).__name__} in an expression")


def _norm_complex(c) -> complex:
    c = complex(c)
    # +0.0 normalizes negative zeros so constants intern deterministically
    return complex(c.real + 0.0, c.imag + 0.0)


def const(c) -> Expr:
    c = _norm_complex(c)
    if not (cmath.isfinite(c)):
        raise ExprError(f"non-finite constant {c}")
    return _intern(Kind.CONST, c, ())


ZERO = const(0)
ONE = const(1)
_MINUS_ONE = const(-1)


def var(kind: Var, index: int) -> Expr:
    if index < 1:
        raise ExprError("variable indices start at 1")
    return _intern(Kind.VAR, (kind, int(index)), ())


def z(k: int) -> Expr:
    return var(Var.Z, k)


def zb(k: int) -> Expr:
    return var(Var.ZBAR, k)


def eta(k: int) -> Expr:
    return var(Var.ETA, k)


def etab(k: int) -> Expr:
    return var(Var.ETABAR, k)


def _split_coeff(term: Expr) -> tuple[complex, Expr]:
    """Split ``c * core`` into (c, core)."""
    if term.kind is Kind.CONST:
        return term.payload, ONE
    if term.kind is Kind.MUL and term.args[0].kind is Kind.CONST:
        rest = term.args[1:]
        core = rest[0] if len(rest) == 1 else _intern(Kind.MUL, None, rest)
        return term.args[0].payload, core
    return 1 + 0j, term


def add(*terms: Expr) -> Expr:
    constant = 0j
    coeffs: dict[int, list] = {}
    stack = list(terms)
    while stack:
        t = _wrap(stack.pop())
        if t.kind is Kind.ADD:
            stack.extend(t.args)
            continue
        if t.kind is Kind.CONST:
            constant += t.payload
            continue
        c, core = _split_coeff(t)
        slot = coeffs.get(core.id)
        if slot is None:
            coeffs[core.id] = [core, c]
        else:
            slot[1] += c
    out = []
    for core, c in coeffs.values():
        if c == 0:
            continue
        out.append(core if c == 1 else _scale(c, core))
    if constant != 0 or not out:
        out.append(const(constant))
    if len(out) == 1:
        return out[0]
    out.sort(key=lambda e: e.id)
    return _intern(Kind.ADD, None, tuple(out))


def _scale(c: complex, core: Expr) -> Expr:
    if core.kind is Kind.MUL:
        return _intern(Kind.MUL, None, (const(c),) + core.args)
    return _intern(Kind.MUL, None, (const(c), core))


def mul(*factors: Expr) -> Expr:
    coeff = 1 + 0j
    powers: dict[int, list] = {}
    stack = list(factors)
    while stack:
        f = _wrap(stack.pop())
        if f.kind is Kind.MUL:
            stack.extend(f.args)
            continue
        if f.kind is Kind.CONST:
            coeff *= f.payload
            continue
        if f.kind in (Kind.POW, Kind.RPOW):
            base, k = f.args[0], f.payload
        else:
            base, k = f, 1
        slot = powers.get(base.id)
        if slot is None:
            powers[base.id] = [base, k]
        else:
            slot[1] += k
    if coeff == 0:
        return ZERO
    out = []
    for base, k in powers.values():
        if k == 0:
            continue
        if isinstance(k, float) and not k.is_integer():
            out.append(_intern(Kind.RPOW, k, (base,)))
        elif base.kind is Kind.MUL:
            # a fractional power of a product folded back to an integer one
            rest = [const(coeff)] + [b if e == 1 else power(b, e) for b, e in powers.values() if b is not base]
            return mul(ipow(base, int(k)), *rest)
        else:
            k = int(k)
            out.append(base if k == 1 else _intern(Kind.POW, k, (base,)))
    if not out:
        return const(coeff)
    out.sort(key=lambda e: e.id)
    if coeff != 1:
        out.insert(0, const(coeff))
    if len(out) == 1:
        return out[0]
    return _intern(Kind.MUL, None, tuple(out))


def neg(e: Expr) -> Expr:
    return mul(_MINUS_ONE, e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr) -> Expr:
    return mul(a, ipow(b, -1))


def ipow(base: Expr, k: int) -> Expr:
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return base
    if base.kind is Kind.CONST:
        if base.payload == 0 and k < 0:
            raise ExprError("division by zero constant")
        return const(base.payload**k)
    if base.kind is Kind.POW:
        return ipow(base.args[0], base.payload * k)
    if base.kind is Kind.RPOW:
        return rpow(base.args[0], base.payload * k)
    if base.kind is Kind.MUL:
        return mul(*(ipow(f, k) for f in base.args))
    return _intern(Kind.POW, k, (base,))


def rpow(base: Expr, r: float) -> Expr:
    r = float(r) + 0.0
    if r.is_integer():
        return ipow(base, int(r))
    if base.kind is Kind.CONST:
        if base.payload == 0:
            if r < 0:
                raise ExprError("division by zero constant")
            return ZERO
        return const(base.payload**r)
    return _intern(Kind.RPOW, r, (base,))


def power(base, exponent) -> Expr:
    base = _wrap(base)
    if isinstance(exponent, Expr):
        if exponent.kind is not Kind.CONST or exponent.payload.imag != 0:
            raise ExprError("exponent must be a real constant")
        exponent = exponent.payload.real
    if isinstance(exponent, complex):
        if exponent.imag != 0:
            raise ExprError("exponent must be a real constant")
        exponent = exponent.real
    if isinstance(exponent, (int, np.integer)):
        return ipow(base, int(exponent))
    return rpow(base, float(exponent))


def exp(u) -> Expr:
    u = _wrap(u)
    if u.kind is Kind.CONST:
        return const(cmath.exp(u.payload))
    if u.kind is Kind.LOG:
        return u.args[0]
    return _intern(Kind.EXP, None, (u,))


def log(u) -> Expr:
    u = _wrap(u)
    if u.kind is Kind.CONST:
        if u.payload == 0:
            raise ExprError("log of zero constant")
        return const(cmath.log(u.payload))
    return _intern(Kind.LOG, None, (u,))


def sqrt(u) -> Expr:
    return rpow(_wrap(u), 0.5)


def inverse_matrix(matrix: Sequence[Sequence[Expr]], hermitian: bool = False) -> list[list[Expr]]:
    """Symbolic handles for the entries of ``matrix^-1``.

    ``hermitian`` asserts that ``conj(matrix[a][b])`` equals ``matrix[b][a]`` in
    value; conjugation of the inverse entries then maps to the transposed entry
    instead of inverting a second, conjugated matrix.
    """
    n = len(matrix)
    entries = tuple(_wrap(matrix[a][b]) for a in range(n) for b in range(n))
    if all(e.kind is Kind.CONST for e in entries):
        inv = np.linalg.inv(np.array([e.payload for e in entries]).reshape(n, n))
        return [[const(inv[a, b]) for b in range(n)] for a in range(n)]
    return [[_intern(Kind.INV, (n, a, b, bool(hermitian)), entries) for b in range(n)] for a in range(n)]


def _inv_parts(e: Expr):
    n, a, b, herm = e.payload
    return n, a, b, herm


def _rebuild(e: Expr, args: Sequence[Expr]) -> Expr:
    k = e.kind
    if k is Kind.ADD:
        return add(*args)
    if k is Kind.MUL:
        return mul(*args)
    if k is Kind.POW:
        return ipow(args[0], e.payload)
    if k is Kind.RPOW:
        return rpow(args[0], e.payload)
    if k is Kind.EXP:
        return exp(args[0])
    if k is Kind.LOG:
        return log(args[0])
    if k is Kind.INV:
        n, a, b, herm = e.payload
        return _intern(Kind.INV, e.payload, tuple(args))
    return e


def simplify(e: Expr) -> Expr:
    """Re-run the smart constructors bottom-up; idempotent."""
    memo: dict[int, Expr] = {}
    for node in _postorder(e):
        if not node.args:
            memo[node.id] = node
        else:
            memo[node.id] = _rebuild(node, [memo[a.id] for a in node.args])
    return memo[e.id]


def _postorder(root: Expr) -> list[Expr]:
    order: list[Expr] = []
    seen: set[int] = set()
    stack: list[tuple[Expr, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node.id in seen:
            continue
        seen.add(node.id)
        stack.append((node, True))
        for a in node.args:
            if a.id not in seen:
                stack.append((a, False))
    return order


def free_vars(e: Expr) -> set[tuple[Var, int]]:
    return {n.payload for n in _postorder(e) if n.kind is Kind.VAR}


# differentiation ----------------------------------------------------------

_dcache: dict[tuple[int, Var, int], Expr] = {}
_depcache: dict[int, frozenset] = {}


def _deps(e: Expr) -> frozenset:
    """Variables an expression depends on (memoized; INV depends on its matrix)."""
    d = _depcache.get(e.id)
    if d is not None:
        return d
    for node in _postorder(e):
        if node.id in _depcache:
            continue
        if node.kind is Kind.VAR:
            val = frozenset((node.payload,))
        elif not node.args:
            val = frozenset()
        else:
            val = frozenset().union(*(_depcache[a.id] for a in node.args))
        _depcache[node.id] = val
    return _depcache[e.id]


def wirtinger_d(e: Expr, kind: Var, index: int) -> Expr:
    """Exact partial derivative treating barred and unbarred symbols as independent."""
    target = (kind, index)
    key = (e.id, kind, index)
    hit = _dcache.get(key)
    if hit is not None:
        return hit
    if target not in _deps(e):  # also fills the dependency cache for every subtree
        _dcache[key] = ZERO
        return ZERO
    for node in _postorder(e):
        nk = (node.id, kind, index)
        if nk in _dcache:
            continue
        if target not in _deps(node):
            _dcache[nk] = ZERO
            continue
        _dcache[nk] = _d_node(node, target, kind, index)
    return _dcache[key]


def _d(node: Expr, kind: Var, index: int) -> Expr:
    return _dcache[(node.id, kind, index)]


def _d_node(node: Expr, target, kind: Var, index: int) -> Expr:
    k = node.kind
    if k is Kind.VAR:
        return ONE if node.payload == target else ZERO
    if k is Kind.ADD:
        return add(*(_d(a, kind, index) for a in node.args))
    if k is Kind.MUL:
        terms = []
        args = node.args
        for i, a in enumerate(args):
            da = _d(a, kind, index)
            if da.is_zero():
                continue
            terms.append(mul(da, *args[:i], *args[i + 1 :]))
        return add(*terms)
    if k is Kind.POW:
        (b,) = node.args
        p = node.payload
        return mul(const(p), ipow(b, p - 1), _d(b, kind, index))
    if k is Kind.RPOW:
        (b,) = node.args
        r = node.payload
        return mul(const(r), rpow(b, r - 1.0), _d(b, kind, index))
    if k is Kind.EXP:
        return mul(node, _d(node.args[0], kind, index))
    if k is Kind.LOG:
        (u,) = node.args
        return mul(_d(u, kind, index), ipow(u, -1))
    if k is Kind.INV:
        n, a, b, herm = node.payload
        entries = node.args
        terms = []
        for c in range(n):
            for d in range(n):
                dm = wirtinger_d(entries[c * n + d], kind, index)
                if dm.is_zero():
                    continue
                terms.append(mul(_MINUS_ONE, _inv_entry(node, a, c), dm, _inv_entry(node, d, b)))
        return add(*terms)
    return ZERO


def _inv_entry(node: Expr, a: int, b: int) -> Expr:
    n, _, _, herm = node.payload
    return _intern(Kind.INV, (n, a, b, herm), node.args)


# conjugation --------------------------------------------------------------

_ccache: dict[int, Expr] = {}


def conj_expr(e: Expr) -> Expr:
    """Formal complex conjugate: swaps z<->zbar, eta<->etabar, conjugates constants."""
    hit = _ccache.get(e.id)
    if hit is not None:
        return hit
    for node in _postorder(e):
        if node.id in _ccache:
            continue
        k = node.kind
        if k is Kind.CONST:
            out = const(node.payload.conjugate())
        elif k is Kind.VAR:
            vk, idx = node.payload
            out = var(vk.conjugate, idx)
        elif k is Kind.INV:
            n, a, b, herm = node.payload
            if herm:
                out = _intern(Kind.INV, (n, b, a, herm), node.args)
            else:
                out = _intern(Kind.INV, node.payload, tuple(_ccache[x.id] for x in node.args))
        else:
            out = _rebuild(node, [_ccache[a.id] for a in node.args])
        _ccache[node.id] = out
        _ccache.setdefault(out.id, node)
    return _ccache[e.id]


# evaluation ---------------------------------------------------------------


class EvalPoint:
    """A point (z, eta) of T'M minus the zero section, with a value cache.

    The cache is keyed by node id and is meant to be used by one evaluation
    task at a time.
    """

    __slots__ = ("z", "eta", "cache", "_inv")

    def __init__(self, z: Iterable[complex], eta: Iterable[complex]):
        self.z = np.asarray(list(z), dtype=complex)
        self.eta = np.asarray(list(eta), dtype=complex)
        if self.z.shape != self.eta.shape or self.z.ndim != 1:
            raise ValueError("z and eta must be vectors of equal length")
        if not np.any(self.eta != 0):
            raise ValueError("eta must be nonzero")
        self.cache: dict[int, complex] = {}
        self._inv: dict[tuple, np.ndarray] = {}

    @property
    def n(self) -> int:
        return len(self.z)

    def replace(self, z=None, eta=None) -> "EvalPoint":
        return EvalPoint(self.z if z is None else z, self.eta if eta is None else eta)

    def __repr__(self) -> str:
        return f"EvalPoint(z={self.z.tolist()}, eta={self.eta.tolist()})"

    def var_value(self, kind: Var, index: int) -> complex:
        if index > self.n:
            raise EvaluationError(f"variable index {index} exceeds dimension {self.n}")
        if kind is Var.Z:
            return complex(self.z[index - 1])
        if kind is Var.ZBAR:
            return complex(self.z[index - 1]).conjugate()
        if kind is Var.ETA:
            return complex(self.eta[index - 1])
        return complex(self.eta[index - 1]).conjugate()


def evaluate(e: Expr, p: EvalPoint) -> complex:
    """Value of ``e`` at ``p``; shared subtrees are computed once per point."""
    cache = p.cache
    hit = cache.get(e.id)
    if hit is not None:
        return hit
    stack = [e]
    while stack:
        node = stack[-1]
        if node.id in cache:
            stack.pop()
            continue
        pending = [a for a in node.args if a.id not in cache]
        if pending and node.kind is not Kind.INV:
            stack.extend(pending)
            continue
        if node.kind is Kind.INV and pending:
            stack.extend(pending)
            continue
        stack.pop()
        cache[node.id] = _eval_node(node, p, cache)
    return cache[e.id]


def _eval_node(node: Expr, p: EvalPoint, cache) -> complex:
    k = node.kind
    if k is Kind.CONST:
        return node.payload
    if k is Kind.VAR:
        return p.var_value(*node.payload)
    if k is Kind.ADD:
        s = 0j
        for a in node.args:
            s += cache[a.id]
        return s
    if k is Kind.MUL:
        s = 1 + 0j
        for a in node.args:
            s *= cache[a.id]
        return s
    if k is Kind.POW:
        b = cache[node.args[0].id]
        if b == 0 and node.payload < 0:
            raise EvaluationError("division by zero", node)
        return b**node.payload
    if k is Kind.RPOW:
        b = cache[node.args[0].id]
        if b == 0:
            if node.payload < 0:
                raise EvaluationError("negative real power of zero", node)
            return 0j
        return b**node.payload
    if k is Kind.EXP:
        try:
            return cmath.exp(cache[node.args[0].id])
        except OverflowError as exc:
            raise EvaluationError("exp overflow", node) from exc
    if k is Kind.LOG:
        u = cache[node.args[0].id]
        if u == 0:
            raise EvaluationError("log of zero", node)
        return cmath.log(u)
    if k is Kind.INV:
        n, a, b, _ = node.payload
        key = tuple(x.id for x in node.args)
        inv = p._inv.get(key)
        if inv is None:
            m = np.array([cache[x.id] for x in node.args], dtype=complex).reshape(n, n)
            try:
                inv = np.linalg.inv(m)
            except np.linalg.LinAlgError as exc:
                raise EvaluationError("singular matrix inverse", node) from exc
            p._inv[key] = inv
        return complex(inv[a, b])
    raise AssertionError(k)


def evaluate_many(exprs: Iterable[Expr], p: EvalPoint) -> list[complex]:
    return [evaluate(e, p) for e in exprs]


def fd_oracle(e: Expr, kind: Var, index: int, p: EvalPoint, h: float = 1e-5) -> complex:
    """Central-difference Wirtinger derivative; conjugate symbol co-varies."""
    if h <= 0:
        raise ValueError("step must be positive")
    if kind in (Var.Z, Var.ZBAR):
        base, field = p.z, "z"
    else:
        base, field = p.eta, "eta"

    def f(delta: complex) -> complex:
        v = base.copy()
        v[index - 1] += delta
        return evaluate(e, p.replace(**{field: v}))

    dx = (f(h) - f(-h)) / (2 * h)
    dy = (f(1j * h) - f(-1j * h)) / (2 * h)
    if kind.barred:
        return 0.5 * (dx + 1j * dy)
    return 0.5 * (dx - 1j * dy)
