"""Built-in metric families used by the CLI and the acceptance suite."""

from __future__ import annotations

from .syntax import parse
from .tensors import FinslerMetric


def _norm2(prefix_a: str, prefix_b: str, n: int) -> str:
    return " + ".join(f"{prefix_a}{k}*{prefix_b}{k}" for k in range(1, n + 1))


def euclidean(n: int = 2) -> FinslerMetric:
    return FinslerMetric(n, _norm2("e", "eb", n), label=f"euclidean(n={n})")


def bergman_potential(n: int) -> str:
    """rho = -log(1 - |z|^2); the metric below is g_{r h̄} = rho_{r h̄}."""
    return f"-log(1 - ({_norm2('z', 'zb', n)}))"


def bergman(n: int = 1) -> FinslerMetric:
    """L = rho_{r h̄} eta^r etabar^h for rho = -log(1 - |z|^2) on the unit ball."""
    w = f"(1 - ({_norm2('z', 'zb', n)}))"
    if n == 1:
        src = f"e1*eb1/{w}^2"
    else:
        zb_eta = " + ".join(f"zb{k}*e{k}" for k in range(1, n + 1))
        z_etab = " + ".join(f"z{k}*eb{k}" for k in range(1, n + 1))
        src = f"(({_norm2('e', 'eb', n)})*{w} + ({zb_eta})*({z_etab}))/{w}^2"
    return FinslerMetric(n, parse(src, n), label=f"bergman(n={n})")


def quartic(n: int = 2, eps: float = 0.1) -> FinslerMetric:
    """L = h + eps*q/h, h = sum |eta^k|^2, q = sum |eta^k|^4: locally Minkowski, not Hermitian."""
    h = f"({_norm2('e', 'eb', n)})"
    q = "(" + " + ".join(f"e{k}^2*eb{k}^2" for k in range(1, n + 1)) + ")"
    return FinslerMetric(n, parse(f"{h} + {eps!r}*{q}/{h}", n), label=f"quartic(n={n},eps={eps!r})")


def degenerate_quartic(n: int = 2) -> FinslerMetric:
    """L = sqrt(q): (1,1)-homogeneous, but g_{22̄} vanishes on the eta^1 axis."""
    q = " + ".join(f"e{k}^2*eb{k}^2" for k in range(1, n + 1))
    return FinslerMetric(n, parse(f"sqrt({q})", n), label=f"degenerate_quartic(n={n})")


def conformal(n: int = 2) -> FinslerMetric:
    """L = exp(|z^1|^2) |eta|^2: purely Hermitian but not weakly Kähler."""
    return FinslerMetric(n, parse(f"exp(z1*zb1)*({_norm2('e', 'eb', n)})", n), label=f"conformal(n={n})")


def mixed(n: int = 2, eps: float = 0.1) -> FinslerMetric:
    """exp(|z^1|^2)*quartic: neither purely Hermitian nor Kähler (engine stress test)."""
    h = f"({_norm2('e', 'eb', n)})"
    q = "(" + " + ".join(f"e{k}^2*eb{k}^2" for k in range(1, n + 1)) + ")"
    return FinslerMetric(n, parse(f"exp(z1*zb1)*({h} + {eps!r}*{q}/{h})", n), label=f"mixed(n={n},eps={eps!r})")


def warped(n: int = 2, eps: float = 0.1) -> FinslerMetric:
    """L = h + eps*exp(|z^1|^2)*q/h: the z-weight sits on the non-Hermitian part, so G^i is not holomorphic in eta."""
    h = f"({_norm2('e', 'eb', n)})"
    q = "(" + " + ".join(f"e{k}^2*eb{k}^2" for k in range(1, n + 1)) + ")"
    return FinslerMetric(n, parse(f"{h} + {eps!r}*exp(z1*zb1)*{q}/{h}", n), label=f"warped(n={n},eps={eps!r})")


CATALOG = {
    "euclidean": euclidean,
    "bergman": bergman,
    "quartic": quartic,
    "conformal": conformal,
    "degenerate_quartic": degenerate_quartic,
    "mixed": mixed,
    "warped": warped,
}


def get(name: str, n: int | None = None, **kwargs) -> FinslerMetric:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog metric {name!r}; choose from {sorted(CATALOG)}") from None
    if n is None:
        return factory(**kwargs)
    return factory(n, **kwargs)
