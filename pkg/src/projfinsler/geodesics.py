"""RK4 integration of complex geodesics and point-set comparison of traces."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from . import expr as ex
from .connections import connection_bundle
from .expr import EvalPoint
from .tensors import FinslerMetric

__all__ = [
    "GeodesicTrace",
    "ball_domain",
    "endpoint_error_ratio",
    "integrate_geodesic",
    "pointset_compare",
    "probe_conditions",
    "write_csv",
]


def ball_domain(radius: float = 1.0) -> Callable[[np.ndarray], bool]:
    return lambda z: float(np.linalg.norm(z)) < radius


@dataclass(frozen=True)
class GeodesicTrace:
    s: np.ndarray  # (k,)
    z: np.ndarray  # (k, n) complex
    z0: np.ndarray
    eta0: np.ndarray
    step: float
    steps: int
    truncated: bool = False
    max_theta: float = 0.0

    def __len__(self) -> int:
        return len(self.s)


def integrate_geodesic(
    m: FinslerMetric,
    z0,
    eta0,
    step: float = 0.01,
    steps: int = 100,
    domain: Callable[[np.ndarray], bool] | None = None,
    weakly_kahler_tol: float | None = None,
) -> GeodesicTrace:
    """Classical RK4 for z'' = θ*(z, z') - 2G(z, z') over a real parameter.

    ``domain`` is a predicate on z; the trace stops (flagged ``truncated``)
    at the first sample outside it.  When ``weakly_kahler_tol`` is given the
    size of θ* along the trace is asserted against it.
    """
    z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
    eta0 = np.atleast_1d(np.asarray(eta0, dtype=complex))
    n = m.n
    if z0.shape != (n,) or eta0.shape != (n,):
        raise ValueError(f"initial data must have length {n}")
    if not np.any(eta0):
        raise ValueError("initial direction must be nonzero")
    if domain is not None and not domain(z0):
        raise ValueError("initial point outside the domain")
    cb = connection_bundle(m)
    G, theta = cb.G, cb.theta
    theta_zero = all(t.is_zero() for t in theta)
    max_theta = 0.0

    def accel(z, w):
        nonlocal max_theta
        p = EvalPoint(z, w)
        a = -2.0 * np.array([ex.evaluate(g, p) for g in G])
        if not theta_zero:
            th = np.array([ex.evaluate(t, p) for t in theta])
            max_theta = max(max_theta, float(np.abs(th).max()))
            a = a + th
        return a

    z, w = z0.copy(), eta0.copy()
    ss, zs = [0.0], [z.copy()]
    truncated = False
    h = step
    for k in range(1, steps + 1):
        k1z, k1w = w, accel(z, w)
        k2z, k2w = w + 0.5 * h * k1w, accel(z + 0.5 * h * k1z, w + 0.5 * h * k1w)
        k3z, k3w = w + 0.5 * h * k2w, accel(z + 0.5 * h * k2z, w + 0.5 * h * k2w)
        k4z, k4w = w + h * k3w, accel(z + h * k3z, w + h * k3w)
        z = z + h / 6.0 * (k1z + 2 * k2z + 2 * k3z + k4z)
        w = w + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        if domain is not None and not domain(z):
            truncated = True
            break
        ss.append(k * h)
        zs.append(z.copy())
    if weakly_kahler_tol is not None and max_theta > weakly_kahler_tol:
        raise AssertionError(f"theta* reached {max_theta:.3g} along a trace of a weakly Kähler metric")
    return GeodesicTrace(np.array(ss), np.array(zs), z0, eta0, step, steps, truncated, max_theta)


def _point_to_polyline(x: np.ndarray, poly: np.ndarray) -> float:
    """Distance from x in C^n (as R^2n) to a polyline of complex vertices."""
    a, b = poly[:-1], poly[1:]
    ab = b - a
    ax = x - a
    den = np.sum(np.abs(ab) ** 2, axis=1)
    num = np.real(np.sum(np.conj(ab) * ax, axis=1))
    t = np.clip(np.divide(num, den, out=np.zeros_like(num), where=den > 0), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return float(np.sqrt(np.sum(np.abs(x - proj) ** 2, axis=1)).min())


def _one_way(a: np.ndarray, b: np.ndarray) -> float:
    return max(_point_to_polyline(x, b) for x in a)


def pointset_compare(a: GeodesicTrace | np.ndarray, b: GeodesicTrace | np.ndarray, tol: float = 1e-5) -> dict:
    """Symmetric max point-to-polyline deviation between two traces.

    Only samples within the common reach (distance from the shared initial
    point) are measured, each against the full polyline of the other trace,
    so traces of different parameter speed can be compared.
    """
    za = a.z if isinstance(a, GeodesicTrace) else np.asarray(a)
    zb = b.z if isinstance(b, GeodesicTrace) else np.asarray(b)
    if len(za) < 3 or len(zb) < 3:
        raise ValueError("traces need at least 3 samples")
    if not np.allclose(za[0], zb[0]):
        raise ValueError("traces must share the initial point")
    ra = np.linalg.norm(za - za[0], axis=1)
    rb = np.linalg.norm(zb - zb[0], axis=1)
    reach = min(ra.max(), rb.max())
    dev = max(_one_way(za[ra <= reach], zb), _one_way(zb[rb <= reach], za))
    return {"coincide": bool(dev <= tol), "max_deviation": float(dev)}


def write_csv(trace: GeodesicTrace, fh: TextIO) -> None:
    n = trace.z.shape[1]
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["s"] + [c for k in range(1, n + 1) for c in (f"re_z{k}", f"im_z{k}")])
    for s, z in zip(trace.s, trace.z):
        w.writerow([repr(float(s))] + [repr(float(x)) for v in z for x in (v.real, v.imag)])


def endpoint_error_ratio(m: FinslerMetric, z0, eta0, length: float = 0.5, steps: int = 20) -> float:
    """|e(h)| / |e(h/2)| against a reference at h/8; ≈16 for a 4th order method."""
    ref = integrate_geodesic(m, z0, eta0, length / (8 * steps), 8 * steps).z[-1]
    e1 = np.linalg.norm(integrate_geodesic(m, z0, eta0, length / steps, steps).z[-1] - ref)
    e2 = np.linalg.norm(integrate_geodesic(m, z0, eta0, length / (2 * steps), 2 * steps).z[-1] - ref)
    return float(e1 / e2)


def probe_conditions(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Initial data along complex lines through the origin (diameters of the ball)."""
    out = []
    for z0, e0 in [(0.0, 1.0), (0.3, 1.0), (0.3j, 1j), (0.2 + 0.2j, 1 + 1j)]:
        z = np.zeros(n, dtype=complex)
        e = np.zeros(n, dtype=complex)
        z[0], e[0] = z0, e0
        if n > 1:
            z[1], e[1] = 0.5 * z0, 0.5 * e0
        out.append((z, e))
    return out
