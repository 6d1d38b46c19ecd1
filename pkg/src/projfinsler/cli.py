"""Command-line front end: ``projfinsler <subcommand> ...``.

Exit codes: 0 all asserted checks pass, 1 a check failed, 2 bad
configuration or arguments, 3 numerical evaluation error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from . import __version__, catalog
from . import expr as ex
from .classify import classify
from .connections import connection_bundle
from .curvatures import berwald_curvatures, chern_finsler_curvature, holomorphic_curvature
from .geodesics import ball_domain, integrate_geodesic, pointset_compare, probe_conditions, write_csv
from .pair import projective_relatedness_test
from .projective import douglas_bundle
from .report import document, dumps
from .suite import run_suite
from .syntax import ParseError
from .tensors import FinslerMetric, Sampling, validate

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_EVAL = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    metrics: list = field(default_factory=list)
    sampling: Sampling = field(default_factory=Sampling)
    tolerance: float = 1e-8
    tensors: list = field(default_factory=lambda: ["g", "G", "theta", "KF"])
    geodesic: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")

    def echo(self) -> dict:
        return {
            "metrics": [m if isinstance(m, str) else dict(m) for m in self.metrics],
            "sampling": asdict(self.sampling),
            "tolerance": self.tolerance,
        }


_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def metric_from_entry(entry: Any, n: int | None = None) -> FinslerMetric:
    """Build a metric from ``"bergman(2)"``, ``"quartic(n=2, eps=0.1)"`` or ``{"L": ..., "n": ...}``."""
    if isinstance(entry, dict):
        if "L" in entry:
            nn = entry.get("n", n)
            if nn is None:
                raise ConfigError("custom metric needs n")
            try:
                return FinslerMetric(int(nn), entry["L"], label=entry.get("label", "custom"))
            except ParseError as err:
                raise ConfigError(f"cannot parse L: {err}") from None
        kw = {k: v for k, v in entry.items() if k != "name"}
        if "n" not in kw and n is not None:
            kw["n"] = n
        return _catalog(entry.get("name"), kw)
    m = _CALL.match(str(entry))
    if m is None:
        raise ConfigError(f"bad metric entry {entry!r}")
    name, args = m.group(1), m.group(2)
    kw: dict[str, Any] = {}
    if args:
        for i, part in enumerate(a.strip() for a in args.split(",") if a.strip()):
            key, _, val = part.rpartition("=")
            key = key.strip() or ("n" if i == 0 else "")
            if not key:
                raise ConfigError(f"bad argument {part!r} in {entry!r}")
            try:
                kw[key] = json.loads(val)
            except json.JSONDecodeError:
                raise ConfigError(f"bad value {val!r} in {entry!r}") from None
    if "n" not in kw and n is not None:
        kw["n"] = n
    return _catalog(name, kw)


def _catalog(name, kw) -> FinslerMetric:
    if name not in catalog.CATALOG:
        raise ConfigError(f"unknown catalog metric {name!r}; choose from {sorted(catalog.CATALOG)}")
    try:
        return catalog.CATALOG[name](**kw)
    except TypeError as err:
        raise ConfigError(f"bad arguments for {name}: {err}") from None


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - {"metrics", "sampling", "tolerance", "tensors", "geodesic"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        sampling = Sampling(**raw.get("sampling", {}))
    except TypeError as err:
        raise ConfigError(f"bad sampling block: {err}") from None
    kw = {k: raw[k] for k in ("metrics", "tolerance", "tensors", "geodesic") if k in raw}
    return RunConfig(sampling=sampling, **kw)


# argument handling -------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--metric", action="append", help="catalog entry, e.g. bergman or 'quartic(n=2, eps=0.1)'")
    p.add_argument("--L", dest="L", help="custom fundamental function in the expression grammar")
    p.add_argument("--n", type=int, help="complex dimension")
    p.add_argument("--count", type=int, help="number of sample points")
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--z-radius", type=float, help="radius of the z polydisc")
    p.add_argument("--eta-floor", type=float, help="lower bound for |eta^k|")
    p.add_argument("--tol", type=float, help="vanishing tolerance")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="projfinsler", description="Projective invariants of complex Finsler metrics.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("validate", "check Euler identities, Hermitian symmetry and positivity"),
        ("tensors", "dump tensor values at sample points"),
        ("classify", "Kähler/Berwald/Douglas classification"),
        ("geodesic", "integrate a geodesic"),
        ("suite", "run the full check battery"),
    ]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "tensors":
            p.add_argument("--names", help="comma-separated tensor names")
        if name == "geodesic":
            p.add_argument("--z0", help="comma-separated complex initial point")
            p.add_argument("--eta0", help="comma-separated complex initial direction")
            p.add_argument("--step", type=float)
            p.add_argument("--steps", type=int)
            p.add_argument("--csv", help="write the trace as CSV")
    p = sub.add_parser("compare", help="projective relatedness of two metrics")
    p.add_argument("a")
    p.add_argument("b")
    _common(p)
    return ap


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    s = cfg.sampling
    over = {
        k: v
        for k, v in {"count": args.count, "seed": args.seed, "z_radius": args.z_radius, "eta_floor": args.eta_floor}.items()
        if v is not None
    }
    if over:
        s = Sampling(**{**asdict(s), **over})
    cfg.sampling = s
    if args.tol is not None:
        cfg.tolerance = args.tol
        cfg.__post_init__()
    entries = list(cfg.metrics)
    if getattr(args, "metric", None):
        entries = list(args.metric)
    if getattr(args, "L", None):
        entries = [{"L": args.L, "n": args.n}]
    if args.n is not None:
        entries = [_with_n(e, args.n) for e in entries]
    cfg.metrics = entries
    return cfg


def _with_n(entry, n):
    if isinstance(entry, dict):
        return {**entry, "n": entry.get("n", n)}
    return entry if "(" in str(entry) else f"{entry}(n={n})"


def _metrics(cfg: RunConfig) -> list[FinslerMetric]:
    if not cfg.metrics:
        raise ConfigError("no metric given (use --metric, --L or a config file)")
    return [metric_from_entry(e) for e in cfg.metrics]


def _parse_vec(text: str) -> np.ndarray:
    try:
        return np.array([complex(t.strip().replace(" ", "")) for t in text.split(",")])
    except ValueError:
        raise ConfigError(f"bad complex vector {text!r}") from None


def _point_rec(p) -> dict:
    return {"z": p.z, "eta": p.eta}


# subcommands -------------------------------------------------------------------


def cmd_validate(cfg: RunConfig, args) -> tuple[dict, bool]:
    tol = args.tol if args.tol is not None else 1e-10
    out, ok = [], True
    for m in _metrics(cfg):
        rep = validate(m, cfg.sampling.points(m.n), tol)
        ok &= rep.passed
        out.append(
            {
                "metric": m.label,
                "passed": rep.passed,
                "max_residual": rep.max_residual,
                "min_eigenvalue": rep.min_eigenvalue,
                "residuals": rep.worst_by_check(),
                "errors": rep.errors,
            }
        )
    return {"tolerance": tol, "count": cfg.sampling.count, "results": out}, ok


def _tensor_values(m: FinslerMetric, name: str, p):
    cb = connection_bundle(m)
    bc = berwald_curvatures(m)
    table = {
        "L": lambda: ex.evaluate(m.L, p),
        "g": lambda: m.g.at(p),
        "N": lambda: cb.N.at(p),
        "G": lambda: [ex.evaluate(x, p) for x in cb.G],
        "Nc": lambda: cb.Nc.at(p),
        "Gjk": lambda: cb.Gjk.at(p),
        "Gjkb": lambda: cb.Gjkb.at(p),
        "L_conn": lambda: cb.L_conn.at(p),
        "C_conn": lambda: cb.C_conn.at(p),
        "T": lambda: cb.torsion.at(p),
        "theta": lambda: [ex.evaluate(x, p) for x in cb.theta],
        "K2": lambda: bc.K2.at(p),
        "Theta": lambda: bc.Theta.at(p),
        "Kjkh": lambda: bc.Kjkh.at(p),
        "Kjkbhb": lambda: bc.Kjkbhb.at(p),
        "Kjkbh": lambda: bc.Kjkbh.at(p),
        "R": lambda: chern_finsler_curvature(m).R.at(p),
        "KF": lambda: holomorphic_curvature(m, p),
        "D": lambda: [ex.evaluate(x, p) for x in douglas_bundle(m).D],
        "Djkh": lambda: douglas_bundle(m).Djkh.at(p),
        "Djkbhb": lambda: douglas_bundle(m).Djkbhb.at(p),
        "Djkbh": lambda: douglas_bundle(m).Djkbh.at(p),
    }
    if name not in table:
        raise ConfigError(f"unknown tensor {name!r}; choose from {sorted(table)}")
    return table[name]()


def cmd_tensors(cfg: RunConfig, args) -> tuple[dict, bool]:
    names = args.names.split(",") if args.names else cfg.tensors
    out = []
    for m in _metrics(cfg):
        rows = []
        for p in cfg.sampling.points(m.n):
            rows.append({**_point_rec(p), **{nm: _tensor_values(m, nm.strip(), p) for nm in names}})
        out.append({"metric": m.label, "points": rows})
    return {"count": cfg.sampling.count, "tensors": names, "results": out}, True


def _classification_doc(rep) -> dict:
    return {
        "metric": rep.label,
        "n": rep.n,
        "verdicts": rep.verdicts,
        "constant_KF": rep.constant_KF,
        "KF_mean": rep.KF_mean,
        "KF_variance": rep.KF_variance,
        "max_residuals": {k: rep.max_residual(k) for k in rep.points[0].residuals},
        "min_eigenvalue": min(r.min_eigenvalue for r in rep.points),
        "consistency": [{"name": c.name, "passed": c.passed, **({"detail": c.detail} if c.detail else {})} for c in rep.consistency],
        "locally_minkowski_reference": "euclidean",
    }


def cmd_classify(cfg: RunConfig, args) -> tuple[dict, bool]:
    out, ok = [], True
    for m in _metrics(cfg):
        rep = classify(m, cfg.sampling.points(m.n), cfg.tolerance)
        ok &= not rep.violations
        out.append(_classification_doc(rep))
    return {"tolerance": cfg.tolerance, "count": cfg.sampling.count, "results": out}, ok


def cmd_compare(cfg: RunConfig, args) -> tuple[dict, bool]:
    a = metric_from_entry(_with_n(args.a, args.n) if args.n else args.a)
    b = metric_from_entry(_with_n(args.b, args.n) if args.n else args.b)
    if a.n != b.n:
        raise ConfigError(f"dimension mismatch: {a.n} vs {b.n}")
    pts = cfg.sampling.points(a.n)
    v = projective_relatedness_test(a, b, pts, cfg.tolerance)
    probes = []
    for z0, e0 in probe_conditions(a.n):
        ta = integrate_geodesic(a, z0, e0, 0.01, 60, domain=ball_domain())
        tb = integrate_geodesic(b, z0, e0, 0.01, 60, domain=ball_domain())
        probes.append({"z0": z0, "eta0": e0, **pointset_compare(ta, tb)})
    geo_ok = all(p["coincide"] for p in probes) if v.related else True
    body = {
        "tolerance": cfg.tolerance,
        "count": cfg.sampling.count,
        "a": a.label,
        "b": b.label,
        "related": v.related,
        "verdict": v.verdict,
        "residual_spray": v.residual_spray,
        "residual_metric": v.residual_metric,
        "paths_agree": v.paths_agree,
        "homogeneity_defect": v.homogeneity_defect,
        "points": [{"z": r["z"], "eta": r["eta"], "P": r["P"], "S": r["S"], "Q": r["Q"]} for r in v.per_point],
        "geodesic_probes": probes,
    }
    return body, v.paths_agree and geo_ok


def cmd_geodesic(cfg: RunConfig, args) -> tuple[dict, bool]:
    (m,) = _metrics(cfg)[:1]
    g = cfg.geodesic
    z0 = _parse_vec(args.z0) if args.z0 else np.asarray([complex(x) for x in g.get("z0", [0] * m.n)])
    e0 = _parse_vec(args.eta0) if args.eta0 else np.asarray([complex(x) for x in g.get("eta0", [1] + [0] * (m.n - 1))])
    step = args.step or g.get("step", 0.01)
    steps = args.steps or g.get("steps", 100)
    tr = integrate_geodesic(m, z0, e0, step, steps, domain=ball_domain(g.get("domain_radius", 1.0)))
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            write_csv(tr, fh)
    body = {
        "metric": m.label,
        "z0": z0,
        "eta0": e0,
        "step": step,
        "steps": steps,
        "samples": len(tr),
        "truncated": tr.truncated,
        "endpoint": tr.z[-1],
        "max_theta": tr.max_theta,
    }
    return body, True


def cmd_suite(cfg: RunConfig, args) -> tuple[dict, bool]:
    checks = run_suite(cfg.sampling, cfg.tolerance)
    rows = [asdict(c) for c in checks]
    return {"tolerance": cfg.tolerance, "count": cfg.sampling.count, "checks": rows}, all(c.passed for c in checks)


COMMANDS = {
    "validate": cmd_validate,
    "tensors": cmd_tensors,
    "classify": cmd_classify,
    "compare": cmd_compare,
    "geodesic": cmd_geodesic,
    "suite": cmd_suite,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        if args.command == "suite" and args.count is None and not args.config:
            cfg.sampling = Sampling(**{**asdict(cfg.sampling), "count": 20})
        body, ok = COMMANDS[args.command](cfg, args)
    except (ConfigError, ParseError) as err:
        print(f"projfinsler: error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"projfinsler: evaluation error: {err}", file=sys.stderr)
        return EXIT_EVAL
    except ValueError as err:
        # bad initial data, dimension errors and similar input problems
        print(f"projfinsler: error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    text = dumps(document(__version__, args.command, cfg.echo(), {"passed": ok, **body}))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
