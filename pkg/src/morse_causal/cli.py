"""Command-line interface.

Exit codes: 0 success or Verified, 1 a meaningful negative (Falsified,
failed check, no verified point), 2 usage or runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .barrier import P_POINT, Q_POINT, assemble_barrier, assemble_drift_barrier
from .chart import MorseChart, classify4
from .errors import MorseCausalError, NoVerifiedPoint
from .geodesics import appendix_checks
from .projection import barrier_sign, classify_plane, plane_point
from .reach import Orientation, reach_grid
from .regions import COMPONENTS, classify_region, trace_boundary
from .threshold import threshold_bracket

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2
SEEDS = {"q": Q_POINT, "p": P_POINT}


@dataclass
class RunConfig:
    b: float = 8.0
    zeta: float = 2.0
    params: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "json"
    seed: int = 0

    @property
    def chart(self) -> MorseChart:
        return MorseChart(self.b, self.zeta)


def _floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text: str) -> tuple:
    v = _floats(text)
    if len(v) != 2:
        raise argparse.ArgumentTypeError(f"expected two numbers, got {text!r}")
    return v


def _quad(text: str) -> tuple:
    v = _floats(text)
    if len(v) != 4:
        raise argparse.ArgumentTypeError(f"expected four numbers, got {text!r}")
    return v


def _emit(cfg: RunConfig, data, stream=None) -> None:
    """Write text or bytes to cfg.out (or stdout)."""
    if cfg.out:
        mode = "wb" if isinstance(data, bytes) else "w"
        with open(cfg.out, mode) as fh:
            fh.write(data)
    elif isinstance(data, bytes):
        (stream or sys.stdout).buffer.write(data)
    else:
        (stream or sys.stdout).write(data)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_classify(cfg: RunConfig) -> int:
    chart = cfg.chart
    p = cfg.params
    if p.get("point4") is not None:
        if p.get("vec4") is None:
            raise MorseCausalError("--point4 needs --vec4")
        z = np.array(p["point4"])
        c = classify4(chart, z, np.array(p["vec4"]))
        report = {"class": c.label.value, "margin": c.margin}
        if np.hypot(z[2], z[3]) > 0 and chart.zeta == 2.0:
            report["region"] = classify_region(chart, plane_point(z)).value
    else:
        if p.get("point") is None or p.get("vec") is None:
            raise MorseCausalError("classify needs --point and --vec (or --point4 and --vec4)")
        P, v = np.array(p["point"]), np.array(p["vec"])
        c = classify_plane(chart, P, v)
        report = {
            "class": c.label.value,
            "margin": c.margin,
            "region": classify_region(chart, P).value,
            "barrier": barrier_sign(chart, P, v).value,
        }
    if cfg.fmt == "json":
        _emit(cfg, json.dumps(report, sort_keys=True) + "\n")
    else:
        _emit(cfg, "".join(f"{k}: {report[k]}\n" for k in sorted(report)))
    return EXIT_OK


def cmd_regions(cfg: RunConfig) -> int:
    chart = cfg.chart
    comps = COMPONENTS if cfg.params["trace"] == "all" else (cfg.params["trace"],)
    traces = [trace_boundary(chart, c, cfg.params["n"]) for c in comps]
    if cfg.fmt == "json":
        data = [{"component": t.component, "s": t.s.tolist(), "x1": t.points[:, 0].tolist(),
                 "x2": t.points[:, 1].tolist(), "residual": t.residual.tolist()} for t in traces]
        _emit(cfg, json.dumps(data, sort_keys=True) + "\n")
    else:
        parts = [t.to_csv() for t in traces]
        text = parts[0] + "".join(s.split("\n", 1)[1] for s in parts[1:])
        _emit(cfg, text)
    return EXIT_OK


def cmd_barrier(cfg: RunConfig) -> int:
    p = cfg.params
    construction = p["construction"]
    if p.get("a_interp") is not None:
        construction = "interp"
    if construction == "interp":
        a_interp = 2.0 if p.get("a_interp") is None else p["a_interp"]
        cert = assemble_barrier(cfg.b, a_interp, p["a_hyp"], p["beta"], p["t_max"], p["n"])
    else:
        cert = assemble_drift_barrier(cfg.b, p["a_hyp"], p["beta"], p["t_max"], p["n"])
    _emit(cfg, cert.to_json() + "\n")
    name, t = cert.min_location
    print(f"{cert.verdict} min_margin={cert.min_margin:.6g} at {name} t={t:.6g}", file=sys.stderr)
    return EXIT_OK if cert.verified else EXIT_NEGATIVE


def cmd_threshold(cfg: RunConfig) -> int:
    lo, hi = cfg.params["range"]
    try:
        br = threshold_bracket(lo, hi, cfg.params["tol"], cfg.params["n"])
    except NoVerifiedPoint as exc:
        print(f"NoVerifiedPoint: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    _emit(cfg, json.dumps(br.as_dict(), sort_keys=True) + "\n")
    return EXIT_OK


def cmd_reach(cfg: RunConfig) -> int:
    p = cfg.params
    seed = SEEDS[p["seed_at"]] if p.get("seed_at") else p["seed"]
    orient = Orientation.Future if p["future"] else Orientation.Past
    res = (p["res"], p["res"])
    grid = reach_grid(cfg.chart, seed, orient, p["domain"], res, p["margin"])
    summary = {"reached": grid.reached_count, "cells": res[0] * res[1]}
    if p.get("against"):
        other = reach_grid(cfg.chart, SEEDS[p["against"]], orient, p["domain"], res, p["margin"])
        summary["against"] = p["against"]
        summary["overlap"] = grid.overlap(other)
    if cfg.fmt == "rle":
        _emit(cfg, grid.to_rle())
    elif cfg.fmt == "csv":
        _emit(cfg, grid.to_csv())
    else:
        _emit(cfg, json.dumps(summary, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return EXIT_NEGATIVE if summary.get("overlap", 0) > 0 else EXIT_OK


def cmd_appendix(cfg: RunConfig) -> int:
    checks = appendix_checks(cfg.chart, cfg.params["points"], cfg.params["curves"], cfg.seed)
    lines = [f"{'PASS' if ok else 'FAIL'} {name} {val:.6g}\n" for name, (ok, val) in sorted(checks.items())]
    _emit(cfg, "".join(lines))
    return EXIT_OK if all(ok for ok, _ in checks.values()) else EXIT_NEGATIVE


COMMANDS = {
    "classify": cmd_classify,
    "regions": cmd_regions,
    "barrier": cmd_barrier,
    "threshold": cmd_threshold,
    "reach": cmd_reach,
    "appendix": cmd_appendix,
}


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _common(sp, fmt_choices, fmt_default):
    sp.add_argument("--b", type=float, default=8.0)
    sp.add_argument("--zeta", type=float, default=2.0)
    sp.add_argument("--out", default=None, help="output file (default stdout)")
    sp.add_argument("--format", dest="fmt", choices=fmt_choices, default=fmt_default)
    sp.add_argument("--rng-seed", type=int, default=0)
    sp.add_argument("--config", default=None, help="flat key=value file of defaults")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="morse-causal", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classify", help="causal class of a vector")
    _common(sp, ("text", "json"), "text")
    sp.add_argument("--point", type=_pair)
    sp.add_argument("--vec", type=_pair)
    sp.add_argument("--point4", type=_quad)
    sp.add_argument("--vec4", type=_quad)

    sp = sub.add_parser("regions", help="trace boundary components")
    _common(sp, ("csv", "json"), "csv")
    sp.add_argument("--trace", choices=COMPONENTS + ("all",), default="oval")
    sp.add_argument("--n", type=int, default=1000)

    sp = sub.add_parser("barrier", help="assemble and certify the barrier")
    _common(sp, ("json",), "json")
    sp.add_argument("--construction", choices=("drift", "interp"), default="drift")
    sp.add_argument("--a-interp", type=float, default=None, help="implies --construction interp")
    sp.add_argument("--a-hyp", type=float, default=6.0)
    sp.add_argument("--beta", type=float, default=0.102)
    sp.add_argument("--t-max", type=float, default=50.0)
    sp.add_argument("--n", type=int, default=10_000)

    sp = sub.add_parser("threshold", help="bracket the smallest b with a verified barrier")
    _common(sp, ("json",), "json")
    sp.add_argument("--range", type=_pair, default=(1.0, 8.0))
    sp.add_argument("--tol", type=float, default=0.05)
    sp.add_argument("--n", type=int, default=2000)

    sp = sub.add_parser("reach", help="grid future/past of a plane point")
    _common(sp, ("json", "csv", "rle"), "rle")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--seed-at", choices=tuple(SEEDS))
    g.add_argument("--seed", type=_pair, default=(0.0, 0.0))
    o = sp.add_mutually_exclusive_group()
    o.add_argument("--past", action="store_true", default=True)
    o.add_argument("--future", action="store_true", default=False)
    sp.add_argument("--res", type=int, default=800)
    sp.add_argument("--margin", type=float, default=0.01)
    sp.add_argument("--domain", type=_quad, default=(-4.0, 4.0, -4.0, 4.0))
    sp.add_argument("--against", choices=tuple(SEEDS), help="also report the overlap with this seed")

    sp = sub.add_parser("appendix", help="checks of the gradient-line maximizer property")
    _common(sp, ("text",), "text")
    sp.add_argument("--points", type=int, default=1000)
    sp.add_argument("--curves", type=int, default=1000)
    return ap


def read_config(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys use dashes or
    underscores."""
    out = {}
    with open(path) as fh:
        for k, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise MorseCausalError(f"{path}:{k}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val.strip("\"'")
    return out


def _apply_config(ap: argparse.ArgumentParser, argv: list) -> None:
    """Install config-file values as subparser defaults so flags override them."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or known.command not in COMMANDS:
        return
    values = read_config(known.config)
    sp = ap._subparsers._group_actions[0].choices[known.command]
    dests = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, val in values.items():
        key = {"format": "fmt"}.get(key, key)
        if key not in dests:
            raise MorseCausalError(f"unknown config key {key!r} for {known.command}")
        act = dests[key]
        if act.const is True:  # store_true flag
            defaults[key] = val.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = val  # string defaults go through the action's type
    sp.set_defaults(**defaults)


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    skip = {"command", "b", "zeta", "out", "fmt", "rng_seed", "config"}
    params = {k: v for k, v in vars(ns).items() if k not in skip}
    return RunConfig(ns.b, ns.zeta, params, ns.out, ns.fmt, ns.rng_seed)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        _apply_config(ap, argv)
    except (MorseCausalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        cfg = config_from_args(ns)
        return COMMANDS[ns.command](cfg)
    except (MorseCausalError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
