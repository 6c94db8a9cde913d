"""Command-line entry point: ``eplab <subcommand> --config FILE``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 search did not converge / no EP / no equilibrium found.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import RunConfig, parse_config
from .eplocator import SpecFamily, encircle, find_ep_2x2, find_ep_nd
from .errors import (
    ConfigError,
    DivergingEM,
    EncirclingError,
    NoConvergence,
    NumericalFailure,
    SpecificationError,
    TrackingError,
)
from .harness import compute_sweep, detect_plateau, evaluate_point, find_equilibrium, sweep_from_tracks
from .model import ParameterPath
from .output import emit_results, fmt
from .tracking import cycle_notation

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_NOT_FOUND = 0, 1, 2, 3
COMMANDS = ("spectrum", "sweep", "find-ep", "encircle", "equilibrium")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="eplab", description="Exceptional points and eigenfunction mixing of open quantum systems.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="FILE", help="JSON run configuration")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="set a dotted config key to a JSON value (repeatable)")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
    return p


def _cx(z, p):
    im = fmt(abs(z.imag), p)
    return f"{fmt(z.real, p)} {'-' if z.imag < 0 else '+'} {im}i"


def _require(value, name):
    if value is None:
        raise ConfigError(f"the {name!r} section is required for this command", name)
    return value


def _plateau(data, cfg):
    mean = data.entropy.mean(axis=1)
    return detect_plateau(mean, min(cfg.thresholds.plateau_window, len(mean)), cfg.thresholds.plateau_delta)


def _best_verdict(data, th):
    """Index and verdict of the passing row, or of the row closest to passing."""
    eq = data.equilibrium
    if eq.any():
        k = int(np.flatnonzero(eq)[0])
    else:
        score = np.maximum.reduce([data.defect / th.t_orth, data.prob_deviation / th.t_prob,
                                   data.entropy_gap / th.t_ent])
        k = int(np.argmin(score))
    return k, data.verdicts[k]


def _family(cfg, unknowns):
    return SpecFamily(cfg.spec, cfg.evaluation_point(), unknowns)


def cmd_spectrum(cfg: RunConfig, out):
    row = evaluate_point(cfg.spec, cfg.evaluation_point(), cfg.thresholds.equilibrium())
    p = cfg.outputs.precision
    for i, rec in enumerate(row.eigenvalues, 1):
        print(f"lambda_{i} = {_cx(rec.value, p)}    E = {fmt(rec.energy, p)}    Gamma = {fmt(rec.width, p)}")
    reports = {
        "spectrum": [
            {"value": rec.value, "energy": rec.energy, "width": rec.width, "rigidity": r}
            for rec, r in zip(row.eigenvalues, row.rigidities)
        ],
        "equilibrium": {"index": 0, **row.verdict.as_dict()},
    }
    emit_results([row], reports, cfg, out)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, out):
    path = _require(cfg.path, "path").materialize()
    ex = cfg.execution
    data = compute_sweep(cfg.spec, path, cfg.thresholds.equilibrium(), ex.parallel, ex.workers,
                         match_tol=cfg.thresholds.match_tol, max_refine=cfg.thresholds.max_refine)
    k, verdict = _best_verdict(data, cfg.thresholds.equilibrium())
    reports = {
        "rows": len(path),
        "equilibrium": {"index": k, "count": int(data.equilibrium.sum()), **verdict.as_dict()},
        "plateau": _plateau(data, cfg),
        "ambiguous_steps": list(data.trajectories.ambiguous_steps),
        "coalescent_steps": list(data.trajectories.coalescent_steps),
    }
    emit_results(data.rows(), reports, cfg, out)
    print(f"{len(path)} rows; {reports['equilibrium']['count']} at equilibrium")
    return EXIT_OK


def cmd_find_ep(cfg: RunConfig, out):
    search = _require(cfg.search, "search")
    fam = _family(cfg, search.unknowns)
    method = search.method
    if method == "auto":
        method = "2x2" if cfg.spec.n_states == 2 else "nd"
    tol = cfg.thresholds
    if method == "2x2":
        cand = find_ep_2x2(fam, search.seed, max_iter=search.max_iter, gap_tol=tol.ep_gap_tol, so_tol=tol.ep_so_tol)
    else:
        cand = find_ep_nd(fam, search.seed, pair_hint=search.pair, gap_tol=tol.ep_gap_tol, so_tol=tol.ep_so_tol)
    row = evaluate_point(*fam.spec_and_point(cand.x), tol.equilibrium())
    emit_results([row], {"ep_candidates": [cand]}, cfg, out)
    p = cfg.outputs.precision
    xs = ", ".join(f"{u} = {fmt(v, p)}" for u, v in zip(cand.unknowns, cand.x))
    print(f"EP candidate: {xs}; eigenvalue {_cx(cand.eigenvalue, p)}; verified: {str(cand.verified).lower()}")
    if not cand.verified:
        print("candidate failed verification: " + "; ".join(cand.notes), file=sys.stderr)
        return EXIT_NOT_FOUND
    return EXIT_OK


def cmd_encircle(cfg: RunConfig, out):
    loop = _require(cfg.loop, "loop")
    fam = _family(cfg, loop.unknowns)
    center = loop.center
    if center is None:
        center = cfg.search.seed if cfg.search is not None and cfg.search.seed is not None else fam.seed()
    res = encircle(fam, center, loop.radius, loop.steps, loop.turns)
    path = ParameterPath(tuple(fam.point(x) for x in res.loop), closed=True)
    Hs = np.stack([fam.matrix(x) for x in res.loop])
    data = sweep_from_tracks(cfg.spec, path, res.trajectories, Hs, cfg.thresholds.equilibrium())
    reports = {
        "encircle": {
            "center": [float(c) for c in center],
            "radius": loop.radius,
            "steps": loop.steps,
            "turns": loop.turns,
            "permutation": list(res.permutation),
            "cycles": cycle_notation(res.permutation),
            "pair": list(res.pair) if res.pair is not None else None,
            "swaps_pair": res.swaps_pair,
        }
    }
    emit_results(data.rows(), reports, cfg, out)
    print(f"net permutation after {loop.turns} turn(s): {cycle_notation(res.permutation)}")
    return EXIT_OK


def cmd_equilibrium(cfg: RunConfig, out):
    path = _require(cfg.path, "path").materialize()
    tol = cfg.thresholds
    ex = cfg.execution
    res = find_equilibrium(cfg.spec, path, tol.equilibrium(), tol.plateau_window, tol.plateau_delta,
                           ex.parallel, ex.workers)
    k, verdict = _best_verdict(res.data, tol.equilibrium())
    reports = {
        "equilibrium": {"index": k, "point": {"a": res.data.path.points[k].a,
                                              "omegas": list(res.data.path.points[k].omegas)},
                        **verdict.as_dict()},
        "plateau": res.plateau,
    }
    emit_results(res.data.rows(), reports, cfg, out)
    if not res.found:
        print("no equilibrium point on the path", file=sys.stderr)
        return EXIT_NOT_FOUND
    print(f"equilibrium at index {k} (a = {fmt(path.points[k].a, cfg.outputs.precision)})")
    return EXIT_OK


HANDLERS = {
    "spectrum": cmd_spectrum,
    "sweep": cmd_sweep,
    "find-ep": cmd_find_ep,
    "encircle": cmd_encircle,
    "equilibrium": cmd_equilibrium,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"eplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cfg = parse_config(text, args.override)
        return HANDLERS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"eplab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SpecificationError, OSError) as exc:
        print(f"eplab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoConvergence as exc:
        print(f"eplab: search failed: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except (NumericalFailure, TrackingError, EncirclingError, DivergingEM) as exc:
        print(f"eplab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
