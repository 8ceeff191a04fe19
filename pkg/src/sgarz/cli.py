"""Command-line entry point.

Exit codes: 0 ok, 1 numerical failure, 2 configuration or I/O error,
3 comparison threshold exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import power_consistency_errors
from .basis import build_space, check_assumptions, load_space, save_cache
from .config import RunConfig, load_config
from .errors import AssumptionViolation, GridMismatchError, PositivityError, SGARZError
from .galerkin import homomorphism_check
from .reference import (
    StatSummary,
    compare_summaries,
    gpc_statistics,
    initial_field,
    monte_carlo_reference,
)
from .solver import CSV_FMT, run

EXIT_OK, EXIT_NUMERICAL, EXIT_IO, EXIT_THRESHOLD = 0, 1, 2, 3


class CheckFailed(Exception):
    """A property check did not pass; carries the failing names."""


def blob_sha1(data: bytes) -> str:
    """Hash of ``data`` as git stores it (``blob <len>\\0`` prefix)."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_manifest(out_dir: Path, command: str, cfg: RunConfig | None, level, seed, outputs, started: float) -> Path:
    entries = []
    for p in outputs:
        data = Path(p).read_bytes()
        entries.append({"path": Path(p).relative_to(out_dir).as_posix(), "bytes": len(data), "sha1": blob_sha1(data)})
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg.to_text() if cfg is not None else None,
        "level": level,
        "seed": seed,
        "duration_s": time.perf_counter() - started,
        "outputs": entries,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _space(level: int, cache):
    return load_space(level, cache) if cache else build_space(level)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if getattr(args, "level", None) is not None:
        changes["level"] = args.level
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "samples", None) is not None:
        changes["samples"] = args.samples
    return cfg.replace(**changes) if changes else cfg


def tau_label(tau: float) -> str:
    return "none" if math.isinf(tau) else repr(float(tau))


# -- subcommands -----------------------------------------------------------------


def cmd_check(args) -> int:
    level = args.level
    sp = _space(level, args.basis_cache)
    rep = check_assumptions(sp.mats, sp.frame, seed=args.seed or 0)
    rng = np.random.default_rng(args.seed or 0)
    hom = max(homomorphism_check(rng.standard_normal(sp.basis.size), rng.standard_normal(sp.basis.size), sp.mats)
              for _ in range(20))
    rows = [
        ("A1 commutators", rep.a1_residual, rep.a1_tol, rep.a1_pass),
        ("A2 off-diagonal", rep.a2_residual, rep.a2_tol, rep.a2_pass),
        ("A3 P-commutators", rep.a3_residual, rep.a3_tol, rep.a3_pass),
        ("homomorphism", hom, 1e-10, hom <= 1e-10),
    ]
    print(f"level J={level}, {sp.basis.size} basis functions")
    print(f"{'check':<24}{'residual':>14}{'bound':>12}  status")
    for name, val, tol, ok in rows:
        print(f"{name:<24}{val:>14.3e}{tol:>12.1e}  {'ok' if ok else 'FAIL'}")
    failed = [name for name, _, _, ok in rows if not ok]
    for gamma in (2, 3):
        errs = power_consistency_errors(gamma, range(level + 1))
        ok = all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
        print(f"Galerkin power gamma={gamma}, L2 error over J=0..{level}: "
              + " ".join(f"{e:.3e}" for e in errs) + f"  {'ok' if ok else 'FAIL'}")
        if not ok:
            failed.append(f"power consistency gamma={gamma}")
    if failed:
        raise CheckFailed(", ".join(failed))
    return EXIT_OK


def cmd_basis(args) -> int:
    sp = build_space(args.level)
    path = Path(args.basis_cache or f"haar_J{args.level}.basis")
    save_cache(path, sp.mats, sp.frame)
    print(f"wrote {path} ({path.stat().st_size} bytes, J={args.level}, {sp.basis.size} modes)")
    return EXIT_OK


def _simulate_one(cfg: RunConfig, tau: float, sp, out: Path) -> tuple[list[Path], object]:
    model = cfg.model(tau)
    init = initial_field(cfg.problem, model, sp.basis, sp.frame, cfg.grid, cfg.quadrature_points)
    result = run(init, model, cfg.solver, sp.frame, cfg.grid)
    paths = result.write_csv(out)
    stats = out / "statistics.csv"
    gpc_statistics(result.final, cfg.grid).write_csv(stats)
    return paths + [stats], result


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _apply_overrides(load_config(args.config), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sp = _space(cfg.level, args.basis_cache)
    outputs = []
    if not cfg.is_sweep:
        paths, res = _simulate_one(cfg, cfg.taus[0], sp, out)
        outputs += paths
        print(f"simulated to t={res.final.t:g} in {len(res.diagnostics)} steps; outputs in {out}")
    else:
        ref = monte_carlo_reference(cfg.problem, cfg.model(cfg.taus[0]), cfg.target, cfg.solver.t_end,
                                    cfg.grid, cfg.samples, cfg.seed, args.threads)
        rows = []
        for tau in cfg.taus:
            sub = out / f"tau_{tau_label(tau)}"
            paths, res = _simulate_one(cfg, tau, sp, sub)
            outputs += paths
            rep = compare_summaries(gpc_statistics(res.final, cfg.grid), ref, cfg.grid)
            rows.append((tau, len(res.diagnostics), rep.mean_l1, rep.band_l1))
            print(f"tau={tau_label(tau):<8} steps={len(res.diagnostics):<6} mean L1={rep.mean_l1:.6e}")
        summary = out / "sweep_summary.csv"
        with open(summary, "w") as fh:
            fh.write(f"tau,steps,mean_l1_vs_{cfg.target.value},band_l1_vs_{cfg.target.value}\n")
            for tau, steps, l1m, l1b in rows:
                fh.write(f"{CSV_FMT % tau},{steps},{CSV_FMT % l1m},{CSV_FMT % l1b}\n")
        outputs.append(summary)
    write_manifest(out, "simulate", cfg, cfg.level, cfg.seed, outputs, started)
    return EXIT_OK


def cmd_reference(args) -> int:
    started = time.perf_counter()
    cfg = _apply_overrides(load_config(args.config), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = monte_carlo_reference(cfg.problem, cfg.model(cfg.taus[0]), cfg.target, cfg.t_ref, cfg.grid,
                                    cfg.samples, cfg.seed, args.threads)
    path = out / "reference.csv"
    summary.write_csv(path)
    write_manifest(out, "reference", cfg, None, cfg.seed, [path], started)
    print(f"{cfg.target.value} reference, M={cfg.samples}, seed={cfg.seed}: {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        sg = StatSummary.read_csv(args.sg)
        mc = StatSummary.read_csv(args.mc)
    except ValueError as exc:
        raise GridMismatchError(f"unreadable statistics file: {exc}") from None
    rep = compare_summaries(sg, mc)
    print(rep.format())
    ok = rep.mean_l1 <= args.mean_threshold and rep.band_l1 <= args.band_threshold
    print(f"mean L1 {rep.mean_l1:.6e} (<= {args.mean_threshold:g}), "
          f"band L1 {rep.band_l1:.6e} (<= {args.band_threshold:g}): {'ok' if ok else 'exceeded'}")
    return EXIT_OK if ok else EXIT_THRESHOLD


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgarz", description="Stochastic Galerkin ARZ traffic solver")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="run configuration file")
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--level", type=int, default=None, help="override the basis level J")
        p.add_argument("--basis-cache", default=None, help="basis cache file")
        p.add_argument("--threads", type=int, default=1, help="Monte-Carlo worker threads")

    p = sub.add_parser("check", help="verify the basis assumptions and consistency")
    common(p, config=False)
    p.set_defaults(func=cmd_check, level_required=True)

    p = sub.add_parser("basis", help="build a basis cache file")
    common(p, config=False)
    p.set_defaults(func=cmd_basis, level_required=True)

    p = sub.add_parser("simulate", help="run the stochastic Galerkin solver")
    common(p)
    p.add_argument("--samples", type=int, default=None, help="reference samples for a relaxation sweep")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reference", help="Monte-Carlo reference statistics")
    common(p)
    p.add_argument("--samples", type=int, default=None, help="override the configured sample count")
    p.set_defaults(func=cmd_reference)

    p = sub.add_parser("compare", help="distances between two statistics CSV files")
    p.add_argument("sg", help="stochastic Galerkin statistics.csv")
    p.add_argument("mc", help="reference statistics CSV")
    p.add_argument("--mean-threshold", type=float, default=0.02)
    p.add_argument("--band-threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "level_required", False) and args.level is None:
        parser.error(f"{args.command} requires --level")
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")
    try:
        return args.func(args)
    except (PositivityError, AssumptionViolation, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SGARZError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
