"""Command line entry point: polyheat <subcommand> [options]."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import kernels, majorant, solver, testfn
from .config import RunConfig
from .criteria import classify
from .data import GridField
from .errors import ConfigError, PolyheatError

log = logging.getLogger("polyheat")

# command line flag -> config key
_FLAG_KEYS = {"N": "N", "m": "m", "p": "p", "theta": "theta", "T": "T", "L": "L", "n": "n",
              "nt": "n_t", "tol": "tol", "weight_mode": "weight_mode", "alpha": "alpha",
              "beta": "beta", "seed": "seed", "out": "output_dir", "cache_dir": "cache_dir",
              "max_iter": "max_iter"}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--N", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--L", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--weight-mode", dest="weight_mode")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--data", help="initial data, e.g. 'kind=dirac mass=1'")
    p.add_argument("--out", help="output directory")
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--force", action="store_true", help="iterate even without contraction")
    p.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polyheat",
                                 description="Polyharmonic heat kernels and semilinear solves.")
    sub = ap.add_subparsers(dest="command", required=True)
    k = sub.add_parser("kernel", help="build a radial kernel profile")
    k.add_argument("--kind", choices=("polyharmonic", "stable"), default="polyharmonic")
    k.add_argument("--r-max", dest="r_max", type=float)
    k.add_argument("--resolution", type=int, default=64)
    for name, h in (("verify-majorant", "estimate the majorant constants"),
                    ("classify", "classify initial data"),
                    ("solve", "Picard solve of the integral equation"),
                    ("delta-sweep", "contraction data for mollified Dirac data"),
                    ("diagnose", "weighted-integral diagnostic on solver snapshots")):
        sp = sub.add_parser(name, help=h)
        if name == "diagnose":
            sp.add_argument("--snapshots", help="directory of snapshot files")
            sp.add_argument("--x0", help="cutoff centre, comma separated")
    for sp in sub.choices.values():
        _common(sp)
    return ap


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = RunConfig.from_text(Path(args.config).read_text(), cfg)
    pairs = []
    for flag, key in _FLAG_KEYS.items():
        v = getattr(args, flag, None)
        if v is not None:
            pairs.append((key, str(v)))
    if getattr(args, "force", False):
        pairs.append(("force", "true"))
    if getattr(args, "data", None):
        pairs += RunConfig.parse_data_spec(args.data)
    if getattr(args, "x0", None):
        pairs.append(("x0", args.x0))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        pairs.append(tuple(item.split("=", 1)))
    return RunConfig.from_pairs(pairs, cfg)


def _cache(cfg: RunConfig):
    return kernels.cache_dir_from_env(cfg.cache_dir or None)


def _outdir(cfg: RunConfig) -> Path:
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def write_csv(path: Path, cfg: RunConfig, header, rows) -> Path:
    """Comment row with the config hash, header row, then data rows."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={cfg.hash()}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _spec(cfg: RunConfig):
    return majorant.MajorantSpec.build(cfg.problem(), cache_dir=_cache(cfg))


# ---------------------------------------------------------------------------
# subcommands

def cmd_kernel(args, cfg: RunConfig) -> int:
    kind = (kernels.KernelKind.polyharmonic(cfg.m) if args.kind == "polyharmonic"
            else kernels.KernelKind.stable(cfg.theta))
    prof = kernels.build_profile(kind, cfg.N, r_max=args.r_max, resolution=args.resolution,
                                 cache_dir=_cache(cfg))
    out = _outdir(cfg)
    stem = f"kernel_{args.kind}_{kind.order:g}_N{cfg.N}"
    write_csv(out / f"{stem}.csv", cfg, ("r", "value"), zip(prof.radii, prof.values))
    props = {"kind": kind.label(), "N": cfg.N, "mass": prof.mass(), "min_value": prof.min_value(),
             "value_at_origin": float(prof.values[0]), "checksum": prof.checksum(),
             "config_hash": cfg.hash()}
    (out / f"{stem}.props").write_text("".join(f"{k}={_fmt(v)}\n" for k, v in props.items()))
    print(f"mass={props['mass']:.10f} min_value={props['min_value']:.6g} "
          f"value_at_origin={props['value_at_origin']:.10g}")
    return 0


def cmd_verify_majorant(args, cfg: RunConfig) -> int:
    spec = _spec(cfg)
    rows = []
    summary = []
    for j in (0, 1, 2):
        est = majorant.estimate_d_j(spec, j)
        rows += [(f"d{j}", i, size, v, est.saturated) for i, (size, v) in enumerate(est.refinement_history)]
        summary.append(f"d{j}={est.value:.6g}")
    ds = majorant.estimate_d_star(spec)
    rows += [("d_star", i, size, v, ds.saturated) for i, (size, v) in enumerate(ds.refinement_history)]
    summary.append(f"d_star={ds.value:.6g} tail_limit={ds.info['tail_limit']:.6g} "
                   f"grid_residual={ds.info['max_grid_residual']:.3g}")
    mu = cfg.initial_data()
    if not mu.is_zero:
        times = [2.0 ** -k for k in range(0, 11)]
        dd = majorant.smoothing_bound_check(spec, mu, times)
        rows += [("d_smoothing", i, size, v, dd.saturated) for i, (size, v) in enumerate(dd.refinement_history)]
        summary.append(f"d_smoothing={dd.value:.6g}")
    write_csv(_outdir(cfg) / "majorant.csv", cfg, ("constant", "refinement", "size", "value", "saturated"), rows)
    print(" ".join(summary))
    return 0


def cmd_classify(args, cfg: RunConfig) -> int:
    mu = cfg.initial_data()
    rep = classify(mu, cfg.problem(), cfg.classify_config())
    rows = [(c.criterion, c.verdict, c.quantity, c.threshold, c.gamma, c.note) for c in rep.checks]
    write_csv(_outdir(cfg) / "classify.csv", cfg,
              ("criterion", "verdict", "quantity", "threshold", "gamma", "note"), rows)
    print(rep.summary_line())
    return 0


def _save_snapshots(report, cfg: RunConfig, out: Path) -> int:
    d = out / "snapshots"
    d.mkdir(exist_ok=True)
    for old in d.glob("snap_*.txt"):
        old.unlink()
    snaps = report.snapshots
    stride = 1 if cfg.snapshots == 0 else max(1, math.ceil((len(snaps) - 1) / (cfg.snapshots - 1)))
    keep = list(range(0, len(snaps), stride))
    if keep[-1] != len(snaps) - 1:
        keep.append(len(snaps) - 1)
    for i in keep:
        t, f = snaps[i]
        f.with_values(f.values, t).save(d / f"snap_{i:05d}.txt")
    return len(keep)


def cmd_solve(args, cfg: RunConfig) -> int:
    params = cfg.problem()
    spec = _spec(cfg)
    mu = cfg.initial_data()
    rep = solver.picard_solve(mu, params, cfg.picard(), spec)
    out = _outdir(cfg)
    rows = [(i + 1, inc, nrm) for i, (inc, nrm) in enumerate(zip(rep.norm_history, rep.iterate_norms))]
    write_csv(out / "norm_history.csv", cfg, ("iteration", "increment", "iterate_norm"), rows)
    fields = [("converged", rep.converged), ("fixed_point_converged", rep.fixed_point_converged),
              ("status", rep.status), ("iterations", rep.iterations),
              ("contraction_estimate", rep.contraction_estimate), ("D_star", rep.D_star_value),
              ("nu", rep.nu), ("d0", rep.d0_used), ("d_star", rep.dstar_used),
              ("condition_mass", rep.condition_53_holds[0]),
              ("condition_nu", rep.condition_53_holds[1]), ("residual", rep.residual),
              ("excluded_points", rep.excluded_points)]
    write_csv(out / "solve_report.csv", cfg, ("field", "value"), fields)
    _save_snapshots(rep, cfg, out)
    print(f"status={rep.status} iterations={rep.iterations} nu={rep.nu:.4g} "
          f"residual={rep.residual:.3g}")
    return 0


def cmd_delta_sweep(args, cfg: RunConfig) -> int:
    rows = solver.delta_sweep(cfg.problem(), cfg.sweep_mass, cfg.sweep_eps, cfg.picard(),
                              _spec(cfg))
    table = [(r.eps, r.D_star, r.nu, r.converged, r.sup_half, r.status) for r in rows]
    write_csv(_outdir(cfg) / "delta_sweep.csv", cfg,
              ("eps", "D_star", "nu", "converged", "sup_half_time", "status"), table)
    for a, b in zip(rows, rows[1:]):
        ratio = b.D_star / a.D_star if a.D_star > 0 else float("nan")
        print(f"eps={b.eps:.6g} D_star={b.D_star:.6g} growth={ratio:.4f}")
    return 0


def load_snapshots(directory) -> list:
    files = sorted(Path(directory).glob("snap_*.txt"))
    if not files:
        raise ConfigError(f"no snapshot files in {directory}")
    snaps = []
    for f in files:
        g = GridField.load(f)
        if g.time_tag is None:
            raise ConfigError(f"{f} has no time tag")
        snaps.append((g.time_tag, g))
    return sorted(snaps, key=lambda s: s[0])


def cmd_diagnose(args, cfg: RunConfig) -> int:
    params = cfg.problem()
    snaps = load_snapshots(args.snapshots or Path(cfg.output_dir) / "snapshots")
    x0 = cfg.x0 or (0.0,) * cfg.N
    rows, flagged = testfn.nonexistence_diagnostic(snaps, cfg.initial_data(), params, x0, cfg.R_list)
    write_csv(_outdir(cfg) / "diagnose.csv", cfg, ("R", "m_R", "LHS", "RHS", "ratio"),
              [(r.R, r.m_R, r.lhs, r.rhs, r.ratio) for r in rows])
    print(f"flagged={'true' if flagged else 'false'}")
    return 0


_COMMANDS = {"kernel": cmd_kernel, "verify-majorant": cmd_verify_majorant, "classify": cmd_classify,
             "solve": cmd_solve, "delta-sweep": cmd_delta_sweep, "diagnose": cmd_diagnose}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args)
        return _COMMANDS[args.command](args, cfg)
    except PolyheatError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
