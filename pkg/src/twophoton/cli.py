"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import shlex
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, analytic, rng, verify
from .config import LoadedConfig, load_config, to_sections
from .geometry import ConfigError, Polarization, ScanMode, ScanPlan, default_scan, reference_paper_config
from .output import (
    ANALYTIC_COLUMNS,
    MONTECARLO_COLUMNS,
    Series,
    analytic_rows,
    montecarlo_rows,
    write_csv,
    write_manifest,
    write_svg,
)
from .scan import Engine, GridTooCoarse, extract_fringes, run_scan
from .speckle import PreconditionError

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3

FIGURES = (
    ("fig3a", ScanMode.FIXED_D2, Polarization.PARALLEL),
    ("fig3b", ScanMode.OPPOSITE, Polarization.PARALLEL),
    ("fig4a", ScanMode.FIXED_D2, Polarization.ORTHOGONAL),
    ("fig4b", ScanMode.OPPOSITE, Polarization.ORTHOGONAL),
)


class InputError(Exception):
    pass


def _load(args) -> LoadedConfig:
    if getattr(args, "config", None):
        loaded = load_config(args.config)
    else:
        loaded = LoadedConfig(reference_paper_config(), {})
    cfg = loaded.experiment
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "realizations", None) is not None:
        changes["realizations"] = args.realizations
    if getattr(args, "polarization", None):
        changes["polarization"] = args.polarization
    if changes:
        cfg = cfg.replace(**changes)
    return LoadedConfig(cfg, loaded.scan, loaded.amplitude_model)


def _plan(loaded: LoadedConfig, args, engine: str) -> ScanPlan:
    scan = dict(loaded.scan)
    if args.mode:
        if scan.get("mode") not in (None, args.mode):
            # explicit mode on the command line wins; keep only the grid keys that still apply
            scan = {k: v for k, v in scan.items() if k in ("step",)}
        scan["mode"] = args.mode
    mode = scan.get("mode", ScanMode.OPPOSITE.value)
    default = default_scan(mode, engine, fixed_x2=scan.get("fixed_x2", 0.0))
    return LoadedConfig(loaded.experiment, scan, loaded.amplitude_model).plan(default)


def _out(args, path) -> Path:
    path = Path(path)
    if args.out_dir and not path.is_absolute():
        path = Path(args.out_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _manifest_path(primary: Path) -> Path:
    return primary.with_suffix(".manifest")


def _finish(args, primary, loaded, plan, outputs, started):
    cfg = loaded.experiment
    write_manifest(
        _manifest_path(primary),
        config_echo=to_sections(cfg, plan, loaded.amplitude_model),
        command=shlex.join(["twophoton", *args.argv]),
        artifact_paths=outputs,
        wall_time=time.perf_counter() - started,
        tool_version=__version__,
        master_seed=cfg.seed,
    )


def _dense_analytic(cfg, plan: ScanPlan):
    lo, hi = float(plan.positions[0]), float(plan.positions[-1])
    x = np.linspace(lo, hi, 1201)
    dense = ScanPlan(plan.mode, x, plan.fixed_x2)
    return run_scan(cfg, dense, Engine.ANALYTIC)


def _peaks_or_empty(curve):
    try:
        report = extract_fringes(curve)
    except GridTooCoarse:
        return []
    return list(report.peak_positions) if report.fringes_detected else []


def cmd_analytic(args) -> int:
    started = time.perf_counter()
    loaded = _load(args)
    plan = _plan(loaded, args, "analytic")
    curve = run_scan(loaded.experiment, plan, Engine.ANALYTIC)
    outputs = [write_csv(_out(args, args.csv), ANALYTIC_COLUMNS, analytic_rows(curve))]
    if args.svg:
        title = f"analytic g2, {plan.mode.value}, {curve.polarization.value}"
        series = [Series("analytic", curve.x, curve.g2, peaks=_peaks_or_empty(curve))]
        outputs.append(write_svg(_out(args, args.svg), series, title=title))
    _finish(args, outputs[0], loaded, plan, outputs, started)
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    return EXIT_OK


def _mc_svg(path, cfg, plan, mc_curve, title):
    dense = _dense_analytic(cfg, plan)
    series = [
        Series("analytic", dense.x, dense.g2, color="#c0392b"),
        Series("Monte Carlo", mc_curve.x, mc_curve.g2, err=mc_curve.stderr, kind="points", color="#1f4e9c"),
    ]
    return write_svg(path, series, title=title)


def cmd_montecarlo(args) -> int:
    started = time.perf_counter()
    loaded = _load(args)
    plan = _plan(loaded, args, "montecarlo")
    cfg = loaded.experiment
    if cfg.realizations < 100:
        raise PreconditionError(f"realizations must be >= 100, got {cfg.realizations}")
    if loaded.amplitude_model != rng.GAUSSIAN:
        raise InputError("montecarlo scans use the gaussian amplitude model")
    curve = run_scan(cfg, plan, Engine.MONTE_CARLO, workers=args.workers)
    outputs = [write_csv(_out(args, args.csv), MONTECARLO_COLUMNS, montecarlo_rows(curve))]
    if args.svg:
        title = f"Monte Carlo g2, {plan.mode.value}, {cfg.polarization.value}, n={cfg.realizations}"
        outputs.append(_mc_svg(_out(args, args.svg), cfg, plan, curve, title))
    _finish(args, outputs[0], loaded, plan, outputs, started)
    print(f"wrote {', '.join(str(p) for p in outputs)}")
    return EXIT_OK


def cmd_verify(args) -> int:
    started = time.perf_counter()
    loaded = _load(args)
    cfg = loaded.experiment
    if args.emitters is not None and args.emitters < 1:
        raise InputError("--emitters must be >= 1")
    model = args.amplitude_model or loaded.amplitude_model
    results = verify.run_all(cfg, amplitude_model=model, emitters=args.emitters, n=args.n, workers=args.workers)
    table = verify.format_table(results)
    print(table)
    report = _out(args, "verify.txt")
    report.write_text(table + "\n", encoding="utf-8")
    _finish(args, report, loaded, None, [report], started)
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "verification FAILED")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_reproduce_figures(args) -> int:
    started = time.perf_counter()
    out_dir = Path(args.target or args.out_dir or "figures")
    out_dir.mkdir(parents=True, exist_ok=True)
    loaded = _load(args)
    base = loaded.experiment
    outputs, summary = [], []
    for name, mode, pol in FIGURES:
        cfg = base.replace(polarization=pol)
        plan = default_scan(mode, "montecarlo")
        mc = run_scan(cfg, plan, Engine.MONTE_CARLO, workers=args.workers)
        model = analytic.g2(cfg, *plan.detector_pairs()).normalized
        rows = [(x, g, e, int(mc.n_realizations), a) for x, g, e, a in zip(mc.x, mc.g2, mc.stderr, model)]
        outputs.append(write_csv(out_dir / f"{name}.csv", MONTECARLO_COLUMNS + ("g2_analytic",), rows))
        title = f"{name}: {mode.value}, {pol.value}, n={cfg.realizations}"
        outputs.append(_mc_svg(out_dir / f"{name}.svg", cfg, plan, mc, title))
        summary.append(_summary_line(name, cfg, mode, mc))
        print(summary[-1])
    summary_path = out_dir / "summary.txt"
    summary_path.write_text("\n".join(summary) + "\n", encoding="utf-8")
    outputs.append(summary_path)
    _finish(args, out_dir / "reproduce-figures.txt", loaded, None, outputs, started)
    return EXIT_OK


def _summary_line(name, cfg, mode, mc) -> str:
    report = extract_fringes(mc)
    head = f"{name} mode={mode.value} polarization={cfg.polarization.value} n={mc.n_realizations}"
    if not report.fringes_detected:
        return f"{head} NoFringesDetected peak_g2={report.center_peak_value:.4f}"
    predicted = analytic.predict_fringe_spacing(cfg, mode)
    peaks = " ".join(f"{p * 1e3:.3f}" for p in report.peak_positions)
    return (
        f"{head} spacing_mm={report.fringe_spacing * 1e3:.4f} +- {report.spacing_stderr * 1e3:.4f} "
        f"predicted_mm={predicted * 1e3:.4f} visibility={report.visibility:.3f} peaks_mm=[{peaks}]"
    )


def build_parser() -> argparse.ArgumentParser:
    def add_global(p, suppress):
        default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        p.add_argument("--seed", type=int, default=default(None), help="master RNG seed (overrides config)")
        p.add_argument("--workers", type=int, default=default(1), help="worker threads; never changes results")
        p.add_argument("--out-dir", default=default(None), help="directory for relative output paths")

    parser = argparse.ArgumentParser(prog="twophoton", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    add_global(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def scan_args(p, default_csv):
        p.add_argument("config", nargs="?", help="TOML config or run manifest (default: reference config)")
        p.add_argument("--mode", choices=[m.value for m in ScanMode])
        p.add_argument("--polarization", choices=[m.value for m in Polarization])
        p.add_argument("--csv", default=default_csv)
        p.add_argument("--svg")

    p = sub.add_parser("analytic", help="closed-form g2 scan")
    scan_args(p, "analytic.csv")
    add_global(p, suppress=True)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("montecarlo", help="Monte Carlo g2 scan")
    scan_args(p, "montecarlo.csv")
    p.add_argument("-n", "--realizations", type=int, help="realizations per scan point")
    add_global(p, suppress=True)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("verify", help="run the built-in verification checks")
    p.add_argument("config", nargs="?")
    p.add_argument("--amplitude-model", choices=rng.AMPLITUDE_MODELS)
    p.add_argument("--emitters", type=int, help="1 = single emitter in total, otherwise emitters per spot")
    p.add_argument("-n", type=int, default=100_000, help="realizations for the moment-theorem check")
    add_global(p, suppress=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reproduce-figures", help="Monte Carlo + analytic versions of the four scans")
    p.add_argument("target", nargs="?", help="output directory (default: --out-dir or ./figures)")
    p.add_argument("--config")
    p.add_argument("-n", "--realizations", type=int)
    add_global(p, suppress=True)
    p.set_defaults(func=cmd_reproduce_figures)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (ConfigError, PreconditionError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
