"""``sim`` command line tool.

Subcommands::

    sim sweep <config> -o <dir> [--threads N]
    sim verify [--tol 1e-10] [-o <dir>]
    sim trial <config> --buffer N --count K [--memories M]

Exit codes: 0 success, 2 configuration or usage error, 3 verification
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from qrepeater import __version__
from qrepeater.config import ConfigError, ExperimentConfig, load_config
from qrepeater.metrics import fidelity_density, optimize_buffer
from qrepeater.protocol import Side, run_trial

log = logging.getLogger("qrepeater")

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4
MAX_TRACE_TRIALS = 1000

SWEEP_COLUMNS = ["M", "N_buffer", "trials", "successes", "p_succ", "mean_fidelity", "rains",
                 "rate", "rate_stderr", "per_memory_rate"]


class UsageError(Exception):
    pass


def _num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def _threads(arg) -> int:
    if arg is not None:
        n = arg
    else:
        env = os.environ.get("SIM_THREADS", "1")
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"SIM_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_sweep_experiment(cfg: ExperimentConfig, out_dir: Path, threads: int = 1,
                         config_source: str = "", figures: bool = True) -> dict:
    """Sweep the buffer length for every M and write all result files.

    Returns the manifest dict (also written to ``manifest.json``).
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    optima, sweeps, densities, histograms = {}, {}, {}, {}
    for M in cfg.M_list:
        sim = cfg.sim_config(M)
        best, sweep, batches = optimize_buffer(sim, cfg.N_range, threads=threads,
                                               return_batches=True)
        optima[M], sweeps[M] = best, sweep
        batch = batches[best.N_buffer]
        densities[M] = fidelity_density(batch.fidelity_samples, cfg.bins)
        ok = batch.success
        histograms[M] = {
            "all_trials": [h.tolist() for h in batch.purification_histograms],
            "successful_trials_total": np.bincount(batch.purifications[ok].sum(axis=1)).tolist(),
        }
        log.info("M=%d optimal N_buffer=%d rate=%.6g", M, best.N_buffer, best.rate)

    outputs = []
    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for M in cfg.M_list:
            for r in sweeps[M]:
                w.writerow([M, r.N_buffer, r.trials, r.successes, _num(r.p_succ),
                            _num(r.mean_fidelity), _num(r.rains), _num(r.rate),
                            _num(r.rate_stderr), _num(r.per_memory_rate)])
    outputs.append(sweep_path)

    optimal = []
    for M in cfg.M_list:
        r = optima[M]
        entry = {"M": M}
        entry.update({k: r.as_dict()[k] for k in SWEEP_COLUMNS[1:]})
        entry["purification_histograms"] = histograms[M]
        optimal.append(entry)
    optimal_path = out_dir / "optimal.json"
    optimal_path.write_text(json.dumps(optimal, indent=2) + "\n")
    outputs.append(optimal_path)

    for M in cfg.M_list:
        path = out_dir / f"fidelity_density_M{M}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_center", "density"])
            for c, d in densities[M]:
                w.writerow([_num(c), _num(d)])
        outputs.append(path)

    if figures:
        from qrepeater import plotting

        fig_dir = out_dir / "figures"
        fig_dir.mkdir(exist_ok=True)
        title = f"{cfg.family.value}, p_gate={cfg.p_gate:g}, eta_meas={cfg.eta_meas:g}"
        for name, fn, arg in [
            ("optimal_rate.svg", plotting.plot_optimal_rates, optima),
            ("rate_vs_buffer.svg", plotting.plot_rate_sweep, sweeps),
            ("fidelity_density.svg", plotting.plot_fidelity_densities, densities),
        ]:
            path = fig_dir / name
            if fn is plotting.plot_optimal_rates:
                fn(arg, path, title=title)
            else:
                fn(arg, path)
            outputs.append(path)

    manifest = {
        "artifact": "qrepeater",
        "version": __version__,
        "seed": cfg.seed,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config_source": config_source,
        "config": cfg.as_dict(),
        "config_text": cfg.to_text(),
        "outputs": {str(p.relative_to(out_dir)): _sha256(p) for p in outputs},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def format_event(ev: dict) -> str:
    kind = ev["event"]
    if kind == "generate":
        return f"  step {ev['step']:>3}  {Side(ev['side']).name.lower():<5} generate slot={ev['slot']} F={ev['fidelity']:.6f}"
    if kind == "purify":
        result = f"ok F={ev['fidelity']:.6f}" if ev["success"] else "failed, both freed"
        return (f"  step {ev['step']:>3}  {Side(ev['side']).name.lower():<5} purify kept=slot{ev['kept_slot']}"
                f"(F={ev['kept_fidelity']:.6f}) sacrificed=slot{ev['sacrificed_slot']}"
                f"(F={ev['sacrificed_fidelity']:.6f}) p={ev['success_prob']:.6f} -> {result}")
    if kind == "swap":
        if not ev["attempted"]:
            return f"  step {ev['step']:>3}  swap not attempted (missing pair)"
        result = f"ok F={ev['fidelity']:.6f}" if ev["success"] else "failed"
        return (f"  step {ev['step']:>3}  swap left F={ev['left_fidelity']:.6f} "
                f"right F={ev['right_fidelity']:.6f} -> {result}")
    return ""


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    threads = _threads(args.threads)
    run_sweep_experiment(cfg, Path(args.output), threads=threads, config_source=str(args.config),
                         figures=not args.no_figures)
    return EXIT_OK


def cmd_verify(args) -> int:
    from qrepeater.verify import failures, verification_checks, write_report

    if not args.tol > 0:
        raise UsageError(f"tolerance must be positive, got {args.tol!r}")
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    checks = verification_checks()
    write_report(checks, args.tol, out_dir / "verify.csv")
    bad = failures(checks, args.tol)
    known = sum(c.status(args.tol) == "known" for c in checks)
    worst = max((c.abs_diff for c in checks if not c.known()), default=0.0)
    print(f"{len(checks)} checks, {len(bad)} failed, {known} known discrepancies, "
          f"worst non-flagged |diff| = {worst:.3g}")
    for c in bad[:20]:
        print(f"FAIL {c.formula} F1={c.F1} F2={c.F2} p={c.p_gate} eta={c.eta_meas} "
              f"n={c.n_steps}: {c.closed_form!r} vs {c.oracle!r}")
    return EXIT_VERIFY if bad else EXIT_OK


def cmd_trial(args) -> int:
    cfg = load_config(args.config)
    if not 1 <= args.count <= MAX_TRACE_TRIALS:
        raise UsageError(f"--count must lie in [1, {MAX_TRACE_TRIALS}]")
    M = args.memories if args.memories is not None else cfg.M_list[0]
    try:
        sim = cfg.sim_config(M, args.buffer)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = sys.stdout
    for trial in range(args.count):
        out.write(f"trial {trial} (M={M}, N_buffer={args.buffer}, seed={cfg.seed})\n")
        events = []
        outcome = run_trial(sim, trial, trace=events.append)
        for ev in events:
            line = format_event(ev)
            if line:
                out.write(line + "\n")
        status = f"success F={outcome.fidelity:.6f}" if outcome.success else "failure F=-1"
        out.write(f"  outcome: {status}, purifications left={outcome.purifications_left} "
                  f"right={outcome.purifications_right}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sim", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="optimise the buffer length for every M in the config")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default $SIM_THREADS or 1)")
    p.add_argument("--no-figures", action="store_true", help="skip SVG figures")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="compare closed forms with the density-matrix oracle")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("-o", "--output", default=".", help="directory for verify.csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("trial", help="print event traces of single buffer windows")
    p.add_argument("config")
    p.add_argument("--buffer", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--memories", type=int, default=None, help="M (default: first of M_list)")
    p.set_defaults(func=cmd_trial)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
