"""Command-line interface.

Subcommands:
    simulate  <scenario|preset:name>  run one scenario (optionally swept)
    batch     <spec.yaml>             generate a dataset with a manifest
    validate  <scenario>              dry-run schema check
    rdmap     <file.iq>               range-Doppler map from a stored frame
    metrics   <file.iq>               signature metrics from a stored frame

Environment overrides: UDARSIM_OUT_DIR (output directory),
UDARSIM_WORKERS (batch worker count).  CLI flags win over both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .batch import BatchError, batch_generate, parse_sweep
from .processing import ProcessingError, extract_metrics, range_doppler
from .scenario import ScenarioError, load_scenario, run_scenario
from .storage import StorageError, load_iq, save_metrics, save_rdmap, save_rdmap_csv
from .waveform import WaveformError, load_symbols

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_SCHEMA = 2


def _out_dir(args) -> Path:
    if getattr(args, "out_dir", None):
        return Path(args.out_dir)
    env = os.environ.get("UDARSIM_OUT_DIR")
    return Path(env) if env else Path.cwd()


def _workers(args) -> int | None:
    if getattr(args, "workers", None):
        return args.workers
    env = os.environ.get("UDARSIM_WORKERS")
    return int(env) if env else None


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    out_dir = _out_dir(args)
    if args.sweep:
        sweeps = [parse_sweep(expr) for expr in args.sweep]
        spec = {
            "scenario": scenario,
            "master_seed": scenario.get("seed", 0),
            "sweeps": [{"key": k, "values": v} for k, v in sweeps],
        }
        manifest = batch_generate(spec, parallelism=_workers(args), out_dir=out_dir)
        print(f"{manifest['n_items']} item(s) -> {manifest['manifest_path']}")
        return EXIT_OK if manifest["n_failed"] == 0 else EXIT_FAILURE
    record = run_scenario(scenario, out_dir=out_dir)
    for kind, info in record["files"].items():
        print(f"{kind}: {out_dir / info['path']} ({info['bytes']} bytes)")
    return EXIT_OK


def cmd_batch(args) -> int:
    manifest = batch_generate(args.spec, parallelism=_workers(args),
                              out_dir=args.out_dir or os.environ.get("UDARSIM_OUT_DIR"))
    print(f"{manifest['n_items']} item(s), {manifest['n_failed']} failed "
          f"-> {manifest['manifest_path']}")
    return EXIT_OK if manifest["n_failed"] == 0 else EXIT_FAILURE


def cmd_validate(args) -> int:
    load_scenario(args.scenario)
    print(f"{args.scenario}: ok")
    return EXIT_OK


def _load_frame_and_symbols(args):
    frame = load_iq(args.iqfile)
    if not args.symbols:
        raise StorageError(
            "a symbol-matrix file is required (--symbols); the IQ header does not "
            "carry the modulation draw"
        )
    symbols = load_symbols(args.symbols)
    return frame, symbols


def cmd_rdmap(args) -> int:
    frame, symbols = _load_frame_and_symbols(args)
    rdmap = range_doppler(frame, symbols, window=args.window, subsample=args.subsample)
    out = Path(args.out) if args.out else Path(args.iqfile).with_suffix(".rdm")
    save_rdmap(rdmap, out)
    print(f"rdmap: {out}")
    if args.csv:
        save_rdmap_csv(rdmap, args.csv)
        print(f"rdmap_csv: {args.csv}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    frame, symbols = _load_frame_and_symbols(args)
    metrics = extract_metrics(frame, symbols, window=args.window, subsample=args.subsample)
    if args.out:
        save_metrics(metrics, args.out)
        print(f"metrics: {args.out}")
    else:
        json.dump(
            {
                "spike_spacing_hz": metrics.spike_spacing_hz,
                "doppler_spread_hz": metrics.doppler_spread_hz,
                "dc_fraction": metrics.dc_fraction,
                "peak_range_bin": metrics.peak_range_bin,
            },
            sys.stdout, indent=2, sort_keys=True,
        )
        print()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="udarsim",
        description="Bistatic OFDM micro-Doppler simulator for multi-propeller drones",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario (file or preset:<name>)")
    sim.add_argument("scenario")
    sim.add_argument("--out-dir", help="output directory (default: $UDARSIM_OUT_DIR or cwd)")
    sim.add_argument("--sweep", action="append", default=[],
                     help="sweep expression, e.g. rpm=1000:3000:500 (repeatable)")
    sim.add_argument("--workers", type=int, help="parallel workers for sweeps")
    sim.set_defaults(func=cmd_simulate)

    bat = sub.add_parser("batch", help="generate a dataset from a batch spec")
    bat.add_argument("spec")
    bat.add_argument("--out-dir")
    bat.add_argument("--workers", type=int)
    bat.set_defaults(func=cmd_batch)

    val = sub.add_parser("validate", help="schema-check a scenario without running it")
    val.add_argument("scenario")
    val.set_defaults(func=cmd_validate)

    rdm = sub.add_parser("rdmap", help="range-Doppler map from a stored IQ frame")
    rdm.add_argument("iqfile")
    rdm.add_argument("--symbols", required=False, help="symbol-matrix file")
    rdm.add_argument("--out")
    rdm.add_argument("--csv")
    rdm.add_argument("--window", default="hann")
    rdm.add_argument("--subsample", type=int, default=1)
    rdm.set_defaults(func=cmd_rdmap)

    met = sub.add_parser("metrics", help="signature metrics from a stored IQ frame")
    met.add_argument("iqfile")
    met.add_argument("--symbols", required=False)
    met.add_argument("--out")
    met.add_argument("--window", default="hann")
    met.add_argument("--subsample", type=int, default=1)
    met.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (BatchError, StorageError, WaveformError, ProcessingError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
