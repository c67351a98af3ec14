"""Command-line entry point: ``mlofdm {train,run,flops,time,plot}``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

from .campaign import read_records, run_campaign, train_dnn
from .config import DETECTORS, ExperimentConfig, load_config
from .flops import count_flops, scaling_ratio
from .plots import emit_plots
from .timing import time_inference

log = logging.getLogger("mlofdm")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", type=Path, help="YAML experiment config (defaults otherwise)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--trials", type=int, help="override frames per SNR point (and ELM blocks)")
    common.add_argument("-o", "--output-dir", type=Path, help="override the output directory")
    common.add_argument("-d", "--detectors", nargs="+", choices=DETECTORS,
                        help="restrict to these detectors")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="mlofdm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train (or load) the DNN detector")
    sub.add_parser("run", parents=[common], help="run the BER/NMSE campaign")
    fl = sub.add_parser("flops", parents=[common], help="per-frame operation counts")
    fl.add_argument("--scaling", action="store_true", help="also print doubling ratios")
    tm = sub.add_parser("time", parents=[common], help="per-frame detection timing")
    tm.add_argument("--repetitions", type=int, default=50)
    pl = sub.add_parser("plot", parents=[common], help="render BER plots from a metrics CSV")
    pl.add_argument("csv", type=Path, nargs="?", help="metrics CSV (default: <output>/metrics.csv)")
    return p


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.trials is not None:
        kw["trials"] = args.trials
        kw["elm_trials"] = args.trials
    if args.output_dir is not None:
        kw["output_dir"] = str(args.output_dir)
    if args.detectors:
        kw["detectors"] = list(args.detectors)
    return dataclasses.replace(cfg, **kw) if kw else cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        cfg = _config(args)
    except (OSError, ValueError) as exc:
        print(f"mlofdm: {exc}", file=sys.stderr)
        return 2
    out = cfg.resolved_output_dir()

    if args.command == "train":
        det = train_dnn(cfg, progress=lambda g, e, v: log.info("group %d epoch %d loss %.5f", g, e, v))
        print(f"trained {len(det.models)} network(s) for scenario {cfg.scenario}")
    elif args.command == "run":
        path = out / "metrics.csv"
        records = run_campaign(cfg, output=path, progress=log.info)
        for r in records:
            print(f"{r.scenario:>10} {r.detector:>8} {r.snr_db:6.1f} dB  BER {r.ber:.3e} "
                  f"+/- {r.ber_ci95:.1e}  NMSE {r.nmse:.3e}")
        print(f"wrote {len(records)} rows to {path}")
    elif args.command == "flops":
        for d in cfg.detectors:
            line = f"{d:>8} {count_flops(d, cfg).total:14.0f} flops/frame"
            if args.scaling:
                axis = "hidden" if d == "elm" else "n_c"
                line += f"   x{scaling_ratio(d, cfg, axis):.2f} when {axis} doubles"
            print(line)
    elif args.command == "time":
        dnn = train_dnn(cfg) if "dnn" in cfg.detectors else None
        path = out / "timing.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        new = not path.exists()
        with open(path, "a", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(["scenario", "detector", "phase", "median_ms", "iqr_ms", "repetitions"])
            for d in cfg.detectors:
                for phase, s in time_inference(d, cfg, args.repetitions, dnn).items():
                    w.writerow([cfg.scenario, d, phase, repr(s.median_ms), repr(s.iqr_ms), s.repetitions])
                    print(f"{d:>8} {phase:>7} median {s.median_ms:.3f} ms  IQR {s.iqr_ms:.3f} ms")
    elif args.command == "plot":
        src = args.csv or out / "metrics.csv"
        records = read_records(src)
        for p in emit_plots(records, out / "plots", cfg.modulation):
            print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
