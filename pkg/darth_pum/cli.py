"""
Command-line driver.

::

    darth-pum aes --blocks 16 --seed 1 --check-oracle
    darth-pum cnn --images 4 --batch 4 --csv cnn.csv
    darth-pum llm --sequences 2 --json llm.json
    darth-pum sweep --csv sweep.csv
    darth-pum adc-study --apps aes,cnn
    darth-pum report --db runs.sqlite --export csv

Errors of the simulator end the process with their ``exit_code``: 2 for a
configuration error, 3 for an oracle mismatch, 4 for capacity or budget.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .apps.cnn import Activation
from .apps.encoder import FfnActivation
from .apps.inputs import read_array, read_bytes, split_blocks
from .config import SimConfig, build_config, load_config
from .dce.microops import LogicFamily
from .errors import ConfigError, DarthPumError
from .hct.trace import EventTrace
from .logger import logger
from .report import (
    APPS,
    ResultStore,
    RunReport,
    SweepSpec,
    run_adc_study,
    run_aes,
    run_cnn,
    run_llm,
    run_sweep,
    study_csv,
    sweep_csv,
    to_csv,
)


def _write(target: Optional[str], text: str):
    if target is None or target == "-":
        sys.stdout.write(text)
    else:
        Path(target).write_text(text)


def _config(args) -> SimConfig:
    config = load_config(args.config) if args.config else SimConfig()
    if args.adc:
        config = build_config({"chip.adc": args.adc}, config)
    return config


def _emit_report(args, report: RunReport, trace: Optional[EventTrace]):
    store = ResultStore(args.db)
    try:
        run_id = store.save(report)
    finally:
        store.close()
    logger.debug(f"{report.app} run stored as {run_id}")

    _write(args.json, report.to_json())
    if args.csv:
        _write(args.csv, to_csv([report]))
    if args.trace and trace is not None:
        with open(args.trace, "w") as fp:
            trace.dump(fp)


def _cmd_aes(args) -> int:
    config = _config(args)
    key = read_bytes(args.key) if args.key else None
    if key is not None and len(key) not in (16, 24, 32):
        raise ConfigError(f"AES keys are 16, 24 or 32 bytes, got {len(key)}")
    blocks = split_blocks(read_bytes(args.plaintext)) if args.plaintext else args.blocks
    trace = EventTrace() if args.trace else None
    report = run_aes(config, args.seed, blocks, key=key, noise=args.noise,
                     check_oracle=args.check_oracle, trace=trace)
    _emit_report(args, report, trace)
    return 0


def _cmd_cnn(args) -> int:
    config = _config(args)
    images = read_array(args.input)[0] if args.input else args.images
    trace = EventTrace() if args.trace else None
    report = run_cnn(config, args.seed, images, batch=args.batch, activation=args.activation,
                     noise=args.noise, check_oracle=args.check_oracle, trace=trace)
    _emit_report(args, report, trace)
    return 0


def _cmd_llm(args) -> int:
    config = _config(args)
    if args.input:
        codes, frac = read_array(args.input)
        sequences = codes / float(1 << frac)
    else:
        sequences = args.sequences
    trace = EventTrace() if args.trace else None
    report = run_llm(config, args.seed, sequences, activation=args.activation, noise=args.noise,
                     check_oracle=args.check_oracle, trace=trace)
    _emit_report(args, report, trace)
    return 0


def _cmd_sweep(args) -> int:
    config = _config(args)
    families = [LogicFamily(f) for f in args.families.split(",")]
    budget = args.budget or config.sweep_budget
    spec = SweepSpec.iso_resource(budget, families, depth=config.chip.pipeline_depth,
                                  ace_arrays=config.chip.ace_arrays)
    rows = run_sweep(spec, config)
    _write(args.csv, sweep_csv(rows))
    if args.json:
        _write(args.json, json.dumps([r.as_dict() for r in rows], sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_adc_study(args) -> int:
    config = _config(args)
    apps = [a.strip() for a in args.apps.split(",") if a.strip()]
    unknown = [a for a in apps if a not in APPS]
    if unknown:
        raise ConfigError(f"Unknown applications {unknown}")
    rows = run_adc_study(config, apps, seed=args.seed)
    _write(args.csv, study_csv(rows))
    if args.json:
        _write(args.json, json.dumps([r.as_dict() for r in rows], sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_report(args) -> int:
    if args.db is None:
        raise ConfigError("report needs --db to point at a results database")
    store = ResultStore(args.db)
    try:
        reports = store.export(args.app)
        if args.export == "csv":
            _write(args.csv, to_csv(reports))
        elif args.export == "json":
            _write(args.json, json.dumps([r.to_dict() for r in reports], sort_keys=True, indent=2) + "\n")
        else:
            lines = [f"{run.id}\t{run.app}\t{run.adc}\t{run.cycles}\t{run.throughput:.6g}" for run in store.runs(args.app)]
            _write(None, "".join(line + "\n" for line in lines))
    finally:
        store.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat 'key = value' configuration file")
    common.add_argument("--seed", type=int, default=0, help="Seed of models, inputs and noise")
    common.add_argument("--adc", choices=("sar", "ramp"), help="ADC of every ACE (sets the iso-area HCT count)")
    common.add_argument("--noise", help="off, default or a file of noise.* keys (app default when omitted)")
    common.add_argument("--trace", help="Write the event trace here as CSV lines")
    common.add_argument("--json", help="Write the JSON summary here ('-' for stdout)")
    common.add_argument("--csv", help="Write CSV rows here ('-' for stdout)")
    common.add_argument("--db", help="SQLite file (or SQLAlchemy URL) that stores run reports")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(description="Hybrid analog/digital PUM simulator", prog="darth-pum")
    subparsers = parser.add_subparsers(dest="command", required=True)

    aes = subparsers.add_parser("aes", parents=[common], help="AES encryption")
    aes.add_argument("--blocks", type=int, default=1, help="Random plaintext blocks to encrypt")
    aes.add_argument("--key", help="Key as hex or a binary file")
    aes.add_argument("--plaintext", help="Plaintext as hex or a binary file, a whole number of blocks")
    aes.add_argument("--check-oracle", action="store_true", help="Compare against the software AES")
    aes.set_defaults(func=_cmd_aes)

    cnn = subparsers.add_parser("cnn", parents=[common], help="Tiny CNN inference")
    cnn.add_argument("--images", type=int, default=1, help="Random images to classify")
    cnn.add_argument("--batch", type=int, default=1, help="Images in flight at once")
    cnn.add_argument("--input", help="Headed CSV of images, dims=Nx8x8")
    cnn.add_argument("--activation", choices=[a.value for a in Activation])
    cnn.add_argument("--check-oracle", action="store_true", help="Compare against the fixed-point reference")
    cnn.set_defaults(func=_cmd_cnn)

    llm = subparsers.add_parser("llm", parents=[common], help="Tiny encoder inference")
    llm.add_argument("--sequences", type=int, default=1, help="Random token sequences")
    llm.add_argument("--input", help="Headed CSV of embeddings, dims=Nx8x16")
    llm.add_argument("--activation", choices=[a.value for a in FfnActivation])
    llm.add_argument("--check-oracle", action="store_true", help="Compare against the float reference")
    llm.set_defaults(func=_cmd_llm)

    sweep = subparsers.add_parser("sweep", parents=[common], help="Iso-resource D/A/H AES sweep")
    sweep.add_argument("--budget", type=int, help="Total arrays (default sweep.budget)")
    sweep.add_argument("--families", default="oscar,ideal", help="Comma-separated logic families")
    sweep.set_defaults(func=_cmd_sweep)

    study = subparsers.add_parser("adc-study", parents=[common], help="SAR against ramp ADCs")
    study.add_argument("--apps", default="aes,cnn", help="Comma-separated applications")
    study.set_defaults(func=_cmd_adc_study)

    report = subparsers.add_parser("report", parents=[common], help="List or export stored runs")
    report.add_argument("--app", choices=APPS)
    report.add_argument("--export", choices=("json", "csv"))
    report.set_defaults(func=_cmd_report)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except DarthPumError as e:
        print(f"darth-pum: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        print(f"darth-pum: {e}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
