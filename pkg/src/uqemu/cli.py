"""Command-line entry point: ``uqemu run | list-experiments | gen-instance``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import EmulatorError
from .experiments import emit_results, list_experiments, parse_config, run_experiment
from .instances import generate_instance


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uqemu", description="Seeded emulator experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a JSON config")
    run.add_argument("config", help="path to a JSON config, or '-' for stdin")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--mode", choices=("EXACT", "MC", "exact", "mc"), help="override the config mode")
    run.add_argument("--out", help="output path (default: config output_path, else stdout)")
    run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    run.add_argument("--timing", action="store_true", help="fill the wall_ms column")

    sub.add_parser("list-experiments", help="list experiment names and what they check")

    gen = sub.add_parser("gen-instance", help="print a random EmulationProblem as JSON")
    gen.add_argument("D", type=int)
    gen.add_argument("d", type=int)
    gen.add_argument("K", type=int)
    gen.add_argument("seed", type=int)
    gen.add_argument("--out", help="write to this path instead of stdout")
    return parser


def _run(args) -> int:
    text = sys.stdin.read() if args.config == "-" else Path(args.config).read_text(encoding="utf-8")
    cfg = parse_config(text)
    overrides = {"seed": args.seed, "mode": args.mode.upper() if args.mode else None}
    if args.timing:
        overrides["timing"] = True
    cfg = cfg.replace(**overrides)
    rows = run_experiment(cfg)
    out = args.out or cfg.output_path
    text = emit_results(rows, args.format, out, cfg.timing)
    if out is None:
        sys.stdout.write(text)
    failed = sum(not r.passed for r in rows)
    print(f"{cfg.experiment}: {len(rows) - failed}/{len(rows)} rows passed", file=sys.stderr)
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        if args.command == "list-experiments":
            for name, desc in list_experiments():
                print(f"{name:28s} {desc}")
            return 0
        text = generate_instance(args.D, args.d, args.K, args.seed).to_json() + "\n"
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    except (EmulatorError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
