"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ntnbeam.bench import config as cfgmod
from ntnbeam.bench.complexity import complexity_estimate
from ntnbeam.bench.scenarios import run_scenario

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, out=True):
    p.add_argument("--config", type=Path, help="JSON config (or a run manifest)")
    p.add_argument("--seed", type=int, help="override the top-level seed")
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted-path override, e.g. train.gamma=0.2 (repeatable)")
    if out:
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ntnbeam", description="HAPS/LAPS downlink beamforming experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train policies (scenario train_curve)")
    _common(p)
    p.add_argument("--method", choices=cfgmod.LEARNED, action="append", help="backbone(s) to train")

    p = sub.add_parser("eval", help="evaluate saved policies per slot (scenario rate_vs_slot)")
    _common(p)

    p = sub.add_parser("sweep", help="run any scenario")
    _common(p)
    p.add_argument("--scenario", choices=cfgmod.SCENARIOS, help="scenario name (default: from config)")
    p.add_argument("--values", type=float, nargs="+", help="sweep values")

    p = sub.add_parser("baseline", help="evaluate classical precoders (scenario baseline_only)")
    _common(p)
    p.add_argument("--method", choices=cfgmod.CLASSICAL, action="append")

    p = sub.add_parser("complexity", help="print operation-count estimates")
    p.add_argument("--U", type=int, default=16, help="number of users")
    p.add_argument("--N", type=int, default=64, help="number of antennas")
    p.add_argument("--T-bar", dest="T_bar", type=int, default=100, help="WMMSE iterations")
    p.add_argument("--modes", type=int, nargs=2, default=(8, 20))

    p = sub.add_parser("validate-config", help="check a config and print the resolved document")
    _common(p, out=False)
    return ap


def _resolve(args, **forced) -> dict:
    overrides = list(args.override)
    base = {}
    if args.config is not None:
        if not args.config.exists():
            raise UsageError(f"config file not found: {args.config}")
        try:
            base = json.loads(args.config.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(base, dict):
            raise UsageError(f"{args.config}: top level must be an object")
    if "manifest_version" in base:
        base = dict(base["config"])
    base = cfgmod.merge(base, {k: v for k, v in forced.items() if v is not None})
    return cfgmod.resolve(base, overrides, args.seed)


def _report(manifest, out):
    print(f"wrote {Path(out) / manifest['csv']} ({manifest['rows']} rows)")
    for note in manifest["notes"]:
        print(f"note: {note}")


def _run(args) -> int:
    if args.command == "complexity":
        if args.U < 1 or args.N < 1 or args.T_bar < 1:
            raise UsageError("--U, --N and --T-bar must be positive")
        est = complexity_estimate(args.U, args.N, tuple(args.modes), T_bar=args.T_bar)
        for k, v in est.items():
            print(f"{k}\t{v:.17g}" if isinstance(v, float) else f"{k}\t{v}")
        return EXIT_OK
    forced = {}
    if args.command == "train":
        forced = {"scenario": "train_curve", "methods": args.method}
    elif args.command == "eval":
        forced = {"scenario": "rate_vs_slot"}
    elif args.command == "baseline":
        forced = {"scenario": "baseline_only", "methods": args.method}
    elif args.command == "sweep":
        forced = {"scenario": args.scenario, "values": args.values}
    cfg = _resolve(args, **forced)
    if args.command == "validate-config":
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return EXIT_OK
    manifest = run_scenario(cfg, args.out)
    _report(manifest, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (UsageError, cfgmod.ConfigError) as exc:
        print(f"ntnbeam: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        logging.getLogger("ntnbeam").debug("runtime failure", exc_info=True)
        print(f"ntnbeam: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
