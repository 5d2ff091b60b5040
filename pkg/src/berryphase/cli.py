"""Command-line front end: ``berryphase <experiment> [flags]``.

Exit codes: 0 success, 2 configuration error, 3 numerical-precondition
failure, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import READOUTS, load_config
from .errors import BerryPhaseError, ConfigError
from .scans import run_scan, to_csv, write_outputs

SUBCOMMANDS = {
    "ssh-scan": "SSH Berry phase versus v/w",
    "heisenberg-scan": "local Berry phase of the twisted bond versus dimerization",
    "finite-size": "reference phase versus ring size",
    "energy-check": "ground-state energy from IPEA phase slopes",
    "parity-check": "particle-number parity of the prepared ground state",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="berryphase", description="Berry-phase circuit simulations and scans.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", metavar="PATH", help="TOML file; flags override its values")
        p.add_argument("--seed", type=int)
        p.add_argument("--shots", type=int)
        p.add_argument("--steps", type=int, help="loop steps N")
        p.add_argument("--trotter", type=int, help="Trotter slices per step")
        p.add_argument("--readout", choices=READOUTS)
        p.add_argument("--out", metavar="PATH", help="CSV path (a .json sidecar is written next to it)")
    return parser


def _summary(result) -> str:
    lines = [f"{result.experiment}: {len(result.rows)} row(s)"]
    flagged = [r for r in result.rows if r.get("flag")]
    if flagged:
        lines.append("flagged rows: " + ", ".join(f"{r['index']}={r['flag']}" for r in flagged))
    for key, val in result.summary.items():
        lines.append(f"{key}: {val}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {
        "seed": args.seed,
        "shots": args.shots,
        "readout": args.readout,
        "output_path": args.out,
        "schedule.n_steps": args.steps,
        "schedule.n_trotter": args.trotter,
    }
    try:
        cfg = load_config(args.command, args.config, overrides)
        result = run_scan(cfg)
    except BerryPhaseError as exc:
        print(f"berryphase: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    if cfg.output_path:
        csv_path, meta_path = write_outputs(result, cfg.output_path)
        print(f"wrote {csv_path} and {meta_path}", file=sys.stderr)
    else:
        sys.stdout.write(to_csv(result))
    print(_summary(result), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
