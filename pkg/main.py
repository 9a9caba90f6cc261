"""
Command-line entry point.

    python main.py sweep        --config configs/gaas_superlattice.json --out sweep.csv
    python main.py resonances   --n 6
    python main.py wavefunction --j 3 --out psi_j3.csv
    python main.py verify       --config configs/minimal_n2.json
"""
import argparse
import sys
from typing import List, Optional

from configService import SweepConfig, load_config, parse_config
from sweepService import (
    RESONANCE_COLUMNS,
    SWEEP_COLUMNS,
    WAVEFUNCTION_COLUMNS,
    SweepService,
    write_csv,
)
from tunnelingErrors import ConfigNotFoundError, TunnelingError
from verificationService import run_verify

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Resonant tunneling times and velocities of finite superlattices",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add_common(sub: argparse.ArgumentParser):
        sub.add_argument("--config", default=None, help="JSON run configuration (GaAs/AlGaAs defaults if omitted)")
        sub.add_argument("--n", type=int, default=None, help="number of periods")
        sub.add_argument("--band", type=int, default=None, help="miniband index, from 1")
        sub.add_argument("--workers", type=int, default=None, help="worker threads")
        sub.add_argument("--quiet", action="store_true", help="suppress status lines")

    sweep = subparsers.add_parser("sweep", help="band sweep table")
    add_common(sweep)
    sweep.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    sweep.add_argument("--parameterize", choices=["energy", "q"], default=None)

    resonances = subparsers.add_parser("resonances", help="table of the n-1 resonances")
    add_common(resonances)
    resonances.add_argument("--out", default=None, help="CSV path (stdout if omitted)")

    wavefunction = subparsers.add_parser("wavefunction", help="Psi and u_q at one resonance")
    add_common(wavefunction)
    wavefunction.add_argument("--j", type=int, required=True, help="resonance index in 1..n-1")
    wavefunction.add_argument("--out", default=None, help="CSV path (stdout if omitted)")

    verify = subparsers.add_parser("verify", help="run the numerical self-checks")
    add_common(verify)
    return parser


def resolve_config(args: argparse.Namespace) -> SweepConfig:
    """Config file (or defaults) with command-line overrides applied and re-validated."""
    config = load_config(args.config)
    data = config.model_dump()
    if args.n is not None:
        data["n"] = args.n
    if args.band is not None:
        data["band_index"] = args.band
    if args.workers is not None:
        data["workers"] = args.workers
    if getattr(args, "parameterize", None) is not None:
        data["sweep"]["parameterize"] = args.parameterize
    return parse_config(data, args.config or "<defaults>")


def _status(verbose: bool, message: str):
    # status goes to stderr so CSV on stdout stays clean
    if verbose:
        print(message, file=sys.stderr)


def run(args: argparse.Namespace) -> int:
    verbose = not args.quiet
    config = resolve_config(args)
    if args.command == "verify":
        report = run_verify(config, verbose=verbose)
        return EXIT_OK if report.passed else EXIT_VERIFY_FAILED

    service = SweepService(config, verbose=verbose)
    if args.command == "sweep":
        rows, header, default_out = service.run_sweep(), SWEEP_COLUMNS, config.output.sweep_csv
    elif args.command == "resonances":
        rows, header, default_out = service.resonance_table(), RESONANCE_COLUMNS, config.output.resonances_csv
    else:
        rows, header = service.emit_wavefunction(args.j), WAVEFUNCTION_COLUMNS
        default_out = config.output.wavefunction_csv
    path = write_csv(rows, header, args.out or default_out)
    _status(verbose, f"✅ Wrote {len(rows)} rows to {path or 'stdout'}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (TunnelingError, ConfigNotFoundError, FileNotFoundError) as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
