"""Command-line entry point for task-output conformal calibration experiments."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

ROOT_DIR = Path(__file__).resolve().parent
SRC_DIR = ROOT_DIR / "src"

if str(SRC_DIR) not in sys.path:
    sys.path.insert(0, str(SRC_DIR))

from task_conformal import commands  # noqa: E402
from task_conformal.acceptance import run_acceptance  # noqa: E402
from task_conformal.config_loader import (  # noqa: E402
    RunConfig,
    load_dotenv,
    resolve_config,
)
from task_conformal.errors import (  # noqa: E402
    EXIT_ACCEPTANCE,
    EXIT_OK,
    describe,
    exit_code_for,
)
from task_conformal.reporting import write_output  # noqa: E402

_LOGGER = logging.getLogger(__name__)

# flag dest -> flat configuration key
_FLAG_KEYS = {
    "seed": "seed",
    "alpha": "alpha",
    "method": "methods",
    "samples_p": "samples_p",
    "reduction": "reduction",
    "n_samples": "n_samples",
    "trials": "trials",
    "cal_fraction": "cal_fraction",
    "rounds": "rounds",
    "p_sweep": "p_sweep",
    "workers": "workers",
    "tau": "tau",
    "group_size": "group_size",
    "per_trial": "per_trial",
    "repeats": "repeats",
    "out": "out",
    "format": "format",
    "dataset": "dataset",
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--log-level",
        default="INFO",
        help="Python logging level (default: INFO)",
    )
    common.add_argument(
        "--config",
        type=Path,
        default=None,
        help="JSON run configuration (validated against config/schema.json)",
    )
    common.add_argument("--seed", type=int, help="Master seed for every random stream")
    common.add_argument("--alpha", type=float, help="Target error rate in (0, 1)")
    common.add_argument(
        "--method",
        help="Comma-separated methods among AR, LWR, CQR, or 'all'",
    )
    common.add_argument("--samples-p", type=int, help="Task samples per record")
    common.add_argument(
        "--reduction",
        choices=("first", "mean"),
        help="How AR turns task samples into one estimate",
    )
    common.add_argument("--n-samples", type=int, help="Dataset size")
    common.add_argument("--trials", type=int, help="Monte-Carlo partitions")
    common.add_argument(
        "--cal-fraction", type=float, help="Share of records used for calibration"
    )
    common.add_argument(
        "--rounds", help="Comma-separated rounds to validate, or 'all'"
    )
    common.add_argument(
        "--p-sweep", help="Comma-separated sample counts for the p sweep ('' disables)"
    )
    common.add_argument("--workers", type=int, help="Worker threads")
    common.add_argument("--tau", type=float, help="Multi-round length threshold")
    common.add_argument("--group-size", type=int, help="Samples per volume")
    common.add_argument(
        "--per-trial",
        action="store_const",
        const=True,
        default=None,
        help="Repeat the multi-round evaluation over random volume partitions",
    )
    common.add_argument("--repeats", type=int, help="Partitions for --per-trial")
    common.add_argument("--out", help="Output directory (default: results)")
    common.add_argument("--format", choices=("table", "json"), help="Output format")
    common.add_argument("--dataset", help="Dataset directory to write or read")
    return common


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    common = _common_parser()
    parser = argparse.ArgumentParser(description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser(
        "generate",
        parents=[common],
        help="Draw the synthetic dataset and write it to the dataset directory",
    )
    sub.add_parser(
        "montecarlo",
        parents=[common],
        help="Monte-Carlo coverage validation for each method and round",
    )
    sub.add_parser(
        "multiround",
        parents=[common],
        help="Evaluate the multi-round stopping protocol",
    )
    validate = sub.add_parser(
        "validate",
        parents=[common],
        help="Run the acceptance checks (exit code 4 on failure)",
    )
    validate.add_argument(
        "--checks",
        default=None,
        help="Comma-separated check numbers to run (default: all)",
    )
    return parser.parse_args(argv)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    return overrides


def _parse_checks(raw: Optional[str]) -> Optional[List[int]]:
    if raw is None:
        return None
    return [int(token) for token in raw.replace(",", " ").split()]


def cmd_validate(config: RunConfig, only: Optional[List[int]]) -> int:
    report = run_acceptance(config, only=only)
    path = write_output(
        commands.output_dir(config),
        "acceptance",
        fmt=config.output.format,
        meta=commands.base_meta(config, "validate"),
        rows=report.rows(),
    )
    for result in report.results:
        status = "PASS" if result.passed else "FAIL"
        print(f"[{status}] {result.number:2d} {result.name}: {result.detail}")
    print(f"Report written to {path}")
    return EXIT_OK if report.passed else EXIT_ACCEPTANCE


def run(args: argparse.Namespace) -> int:
    config = resolve_config(config_path=args.config, overrides=overrides_from_args(args))
    _LOGGER.info(
        "Running %s with seed=%d alpha=%g methods=%s",
        args.command,
        config.seed,
        config.conformal.alpha,
        ",".join(m.value for m in config.conformal.methods),
    )
    if args.command == "validate":
        return cmd_validate(config, _parse_checks(args.checks))
    handlers = {
        "generate": commands.cmd_generate,
        "montecarlo": commands.cmd_montecarlo,
        "multiround": commands.cmd_multiround,
    }
    for path in handlers[args.command](config):
        print(path)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    # An explicit shell export always wins over the project .env file.
    load_dotenv(ROOT_DIR / ".env")
    args = parse_args(argv)
    configure_logging(args.log_level)
    try:
        return run(args)
    except Exception as exc:  # noqa: BLE001
        code = exit_code_for(exc)
        _LOGGER.debug("Command failed", exc_info=True)
        print(f"error: {describe(exc)}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
