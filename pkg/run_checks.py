#!/usr/bin/env python3
"""Run formatting, linting, and tests in sequence.

``--fast`` skips the slow command-level test modules.
"""

from __future__ import annotations

import subprocess
import sys
from typing import Iterable

SOURCES = ["main.py", "run_checks.py", "src", "tests"]
SLOW_TESTS = ["tests/test_commands.py", "tests/test_main.py", "tests/test_acceptance.py"]


def run_step(description: str, args: list[str], ok_codes: Iterable[int] = (0,)) -> None:
    print(f"\n=== {description} ===", flush=True)
    result = subprocess.run(args)
    if result.returncode not in ok_codes:
        print(f"{description} failed with exit code {result.returncode}.")
        sys.exit(result.returncode)


def main(argv: list[str]) -> None:
    pytest_args = ["pytest", "tests"]
    if "--fast" in argv:
        pytest_args += [f"--ignore={path}" for path in SLOW_TESTS]
    run_step("Formatting (black)", ["black", *SOURCES])
    run_step("Linting (ruff)", ["ruff", "check", *SOURCES])
    run_step("Testing (pytest)", pytest_args, ok_codes=(0, 5))
    print("\nAll checks passed.")


if __name__ == "__main__":
    main(sys.argv[1:])
