"""Make ``task_conformal`` and the root ``main`` module importable in tests."""

from __future__ import annotations

import os
import pathlib
import sys

import pytest

PROJECT_ROOT = pathlib.Path(__file__).resolve().parents[1]
SRC_ROOT = PROJECT_ROOT / "src"

for path in (PROJECT_ROOT, SRC_ROOT):
    as_str = str(path)
    if as_str not in sys.path:
        sys.path.insert(0, as_str)


@pytest.fixture(autouse=True)
def _isolated_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """Drop ``TASKCONF_*`` variables exported by the developer's shell."""

    for name in list(os.environ):
        if name.startswith("TASKCONF_"):
            monkeypatch.delenv(name)
