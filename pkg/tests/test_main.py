from __future__ import annotations

import json
from pathlib import Path

import pytest

import main
from task_conformal.errors import EXIT_CONFIG, EXIT_IO, EXIT_OK
from task_conformal.testbed.dataset_io import round_file_name


def _flags(tmp_path: Path) -> list[str]:
    return [
        "--n-samples",
        "48",
        "--samples-p",
        "3",
        "--trials",
        "5",
        "--p-sweep",
        "",
        "--rounds",
        "1",
        "--out",
        str(tmp_path / "out"),
        "--dataset",
        str(tmp_path / "out" / "dataset"),
    ]


@pytest.fixture(autouse=True)
def _no_dotenv(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setattr(main, "load_dotenv", lambda path: None)


def test_overrides_from_args() -> None:
    args = main.parse_args(["montecarlo", "--alpha", "0.2", "--method", "ar,cqr"])
    assert main.overrides_from_args(args) == {"alpha": 0.2, "methods": "ar,cqr"}


def test_generate_then_montecarlo(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    assert main.main(["generate", *_flags(tmp_path)]) == EXIT_OK
    assert main.main(["montecarlo", "--method", "ar", *_flags(tmp_path)]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "mc_summary.tsv" in printed


def test_bad_alpha_exits_with_config_code(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    code = main.main(["montecarlo", "--alpha", "1.5", *_flags(tmp_path)])
    assert code == EXIT_CONFIG
    assert capsys.readouterr().err.startswith("error:")


def test_missing_dataset_exits_with_io_code(tmp_path: Path) -> None:
    flags = _flags(tmp_path)
    assert main.main(["multiround", *flags]) == EXIT_IO


def test_lwr_with_one_sample_exits_with_config_code(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    flags = [*_flags(tmp_path), "--samples-p", "1"]
    assert main.main(["generate", *flags]) == EXIT_OK
    assert main.main(["montecarlo", "--method", "lwr", *flags]) == EXIT_CONFIG
    assert "LWR needs a positive spread" in capsys.readouterr().err


def test_unparsable_round_field_exits_with_io_code(tmp_path: Path) -> None:
    flags = _flags(tmp_path)
    assert main.main(["generate", *flags]) == EXIT_OK
    path = tmp_path / "out" / "dataset" / round_file_name(1)
    lines = path.read_text(encoding="utf-8").splitlines()
    record = json.loads(lines[0])
    record["round"] = "x"
    lines[0] = json.dumps(record)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert main.main(["montecarlo", "--method", "ar", *flags]) == EXIT_IO
