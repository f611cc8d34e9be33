from __future__ import annotations

import json
import os
import shutil
from pathlib import Path

import pytest

from driftq.cli import main
from driftq.store import list_versions

CONFIG_YAML = """\
engine:
  window_len: 40
  tau: 0.05
  beta: 5
  reference_sample_size: 300
  train_windows: 120
  gbt:
    n_trees: 25
    max_depth: 3
  dev_oracle:
    threshold: 0.5
stream:
  n_windows: 160
  window_len: 40
  seed: 31
"""


@pytest.fixture(scope="module")
def env(tmp_path_factory) -> dict[str, str]:
    """One generated stream and one developed store shared by the module."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "driftq.yaml"
    config.write_text(CONFIG_YAML, encoding="utf-8")
    stream = root / "stream.csv"
    store = root / "store"
    assert main(["gen", "--config", str(config), "--out", str(stream)]) == 0
    assert (
        main(
            [
                "develop",
                "--config",
                str(config),
                "--in",
                str(stream),
                "--store",
                str(store),
            ]
        )
        == 0
    )
    return {"root": str(root), "config": str(config), "stream": str(stream), "store": str(store)}


def fresh_store(env: dict[str, str], tmp_path: Path) -> str:
    copy = tmp_path / "store"
    shutil.copytree(env["store"], copy)
    return str(copy)


class TestGen:
    def test_writes_csv_with_header(self, env) -> None:
        lines = Path(env["stream"]).read_text().splitlines()
        assert lines[0] == "timestamp,value"
        assert len(lines) == 1 + 160 * 40

    def test_seed_override_changes_the_stream(self, env, tmp_path) -> None:
        out = tmp_path / "other.csv"
        assert main(["gen", "--config", env["config"], "--out", str(out), "--seed", "99"]) == 0
        assert out.read_text() != Path(env["stream"]).read_text()

    def test_stdout_target(self, env, capsys) -> None:
        assert main(["gen", "--config", env["config"], "--out", "-"]) == 0
        captured = capsys.readouterr()
        assert captured.out.startswith("timestamp,value\n")

    def test_requires_out(self, env, capsys) -> None:
        assert main(["gen", "--config", env["config"]]) == 1
        assert "requires --out" in capsys.readouterr().err


class TestMutate:
    def test_writes_stream_and_ledger(self, env, tmp_path, capsys) -> None:
        out = tmp_path / "mutated.csv"
        ledger = tmp_path / "faults.jsonl"
        code = main(
            [
                "mutate",
                "--config",
                env["config"],
                "--in",
                env["stream"],
                "--out",
                str(out),
                "--ledger",
                str(ledger),
            ]
        )
        assert code == 0
        assert out.exists()
        records = [json.loads(ln) for ln in ledger.read_text().splitlines()]
        assert records
        assert all({"window_id", "kind", "params"} == set(r) for r in records)
        assert f"mutated {len(records)}" in capsys.readouterr().out

    def test_default_ledger_path_is_derived_from_out(self, env, tmp_path) -> None:
        out = tmp_path / "mut.csv"
        assert main(["mutate", "--config", env["config"], "--in", env["stream"], "--out", str(out)]) == 0
        assert (tmp_path / "mut.csv.faults.jsonl").exists()


class TestDevelop:
    def test_store_layout_and_summary(self, env) -> None:
        assert list_versions(env["store"]) == [1]
        assert (Path(env["store"]) / "LATEST").read_text().strip() == "1"

    def test_summary_json_on_stdout(self, env, tmp_path, capsys) -> None:
        store = tmp_path / "store2"
        code = main(
            ["develop", "--config", env["config"], "--in", env["stream"], "--store", str(store)]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["version"] == 1
        assert payload["oracle_passed"] is True
        assert payload["training_windows"] == 160
        assert payload["store_path"] == os.path.join(str(store), "v001")

    def test_requires_store(self, env, capsys) -> None:
        assert main(["develop", "--config", env["config"], "--in", env["stream"]]) == 1
        assert "requires --store" in capsys.readouterr().err

    def test_too_short_stream_is_a_runtime_failure(self, env, tmp_path, capsys) -> None:
        short = tmp_path / "short.csv"
        lines = Path(env["stream"]).read_text().splitlines()[: 1 + 40 * 5]
        short.write_text("\n".join(lines) + "\n", encoding="utf-8")
        code = main(
            ["develop", "--config", env["config"], "--in", str(short), "--store", str(tmp_path / "s")]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestRun:
    @pytest.mark.parametrize("mode", ["standard", "static", "adaptive"])
    def test_scores_every_window_as_jsonl(self, env, tmp_path, mode, capsys) -> None:
        out = tmp_path / f"{mode}.jsonl"
        code = main(
            [
                "run",
                "--config",
                env["config"],
                "--mode",
                mode,
                "--in",
                env["stream"],
                "--store",
                fresh_store(env, tmp_path),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        rows = [json.loads(ln) for ln in out.read_text().splitlines()]
        assert len(rows) == 160
        for row in rows:
            assert set(row) == {
                "window_id",
                "score",
                "provenance",
                "model_version",
                "drifted",
                "p_value",
            }
        err = capsys.readouterr().err
        assert f"scored 160 windows in {mode} mode" in err

    def test_mode_is_validated(self, env, tmp_path, capsys) -> None:
        code = main(
            [
                "run",
                "--config",
                env["config"],
                "--mode",
                "warp",
                "--in",
                env["stream"],
                "--store",
                env["store"],
            ]
        )
        assert code == 1
        assert "invalid choice" in capsys.readouterr().err

    def test_missing_store_is_a_runtime_failure(self, env, tmp_path, capsys) -> None:
        code = main(
            [
                "run",
                "--config",
                env["config"],
                "--mode",
                "standard",
                "--in",
                env["stream"],
                "--store",
                str(tmp_path / "absent"),
            ]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestBench:
    def test_writes_per_mode_reports_and_comparison(self, env, tmp_path) -> None:
        out = tmp_path / "bench"
        assert main(["bench", "--config", env["config"], "--out", str(out)]) == 0
        for mode in ("adaptive", "static", "standard"):
            assert (out / f"{mode}.csv").exists()
            assert (out / f"{mode}.jsonl").exists()
            assert (out / f"{mode}.summary.json").exists()
        comparison = json.loads((out / "comparison.json").read_text())
        assert set(comparison) == {"adaptive", "static", "standard"}
        assert "speedup_vs_standard" in comparison["standard"]

    def test_requires_out(self, env, capsys) -> None:
        assert main(["bench", "--config", env["config"]]) == 1
        assert "requires --out" in capsys.readouterr().err


class TestSweep:
    def test_writes_counts_per_tau(self, env, tmp_path) -> None:
        out = tmp_path / "sweep.json"
        code = main(
            ["sweep", "--config", env["config"], "--taus", "0.05,0.2", "--out", str(out)]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["taus"] == [0.05, 0.2]
        assert set(payload["counts"]) == {"0.05", "0.2"}
        assert payload["counts"]["0.05"] <= payload["counts"]["0.2"]

    def test_stdout_when_no_out(self, env, capsys) -> None:
        assert main(["sweep", "--config", env["config"], "--taus", "0.1"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["taus"] == [0.1]

    def test_bad_taus_is_a_config_error(self, env, capsys) -> None:
        assert main(["sweep", "--config", env["config"], "--taus", "0.1,banana"]) == 1
        assert "--taus" in capsys.readouterr().err


class TestTopLevel:
    def test_no_command_is_a_config_error(self, capsys) -> None:
        assert main([]) == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_command_is_a_config_error(self, capsys) -> None:
        assert main(["frobnicate"]) == 1

    def test_missing_config_file_is_a_config_error(self, tmp_path, capsys) -> None:
        code = main(["gen", "--config", str(tmp_path / "nope.yaml"), "--out", "-"])
        assert code == 1
        assert "not found" in capsys.readouterr().err
