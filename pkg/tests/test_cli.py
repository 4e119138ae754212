"""
Test suite for the command-line front end
"""

import json

import pytest

from qsba.cli import EXIT_INVALID, EXIT_KEY_EXHAUSTED, EXIT_OK, main


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


class TestRun:
    def test_honest_preset(self, tmp_path, capsys):
        assert main(["run", "--scenario", "five-node-honest", "--out", str(tmp_path)]) == EXIT_OK
        summary = _json_out(capsys)
        assert summary["status"] == "completed"
        assert summary["condition_I"] and summary["condition_II"]
        assert (tmp_path / "run_report.json").is_file()
        assert (tmp_path / "transcript.jsonl").is_file()

    def test_equivocating_preset(self, tmp_path, capsys):
        assert main(["run", "--scenario", "five-node-equivocating", "--out", str(tmp_path)]) == EXIT_OK
        assert _json_out(capsys)["hash_ops"] == 28

    def test_seed_and_auth_cost_overrides(self, tmp_path, capsys):
        code = main(
            ["run", "--scenario", "five-node-honest", "--out", str(tmp_path), "--seed", "4", "--auth-cost", "costed"]
        )
        assert code == EXIT_OK
        report = json.loads((tmp_path / "run_report.json").read_text(encoding="utf-8"))
        assert report["seed"] == 4
        assert report["auth_cost"] == "costed"

    def test_invalid_scenario(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text("[protocol]\nn = 5\nm = 9\nl = 16\n\n[message]\nhex = \"00\"\n", encoding="utf-8")
        assert main(["run", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_INVALID
        assert "invalid scenario" in capsys.readouterr().err

    def test_unknown_preset(self, tmp_path):
        assert main(["run", "--scenario", "no-such-preset", "--out", str(tmp_path)]) == EXIT_INVALID

    def test_missing_message_file(self, tmp_path, capsys):
        path = tmp_path / "s.toml"
        path.write_text(
            "[protocol]\nn = 4\nm = 1\nl = 16\n\n[message]\nfile = \"does-not-exist.bin\"\n", encoding="utf-8"
        )
        assert main(["run", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_INVALID
        err = capsys.readouterr().err
        assert "invalid scenario" in err
        assert "message.file" in err

    def test_key_exhaustion(self, tmp_path, capsys):
        path = tmp_path / "tiny.toml"
        path.write_text(
            "[protocol]\nn = 4\nm = 1\nl = 16\n\n[message]\nhex = \"00\"\n\n"
            "[pools]\ncommander_lieutenant = 10\nlieutenant_lieutenant = 10\n",
            encoding="utf-8",
        )
        assert main(["run", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_KEY_EXHAUSTED
        assert _json_out(capsys)["status"] == "aborted-key-exhausted"


class TestCompare:
    def test_short_flags_are_not_read_as_log_options(self, capsys):
        assert main(["compare", "--n", "4", "--m", "1", "--l", "16"]) == EXIT_OK
        assert "ambiguous" not in capsys.readouterr().err

    def test_global_options_must_be_spelled_out(self):
        with pytest.raises(SystemExit):
            main(["--log-lev", "INFO", "compare", "--n", "4", "--m", "1", "--l", "16"])

    def test_json(self, capsys):
        assert main(["compare", "--n", "5", "--m", "2", "--l", "54"]) == EXIT_OK
        payload = _json_out(capsys)
        assert payload["advantage"] == [20, 56, 48]
        assert payload["ordering_holds"] is True

    def test_csv_to_file(self, tmp_path):
        code = main(["compare", "--n", "4", "--m", "1", "--l", "16", "--format", "csv", "--out", str(tmp_path)])
        assert code == EXIT_OK
        text = (tmp_path / "compare.csv").read_text(encoding="utf-8")
        assert text.startswith("section,")

    def test_invalid_params(self, capsys):
        assert main(["compare", "--n", "4", "--m", "3", "--l", "16"]) == EXIT_INVALID


class TestAttack:
    def test_small_run(self, capsys):
        assert main(["attack", "--l", "8", "--message-bits", "16", "--trials", "100"]) == EXIT_OK
        payload = _json_out(capsys)
        assert payload["trials"] == 100
        assert payload["within_bound"] is True

    def test_bad_window(self):
        assert main(["attack", "--message-bits", "16", "--trials", "5", "--sparse-window", "64"]) == EXIT_INVALID


class TestBudget:
    def test_json(self, capsys):
        assert main(["budget", "--scenario", "five-node-deployment"]) == EXIT_OK
        assert _json_out(capsys)["rounds"] == 103

    def test_csv(self, capsys):
        assert main(["budget", "--scenario", "five-node-deployment", "--format", "csv"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "link_class,pool_bits,bits_per_round,max_rounds,binding"
        assert len(lines) == 3


class TestSweep:
    def test_small_sweep(self, tmp_path, capsys):
        assert main(["sweep", "--n", "4", "--m", "1", "--out", str(tmp_path)]) == EXIT_OK
        summary = _json_out(capsys)
        assert summary["violations"] == 0
        assert summary["runs"] == 4 * 5
        assert (tmp_path / "sweep.csv").is_file()

    def test_bad_list(self):
        with pytest.raises(SystemExit):
            main(["sweep", "--n", "four"])
