"""Config parsing, repetition control, emission, report, and CLI."""

import json
import math

import pytest

from shmembench.harness import (ConfigError, ResultRow, emit_results,
                                ground_truth_report, parse_config,
                                parse_duration, run_config, run_until_stable)
from shmembench.harness.cli import main as cli_main

BASE_CONFIG = """
[network.intra]
o_s = 100ns
o_r = 100ns
L = 1us
g = 100ns
G = 1ns

[run]
npes = 4
seed = 7

[measurement.get_sweep]
type = blocking_get
nbytes = 8, 1024
iters = 16
"""


class TestParseDuration:
    @pytest.mark.parametrize("text,value", [
        ("1us", 1e-6), ("100ns", 1e-7), ("2ms", 2e-3), ("1.5s", 1.5),
        ("3e-7", 3e-7), ("0", 0.0),
    ])
    def test_unit_table(self, text, value):
        assert parse_duration(text) == pytest.approx(value, rel=1e-15)

    def test_garbage_rejected(self):
        with pytest.raises(ConfigError):
            parse_duration("fast")


class TestParseConfig:
    def test_round_trip_of_semantic_content(self):
        cfg = parse_config(BASE_CONFIG)
        assert cfg.npes == 4 and cfg.seed == 7
        net = cfg.networks["intra"]
        assert net.o_s == pytest.approx(1e-7, rel=1e-15)
        assert net.L == 1e-6 and net.G == 1e-9
        (spec,) = cfg.measurements
        assert spec.type == "blocking_get"
        assert spec.nbytes == [8, 1024]
        assert spec.network == "intra"

    def test_empty_text_is_an_error(self):
        with pytest.raises(ConfigError, match="no measurements"):
            parse_config("")

    def test_duplicate_section_named(self):
        text = BASE_CONFIG + "\n[network.intra]\nL = 2us\n"
        with pytest.raises(ConfigError, match=r"duplicate section \[network.intra\]"):
            parse_config(text)

    def test_unknown_key_reports_line_number(self):
        text = "[network.n]\nbandwidth = 1us\n[measurement.m]\ntype = quiet\n"
        with pytest.raises(ConfigError, match="line 2.*bandwidth"):
            parse_config(text)

    def test_invalid_enum_value(self):
        text = BASE_CONFIG.replace("type = blocking_get", "type = warp_speed")
        with pytest.raises(ConfigError, match="warp_speed"):
            parse_config(text)

    def test_descending_nbytes_rejected(self):
        text = BASE_CONFIG.replace("nbytes = 8, 1024", "nbytes = 1024, 8")
        with pytest.raises(ConfigError, match="ascending"):
            parse_config(text)

    def test_measurement_requires_network_when_ambiguous(self):
        text = BASE_CONFIG + "\n[network.inter]\nL = 10us\n"
        with pytest.raises(ConfigError, match="network preset required"):
            parse_config(text)


class TestRunUntilStable:
    def test_deterministic_thunk_stops_at_two(self):
        mean, sigma, reps = run_until_stable(lambda: 1.5, 0.05, 32)
        assert (mean, sigma, reps) == (1.5, 0.0, 2)

    def test_alternating_thunk_exhausts_reps(self):
        values = iter([1.0, 2.0] * 50)
        mean, sigma, reps = run_until_stable(lambda: next(values), 0.01, 8)
        assert reps == 8
        assert mean == pytest.approx(1.5)
        # unbiased sigma of the 1/2 alternation
        assert sigma == pytest.approx(math.sqrt(2.0 / 7.0))

    def test_infinite_threshold_stops_at_two(self):
        values = iter([1.0, 100.0, 1.0])
        _, _, reps = run_until_stable(lambda: next(values), math.inf, 32)
        assert reps == 2

    def test_zero_mean_uses_absolute_sigma(self):
        values = iter([-1.0, 1.0] * 50)
        _, sigma, reps = run_until_stable(lambda: next(values), 0.05, 6)
        assert reps == 6 and sigma > 0
        _, sigma, reps = run_until_stable(lambda: 0.0, 0.05, 6)
        assert reps == 2 and sigma == 0.0

    def test_max_reps_floor(self):
        with pytest.raises(ValueError):
            run_until_stable(lambda: 1.0, 0.05, 1)


def _rows():
    return [ResultRow("m", 8, "binomial", 1.25e-6, 0.0, 2, 1.25e-6, 0.0)]


class TestEmission:
    def test_csv_header_and_field_order(self):
        text = emit_results(_rows(), "csv")
        lines = text.splitlines()
        assert lines[0] == ("name,nbytes,algo,mean,stddev,samples,"
                            "ground_truth,relative_error")
        assert lines[1].startswith("m,8,binomial,1.25e-06,0,2,")
        assert len(lines) == 2

    def test_jsonl_round_trip(self):
        row = ResultRow("m", 8, "binomial", 1.0 / 3.0, 1e-9, 3,
                        0.333333333333, 1e-12)
        obj = json.loads(emit_results([row], "jsonl"))
        assert obj["mean"] == float(f"{row.mean:.12g}")
        assert obj["samples"] == 3 and obj["name"] == "m"

    def test_no_rows_rejected(self):
        with pytest.raises(ValueError):
            emit_results([], "csv")


class TestReport:
    def test_all_exact_all_pass(self):
        text, failures = ground_truth_report(_rows(), tolerance=0.02)
        assert failures == 0
        assert text.count("PASS") == 1 and "1 passed, 0 failed" in text

    def test_biased_low_passes_only_below_reference(self):
        low = ResultRow("m", 8, "x", 0.5, 0.0, 2, 1.0, 0.5, expect="biased_low")
        high = ResultRow("m", 8, "x", 1.5, 0.0, 2, 1.0, 0.5, expect="biased_low")
        assert ground_truth_report([low])[1] == 0
        assert ground_truth_report([high])[1] == 1

    def test_out_of_tolerance_fails(self):
        bad = ResultRow("m", 8, "x", 1.1, 0.0, 2, 1.0, 0.1)
        text, failures = ground_truth_report([bad], tolerance=0.02)
        assert failures == 1 and "FAIL" in text

    def test_missing_reference_skipped(self):
        row = ResultRow("m", 8, "x", 1.0, 0.0, 2, math.nan, math.nan)
        text, failures = ground_truth_report([row])
        assert failures == 0 and "SKIP" in text


class TestRunner:
    def test_rows_follow_config_order_and_sweep(self):
        cfg = parse_config(BASE_CONFIG)
        rows = run_config(cfg)
        assert [(r.name, r.nbytes) for r in rows] == [
            ("get_sweep", 8), ("get_sweep", 1024)]
        for r in rows:
            assert r.relative_error < 1e-12


class TestCli:
    @pytest.fixture()
    def config_path(self, tmp_path):
        path = tmp_path / "bench.conf"
        path.write_text(BASE_CONFIG)
        return path

    def test_same_seed_byte_identical_output(self, config_path, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli_main(["--config", str(config_path), "--seed", "3",
                         "--output", str(out1)]) == 0
        assert cli_main(["--config", str(config_path), "--seed", "3",
                         "--output", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_report_failure_exit_code(self, tmp_path, capsys):
        # naive broadcast timing without the biased_low marker must FAIL
        text = BASE_CONFIG + "\n[measurement.naive]\ntype = bcast_naive\nnbytes = 1024\nnpes = 8\n"
        path = tmp_path / "bad.conf"
        path.write_text(text)
        assert cli_main(["--config", str(path), "--report"]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "broken.conf"
        path.write_text("[run]\nnpes = maybe\n")
        assert cli_main(["--config", str(path)]) == 2

    def test_missing_config_exit_code(self, capsys):
        assert cli_main([]) == 2
        assert cli_main(["--config", "/nonexistent/x.conf"]) == 2

    def test_list_measurements(self, capsys):
        assert cli_main(["--list"]) == 0
        out = capsys.readouterr().out
        assert "blocking_get" in out and "bcast_sk" in out
