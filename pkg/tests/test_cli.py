import csv
import json
import os

import pytest

from vlcsim.cli import main


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestSweep:
    def test_row_count_and_schema(self, tmp_path):
        out = tmp_path / "run"
        rc = main(["sweep", "--x", "1", "--y-range", "1:3", "--step", "1",
                   "--order", "1", "--out", str(out)])
        assert rc == 0
        rows = read_rows(out / "metrics.csv")
        assert len(rows) == 3
        assert set(rows[0]) == {
            "x", "y", "z", "selected_id", "cgh", "Pr_W", "PL_dB", "mu_s",
            "D_s", "BW_Hz", "BW_saturated", "rate_bps", "gain_dB"}

    def test_cgh_doubles_rows_and_gain_nonnegative(self, tmp_path):
        out = tmp_path / "run"
        rc = main(["sweep", "--x", "1", "--y-range", "1:2", "--step", "1",
                   "--order", "1", "--cgh", "--out", str(out)])
        assert rc == 0
        rows = read_rows(out / "metrics.csv")
        assert len(rows) == 4
        for row in rows:
            if row["cgh"] == "1":
                # receiver inside the selected source's cell
                assert float(row["gain_dB"]) >= 0.0

    def test_order0_delay_spread_is_one_cluster(self, tmp_path):
        out = tmp_path / "run"
        main(["sweep", "--x", "1,2", "--y-range", "1:7", "--step", "1",
              "--order", "0", "--out", str(out)])
        for row in read_rows(out / "metrics.csv"):
            # a single LOS cluster: spread limited to the emitter-grid skew
            assert float(row["D_s"]) < 5e-11

    def test_worker_count_does_not_change_output(self, tmp_path):
        outs = []
        for workers in ("1", "3"):
            out = tmp_path / f"run{workers}"
            main(["sweep", "--x", "1,2", "--y-range", "1:3", "--step", "1",
                  "--order", "1", "--workers", workers, "--out", str(out)])
            outs.append((out / "metrics.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_manifest_written(self, tmp_path):
        out = tmp_path / "run"
        main(["sweep", "--x", "1", "--y-range", "1:1", "--step", "1",
              "--order", "0", "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "sweep"
        assert manifest["order"] == 0

    def test_position_outside_room(self, tmp_path):
        rc = main(["sweep", "--x", "9", "--y-range", "1:2", "--step", "1",
                   "--out", str(tmp_path / "run")])
        assert rc == 2

    def test_bad_scene_exits_2(self, tmp_path):
        rc = main(["sweep", "--scene", "nope", "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_bad_step_exits_2(self, tmp_path):
        rc = main(["sweep", "--step", "0", "--out", str(tmp_path / "o")])
        assert rc == 2


class TestIllum:
    def test_report_rows(self, tmp_path):
        out = tmp_path / "illum"
        rc = main(["illum", "--fractions", "0.2,0.3", "--out", str(out)])
        assert rc == 0
        rows = read_rows(out / "compliance.csv")
        assert [r["fraction"] for r in rows] == ["0.000", "0.200", "0.300"]
        assert float(rows[0]["min_lux"]) == pytest.approx(338.0, rel=1e-3)

    def test_empty_fraction_list_baseline_only(self, tmp_path):
        out = tmp_path / "illum"
        rc = main(["illum", "--fractions", "", "--out", str(out)])
        assert rc == 0
        assert len(read_rows(out / "compliance.csv")) == 1

    def test_bad_fraction_exits_2(self, tmp_path):
        rc = main(["illum", "--fractions", "1.4", "--out", str(tmp_path / "o")])
        assert rc == 2


class TestCghDesign:
    def test_artifacts_and_determinism(self, tmp_path):
        args = ["cgh-design", "--seed", "9", "--moves", "60", "--t0", "0.01"]
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = main(args + ["--out", str(out)])
            assert rc == 0
            assert (out / "hologram.csv").exists()
            assert (out / "farfield.csv").exists()
            trace = (out / "cf_trace.csv").read_text().splitlines()
            assert trace[0] == "temperature_index,best_cf"
            first = float(trace[1].split(",")[1])
            last = float(trace[-1].split(",")[1])
            assert last <= first
            outs.append((out / "hologram.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_manifest_reports_efficiency(self, tmp_path):
        out = tmp_path / "d"
        main(["cgh-design", "--seed", "1", "--moves", "60", "--t0", "0.01",
              "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert 0.0 < manifest["in_window_efficiency"] <= 1.0


class TestIr:
    def test_dump(self, tmp_path):
        out = tmp_path / "ir"
        rc = main(["ir", "--x", "1", "--y", "1", "--lum-id", "1",
                   "--order", "1", "--out", str(out)])
        assert rc == 0
        lines = (out / "ir.csv").read_text().splitlines()
        assert lines[0] == "t_seconds,power_watts"
        assert len(lines) > 1

    def test_unknown_luminaire_exits_2(self, tmp_path):
        rc = main(["ir", "--x", "1", "--y", "1", "--lum-id", "42",
                   "--order", "0", "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_no_received_power_exits_3(self, tmp_path):
        # LOS from the far-corner luminaire is outside the FOV; order 0
        # leaves an all-zero response, a numeric failure
        rc = main(["ir", "--x", "1", "--y", "1", "--lum-id", "8",
                   "--order", "0", "--out", str(tmp_path / "o")])
        assert rc == 3
