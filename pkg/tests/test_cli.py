import json
from pathlib import Path

import pytest

from triwell.cli import main


def run(args):
    return main([str(a) for a in args])


def read_files(directory: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def csv_rows(path: Path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestChannelCommand:
    def test_outputs_and_gram_diagonal(self, tmp_path):
        out = tmp_path / "chan"
        assert run(["channel", "--alpha", "2", "--beta", "2", "--kappa", "1",
                    "--e0", "1", "--cutoff", "26", "--out", out]) == 0
        names = {p.name for p in out.iterdir()}
        assert names == {"channel_state.json", "gram.csv", "entanglement.json",
                         "manifest.json"}
        for row in csv_rows(out / "gram.csv"):
            if row["j_row"] == row["j_col"]:
                assert abs(float(row["magnitude"]) - 1.0) < 1e-8
        payload = json.loads((out / "entanglement.json").read_text())
        assert 0.99 <= payload["entropy_bits"] <= 1.0

    def test_rerun_byte_identical(self, tmp_path):
        args = ["channel", "--alpha", "1.5", "--beta", "1.5", "--cutoff", "24",
                "--kappa", "1", "--e0", "2"]
        first, second = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--out", first]) == 0
        assert run(args + ["--out", second]) == 0
        assert read_files(first) == read_files(second)

    def test_no_family_index_is_exit_3(self, tmp_path):
        assert run(["channel", "--e0", "1.5", "--kappa", "1",
                    "--out", tmp_path / "x"]) == 3

    def test_cutoff_too_small_is_exit_4(self, tmp_path):
        assert run(["channel", "--alpha", "2", "--beta", "2", "--cutoff", "8",
                    "--out", tmp_path / "x"]) == 4

    def test_bad_value_is_exit_2(self, tmp_path):
        assert run(["channel", "--alpha", "fish", "--out", tmp_path / "x"]) == 2


class TestConfigFile:
    def test_section_and_flag_override(self, tmp_path):
        config = tmp_path / "run.ini"
        config.write_text("[channel]\nalpha = 1.0\nbeta = 1.0\ncutoff = 20\n")
        out = tmp_path / "o"
        assert run(["channel", "--config", config, "--alpha", "1.5",
                    "--cutoff", "24", "--out", out]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["alpha"] == [1.5, 0.0]  # flag beat the file
        assert manifest["config"]["beta"] == [1.0, 0.0]
        assert manifest["config"]["cutoff"] == 24

    def test_unknown_key_rejected(self, tmp_path):
        config = tmp_path / "run.ini"
        config.write_text("[channel]\nwiggle = 3\n")
        assert run(["channel", "--config", config, "--out", tmp_path / "o"]) == 2

    def test_missing_file_rejected(self, tmp_path):
        assert run(["channel", "--config", tmp_path / "nope.ini",
                    "--out", tmp_path / "o"]) == 2

    def test_manifest_carries_hash_and_versions(self, tmp_path):
        out = tmp_path / "o"
        assert run(["channel", "--cutoff", "26", "--out", out]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest) >= {"config", "config_hash", "outputs", "versions"}
        assert manifest["versions"]["triwell"]


class TestTeleportCommand:
    def test_trial_table(self, tmp_path):
        out = tmp_path / "tp"
        assert run(["teleport", "--trials", "50", "--seed", "5", "--out", out,
                    "--p-d", "0.5"]) == 0
        rows = csv_rows(out / "trials.csv")
        assert len(rows) == 50
        branches = {int(r["branch"]) for r in rows}
        assert branches <= {0, 1, 2, 3}
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["summary"]["trials"] == 50

    def test_seeded_rerun_identical(self, tmp_path):
        args = ["teleport", "--trials", "40", "--seed", "9",
                "--aux-kind", "coherent", "--aux-parameter", "2"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(args + ["--out", a]) == 0
        assert run(args + ["--out", b]) == 0
        assert read_files(a) == read_files(b)


class TestSweeps:
    def test_parity_sweep_analytic_columns(self, tmp_path):
        out = tmp_path / "par"
        assert run(["parity-sweep", "--family", "squeezed_vacuum",
                    "--param-min", "0", "--param-max", "1", "--points", "3",
                    "--trials", "2000", "--cutoff", "60", "--out", out]) == 0
        rows = csv_rows(out / "parity.csv")
        assert all(float(r["p_even_analytic"]) == 1.0 for r in rows)
        assert all(float(r["p_even_mc"]) == 1.0 for r in rows)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["caveats"]

    def test_parity_sweep_parallel_equals_serial(self, tmp_path):
        args = ["parity-sweep", "--family", "coherent", "--param-min", "0",
                "--param-max", "4", "--points", "5", "--trials", "4000",
                "--cutoff", "34", "--seed", "3"]
        serial, parallel = tmp_path / "s", tmp_path / "p"
        assert run(args + ["--out", serial, "--jobs", "1"]) == 0
        assert run(args + ["--out", parallel, "--jobs", "2"]) == 0
        assert read_files(serial) == read_files(parallel)

    def test_efficiency_sweep_identity_row(self, tmp_path):
        out = tmp_path / "eff"
        assert run(["efficiency-sweep", "--r-points", "3", "--pd-points", "3",
                    "--out", out]) == 0
        for row in csv_rows(out / "efficiency.csv"):
            p_even, p_d = float(row["p_even"]), float(row["p_d"])
            expected = (1 + p_even + p_d + p_even * p_d) / 4
            assert abs(float(row["p_total"]) - expected) < 1e-12
            if p_d == 1.0:
                assert float(row["p_total"]) == pytest.approx(
                    (2 + 2 * p_even) / 4, abs=1e-12)

    def test_lattice_map_gap_column(self, tmp_path):
        base = ["lattice-map", "--theta-points", "11", "--zprime-points", "41"]
        with_field = tmp_path / "b1"
        without_field = tmp_path / "b0"
        assert run(base + ["--b-perp", "0.2", "--out", with_field]) == 0
        assert run(base + ["--b-perp", "0", "--out", without_field]) == 0
        gaps_with = [float(r["gap"]) for r in csv_rows(with_field / "lattice_map.csv")]
        gaps_without = [float(r["gap"]) for r in
                        csv_rows(without_field / "lattice_map.csv")]
        assert min(gaps_with) > 0
        assert min(gaps_without) < 1e-12

    def test_lattice_map_parallel_equals_serial(self, tmp_path):
        args = ["lattice-map", "--theta-points", "7", "--zprime-points", "11"]
        serial, parallel = tmp_path / "s", tmp_path / "p"
        assert run(args + ["--out", serial]) == 0
        assert run(args + ["--out", parallel, "--jobs", "2"]) == 0
        assert read_files(serial) == read_files(parallel)


class TestHomodyneCommand:
    def test_time_series(self, tmp_path):
        out = tmp_path / "hom"
        assert run(["homodyne", "--gamma", "1", "--beta", "2j", "--omega", "1",
                    "--steps", "9", "--cutoff", "30", "--out", out]) == 0
        rows = csv_rows(out / "sx_timeseries.csv")
        assert len(rows) == 9
        assert float(rows[0]["t"]) == 0.0
        # kappa = 0: full and first-order trajectories coincide
        for row in rows:
            assert abs(float(row["sx_full_re"]) - float(row["sx_pert_re"])) < 1e-8

    def test_gnuplot_stub(self, tmp_path):
        out = tmp_path / "hom"
        assert run(["homodyne", "--steps", "5", "--cutoff", "30",
                    "--gnuplot", "true", "--out", out]) == 0
        assert (out / "sx_timeseries.gp").exists()


class TestParsing:
    def test_missing_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2

    def test_unknown_choice_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["teleport", "--backend", "tomography", "--out", str(tmp_path)])
        assert info.value.code == 2


class TestFormats:
    def test_json_tables(self, tmp_path):
        out = tmp_path / "eff"
        assert run(["efficiency-sweep", "--r-points", "2", "--pd-points", "2",
                    "--format", "json", "--out", out]) == 0
        payload = json.loads((out / "efficiency.json").read_text())
        assert len(payload["rows"]) == 4
        assert {"r", "p_d", "p_even", "p_total"} <= set(payload["rows"][0])
