import math

import numpy as np
import pytest

from actinfo.cli import run


def read(path):
    return path.read_text()


class TestArtifacts:
    def test_figure1_layout(self, tmp_path):
        out = tmp_path / "run"
        assert run(["figure1", "--theta-max", "1.0", "--out", str(out)]) == 0
        text = read(out / "fig1.csv").splitlines()
        assert text[0].startswith("# manifest=")
        assert text[1] == "a,theta,iplus,ifo"
        rows = [line.split(",") for line in text[2:]]
        assert {r[0] for r in rows} == {"-0.2", "0.0", "0.2"}
        assert all(float(r[3]) == pytest.approx(5 * math.log(2), abs=1e-9) for r in rows)
        assert (out / "manifest.txt").exists()

    def test_figure3_panel_files(self, tmp_path):
        out = tmp_path / "run"
        assert run(["figure3", "--tmax", "5", "--out", str(out)]) == 0
        for name in ("fig3_a0.2_b1.csv", "fig3_a-0.2_b1.csv",
                     "fig3_a0.2_b0.5.csv", "fig3_a-0.2_b0.5.csv"):
            lines = read(out / name).splitlines()
            assert lines[1] == "t,iplus,iplus_stopped,iplus_eq,ifo"
            assert len(lines) == 8  # comment + header + t = 0..5

    def test_machine_info_values(self, tmp_path):
        out = tmp_path / "run"
        assert run(["machine-info", "--b", "0.5", "--out", str(out)]) == 0
        row = read(out / "machine_info.csv").splitlines()[2].split(",")
        assert float(row[5]) == pytest.approx(5.0876, abs=1e-4)

    def test_ldp_decay_table(self, tmp_path):
        out = tmp_path / "run"
        assert run(["ldp-decay", "--out", str(out)]) == 0
        lines = read(out / "ldp_decay.csv").splitlines()
        assert lines[1] == "n,log_level,normalized_rate,target_C"
        last = lines[-1].split(",")
        assert int(last[0]) == 4000
        assert abs(float(last[2]) - float(last[3])) / float(last[3]) < 0.10

    def test_cosmology_outputs_bound(self, tmp_path):
        out = tmp_path / "run"
        assert run(["cosmology", "--out", str(out)]) == 0
        row = read(out / "cosmology.csv").splitlines()[2].split(",")
        assert float(row[5]) == pytest.approx(4.912, abs=0.01)

    def test_student_worked_instance(self, tmp_path):
        out = tmp_path / "run"
        assert run(["student", "--out", str(out)]) == 0
        row = read(out / "student.csv").splitlines()[2].split(",")
        assert float(row[1]) == pytest.approx(0.5, abs=1e-12)
        assert float(row[3]) == pytest.approx(1.849, abs=1e-3)

    def test_plot_script_emitted(self, tmp_path):
        out = tmp_path / "run"
        assert run(["figure1", "--theta-max", "0.5", "--plot-script",
                    "--out", str(out)]) == 0
        assert (out / "fig1.gp").exists()


class TestDeterminism:
    def test_reruns_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["coverage", "--reps", "8", "--n", "200", "--seed", "5",
                        "--out", str(out)]) == 0
        for name in ("coverage.csv", "coverage_summary.csv", "manifest.txt"):
            assert read(a / name) == read(b / name)

    def test_jobs_do_not_change_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["coverage", "--reps", "8", "--n", "200", "--seed", "5",
                    "--out", str(a)]) == 0
        assert run(["coverage", "--reps", "8", "--n", "200", "--seed", "5",
                    "--jobs", "2", "--out", str(b)]) == 0
        # the manifest line echoes the jobs flag; every result row must match
        rows_a = read(a / "coverage.csv").splitlines()[1:]
        rows_b = read(b / "coverage.csv").splitlines()[1:]
        assert rows_a == rows_b

    def test_manifest_hash_marks_every_csv(self, tmp_path):
        out = tmp_path / "run"
        assert run(["two-sample", "--n", "500", "--n0", "500", "--seed", "3",
                    "--out", str(out)]) == 0
        import hashlib

        manifest = read(out / "manifest.txt")
        digest = hashlib.sha256(manifest.encode()).hexdigest()[:16]
        first = read(out / "two_sample.csv").splitlines()[0]
        assert first == f"# manifest={digest}"


class TestConfigHandling:
    def test_missing_seed_is_config_error(self, tmp_path):
        assert run(["coverage", "--reps", "2", "--out", str(tmp_path)]) == 2

    def test_bad_flag_value_exits_two(self, tmp_path):
        assert run(["ldp-decay", "--n", "10,banana", "--out", str(tmp_path)]) == 2

    def test_unknown_command_exits_two(self):
        with pytest.raises(SystemExit) as err:
            run(["no-such-command"])
        assert err.value.code == 2

    def test_config_file_and_cli_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("theta_max=0.5\ntheta_step=0.25\n")
        out = tmp_path / "run"
        assert run(["figure1", "--config", str(cfg), "--theta-step", "0.5",
                    "--out", str(out)]) == 0
        manifest = read(out / "manifest.txt")
        assert "theta_max=0.5" in manifest and "source.theta_max=config" in manifest
        assert "theta_step=0.5" in manifest and "source.theta_step=cli" in manifest
        lines = read(out / "fig1.csv").splitlines()
        thetas = sorted({float(r.split(",")[1]) for r in lines[2:]})
        assert thetas == [0.0, 0.5]

    def test_missing_config_file(self, tmp_path):
        assert run(["figure1", "--config", str(tmp_path / "nope.cfg"),
                    "--out", str(tmp_path)]) == 2
