import csv
import json

import numpy as np
import pytest

from turingwaves import cli, sweep
from turingwaves.profile import load_profile, save_profile
from turingwaves.sweep import CSV_COLUMNS, DiagramPoint, SweepPlan, read_diagram, run_sweep

FAST = {"n_floquet": 11, "n_modes": 11}


def small_plan(out, **kw):
    base = dict(spec_ref="quadratic", c0_range=(0.002, 0.006, 3), X_range=(5.40, 5.48, 3), output_dir=str(out),
                **FAST)
    base.update(kw)
    return SweepPlan(**base)


def run_cli(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


class TestPlan:
    def test_validation(self, tmp_path):
        with pytest.raises(ValueError):
            SweepPlan("quadratic", c0_range=(0.1, 0.0, 3))
        with pytest.raises(ValueError):
            SweepPlan("quadratic", n_floquet=10)
        with pytest.raises(ValueError):
            SweepPlan("quadratic", tolerances={"nope": 1.0})

    def test_point_row(self):
        assert DiagramPoint(0.1, 5.0, 1e-3, "stable", -1e-4).row() == ["0.1", "5.0", "0.001", "stable", "-0.0001"]
        with pytest.raises(ValueError):
            DiagramPoint(0.1, 5.0, 1e-3, "maybe", None)
        with pytest.raises(ValueError):
            DiagramPoint(0.1, 5.0, 1e-3, "no-profile", None)


class TestSweep:
    def test_single_point(self, tmp_path):
        plan = small_plan(tmp_path, c0_range=(0.00406, 0.00406, 1), X_range=(5.44, 5.44, 1))
        (pt,) = run_sweep(plan)
        assert pt.verdict == "stable"
        assert pt.eps_solved == pytest.approx(2.82e-3, rel=0.05)
        with open(tmp_path / "diagram.csv") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 2
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["counts"] == {"stable": 1, "unstable": 0, "no-profile": 0}
        assert summary["plan"]["n_floquet"] == 11 and "version" in summary

    def test_deterministic(self, tmp_path):
        run_sweep(small_plan(tmp_path / "a"))
        run_sweep(small_plan(tmp_path / "b"))
        assert (tmp_path / "a" / "diagram.csv").read_text() == (tmp_path / "b" / "diagram.csv").read_text()

    def test_resume(self, tmp_path, monkeypatch):
        plan = small_plan(tmp_path)
        full = [p.row() for p in run_sweep(plan)]
        csv_path = tmp_path / "diagram.csv"
        lines = csv_path.read_text().splitlines(keepends=True)
        csv_path.write_text("".join(lines[:4]))
        calls = []
        original = sweep._classify_job
        monkeypatch.setattr(sweep, "_classify_job", lambda job: calls.append(1) or original(job))
        resumed = [p.row() for p in run_sweep(plan)]
        assert resumed == full
        assert len(calls) == sum(r[3] != "no-profile" for r in full[3:])

    def test_parallel_matches_serial(self, tmp_path):
        serial = run_sweep(small_plan(tmp_path / "s"))
        par = run_sweep(small_plan(tmp_path / "p", workers=2))
        assert [p.row() for p in serial] == [p.row() for p in par]

    def test_record_seed(self, tmp_path, quad_wave):
        rec = save_profile(quad_wave, tmp_path / "seed.json")
        plan = small_plan(tmp_path / "out", seed_wave=str(rec))
        pts = run_sweep(plan)
        assert len(pts) == 9
        at_seed = [p for p in pts if p.c0 == 0.004 and p.X == 5.44]
        assert at_seed[0].verdict != "no-profile"
        assert read_diagram(tmp_path / "out" / "diagram.csv")


class TestCli:
    def test_analyze_reference(self, capsys, tmp_path):
        code, doc = run_cli(capsys, "analyze", "--out", tmp_path / "a.json")
        assert code == 0
        assert doc["tool"] == "turingwaves" and doc["command"] == "analyze"
        assert doc["cond"]["passes"]
        assert abs(doc["turing_point"]["eps_star"]) <= 1e-6
        assert doc["max_growth"]["-0.2"]["growth"] < 0 < doc["max_growth"]["0.2"]["growth"]
        assert json.loads((tmp_path / "a.json").read_text()) == doc

    def test_analyze_no_instability(self, capsys):
        code, doc = run_cli(capsys, "analyze", "--system", "identity_viscosity")
        assert code == 2 and doc["turing_point"] is None

    def test_analyze_singeg(self, capsys):
        code, doc = run_cli(capsys, "analyze", "--system", "singeg")
        assert code == 1
        assert "strictly hyperbolic" in doc["cond_failure"]
        (blk,) = doc["coincident_blocks"]
        assert blk["det"] == pytest.approx(-1.0)

    def test_analyze_custom_file(self, capsys, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"A": [[1, 0], [0, 2]], "D": [[1, 0], [0, 1]]}))
        code, doc = run_cli(capsys, "analyze", "--system", p)
        assert code == 2 and doc["cond"]["passes"]

    def test_bad_system(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{}")
        assert cli.main(["analyze", "--system", str(p)]) == 1
        assert "error" in capsys.readouterr().err

    def test_solve_and_spectrum(self, capsys, tmp_path):
        rec = tmp_path / "quad.json"
        code, doc = run_cli(capsys, "solve", "--wave", "quadratic", "--out", rec)
        assert code == 0 and doc["eps"] == pytest.approx(2.82e-3, rel=0.05)
        assert load_profile(rec).residual_norm <= 1e-10
        code, doc = run_cli(capsys, "spectrum", rec, "--out", tmp_path / "spec", "--n-floquet", 21)
        assert code == 0 and doc["verdict"]["verdict"] == "stable"
        assert doc["whitham_fit"]["origin_count"] == 4
        data = np.loadtxt(tmp_path / "spec" / "spectrum.txt")
        assert data.shape == (21 * 41 * 3, 3)
        script = (tmp_path / "spec" / "plot_spectrum.py").read_text()
        compile(script, "plot_spectrum.py", "exec")
        assert json.loads((tmp_path / "spec" / "verdict.json").read_text())["command"] == "spectrum"

    def test_spectrum_corrupt_record(self, capsys, tmp_path, quad_wave):
        rec = save_profile(quad_wave, tmp_path / "w.json")
        doc = json.loads(rec.read_text())
        doc["grid"][0][0] += 0.1
        rec.write_text(json.dumps(doc))
        assert cli.main(["spectrum", str(rec), "--out", str(tmp_path / "o")]) == 1
        assert "residual" in capsys.readouterr().err

    def test_constant_state_validate(self, capsys, tmp_path):
        rec = tmp_path / "const.json"
        code, doc = run_cli(capsys, "solve", "--constant", "--eps", 0.2, "--M", 32, "--out", rec)
        assert code == 0 and doc["amplitude"] == 0.0
        code, doc = run_cli(capsys, "validate", rec, "--n-floquet", 21, "--modes", 21,
                            "--series", tmp_path / "series.txt")
        assert code == 0
        assert doc["verdict"] == "unstable" and doc["report"]["outcome"] == "growth"
        assert len((tmp_path / "series.txt").read_text().splitlines()) > 2

    def test_existence_curve(self, capsys, tmp_path):
        out = tmp_path / "ec.csv"
        code, doc = run_cli(capsys, "existence-curve", "--X", 5.44, "--c0", 0.002, 0.01, 3,
                            "--seed-wave", "quadratic", "--out", out)
        assert code == 0 and doc["gaps"] == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        eps = [float(r["eps"]) for r in rows]
        assert len(eps) == 3 and np.all(np.diff(eps) > 0)

    def test_existence_curve_linear_has_gaps(self, capsys, tmp_path):
        code, doc = run_cli(capsys, "existence-curve", "--system", "linear", "--X", 5.44,
                            "--c0", 0.002, 0.01, 3, "--out", tmp_path / "lin.csv")
        assert code == 0 and doc["gaps"] == doc["points"] == 3

    def test_check_negative(self, capsys):
        code, doc = run_cli(capsys, "check-negative", "--samples", 500, "--symmetrizable", 50)
        assert code == 0
        assert doc["two_by_two"]["violations"] == 0 and doc["symmetrizable_failures"] == 0

    def test_sweep_command(self, capsys, tmp_path):
        code, doc = run_cli(capsys, "sweep", "--c0", 0.00406, 0.00406, 1, "--X", 5.44, 5.44, 1,
                            "--n-floquet", 11, "--modes", 11, "--out", tmp_path)
        assert code == 0 and doc["counts"]["stable"] == 1
        assert doc["config"]["n_floquet"] == 11

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["--version"])
        assert info.value.code == 0
        assert "turingwaves" in capsys.readouterr().out
