"""CLI contract: subcommands, exit codes, config merging, determinism."""

import json
import os
import subprocess
import sys

import numpy as np

from maxsurf import cli, maxgraph
from maxsurf.maxgraph import GridGraph, disc_mask, save_gridgraph, trace_boundary


def run_cli(args, **kw):
    return cli.main(list(args))


class TestSample:
    def test_obj_output(self, tmp_path, capsys):
        out = tmp_path / "h.obj"
        code = run_cli(["sample", "helicoid", "--u", "-6.28:6.28", "--v", "0:3",
                        "--res", "64x32", "--format", "obj", "--out", str(out)])
        assert code == 0
        text = out.read_text()
        assert sum(1 for ln in text.splitlines() if ln.startswith("v ")) == 64 * 32
        assert "singular nodes" in capsys.readouterr().out

    def test_csv_with_singular_count(self, tmp_path, capsys):
        out = tmp_path / "e2.csv"
        code = run_cli(["sample", "enneper2", "--u", "0.05:2", "--v", "0:3.14159",
                        "--res", "48x48", "--format", "csv", "--out", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "singular nodes" in printed
        # the real-axis edge is singular: count > 0
        assert int(printed.rsplit(":", 1)[1]) > 0

    def test_unknown_model_exit_2(self, capsys):
        assert run_cli(["sample", "klein-bottle", "--out", "x.csv"]) == 2


class TestVerify:
    def test_enneper1_implicit_suite(self, capsys):
        code = run_cli(["verify", "enneper1", "--suite", "implicit"])
        out = capsys.readouterr().out
        assert code == 0
        rep = json.loads(out.splitlines()[0])
        assert rep["passed"] and rep["details"]["scale"] == 0.125

    def test_helicoid_all_suites(self, capsys):
        assert run_cli(["verify", "helicoid", "--suite", "all"]) == 0

    def test_timelike_fixture_fails_spacelike(self, capsys):
        code = run_cli(["verify", "timelike-plane-fixture", "--suite", "spacelike"])
        assert code == 1

    def test_csv_reingestion_matches_in_process(self, tmp_path, capsys):
        out = tmp_path / "cat.csv"
        assert run_cli(["sample", "catenoid", "--u", "1.2:1.6", "--v", "0:0.4",
                        "--res", "41x41", "--format", "csv", "--out", str(out)]) == 0
        capsys.readouterr()
        code = run_cli(["verify", str(out), "--suite", "curvature"])
        text = capsys.readouterr().out
        rep = json.loads(text.splitlines()[0])
        from maxsurf import verify as vf
        from maxsurf.cli import import_csv
        inproc = vf.mean_curvature(import_csv(str(out)), tol=1e-6)
        assert rep["max_violation"] == inproc.max_violation
        assert code == (0 if inproc.passed else 1)


class TestPlateau:
    def _write_problem(self, tmp_path, boundary_fn, h=1 / 16):
        n = int(round(2.0 / h)) + 1
        mg = GridGraph.from_function((-1, -1), h, n, n, lambda X, Y: 0.0 * X,
                                     disc_mask(1.0))
        mask_path = tmp_path / "mask.csv"
        save_gridgraph(mg, mask_path)
        nodes = trace_boundary(mg)
        X, Y = mg.meshgrid()
        vals = boundary_fn(X[nodes[:, 0], nodes[:, 1]], Y[nodes[:, 0], nodes[:, 1]])
        bpath = tmp_path / "boundary.csv"
        with open(bpath, "w") as fh:
            for k, v in enumerate(vals):
                fh.write(f"{k},{float(v)!r}\n")
        return mask_path, bpath

    def test_solve_and_outputs(self, tmp_path, capsys):
        mask, bnd = self._write_problem(
            tmp_path, lambda x, y: np.arcsinh(np.hypot(x - 3.0, y)))
        prefix = str(tmp_path / "run")
        code = run_cli(["plateau", "--boundary", str(bnd), "--mask", str(mask),
                        "--out-prefix", prefix])
        assert code == 0
        sol = maxgraph.load_gridgraph(prefix + "_solution.csv")
        X, Y = sol.meshgrid()
        err = np.nanmax(np.abs(np.where(sol.interior_mask(),
                                        sol.u - np.arcsinh(np.hypot(X - 3, Y)), np.nan)))
        assert err < 5e-5
        assert json.loads(open(prefix + "_singular.json").read())["flagged_nodes"] == 0
        stats = json.loads(open(prefix + "_iterations.json").read())
        assert stats["residual"] < 1e-10

    def test_lightlike_boundary_flagged(self, tmp_path, capsys):
        mask, bnd = self._write_problem(tmp_path, lambda x, y: x)
        prefix = str(tmp_path / "lk")
        code = run_cli(["plateau", "--boundary", str(bnd), "--mask", str(mask),
                        "--out-prefix", prefix])
        assert code == 0
        stats = json.loads(open(prefix + "_iterations.json").read())
        assert stats["degenerate"]
        assert json.loads(open(prefix + "_singular.json").read())["flagged_nodes"] > 0

    def test_inadmissible_exit_1(self, tmp_path, capsys):
        mask, bnd = self._write_problem(tmp_path, lambda x, y: 2.0 * x)
        code = run_cli(["plateau", "--boundary", str(bnd), "--mask", str(mask),
                        "--out-prefix", str(tmp_path / "bad")])
        assert code == 1
        assert "admissibility" in capsys.readouterr().err


class TestAsymptotics:
    def test_blowup_light_cone(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code = run_cli(["asymptotics", "catenoid", "--mode", "blowup",
                        "--scales", "1,10,100,1000", "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        assert rep["limit"]["kind"] == "light_cone_upper"
        assert rep["limit"]["residual"] < 0.01

    def test_rotation_enneper(self, tmp_path):
        out = tmp_path / "rot.json"
        code = run_cli(["asymptotics", "enneper1", "--mode", "rotation",
                        "--range", "-1000:1000", "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())["rotation"]
        assert not rep["divergent"]
        assert abs(rep["value"] - 2 * np.pi) < 1e-3

    def test_rotation_helicoid_divergent(self, tmp_path):
        out = tmp_path / "rot.json"
        code = run_cli(["asymptotics", "helicoid", "--mode", "rotation",
                        "--range", "-50:50", "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())["rotation"]
        assert rep["divergent"]
        assert abs(rep["rate"] - 1.0) < 1e-6

    def test_tau_csv(self, tmp_path):
        out = tmp_path / "tau.json"
        csv = tmp_path / "tau.csv"
        code = run_cli(["asymptotics", "catenoid", "--mode", "tau",
                        "--radii", "1,10,100,1000", "--out", str(out),
                        "--csv", str(csv)])
        assert code == 0
        assert csv.read_text().splitlines()[0] == "r,tau_plus,tau_minus"
        rep = json.loads(out.read_text())["tau"]
        assert abs(rep["tau_plus"] - 1.0) < 0.02

    def test_bad_range_exit_2(self, tmp_path, capsys):
        code = run_cli(["asymptotics", "catenoid", "--mode", "blowup",
                        "--scales", "1000,1", "--out", str(tmp_path / "x.json")])
        assert code == 2


class TestConjugate:
    def test_model_conjugate(self, tmp_path, capsys):
        out = tmp_path / "c.csv"
        code = run_cli(["conjugate", "helicoid", "--u", "-1:1", "--v", "0:1",
                        "--res", "24x24", "--format", "csv", "--out", str(out)])
        assert code == 0
        assert out.exists()

    def test_grid_conjugate_roundtrip(self, tmp_path, capsys):
        g = GridGraph.from_function((2.0, -0.5), 0.05, 21, 21,
                                    lambda X, Y: np.arcsinh(np.hypot(X, Y)))
        gpath = tmp_path / "g.csv"
        save_gridgraph(g, gpath)
        out = tmp_path / "c.csv"
        assert run_cli(["conjugate", "--grid", str(gpath), "--anchor", "10,10",
                        "--out", str(out)]) == 0
        back = tmp_path / "b.csv"
        assert run_cli(["conjugate", "--grid", str(out), "--anchor", "10,10",
                        "--inverse", "--out", str(back)]) == 0
        gb = maxgraph.load_gridgraph(back)
        diff = (gb.u - g.u) - (gb.u[10, 10] - g.u[10, 10])
        assert np.nanmax(np.abs(diff)) < 5e-3


class TestConfig:
    def test_config_supplies_defaults_flags_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"u": "-1:1", "v": "0:1", "res": "16x12",
                                   "format": "csv", "out": str(tmp_path / "a.csv")}))
        code = run_cli(["sample", "helicoid", "--config", str(cfg),
                        "--out", str(tmp_path / "b.csv")])
        assert code == 0
        assert (tmp_path / "b.csv").exists()      # flag wins
        assert not (tmp_path / "a.csv").exists()

    def test_unknown_config_key_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"resolution": "16x12"}))
        code = run_cli(["sample", "helicoid", "--config", str(cfg),
                        "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "unknown config keys" in capsys.readouterr().err


class TestDeterminismAcrossWorkers:
    def test_byte_identical_outputs(self, tmp_path):
        # the full regression loop lives in the acceptance suite; here one
        # representative command across thread counts
        digests = []
        for threads in ("1", "2"):
            env = dict(os.environ, MAXSURF_THREADS=threads)
            out = tmp_path / f"t{threads}.csv"
            subprocess.run([sys.executable, "-m", "maxsurf.cli", "sample",
                            "enneper1", "--u", "0.1:1.5", "--v", "0:3",
                            "--res", "32x24", "--format", "csv",
                            "--out", str(out)], env=env, check=True,
                           capture_output=True)
            digests.append(out.read_bytes())
        assert digests[0] == digests[1]
