import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import CommandError, call_command
from django.test import TestCase, override_settings

from solver.models import ExperimentRun
from solver.outputs import MANIFEST_NAME, read_table

INTERVAL_15 = {"dimension": 1, "kind": "interval", "inner": 1.0, "outer": 15.0}

FD_SOLVE = {
    "pipeline": "fd-solve",
    "domain": INTERVAL_15,
    "params": {"nu": 1.0, "Q_f": 2.0, "rho_inf": 0.0218, "tau": 0.01},
    "reference": {"n_nodes": 281},
}

SIMULATE = {
    "pipeline": "simulate",
    "domain": INTERVAL_15,
    "params": {"nu": 1.0, "Q_f": 2.0, "Q_plus": 1.0, "N_plus": 50, "tau": 0.01, "n_steps": 200, "init": [7.0, 8.0]},
    "reference": {"n_nodes": 281},
    "bins": 10,
    "frames": 20,
}


class ExperimentCommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write_config(self, data, name="config.json"):
        path = self.root / name
        path.write_text(json.dumps(data))
        return str(path)

    def run_command(self, pipeline, *args):
        stdout = StringIO()
        call_command("experiment", pipeline, *args, stdout=stdout)
        return stdout.getvalue()

    def assertExitStatus(self, status, pipeline, *args):
        with self.assertRaises(CommandError) as caught:
            self.run_command(pipeline, *args)
        self.assertEqual(caught.exception.returncode, status)

    def test_fd_solve_writes_outputs_and_registers_the_run(self):
        out = self.root / "fd"
        text = self.run_command("fd-solve", "--config", self.write_config(FD_SOLVE), "--out", str(out))
        self.assertIn("Newton converged", text)
        self.assertEqual(sorted(p.name for p in out.iterdir()), [MANIFEST_NAME, "solution.csv", "summary.csv"])

        manifest = json.loads((out / MANIFEST_NAME).read_text())
        comments, columns, rows = read_table(out / "solution.csv")
        self.assertEqual(comments[1], f"# manifest {manifest['manifest_hash']}")
        self.assertEqual(columns, ["node", "phi", "rho_plus", "rho_minus"])
        self.assertEqual(len(rows), 281)

        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.SUCCEEDED)
        self.assertEqual(run.manifest_hash, manifest["manifest_hash"])
        self.assertEqual(run.output_dir, str(out))

    def test_reruns_are_byte_identical(self):
        config = self.write_config(SIMULATE)
        for name in ("a", "b"):
            self.run_command("simulate", "--config", config, "--seed", "7", "--out", str(self.root / name))
        for name in ("density_plus.csv", "density_minus.csv", "potential.csv", "summary.csv", MANIFEST_NAME):
            self.assertEqual((self.root / "a" / name).read_bytes(), (self.root / "b" / name).read_bytes(), name)
        _, columns, _ = read_table(self.root / "a" / "potential.csv")
        self.assertEqual(columns, ["x", "phi", "phi_reference"])

    def test_different_seeds_differ(self):
        config = self.write_config(SIMULATE)
        for seed in ("1", "2"):
            self.run_command("simulate", "--config", config, "--seed", seed, "--out", str(self.root / seed))
        self.assertNotEqual((self.root / "1" / "density_plus.csv").read_bytes(),
                            (self.root / "2" / "density_plus.csv").read_bytes())

    def test_zero_free_charge_gives_zero_potential(self):
        config = self.write_config({**FD_SOLVE, "params": {**FD_SOLVE["params"], "Q_f": 0.0}})
        self.run_command("fd-solve", "--config", config, "--out", str(self.root / "zero"))
        _, columns, rows = read_table(self.root / "zero" / "solution.csv")
        phi = [row[columns.index("phi")] for row in rows]
        self.assertEqual(set(phi), {0.0})

    def test_configuration_errors_exit_with_status_2(self):
        bad = self.write_config({**FD_SOLVE, "params": {**FD_SOLVE["params"], "tau": -1.0}})
        self.assertExitStatus(2, "fd-solve", "--config", bad)
        self.assertExitStatus(2, "fd-solve")
        self.assertExitStatus(2, "fd-solve", "--preset", "fig10")
        self.assertExitStatus(2, "fd-solve", "--config", str(self.root / "missing.json"))
        self.assertFalse(ExperimentRun.objects.exists())

    def test_pipeline_needs_its_block(self):
        self.assertExitStatus(2, "iterate-q", "--config", self.write_config(SIMULATE), "--out", str(self.root / "x"))
        self.assertEqual(ExperimentRun.objects.get().status, ExperimentRun.FAILED)
        self.assertFalse((self.root / "x").exists())

    @override_settings(PB_SOLVER={'NEWTON_MAX_ITER': 1})
    def test_numerical_failure_exits_with_status_3(self):
        out = self.root / "diverged"
        self.assertExitStatus(3, "fd-solve", "--config", self.write_config(FD_SOLVE), "--out", str(out))
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, ExperimentRun.FAILED)
        self.assertIn("NewtonDivergence", run.message)
        self.assertFalse(out.exists())
        self.assertEqual([p.name for p in self.root.iterdir()], ["config.json"])

    def test_iterate_q_trace(self):
        config = self.write_config({
            "pipeline": "iterate-q",
            "domain": INTERVAL_15,
            "params": {"nu": 1.0, "Q_f": 2.0, "rho_inf": 0.0218, "q": 0.01, "tau": 0.05, "init": [1.0, 15.0]},
            "iteration": {"T_c": 1.0, "epsilon": 1e-9, "max_iters": 2, "h": 0.5},
            "reference": {"n_nodes": 281},
            "bins": 10,
        })
        self.run_command("iterate-q", "--config", config, "--out", str(self.root / "iq"))
        _, columns, rows = read_table(self.root / "iq" / "trace.csv")
        self.assertEqual(columns[:2], ["iteration", "Q_plus"])
        self.assertEqual([row[0] for row in rows], [1.0, 2.0])

    def test_truncation_study(self):
        config = self.write_config({
            "pipeline": "truncation-study",
            "domain": {"dimension": 1, "kind": "interval", "inner": 1.0, "outer": 20.0},
            "params": {"nu": 1.0, "Q_f": 2.0, "rho_inf": 0.0218, "tau": 0.01},
            "truncation": {"L_list": [5.0, 10.0], "L_ref": 20.0, "h": 0.05, "decay_sigmas": [0.5]},
        })
        self.run_command("truncation-study", "--config", config, "--out", str(self.root / "tr"))
        _, _, rows = read_table(self.root / "tr" / "truncation.csv")
        self.assertGreater(rows[0][1], rows[1][1])
        _, _, decay = read_table(self.root / "tr" / "decay.csv")
        self.assertEqual(decay[0][1], 1.0)

    def test_convergence_is_independent_of_thread_count(self):
        config = self.write_config({**SIMULATE, "pipeline": "convergence", "params": {**SIMULATE["params"],
                                                                                    "n_steps": 20},
                                    "convergence": {"N_plus_grid": [20, 40], "repetitions": 2,
                                                    "test_functions": ["f1"]}})
        for threads in ("1", "2"):
            self.run_command("convergence", "--config", config, "--threads", threads,
                             "--out", str(self.root / threads))
        self.assertEqual((self.root / "1" / "convergence.csv").read_bytes(),
                         (self.root / "2" / "convergence.csv").read_bytes())
        _, columns, rows = read_table(self.root / "1" / "convergence.csv")
        self.assertEqual(columns, ["N_plus", "species", "f_id", "rmse"])
        self.assertEqual(len(rows), 4)

    def test_kde_planes(self):
        config = self.write_config({
            "pipeline": "kde-planes",
            "domain": {"dimension": 3, "kind": "shell", "inner": 2.0, "outer": 10.0},
            "params": {"nu": 1.0, "Q_f": 15.0, "Q_plus": 10.0, "N_plus": 200, "tau": 0.01, "n_steps": 20,
                       "init": [2.0, 10.0], "x_c": [0.0, 1.5, 0.0]},
            "kde": {"planes": ["xOy", "r-phi"], "grid_points": 11, "r_max": 5.0},
            "frames": 5,
        })
        self.run_command("kde-planes", "--config", config, "--out", str(self.root / "kde"))
        names = sorted(p.name for p in (self.root / "kde").iterdir())
        for name in ("kde_xOy_plus.csv", "kde_xOy_minus.csv", "kde_r-phi_plus.csv", "angular.csv", "summary.csv"):
            self.assertIn(name, names)
        _, columns, rows = read_table(self.root / "kde" / "kde_xOy_minus.csv")
        self.assertEqual((len(columns), len(rows)), (12, 11))

    def test_repetitions_pool_independent_runs(self):
        config = self.write_config({**SIMULATE, "repetitions": 3})
        for threads in ("1", "3"):
            self.run_command("simulate", "--config", config, "--threads", threads, "--out", str(self.root / threads))
        self.assertEqual((self.root / "1" / "density_minus.csv").read_bytes(),
                         (self.root / "3" / "density_minus.csv").read_bytes())
        _, _, rows = read_table(self.root / "1" / "summary.csv")
        self.assertIn(["repetitions", 3.0], rows)
        summary = dict(rows)
        for name in ("last_bin_ratio_plus", "last_bin_ratio_minus", "l1_plus", "l1_minus"):
            self.assertGreaterEqual(summary[name], 0.0, name)
