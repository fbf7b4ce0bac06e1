# Copyright 2026 The mwcover Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the mwcover CLI: exit codes, outputs, schemas.

Usage: cli_test.py CLI SOURCE_DIR WORK_DIR
"""

import filecmp
import json
import shutil
import subprocess
import sys
import unittest
from fractions import Fraction
from pathlib import Path

import jsonschema

CLI = SRC = WORK = None
OUTPUTS = ("trace.csv", "mixture.json", "coverage_report.json", "summary.json")


def run(*args):
    return subprocess.run([str(CLI), *map(str, args)], capture_output=True, text=True, timeout=600)


def schema(name):
    return json.loads((SRC / "schemas" / f"{name}.schema.json").read_text())


def load(path):
    return json.loads(Path(path).read_text())


def write_config(name, cfg):
    path = WORK / f"{name}.json"
    path.write_text(json.dumps(cfg))
    return path


def check_boost_dir(case, out):
    for name, file in (("summary", "summary.json"), ("coverage_report", "coverage_report.json"),
                       ("mixture", "mixture.json"), ("meta", "meta.json")):
        jsonschema.validate(load(out / file), schema(name))
    header = (out / "trace.csv").read_text().splitlines()[0]
    case.assertEqual(header, "round,log2_W,n_doubled,tv_gen_vs_pt,minority_ratio,epsilon_prime,lambda_min")


class BoostCommand(unittest.TestCase):
    def test_two_point_config(self):
        out = WORK / "b_appendix"
        r = run("boost", "--config", SRC / "configs" / "appendix_b.json", "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        check_boost_dir(self, out)
        s = load(out / "summary.json")
        self.assertEqual(s["round1_doubled"], 2)
        self.assertEqual(s["n_points"], 7)
        p2 = {d["point"][0]: Fraction(d["mass"]).limit_denominator(100) for d in s["distribution_round2"]}
        self.assertEqual(p2, {0.0: Fraction(5, 9), 1.0: Fraction(4, 9)})
        self.assertEqual(json.loads(r.stdout.splitlines()[-1])["command"], "boost")

    def test_every_bundled_config(self):
        cfg_schema = schema("config")
        for cfg in sorted((SRC / "configs").glob("*.json")):
            with self.subTest(config=cfg.name):
                jsonschema.validate(load(cfg), cfg_schema)
                out = WORK / f"b_{cfg.stem}"
                r = run("boost", "--config", cfg, "--out", out)
                self.assertEqual(r.returncode, 0, r.stderr)
                check_boost_dir(self, out)

    def test_sine_minor_mode_is_covered(self):
        out = WORK / "b_sine_minor"
        r = run("boost", "--config", SRC / "configs" / "sine.json", "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertGreater(load(out / "coverage_report.json")["mode_min_ratio"]["1"], 0.0)

    def test_same_seed_gives_identical_files(self):
        cfg = SRC / "configs" / "gauss_grid_empirical.json"
        a, b, c = WORK / "det_a", WORK / "det_b", WORK / "det_c"
        for out, seed in ((a, 17), (b, 17), (c, 18)):
            r = run("boost", "--config", cfg, "--seed", seed, "--out", out)
            self.assertEqual(r.returncode, 0, r.stderr)
        for f in OUTPUTS:
            self.assertTrue(filecmp.cmp(a / f, b / f, shallow=False), f)
        self.assertFalse(filecmp.cmp(a / "trace.csv", c / "trace.csv", shallow=False))

    def test_config_errors_exit_1(self):
        base = load(SRC / "configs" / "appendix_b.json")
        bad = {
            "empty_path": {**base, "dataset": {"kind": "csv", "path": ""}},
            "bad_delta": {**base, "delta": 1.5},
            "bad_mode": {**base, "mode": "online"},
            "no_generator": {k: v for k, v in base.items() if k != "generator"},
            "unknown_generator": {**base, "generator": {"kind": "vae"}},
        }
        for name, cfg in bad.items():
            with self.subTest(case=name):
                r = run("boost", "--config", write_config(name, cfg), "--out", WORK / f"err_{name}")
                self.assertEqual(r.returncode, 1, r.stderr)
                self.assertIn("config error", r.stderr)
        r = run("boost", "--config", WORK / "missing.json", "--out", WORK / "err_missing")
        self.assertEqual(r.returncode, 1)
        self.assertEqual(run("boost").returncode, 1)

    def test_empty_dataset_file_exits_1(self):
        (WORK / "empty.csv").write_text("x0,x1\n")
        base = load(SRC / "configs" / "appendix_b.json")
        cfg = write_config("empty_csv", {**base, "dataset": {"kind": "csv", "path": "empty.csv"}})
        self.assertEqual(run("boost", "--config", cfg, "--out", WORK / "err_empty").returncode, 1)

    def test_runtime_failure_exits_3_with_round(self):
        cfg = write_config("degenerate", {
            "mode": "empirical", "rounds": 2, "projection_cells": 2,
            "dataset": {"kind": "points", "points": [[1.0], [1.0], [1.0]]},
            "generator": {"kind": "discrete"},
            "discriminator": {"kind": "logistic", "samples": 16},
        })
        r = run("boost", "--config", cfg, "--out", WORK / "err_runtime")
        self.assertEqual(r.returncode, 3, r.stderr)
        self.assertIn("round 1", r.stderr)


class GenCommand(unittest.TestCase):
    def test_writes_labeled_csv(self):
        cfg = write_config("gen_spiral", {"seed": 3, "dataset": {"kind": "spiral", "n": 40}})
        out = WORK / "gen"
        r = run("gen", "--config", cfg, "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        lines = (out / "dataset.csv").read_text().splitlines()
        self.assertEqual(lines[0], "x0,x1,mode_id")
        self.assertEqual(len(lines), 41)
        again = WORK / "gen2"
        run("gen", "--config", cfg, "--out", again)
        self.assertTrue(filecmp.cmp(out / "dataset.csv", again / "dataset.csv", shallow=False))


class VerifyCommand(unittest.TestCase):
    def report(self, *args, code=0):
        r = run("verify", *args)
        self.assertEqual(r.returncode, code, r.stderr)
        rep = json.loads(r.stdout.splitlines()[-1])
        jsonschema.validate(rep, schema("oracle_report"))
        return rep

    def test_suites_pass(self):
        self.assertEqual(self.report("eq3", "--trials", 1000)["violations"], 0)
        self.assertEqual(self.report("theorem1", "--support", 8)["violations"], 0)
        self.assertEqual(self.report("lemma1", "--trials", 200)["violations"], 0)
        self.assertEqual(self.report("dynamics", "--trials", 50)["violations"], 0)

    def test_violation_exits_2(self):
        rep = self.report("lemma1", "--delta", 0.01, "--shift", 0.05, code=2)
        self.assertGreater(rep["violations"], 0)
        self.assertIsNotNone(rep["first_violation"])

    def test_unknown_suite_exits_1(self):
        self.assertEqual(run("verify", "minimax").returncode, 1)

    def test_threads_do_not_change_output(self):
        a = run("verify", "lemma1", "--trials", 300, "--seed", 4)
        b = run("verify", "lemma1", "--trials", 300, "--seed", 4, "--threads", 3)
        self.assertEqual(a.stdout, b.stdout)


class ReproCommand(unittest.TestCase):
    def test_quick_recipes(self):
        for name in ("fig1", "fig6", "appendix-b"):
            with self.subTest(recipe=name):
                out = WORK / f"repro_{name}"
                r = run("repro", name, "--out", out)
                self.assertEqual(r.returncode, 0, r.stdout + r.stderr)
                values = load(out / "values.json")
                jsonschema.validate(values, schema("values"))
                self.assertTrue(values["ok"])

    def test_unknown_recipe_exits_1(self):
        self.assertEqual(run("repro", "fig9", "--out", WORK / "repro_none").returncode, 1)

    def test_bundled_configs_match_the_config_command(self):
        names = {"appendix-b": "appendix_b", "appendix-b-empirical": "appendix_b_empirical", "sine": "sine",
                 "spiral": "spiral", "grid-isolated": "grid_isolated"}
        for recipe, file in names.items():
            with self.subTest(config=recipe):
                r = run("config", recipe)
                self.assertEqual(r.returncode, 0)
                self.assertEqual(json.loads(r.stdout), load(SRC / "configs" / f"{file}.json"))


def main():
    global CLI, SRC, WORK
    if len(sys.argv) != 4:
        sys.exit(__doc__)
    CLI, SRC, WORK = Path(sys.argv[1]), Path(sys.argv[2]), Path(sys.argv[3])
    shutil.rmtree(WORK, ignore_errors=True)
    WORK.mkdir(parents=True)
    prog = unittest.main(argv=[sys.argv[0], "-v"], exit=False)
    sys.exit(0 if prog.result.wasSuccessful() else 1)


if __name__ == "__main__":
    main()
