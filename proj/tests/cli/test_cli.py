"""CLI checks: exit codes, golden output and JSON schema conformance.

Usage: test_cli.py <path to combkit> <schema directory>
"""

import json
import os
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema
from referencing import Registry, Resource

BINARY = None
SCHEMAS = None

BINARY_TREES = "B = z + (z*B*B)"


def run(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("COMBKIT_PRECISION", None)
    if env:
        full_env.update(env)
    return subprocess.run([BINARY, *args], capture_output=True, text=True, env=full_env, timeout=300)


def load_schema(name):
    return json.loads((SCHEMAS / name).read_text())


class CliTest(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        trace = load_schema("trace.schema.json")
        registry = Registry().with_resource(trace["$id"], Resource.from_contents(trace))
        cls.output = jsonschema.Draft202012Validator(load_schema("cli-output.schema.json"), registry=registry)
        cls.trace = jsonschema.Draft202012Validator(trace)

    def json_of(self, *args, code=0, env=None):
        r = run(*args, "--format", "json", env=env)
        self.assertEqual(r.returncode, code, r.stderr)
        doc = json.loads(r.stdout if r.stdout.strip() else r.stderr)
        self.output.validate(doc)
        return doc

    def test_golden_count(self):
        doc = self.json_of("count", "-s", BINARY_TREES, "--terms", "20")
        expected = [0, 1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42, 0, 132, 0, 429, 0, 1430, 0, 4862, 0]
        self.assertEqual(doc["counts"], [str(c) for c in expected])
        text = run("count", "-s", BINARY_TREES, "--terms", "20")
        self.assertEqual(text.returncode, 0)
        self.assertIn("[0, 1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42, 0, 132, 0, 429, 0, 1430, 0, 4862, 0]", text.stdout)
        self.assertTrue(text.stdout.rstrip().splitlines()[-2].startswith("-- timing"))

    def test_validate(self):
        doc = self.json_of("validate", "-s", "T = z * Seq(T)")
        self.assertTrue(doc["valid"])
        self.assertEqual(doc["classes"][0]["min_size"], {"z": 1})
        bad = self.json_of("validate", "-s", "A = Seq(A); B = z", code=2)
        self.assertFalse(bad["valid"])
        self.assertEqual(bad["diagnostics"][0]["code"], "IllFoundedSequence")

    def test_oracle(self):
        doc = self.json_of("oracle", "-s", BINARY_TREES, "--point", "z=0.2")
        value = doc["classes"][0]["value"]
        self.assertLessEqual(float(value["lo"]), 0.2087121525220800)
        self.assertGreaterEqual(float(value["hi"]), 0.2087121525220800)
        self.json_of("oracle", "-s", BINARY_TREES, "--point", "z=0.6", code=3)

    def test_tune(self):
        doc = self.json_of("tune", "-s", BINARY_TREES, "--target", "z=50", "--seed", "7")
        self.assertEqual(doc["seed"], 7)
        e = doc["expected"]["z"]
        self.assertLess(abs((float(e["lo"]) + float(e["hi"])) / 2 - 50), 0.25)

    def test_sample_window_and_traces(self):
        doc = self.json_of("sample", "-s", BINARY_TREES, "--target", "z=20", "--tolerance", "0.1", "-n", "5",
                           "--seed", "3", "--traces")
        self.assertEqual(len(doc["objects"]), 5)
        self.assertEqual(doc["window"]["z"], [18, 22])
        for obj in doc["objects"]:
            self.assertTrue(18 <= obj["size"]["z"] <= 22)
            self.assertEqual(obj["object"].count("z"), obj["size"]["z"])
            self.trace.validate(obj["trace"])
        self.assertEqual(doc["counters"]["accepted"], 5)
        self.assertEqual(doc["counters"]["replay_mismatches"], 0)

    def test_sample_json_builder(self):
        doc = self.json_of("sample", "-s", "T = z * Seq(T)", "--point", "z=0.2", "-n", "3", "--builder", "json",
                           "--seed", "5")
        for obj in doc["objects"]:
            self.assertIn("prod", json.dumps(obj["object"]))

    def test_seed_determinism_and_precision_env(self):
        args = ("sample", "-s", BINARY_TREES, "--point", "z=0.45", "-n", "20", "--seed", "11")
        a = self.json_of(*args)
        b = self.json_of(*args, env={"COMBKIT_PRECISION": "8"})
        self.assertEqual([o["object"] for o in a["objects"]], [o["object"] for o in b["objects"]])
        unseeded = run("sample", "-s", BINARY_TREES, "--point", "z=0.3")
        self.assertEqual(unseeded.returncode, 0)
        self.assertTrue(unseeded.stdout.startswith("seed "))

    def test_replay_round_trip(self):
        doc = self.json_of("sample", "-s", BINARY_TREES, "--point", "z=0.45", "-n", "1", "--target", "z=9",
                           "--seed", "2", "--traces")
        obj = doc["objects"][0]
        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
            json.dump(obj["trace"], f)
            path = f.name
        try:
            back = self.json_of("replay", "-s", BINARY_TREES, "--trace", path)
            self.assertEqual(back["objects"][0]["object"], obj["object"])
            broken = dict(obj["trace"], version=2)
            Path(path).write_text(json.dumps(broken))
            err = self.json_of("replay", "-s", BINARY_TREES, "--trace", path, code=1)
            self.assertEqual(err["error"]["code"], "InvalidTrace")
        finally:
            os.unlink(path)

    def test_uniformity(self):
        doc = self.json_of("uniformity", "-s", "UB = z + (z*UB) + (z*UB*UB)", "--sizes", "3..5", "--samples",
                           "2000", "--seed", "1")
        self.assertEqual([r["count"] for r in doc["rows"]], [2, 4, 9])
        err = self.json_of("uniformity", "-s", BINARY_TREES, "--sizes", "3..3", "--samples", "10", "--seed", "1",
                           code=3)
        self.assertEqual(err["error"]["code"], "TooFewCategories")

    def test_bench(self):
        doc = self.json_of("bench-rejection", "-s", BINARY_TREES, "--point", "z=0.48", "--window", "z=40..60",
                           "--samples", "1000", "--seed", "1")
        self.assertEqual(doc["outcome_mismatches"], 0)
        self.assertEqual(doc["trace_mismatches"], 0)
        self.assertEqual(doc["early"]["accepted"], doc["baseline"]["accepted"])

    def test_errors_and_exit_codes(self):
        err = self.json_of("count", "-s", "B = z +", code=2)
        self.assertEqual(err["error"]["code"], "EmptyAlternative")
        self.assertEqual(err["error"]["position"]["line"], 1)
        self.json_of("sample", "-s", BINARY_TREES, "--point", "z=0.4", "--target", "z=2", code=3)
        self.assertEqual(run().returncode, 1)
        self.assertEqual(run("count", "--bogus").returncode, 1)
        text = run("count", "-s", "B = z +")
        self.assertTrue(text.stderr.startswith("error: EmptyAlternative"))


if __name__ == "__main__":
    BINARY = os.path.abspath(sys.argv[1])
    SCHEMAS = Path(sys.argv[2])
    unittest.main(argv=sys.argv[:1], verbosity=2)
