"""CLI commands, exit codes, determinism, and golden reports."""

import io
import json
from contextlib import redirect_stdout
from pathlib import Path

import pytest

from conefix.cli import main

REPO_ROOT = Path(__file__).resolve().parent.parent
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"
PROBLEMS = REPO_ROOT / "problems"


def run_cli(argv):
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = main(argv)
    return code, buffer.getvalue()


def write_problem(tmp_path, doc, name="problem.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def broken_metric_doc():
    return {
        "space": {
            "dim": 2,
            "norm": "infinity",
            "cone": {
                "generators": [[1.0, 0.0], [0.0, 1.0]],
                "facets": [[1.0, 0.0], [0.0, 1.0]],
            },
            "metric": {
                "kind": "table",
                "labels": ["a", "b"],
                "entries": [["a", "b", [1.0, 1.0]], ["b", "a", [2.0, 1.0]]],
            },
        },
    }


class TestExitCodes:
    def test_validate_ok(self):
        code, out = run_cli(["validate", str(PROBLEMS / "banach_scalar.json")])
        assert code == 0
        assert "exit_status" in out

    def test_validate_asymmetric_table_names_axiom_b(self, tmp_path):
        path = write_problem(tmp_path, broken_metric_doc())
        code, out = run_cli(["validate", path, "--output", "machine"])
        assert code == 2
        assert "axiom (b)" in out
        assert "metric.axiom_b_pass=false" in out

    def test_generator_outside_facets_reported(self, tmp_path):
        doc = broken_metric_doc()
        doc["space"]["cone"]["generators"] = [[1.0, 0.0], [-0.5, 1.0]]
        doc["space"]["metric"] = {
            "kind": "lifted",
            "base": "euclidean",
            "weight": [1.0, 0.0],
            "labels": ["a", "b"],
            "positions": {"a": [0.0], "b": [1.0]},
        }
        path = write_problem(tmp_path, doc)
        code, out = run_cli(["validate", path, "--output", "machine"])
        assert code == 2
        assert "consistency" in out

    def test_unknown_key_is_input_error(self, tmp_path):
        doc = broken_metric_doc()
        doc["surprise"] = True
        path = write_problem(tmp_path, doc)
        code, out = run_cli(["check", path])
        assert code == 2
        assert "surprise" in out

    def test_check_ok(self):
        code, out = run_cli(["check", str(PROBLEMS / "finite_ladder.json"), "--output", "machine"])
        assert code == 0
        assert "i1_pass=true" in out
        assert "contraction_pass=true" in out

    def test_check_missing_coefficients(self, tmp_path):
        doc = json.loads((PROBLEMS / "finite_ladder.json").read_text())
        del doc["coefficients"]
        path = write_problem(tmp_path, doc)
        code, out = run_cli(["check", path])
        assert code == 2
        assert "coefficients" in out

    def test_check_hypothesis_failure_names_i4(self, tmp_path):
        doc = json.loads((PROBLEMS / "finite_ladder.json").read_text())
        doc["coefficients"]["A4"] = [[0.0, 0.0], [-0.1, 0.0]]
        path = write_problem(tmp_path, doc)
        code, out = run_cli(["check", path, "--output", "machine"])
        assert code == 3
        assert "i4_pass=false" in out
        assert "witness.0.condition=i4" in out

    def test_declared_k_below_audit_is_input_error(self, tmp_path):
        # obtuse cone with normal constant ~1.6, declared 1.0
        import conefix

        cone = conefix.skewed_cone_2d(1.6)
        doc = {
            "space": {
                "dim": 2,
                "norm": "two",
                "cone": {
                    "generators": cone.generators.tolist(),
                    "facets": cone.facets.tolist(),
                    "normal_constant": 1.0,
                },
                "metric": {
                    "kind": "lifted",
                    "base": "euclidean",
                    "weight": cone.generators.sum(axis=0).tolist(),
                    "labels": ["a", "b"],
                    "positions": {"a": [0.0], "b": [1.0]},
                },
            },
            "mapping": {"kind": "table", "table": {"a": "a", "b": "a"}},
            "coefficients": {
                "kind": "constant",
                "A1": [[0.2, 0.0], [0.0, 0.2]],
                "A2": [[0.0, 0.0], [0.0, 0.0]],
                "A3": [[0.0, 0.0], [0.0, 0.0]],
                "A4": [[0.0, 0.0], [0.0, 0.0]],
            },
        }
        path = write_problem(tmp_path, doc)
        code, out = run_cli(["check", path])
        assert code == 2
        assert "audit" in out

    def test_solve_ok(self):
        code, out = run_cli(["solve", str(PROBLEMS / "banach_scalar.json"), "--output", "machine"])
        assert code == 0
        assert "point=" in out
        assert "certificate.beta_source=witnessed" in out

    def test_solve_hypothesis_failed(self, tmp_path):
        doc = json.loads((PROBLEMS / "finite_ladder.json").read_text())
        doc["coefficients"]["A4"] = [[0.0, 0.0], [-0.1, 0.0]]
        path = write_problem(tmp_path, doc)
        code, out = run_cli(["solve", path])
        assert code == 3

    def test_solve_non_convergence(self, tmp_path):
        doc = {
            "space": {
                "dim": 2,
                "norm": "infinity",
                "cone": {
                    "generators": [[1.0, 0.0], [0.0, 1.0]],
                    "facets": [[1.0, 0.0], [0.0, 1.0]],
                },
                "metric": {"kind": "lifted", "base": "euclidean", "weight": [1.0, 1.0], "m": 1},
            },
            "mapping": {"kind": "affine", "B": [[1.0]], "c": [1.0]},
            "solve": {"x0": [0.0], "eps": 1e-8, "beta": 0.5},
        }
        path = write_problem(tmp_path, doc)
        code, out = run_cli(["solve", path, "--force", "--output", "machine"])
        assert code == 4
        assert "exit_status=non-convergence" in out
        assert "trace_tail" in out

    def test_force_requires_beta(self, tmp_path):
        doc = json.loads((PROBLEMS / "banach_scalar.json").read_text())
        path = write_problem(tmp_path, doc)
        code, out = run_cli(["solve", path, "--force"])
        assert code == 2
        assert "beta" in out

    def test_force_recorded(self, tmp_path):
        doc = json.loads((PROBLEMS / "banach_scalar.json").read_text())
        doc["solve"]["beta"] = 0.5
        path = write_problem(tmp_path, doc)
        code, out = run_cli(["solve", path, "--force", "--output", "machine"])
        assert code == 0
        assert "forced=true" in out

    def test_probe_bad_range(self):
        code, out = run_cli(
            ["probe", "--k", "2", "--alpha-min", "0.2", "--alpha-max", "0.9"]
        )
        assert code == 2

    def test_probe_zero_instances(self):
        code, out = run_cli(
            [
                "probe", "--k", "2", "--alpha-min", "0.5", "--alpha-max", "0.9",
                "--instances", "0", "--output", "machine",
            ]
        )
        assert code == 0
        assert "row.0" not in out


class TestDeterminismAndGolden:
    @pytest.mark.parametrize(
        "name,argv",
        [
            ("check_banach_scalar.txt", ["check", "problems/banach_scalar.json", "--output", "machine"]),
            ("solve_banach_scalar.txt", ["solve", "problems/banach_scalar.json", "--output", "machine"]),
            ("check_finite_ladder.txt", ["check", "problems/finite_ladder.json", "--output", "machine"]),
            (
                "solve_finite_ladder.txt",
                ["solve", "problems/finite_ladder.json", "--audit-gap", "5", "--output", "machine"],
            ),
            (
                "probe_small.txt",
                [
                    "probe", "--k", "2", "--alpha-min", "0.5", "--alpha-max", "0.9",
                    "--instances", "5", "--seed", "3", "--output", "machine",
                ],
            ),
        ],
    )
    def test_byte_identical_to_golden(self, name, argv, monkeypatch):
        monkeypatch.chdir(REPO_ROOT)
        code1, out1 = run_cli(argv)
        code2, out2 = run_cli(argv)
        assert code1 == code2 == 0
        assert out1 == out2
        assert out1 == (GOLDEN_DIR / name).read_text(encoding="utf-8")


class TestSolveExtras:
    def test_trace_rows(self):
        code, out = run_cli(
            ["solve", str(PROBLEMS / "banach_scalar.json"), "--trace", "--output", "machine"]
        )
        assert code == 0
        assert "trace.0=" in out
        n_planned = int(next(l for l in out.splitlines() if l.startswith("certificate.n_planned=")).split("=")[1])
        assert f"trace.{n_planned}=" in out

    def test_audit_gap_zero_violations(self):
        code, out = run_cli(
            ["solve", str(PROBLEMS / "banach_scalar.json"), "--audit-gap", "10", "--output", "machine"]
        )
        assert code == 0
        assert "audit.step_violations=0" in out
        assert "audit.gap_violations=0" in out

    def test_probe_rows_marked_experimental(self):
        code, out = run_cli(
            [
                "probe", "--k", "2", "--alpha-min", "0.5", "--alpha-max", "0.9",
                "--instances", "3", "--seed", "1", "--output", "machine",
            ]
        )
        assert code == 0
        for i in range(3):
            assert f"row.{i}.label=EXPERIMENTAL" in out
        assert "label=EXPERIMENTAL" in out.splitlines()[2]


class TestHumanOutput:
    def test_human_mode_readable(self):
        code, out = run_cli(["check", str(PROBLEMS / "banach_scalar.json")])
        assert code == 0
        assert "exit_status" in out
        # six significant digits in human mode
        assert "0.5" in out
