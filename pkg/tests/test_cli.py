import json
from pathlib import Path

import pytest

from mutrobust.cli import main
from tests.conftest import CORPUS

BUBBLE = str(CORPUS / "bubble.mini")
SUITE = str(CORPUS / "tests")
BASIC = str(CORPUS / "tests-basic")

FAST = ["--max-steps", "20000"]


def run_cli(args, capsys=None):
    code = main([str(a) for a in args])
    return code


def test_measure_writes_a_schema_tagged_report(tmp_path, capsys):
    out = tmp_path / "measure.json"
    code = run_cli(
        ["measure", "--target", BUBBLE, "--suite", SUITE, "--seed", 7,
         "--per-op-samples", 30, "--output", out, *FAST]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "mutational-robustness-report/1"
    assert set(doc["per_operator"]) == {"copy", "delete", "swap"}
    pooled = doc["pooled"]
    assert 0.0 <= pooled["mutrb"] <= 1.0
    assert pooled["ci95"] > 0.0
    assert pooled["unique_mutants"] == sum(
        doc["per_operator"][op]["unique_mutants"] for op in doc["per_operator"]
    )
    assert doc["seed"] == 7
    assert doc["config_digest"]
    assert doc["corpus_digests"]["target"]
    summary = capsys.readouterr().out
    assert "pooled MutRB" in summary


def test_exhaustive_report_matches_library_value(tmp_path):
    out = tmp_path / "exhaustive.json"
    code = run_cli(["exhaustive", "--target", BUBBLE, "--suite", SUITE,
                    "--seed", 1, "--output", out, *FAST])
    assert code == 0
    doc = json.loads(out.read_text())
    from mutrobust import EXACT, Limits, exhaustive_mutrb, load_suite, parse_tree

    rep = exhaustive_mutrb(
        parse_tree(Path(BUBBLE).read_text()), load_suite(SUITE), EXACT,
        Limits(max_steps=20_000),
    )
    assert doc["pooled"]["mutrb"] == pytest.approx(rep.pooled_mutrb, abs=1e-6)
    assert doc["pooled"]["ci95"] == 0.0


def test_coverage_command(tmp_path, capsys):
    out = tmp_path / "cov.json"
    code = run_cli(["coverage", "--target", BUBBLE, "--suite", SUITE,
                    "--seed", 1, "--output", out])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["covered_fraction"] == 1.0
    assert len(doc["counts"]) == doc["total_sites"]
    assert "statement coverage" in capsys.readouterr().out


def test_walk_emits_json_and_csv(tmp_path):
    out = tmp_path / "walk.json"
    code = run_cli(
        ["walk", "--target", BUBBLE, "--suite", SUITE, "--seed", 4,
         "--population", 3, "--steps", 2, "--robustness-samples", 0,
         "--size-cap", "on", "--output", out, *FAST]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "neutral-walk-report/1"
    assert len(doc["series"]) == 3
    csv_lines = (tmp_path / "walk.csv").read_text().splitlines()
    assert csv_lines[0] == "step,mean_size,mean_mutrb"
    assert len(csv_lines) == 4


def test_seed_bugs_and_repair_commands(tmp_path):
    out = tmp_path / "bugs.json"
    code = run_cli(["seed-bugs", "--target", BUBBLE, "--suite", BASIC,
                    "--seed", 3, "--n-defects", 1, "--output", out, *FAST])
    assert code == 0
    doc = json.loads(out.read_text())
    assert len(doc["defects"]) == 1
    assert doc["defects"][0]["held_out"]["input"]
    assert "buggy_source" in doc

    out2 = tmp_path / "repair.json"
    code = run_cli(
        ["repair", "--target", BUBBLE, "--suite", BASIC, "--seed", 3,
         "--n-defects", 1, "--n-variants", 300,
         "--mode", "exhaustive-first-order", "--output", out2, *FAST]
    )
    assert code == 0
    doc = json.loads(out2.read_text())
    assert doc["schema"] == "proactive-repair-report/1"
    assert doc["variants_generated"] > 0
    assert isinstance(doc["repairs"], list)


def test_sweep_is_byte_identical_across_runs_and_jobs(tmp_path):
    outs = []
    for run, jobs in (("a", 1), ("b", 1), ("c", 8)):
        out = tmp_path / f"sweep-{run}.json"
        code = run_cli(
            ["sweep", "--target", BUBBLE, "--suite", BASIC, "--seed", 3,
             "--n-values", "1,2", "--n-variants", 40, "--jobs", jobs,
             "--output", out, *FAST]
        )
        assert code == 0
        outs.append(out.read_bytes())
        outs.append((tmp_path / f"sweep-{run}.csv").read_bytes())
    assert outs[0] == outs[2] == outs[4]
    assert outs[1] == outs[3] == outs[5]


def test_broken_target_exits_3_without_a_report(tmp_path):
    broken = tmp_path / "broken.mini"
    broken.write_text("print 0;\n")
    out = tmp_path / "nope.json"
    code = run_cli(["measure", "--target", broken, "--suite", SUITE,
                    "--seed", 1, "--output", out])
    assert code == 3
    assert not out.exists()


def test_config_file_defaults_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({
        "target": BUBBLE, "suite": SUITE, "seed": 1,
        "per_op_samples": 5, "max_steps": 20000,
    }))
    out = tmp_path / "m.json"
    code = run_cli(["measure", "--config", cfg, "--seed", 9, "--output", out])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["seed"] == 9  # flag wins over the file value
    assert doc["config"]["per_op_samples"] == 5  # file value survives
    assert doc["config"]["comparator"] == "exact"  # documented default


def test_missing_seed_is_a_config_error(capsys):
    assert run_cli(["measure", "--target", BUBBLE, "--suite", SUITE]) == 2
    assert "seed" in capsys.readouterr().err


def test_zero_samples_is_a_config_error_naming_the_field(capsys):
    code = run_cli(["measure", "--target", BUBBLE, "--suite", SUITE,
                    "--seed", 1, "--per-op-samples", 0])
    assert code == 2
    assert "per_op_samples" in capsys.readouterr().err


def test_unknown_config_keys_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"target": BUBBLE, "suite": SUITE, "seed": 1,
                               "walk_speed": 3}))
    assert run_cli(["measure", "--config", cfg]) == 2
    assert "walk_speed" in capsys.readouterr().err


def test_linear_target_is_rejected_for_hermetic_commands(capsys):
    lin = str(CORPUS / "bubble.lin")
    assert run_cli(["measure", "--target", lin, "--suite", SUITE, "--seed", 1]) == 2


def test_reports_validate_against_shipped_schemas(tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    schema_dir = Path(__file__).resolve().parent.parent / "docs" / "schema"
    runs = {
        "mutational-robustness-report.json": ["measure", "--target", BUBBLE, "--suite",
                                              SUITE, "--seed", 7, "--per-op-samples", 10, *FAST],
        "coverage-report.json": ["coverage", "--target", BUBBLE, "--suite", SUITE, "--seed", 1],
        "neutral-walk-report.json": ["walk", "--target", BUBBLE, "--suite", SUITE,
                                     "--seed", 4, "--population", 2, "--steps", 1,
                                     "--robustness-samples", 0, *FAST],
        "seeded-defects-report.json": ["seed-bugs", "--target", BUBBLE, "--suite", BASIC,
                                       "--seed", 3, "--n-defects", 1, *FAST],
        "proactive-repair-report.json": ["repair", "--target", BUBBLE, "--suite", BASIC,
                                         "--seed", 3, "--n-defects", 1, "--n-variants", 50, *FAST],
        "seeded-bug-sweep-report.json": ["sweep", "--target", BUBBLE, "--suite", BASIC,
                                         "--seed", 3, "--n-values", "1", "--n-variants", 30, *FAST],
    }
    for schema_name, args in runs.items():
        out = tmp_path / f"{schema_name}.out.json"
        assert run_cli([*args, "--output", out]) == 0, schema_name
        schema = json.loads((schema_dir / schema_name).read_text())
        jsonschema.validate(json.loads(out.read_text()), schema)


def test_walk_stall_writes_partial_report_and_exits_4(tmp_path, capsys):
    out = tmp_path / "stall.json"
    code = run_cli(
        ["walk", "--target", BUBBLE, "--suite", SUITE, "--seed", 5,
         "--population", 30, "--steps", 3, "--walk-attempts", 3,
         "--robustness-samples", 0, "--output", out, *FAST]
    )
    assert code == 4
    doc = json.loads(out.read_text())
    assert doc["stalled_at_step"] == 1
