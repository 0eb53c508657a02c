"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to watch the lines as the
criteria complete.  Frozen golden values were produced by the exhaustive
oracle on the shipped corpus at default limits and are asserted exactly.
"""

import time
from contextlib import contextmanager
from dataclasses import replace

import pytest

from mutrobust import (
    CRASH_ONLY,
    EXACT,
    WHITESPACE,
    Limits,
    RobustnessReport,
    TestCase,
    canonical_key,
    estimate_mutrb,
    evaluate,
    exhaustive_mutrb,
    neutral_walk,
    replay,
    run_program,
    serialize,
)
from mutrobust.cli import main
from mutrobust.experiments import enumerate_unique_mutants
from mutrobust.harness import compare_output
from mutrobust.minilang import COMPLETED
from mutrobust.repair import (
    DEFECT_CLASSES,
    EXHAUSTIVE_FIRST_ORDER,
    EXTRA_STATEMENT,
    SAME_LINE,
    SAMPLED,
    proactive_repair,
    seed_defects,
    seeded_bug_sweep,
)
from tests.conftest import CORPUS

FAST = Limits(max_steps=20_000)

# exact exhaustive MutRB of the corpus sorters: Exact comparator, the shipped
# full-coverage 10-case suite, default limits; frozen after a verified run
GOLDEN_EXACT_MUTRB = {
    "bubble": (252, 612),
    "insertion": (177, 451),
    "merge": (966, 2190),
    "quick": (928, 2344),
}


@contextmanager
def criterion(number: int, budget_s: float, description: str):
    start = time.time()
    try:
        yield
    except BaseException:
        print(f"[criterion {number}] FAIL ({time.time() - start:.1f}s): {description}")
        raise
    elapsed = time.time() - start
    verdict = "PASS" if elapsed < budget_s else "FAIL"
    print(f"[criterion {number}] {verdict} ({elapsed:.1f}s < {budget_s:.0f}s): {description}")
    assert elapsed < budget_s, f"criterion {number} exceeded its runtime budget"


def test_criterion_1_formula_fidelity():
    with criterion(1, 1.0, "replayed 10-unique/3-neutral fixture pools to exactly 0.300000"):
        report = RobustnessReport.from_counts(
            {"copy": (4, 1), "delete": (3, 1), "swap": (3, 1)},
            EXACT, 1.0, seed=0, mode="replay",
        )
        assert report.pooled_unique == 10 and report.pooled_neutral == 3
        assert f"{report.pooled_mutrb:.6f}" == "0.300000"


def test_criterion_2_oracle_equivalence(bubble, suite):
    with criterion(2, 120.0, "estimator CIs bracket the exhaustive value in >= 9/10 seeds"):
        exact = exhaustive_mutrb(bubble, suite, EXACT)
        covered = 0
        for seed in range(1, 11):
            est = estimate_mutrb(bubble, suite, 200, EXACT, seed=seed)
            if abs(est.pooled_mutrb - exact.pooled_mutrb) <= est.ci95:
                covered += 1
        assert covered >= 9, f"only {covered}/10 intervals covered the exact value"


def test_criterion_3_nonzero_robustness_under_full_coverage(sorters, suite):
    with criterion(3, 300.0, "every sorter has exhaustive MutRB > 0 at full coverage"):
        for name, g in sorters.items():
            report = exhaustive_mutrb(g, suite, EXACT)
            assert report.coverage_fraction == 1.0, name
            assert report.pooled_mutrb > 0.0, name
            neutral, unique = GOLDEN_EXACT_MUTRB[name]
            assert (report.pooled_neutral, report.pooled_unique) == (neutral, unique), name
            assert report.pooled_mutrb == pytest.approx(neutral / unique), name


def test_criterion_4_comparator_monotonicity(bubble, suite):
    with criterion(4, 300.0, "crash-only >= whitespace >= exact on one mutant set"):
        unique_sets = enumerate_unique_mutants(bubble, suite)
        mutants = [m for ms in unique_sets.values() for m in ms]
        order = (EXACT, WHITESPACE, CRASH_ONLY)
        verdicts = {
            comp: [evaluate(m, suite.with_comparator(comp)).neutral for m in mutants]
            for comp in order
        }
        for i in range(len(mutants)):
            seq = [verdicts[c][i] for c in order]
            assert seq == sorted(seq)
        pooled = {c: sum(verdicts[c]) / len(mutants) for c in order}
        assert pooled[CRASH_ONLY] >= pooled[WHITESPACE] >= pooled[EXACT]
        assert pooled[CRASH_ONLY] > pooled[EXACT]


def test_criterion_5_operator_law_property_suites(sorters, suite):
    from tests import test_genome, test_properties

    with criterion(5, 60.0, "1,000-case operator-law suites and sampling uniformity"):
        test_properties.test_round_trip_over_random_programs()
        test_properties.test_closure_and_round_trip_over_random_mutants()
        test_properties.test_swap_involution_over_random_programs()
        test_properties.test_delete_and_copy_site_count_laws()
        test_properties.test_sampling_respects_coverage_restriction(sorters, suite)
        test_genome.test_sampling_is_uniform_over_eligible_sites()


def test_criterion_6_walk_soundness(insertion, suite):
    with criterion(6, 300.0, "50-step size-capped walk completes and re-verifies"):
        result = neutral_walk(
            insertion, suite, population=20, steps=50, size_cap=True,
            seed=20, robustness_samples=0,
        )
        assert result.completed
        assert len(result.series) == 51
        cap = insertion.site_count
        for step in result.series:
            assert step.mean_size <= cap
        assert len(result.final_population) == 20
        for variant in result.final_population:
            assert len(variant.provenance) == 50
            assert variant.genome.site_count <= cap
            assert evaluate(variant.genome, suite).neutral
            assert serialize(replay(insertion, variant.provenance)) == serialize(variant.genome)


def test_criterion_7_proactive_repair_witness(bubble, basic_suite):
    with criterion(7, 180.0, "seeded extra statement is repaired; generation is blind"):
        weights = {c: 0.0 for c in DEFECT_CLASSES} | {EXTRA_STATEMENT: 1.0}
        buggy, defects = seed_defects(
            bubble, basic_suite, 1, seed=3, limits=FAST, class_weights=weights
        )
        assert defects[0].defect_class == EXTRA_STATEMENT

        exhaustive = proactive_repair(
            buggy, basic_suite, defects, 600, seed=6,
            mode=EXHAUSTIVE_FIRST_ORDER, limits=FAST,
        )
        assert exhaustive.unique_bugs_fixed >= 1
        assert any(f.locality == SAME_LINE for f in exhaustive.findings)

        sampled = proactive_repair(
            buggy, basic_suite, defects, 500, seed=2, mode=SAMPLED, limits=FAST
        )
        assert sampled.unique_bugs_fixed >= 1

        # blinding: dummy held-out tests leave the generated set unchanged
        dummies = [replace(d, held_out=TestCase("dummy", "4 4", "x")) for d in defects]
        a = proactive_repair(buggy, basic_suite, defects, 150, seed=9, mode=SAMPLED, limits=FAST)
        b = proactive_repair(buggy, basic_suite, dummies, 150, seed=9, mode=SAMPLED, limits=FAST)
        assert a.generated_digests == b.generated_digests

        # independent re-verification of one same-line repair
        from mutrobust.repair import generate_neutral_variants

        variants, _ = generate_neutral_variants(
            buggy, basic_suite, 600, seed=6, mode=EXHAUSTIVE_FIRST_ORDER, limits=FAST
        )
        by_digest = {canonical_key(v.genome): v for v in variants}
        fix = next(f for f in exhaustive.findings if f.locality == SAME_LINE)
        repair_genome = by_digest[fix.variant_digest].genome
        assert evaluate(repair_genome, basic_suite, FAST).neutral
        d = defects[fix.defect_index]
        got = run_program(repair_genome, d.held_out.input, FAST)
        assert got.status == COMPLETED
        assert compare_output(got.output, d.held_out.expected, basic_suite.comparator)


def test_criterion_8_sweep_direction(bubble, basic_suite):
    with criterion(8, 600.0, "bugs seeded vs bugs fixed correlate positively (recorded seed)"):
        sweep = seeded_bug_sweep(
            bubble, basic_suite, list(range(1, 9)), n_variants=400, seed=3,
            mode=EXHAUSTIVE_FIRST_ORDER, limits=FAST,
        )
        assert len(sweep.points) == 8
        assert sweep.pearson_r is not None
        assert sweep.pearson_r > 0.0
        print(f"  [criterion 8 detail] fixed per n: "
              f"{[p.bugs_fixed for p in sweep.points]}, r = {sweep.pearson_r:.4f}")


def test_criterion_9_subcommand_determinism(tmp_path):
    with criterion(9, 300.0, "every subcommand is byte-identical at jobs=1 and jobs=8"):
        bubble = str(CORPUS / "bubble.mini")
        full = str(CORPUS / "tests")
        basic = str(CORPUS / "tests-basic")
        fast = ["--max-steps", "20000"]
        commands = {
            "measure": ["--target", bubble, "--suite", full, "--per-op-samples", "20", *fast],
            "exhaustive": ["--target", bubble, "--suite", full, *fast],
            "coverage": ["--target", bubble, "--suite", full],
            "walk": ["--target", bubble, "--suite", full, "--population", "3",
                     "--steps", "2", "--robustness-samples", "0", *fast],
            "seed-bugs": ["--target", bubble, "--suite", basic, "--n-defects", "1", *fast],
            "repair": ["--target", bubble, "--suite", basic, "--n-defects", "1",
                       "--n-variants", "60", *fast],
            "sweep": ["--target", bubble, "--suite", basic, "--n-values", "1,2",
                      "--n-variants", "40", *fast],
        }
        for command, args in commands.items():
            outputs = []
            for tag, jobs in (("a", "1"), ("b", "8")):
                out = tmp_path / f"{command}-{tag}.json"
                code = main([command, *args, "--seed", "3", "--jobs", jobs,
                             "--output", str(out)])
                assert code == 0, command
                blob = out.read_bytes()
                csv_path = out.with_suffix(".csv")
                if csv_path.exists():
                    blob += csv_path.read_bytes()
                outputs.append(blob)
            assert outputs[0] == outputs[1], f"{command} differs across jobs"
