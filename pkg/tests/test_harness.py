import random

import pytest

from mutrobust import (
    CRASH_ONLY,
    DELETE,
    EXACT,
    SWAP,
    WHITESPACE,
    DedupLedger,
    Limits,
    Mutation,
    SuiteError,
    TestCase,
    TestSuite,
    apply_mutation,
    compare_output,
    dedup,
    evaluate,
    full_coverage,
    load_suite,
    parse_tree,
    sample_mutation,
)
from mutrobust.harness import CRASHED, INVALID, NEUTRAL, TEST_FAILED, TIMEOUT
from tests.conftest import CORPUS, corpus_source


def test_compare_output_modes():
    assert compare_output("1 2 3 ", "1 2 3", WHITESPACE)
    assert not compare_output("1 2 3 ", "1 2 3", EXACT)
    assert compare_output("garbage", "anything", CRASH_ONLY)
    assert compare_output("same", "same", EXACT)
    assert not compare_output("1 2", "1 3", WHITESPACE)


def test_original_bubble_is_neutral(bubble, suite):
    v = evaluate(bubble, suite)
    assert v.outcome == NEUTRAL
    assert v.cases_run == len(suite.cases)


def test_deleting_the_swap_statement_fails_an_unsorted_case(suite):
    g = parse_tree(corpus_source("bubble"))
    # the statement assigning a[j - 1] inside the inner if
    target = next(
        s for s in g.sites if g.text.splitlines()[s.span[0] - 1].strip() == "a[j - 1] := a[j];"
    )
    broken = apply_mutation(g, Mutation(DELETE, None, target))
    v = evaluate(broken, suite)
    assert v.outcome == TEST_FAILED
    # first failure is the first case containing an inversion
    assert v.first_failure == "04_pair_reversed"
    assert v.cases_run == 4


def test_nonterminating_variant_times_out(suite):
    g = parse_tree("while 0 < 1 {\n}\nprint 0;\n")
    case = TestCase("t", "", "0 ")
    v = evaluate(g, TestSuite((case,)), Limits(max_steps=2000))
    assert v.outcome == TIMEOUT


def test_crash_verdict_on_runtime_fault():
    g = parse_tree("x := 1 / 0;")
    v = evaluate(g, TestSuite((TestCase("t", "", ""),)))
    assert v.outcome == CRASHED
    assert v.cases_run == 1


def test_invalid_verdict_for_stray_break():
    # breaks are syntactically fine anywhere; placement is a static check,
    # the hermetic analog of a mutant that does not compile
    v = evaluate(parse_tree("x := 1;\nbreak;\n"), TestSuite((TestCase("t", "", "1 "),)))
    assert v.outcome == INVALID
    assert v.cases_run == 0


def test_swap_can_make_a_variant_invalid(suite):
    g = parse_tree(corpus_source("bubble"))
    lines = g.text.splitlines()
    brk = next(s for s in g.sites if lines[s.span[0] - 1].strip() == "break;")
    first = g.sites[0]  # n := inlen, outside every loop
    moved = apply_mutation(g, Mutation(SWAP, first, brk))
    assert evaluate(moved, suite).outcome == INVALID


def test_crash_only_suite_accepts_wrong_output():
    g = parse_tree("print 42;")
    suite = TestSuite((TestCase("t", "", "something else"),), CRASH_ONLY)
    assert evaluate(g, suite).outcome == NEUTRAL


def test_comparator_monotonicity_on_random_bubble_mutants(bubble, suite):
    order = (EXACT, WHITESPACE, CRASH_ONLY)
    rng = random.Random(99)
    cov = full_coverage(bubble)
    limits = Limits(max_steps=20_000)
    for _ in range(60):
        kind = rng.choice(("copy", "delete", "swap"))
        mutant = apply_mutation(bubble, sample_mutation(bubble, cov, kind, rng))
        neutral = [evaluate(mutant, suite.with_comparator(c), limits).neutral for c in order]
        # neutrality may only appear, never disappear, as the comparator loosens
        assert neutral == sorted(neutral), neutral


def test_verdict_determinism(bubble, suite):
    assert evaluate(bubble, suite) == evaluate(bubble, suite)


# --- suite loading ---


def test_load_suite_orders_and_strips_one_newline():
    suite = load_suite(CORPUS / "tests")
    names = [c.name for c in suite.cases]
    assert names == sorted(names)
    by_name = {c.name: c for c in suite.cases}
    assert by_name["04_pair_reversed"].expected == "1 2 "
    assert by_name["01_empty"].expected == ""


def test_load_suite_missing_out_file(tmp_path):
    (tmp_path / "a.in").write_text("1\n")
    with pytest.raises(SuiteError):
        load_suite(tmp_path)


def test_duplicate_case_names_rejected():
    case = TestCase("dup", "", "")
    with pytest.raises(SuiteError):
        TestSuite((case, case))


# --- deduplication ---


def test_dedup_same_genome_twice(bubble):
    ledger = DedupLedger()
    assert dedup(ledger, bubble) is True
    assert dedup(ledger, bubble) is False
    assert ledger.unique_count == 1
    assert ledger.duplicate_count == 1


def test_dedup_folds_statements_after_exit():
    ledger = DedupLedger()
    assert dedup(ledger, parse_tree("x := 1;\nexit;\n"))
    assert not dedup(ledger, parse_tree("x := 1;\nexit;\nx := 2;\n"))


def test_dedup_ledger_is_safe_under_concurrent_offers(bubble):
    import concurrent.futures

    mutants = []
    cov = full_coverage(bubble)
    rng = random.Random(31)
    for _ in range(40):
        mutants.append(apply_mutation(bubble, sample_mutation(bubble, cov, "delete", rng)))
    ledger = DedupLedger()
    with concurrent.futures.ThreadPoolExecutor(max_workers=8) as pool:
        list(pool.map(lambda g: dedup(ledger, g), mutants * 5))
    assert ledger.unique_count + ledger.duplicate_count == 200
    assert ledger.unique_count == len(ledger.seen)


def test_dedup_counter_conservation_over_random_mutants(bubble):
    ledger = DedupLedger()
    cov = full_coverage(bubble)
    rng = random.Random(7)
    for _ in range(600):
        kind = rng.choice(("copy", "delete", "swap"))
        mutant = apply_mutation(bubble, sample_mutation(bubble, cov, kind, rng))
        dedup(ledger, mutant)
    assert ledger.unique_count + ledger.duplicate_count == 600
    assert ledger.unique_count == len(ledger.seen)
