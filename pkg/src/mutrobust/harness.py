"""Test execution harness: verdicts, output comparators, deduplication.

A variant is *neutral* when every suite case passes under the suite's
comparator.  All other outcomes land in the non-neutral bucket: a runtime
fault on any case is ``crashed``, hitting the step budget is ``timeout``,
a rejected comparison is ``test_failed``, and a variant that fails the
static well-formedness check never runs at all and is ``invalid``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import SuiteError
from .genome import Genome, Variant, canonical_key
from .minilang import COMPLETED, RUNTIME_ERROR, STEP_LIMIT, Limits, run_program, well_formed_error

EXACT = "exact"
WHITESPACE = "whitespace"
CRASH_ONLY = "crash-only"
COMPARATORS = (EXACT, WHITESPACE, CRASH_ONLY)

NEUTRAL = "neutral"
TEST_FAILED = "test_failed"
CRASHED = "crashed"
TIMEOUT = "timeout"
INVALID = "invalid"


def compare_output(actual: str, expected: str, comparator: str) -> bool:
    if comparator == EXACT:
        return actual == expected
    if comparator == WHITESPACE:
        return actual.split() == expected.split()
    if comparator == CRASH_ONLY:
        return True
    raise ValueError(f"unknown comparator {comparator!r}")


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class, despite the name

    name: str
    input: str
    expected: str
    weight: int = 1


@dataclass(frozen=True)
class TestSuite:
    __test__ = False  # not a pytest class, despite the name

    cases: tuple[TestCase, ...]
    comparator: str = EXACT

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise SuiteError(f"unknown comparator {self.comparator!r}")
        names = [c.name for c in self.cases]
        if len(set(names)) != len(names):
            raise SuiteError("test case names must be unique within a suite")

    def with_comparator(self, comparator: str) -> "TestSuite":
        return replace(self, comparator=comparator)


def load_suite(directory: str | Path, comparator: str = EXACT) -> TestSuite:
    """Load ``<name>.in`` / ``<name>.out`` pairs, ordered by name.

    One trailing newline is stripped from each ``.out`` file so expected
    outputs can live in ordinary text files.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise SuiteError(f"suite directory not found: {directory}")
    cases = []
    for in_path in sorted(directory.glob("*.in")):
        out_path = in_path.with_suffix(".out")
        if not out_path.is_file():
            raise SuiteError(f"missing expected-output file: {out_path}")
        expected = out_path.read_text()
        if expected.endswith("\n"):
            expected = expected[:-1]
        cases.append(TestCase(in_path.stem, in_path.read_text(), expected))
    if not cases:
        raise SuiteError(f"no test cases found in {directory}")
    return TestSuite(tuple(cases), comparator)


@dataclass(frozen=True)
class Verdict:
    outcome: str
    first_failure: str | None = None
    cases_run: int = 0

    @property
    def neutral(self) -> bool:
        return self.outcome == NEUTRAL


def evaluate(target: Variant | Genome, suite: TestSuite, limits: Limits | None = None) -> Verdict:
    """Judge one variant against a suite; short-circuits on the first failure."""
    genome = target.genome if isinstance(target, Variant) else target
    if well_formed_error(genome) is not None:
        return Verdict(INVALID, None, 0)
    ran = 0
    for case in suite.cases:
        ex = run_program(genome, case.input, limits)
        ran += 1
        if ex.status == RUNTIME_ERROR:
            return Verdict(CRASHED, None, ran)
        if ex.status == STEP_LIMIT:
            return Verdict(TIMEOUT, None, ran)
        assert ex.status == COMPLETED
        if not compare_output(ex.output, case.expected, suite.comparator):
            return Verdict(TEST_FAILED, case.name, ran)
    return Verdict(NEUTRAL, None, ran)


class DedupLedger:
    """Insert-if-absent set of canonical digests; safe for concurrent offers."""

    def __init__(self):
        self.seen: set[str] = set()
        self.unique_count = 0
        self.duplicate_count = 0
        self._lock = threading.Lock()

    def offer(self, genome: Genome) -> bool:
        key = canonical_key(genome)
        with self._lock:
            if key in self.seen:
                self.duplicate_count += 1
                return False
            self.seen.add(key)
            self.unique_count += 1
            return True


def dedup(ledger: DedupLedger, genome: Genome) -> bool:
    """True when the genome's canonical form has not been seen before."""
    return ledger.offer(genome)
