"""Robustness measurement and neutral-landscape walks.

``estimate_mutrb`` samples mutations with rejection against a dedup ledger
until it has the requested number of unique mutants per operator (or the
eligible space is exhausted), then scores them.  ``exhaustive_mutrb``
enumerates every valid mutation instead and is the desk-scale oracle the
estimator is checked against.  ``neutral_walk`` iterates populations of
cumulative neutral variants, one extra accepted mutation per step.

Everything is deterministic given the master seed, and independent of the
worker count: random draws use seeds derived per task, and parallel
evaluation preserves task order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import ExperimentError, MutationError, OriginalFailsSuiteError
from .genome import (
    OPERATOR_KINDS,
    Genome,
    Mutation,
    TreeGenome,
    Variant,
    apply_mutation,
    canonical_key,
    derive_rng,
    enumerate_mutations,
    size_of,
)
from .harness import DedupLedger, TestSuite, Verdict, evaluate
from .minilang import CoverageMap, Limits, coverage_of

Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class OperatorStats:
    unique: int       # unique mutants actually evaluated
    neutral: int
    mutrb: float
    attempts: int
    space: int = 0    # size of the operator's full unique-mutant space
    exhausted: bool = False
    skipped: bool = False


@dataclass(frozen=True)
class RobustnessReport:
    per_operator: dict[str, OperatorStats]
    pooled_unique: int
    pooled_neutral: int
    pooled_mutrb: float
    ci95: float
    comparator: str
    coverage_fraction: float
    seed: int | None
    mode: str

    @classmethod
    def from_counts(
        cls,
        per_operator: dict[str, tuple[int, int]],
        comparator: str,
        coverage_fraction: float,
        seed: int | None,
        mode: str,
        exact: bool = False,
    ) -> "RobustnessReport":
        """Assemble a report from recorded (unique, neutral) tallies.

        Without known per-operator space sizes the pooled value is the plain
        ratio of summed counts; this is the replay path for recorded verdict
        fixtures.
        """
        stats = {}
        for op, (unique, neutral) in per_operator.items():
            stats[op] = OperatorStats(
                unique, neutral, neutral / unique if unique else 0.0, unique, space=unique
            )
        return _pool_report(stats, comparator, coverage_fraction, seed, mode, exact=exact)


def _binomial_ci95(p: float, n: int) -> float:
    if n <= 0:
        return 0.0
    return Z95 * math.sqrt(p * (1.0 - p) / n)


def gate_original(target: Genome, suite: TestSuite, limits: Limits | None = None) -> None:
    """Refuse to start unless the suite is non-empty and accepts the original."""
    if not suite.cases:
        raise OriginalFailsSuiteError("suite has no test cases")
    verdict = evaluate(target, suite, limits)
    if not verdict.neutral:
        raise OriginalFailsSuiteError(
            f"original program fails its suite: {verdict.outcome}"
            + (f" on {verdict.first_failure}" if verdict.first_failure else "")
        )


def evaluate_many(
    genomes: list[Genome], suite: TestSuite, limits: Limits | None, jobs: int = 1
) -> list[Verdict]:
    """Evaluate a batch, preserving order; results do not depend on jobs."""
    if jobs <= 1 or len(genomes) <= 1:
        return [evaluate(g, suite, limits) for g in genomes]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda g: evaluate(g, suite, limits), genomes))


def _operator_pools(
    genome: Genome, coverage: CoverageMap
) -> dict[str, list[Mutation]]:
    return {kind: enumerate_mutations(genome, coverage, kind) for kind in OPERATOR_KINDS}


def estimate_mutrb(
    target: Genome,
    suite: TestSuite,
    per_op_samples: int,
    comparator: str,
    seed: int,
    limits: Limits | None = None,
    jobs: int = 1,
) -> RobustnessReport:
    """Sampled robustness: unique-mutant fraction that stays neutral.

    For each operator, mutations are drawn uniformly and rejected against a
    per-operator dedup ledger until ``per_op_samples`` unique mutants exist
    or every eligible mutation has been tried.  An infeasible operator (no
    eligible swap pair, say) is recorded as skipped.
    """
    if per_op_samples < 1:
        raise ExperimentError("per_op_samples must be at least 1")
    scored = suite.with_comparator(comparator)
    gate_original(target, scored, limits)
    coverage = coverage_of(target, suite, limits)
    if not any(c > 0 for c in coverage.counts.values()):
        raise MutationError("no covered sites to mutate")

    per_op: dict[str, OperatorStats] = {}
    for kind in OPERATOR_KINDS:
        pool = enumerate_mutations(target, coverage, kind)
        if not pool:
            per_op[kind] = OperatorStats(0, 0, 0.0, 0, skipped=True)
            continue
        # the full unique-space size is cheap to know (apply + digest, no
        # evaluation) and makes the pooled estimate a stratified one that
        # converges to the exhaustive oracle's value
        space = len({canonical_key(apply_mutation(target, m)) for m in pool})
        rng = derive_rng(seed, "estimate", kind)
        ledger = DedupLedger()
        uniques: list[Genome] = []
        tried: set[int] = set()
        attempts = 0
        while len(uniques) < per_op_samples and len(tried) < len(pool):
            k = rng.randrange(len(pool))
            tried.add(k)
            attempts += 1
            mutant = apply_mutation(target, pool[k])
            if ledger.offer(mutant):
                uniques.append(mutant)
        verdicts = evaluate_many(uniques, scored, limits, jobs)
        neutral = sum(1 for v in verdicts if v.neutral)
        per_op[kind] = OperatorStats(
            unique=len(uniques),
            neutral=neutral,
            mutrb=neutral / len(uniques) if uniques else 0.0,
            attempts=attempts,
            space=space,
            exhausted=len(uniques) < per_op_samples,
        )

    return _pool_report(per_op, comparator, coverage.covered_fraction, seed, "estimate")


def _pool_report(per_op, comparator, coverage_fraction, seed, mode, exact=False) -> RobustnessReport:
    """Pool per-operator stats; the point estimate weights operators by the
    size of their unique-mutant spaces (strata), which reduces to the plain
    ratio of sums whenever every operator was fully enumerated."""
    pooled_unique = sum(s.unique for s in per_op.values())
    pooled_neutral = sum(s.neutral for s in per_op.values())
    total_space = sum(s.space for s in per_op.values())
    if total_space > 0:
        pooled = sum(s.space * s.mutrb for s in per_op.values()) / total_space
    else:
        pooled = pooled_neutral / pooled_unique if pooled_unique else 0.0
    ci = 0.0 if (exact or mode == "exhaustive") else _binomial_ci95(pooled, pooled_unique)
    return RobustnessReport(
        per_op, pooled_unique, pooled_neutral, pooled, ci,
        comparator, coverage_fraction, seed, mode,
    )


def enumerate_unique_mutants(
    target: Genome,
    suite: TestSuite,
    limits: Limits | None = None,
    cap: int = 250_000,
) -> dict[str, list[Genome]]:
    """Every unique first-order mutant per operator, deduplicated per operator.

    The mutant set depends only on the target and the suite's coverage, not
    on any comparator, so comparator comparisons run on identical sets.
    """
    coverage = coverage_of(target, suite, limits)
    pools = _operator_pools(target, coverage)
    total = sum(len(p) for p in pools.values())
    if total > cap:
        raise ExperimentError(
            f"eligible mutation space ({total}) exceeds the enumeration cap ({cap})"
        )
    out: dict[str, list[Genome]] = {}
    for kind in OPERATOR_KINDS:
        ledger = DedupLedger()
        uniques = []
        for m in pools[kind]:
            mutant = apply_mutation(target, m)
            if ledger.offer(mutant):
                uniques.append(mutant)
        out[kind] = uniques
    return out


def exhaustive_mutrb(
    target: Genome,
    suite: TestSuite,
    comparator: str,
    limits: Limits | None = None,
    cap: int = 250_000,
    jobs: int = 1,
) -> RobustnessReport:
    """Exact robustness over the full deduplicated first-order mutant space."""
    scored = suite.with_comparator(comparator)
    gate_original(target, scored, limits)
    coverage = coverage_of(target, suite, limits)
    pools = _operator_pools(target, coverage)
    unique_sets = enumerate_unique_mutants(target, suite, limits, cap)
    per_op: dict[str, OperatorStats] = {}
    for kind in OPERATOR_KINDS:
        uniques = unique_sets[kind]
        if not uniques:
            per_op[kind] = OperatorStats(0, 0, 0.0, len(pools[kind]), skipped=True)
            continue
        verdicts = evaluate_many(uniques, scored, limits, jobs)
        neutral = sum(1 for v in verdicts if v.neutral)
        per_op[kind] = OperatorStats(
            unique=len(uniques),
            neutral=neutral,
            mutrb=neutral / len(uniques),
            attempts=len(pools[kind]),
            space=len(uniques),
            exhausted=True,
        )
    return _pool_report(per_op, comparator, coverage.covered_fraction, None, "exhaustive")


# ---------------------------------------------------------------------------
# Cumulative neutral walks


@dataclass(frozen=True)
class WalkStep:
    step: int
    mean_size: float
    mean_mutrb: float | None
    population: tuple[str, ...]  # canonical digests of the members


@dataclass(frozen=True)
class WalkResult:
    series: tuple[WalkStep, ...]
    final_population: tuple[Variant, ...]
    size_unit: str
    stalled_at_step: int | None = None

    @property
    def completed(self) -> bool:
        return self.stalled_at_step is None


class _Member:
    __slots__ = ("variant", "coverage", "pools", "kinds")

    def __init__(self, variant: Variant, coverage: CoverageMap):
        self.variant = variant
        self.coverage = coverage
        self.pools: dict[str, list[Mutation]] = {}
        self.kinds: list[str] | None = None


def _member_pools(member: _Member) -> tuple[list[str], dict[str, list[Mutation]]]:
    if member.kinds is None:
        pools = _operator_pools(member.variant.genome, member.coverage)
        member.pools = pools
        member.kinds = [k for k in OPERATOR_KINDS if pools[k]]
    return member.kinds, member.pools


def _sample_member_mutation(member: _Member, rng) -> Mutation:
    kinds, pools = _member_pools(member)
    if not kinds:
        raise MutationError("no feasible mutation for this member")
    kind = rng.choice(kinds)
    return rng.choice(pools[kind])


def _sampled_robustness(
    member: _Member, suite: TestSuite, limits, samples: int, rng, jobs: int
) -> float:
    mutants = []
    for _ in range(samples):
        m = _sample_member_mutation(member, rng)
        mutants.append(apply_mutation(member.variant.genome, m))
    verdicts = evaluate_many(mutants, suite, limits, jobs)
    return sum(1 for v in verdicts if v.neutral) / samples


def neutral_walk(
    target: Genome,
    suite: TestSuite,
    population: int,
    steps: int,
    size_cap: bool,
    seed: int,
    limits: Limits | None = None,
    robustness_samples: int = 30,
    attempts_per_step: int | None = None,
    jobs: int = 1,
) -> WalkResult:
    """Populations of cumulative neutral variants, one more edit per step.

    Step k+1 is refilled by cycling over the step-k members, mutating each
    once against its own recomputed coverage and keeping neutral results
    (size-capped at the original's size when requested) until ``population``
    members exist.  ``robustness_samples`` mutations per member estimate the
    population's mean robustness; 0 disables that estimate.
    """
    if population < 1:
        raise ExperimentError("population must be at least 1")
    if steps < 0:
        raise ExperimentError("steps must not be negative")
    gate_original(target, suite, limits)
    origin_key = canonical_key(target)
    origin_size = size_of(target)
    budget = attempts_per_step if attempts_per_step is not None else max(200 * population, 1000)

    members = [_Member(Variant(target, (), origin_key), coverage_of(target, suite, limits))]
    series: list[WalkStep] = [
        _walk_step(0, members, suite, limits, robustness_samples, seed, jobs)
    ]

    for k in range(1, steps + 1):
        parents = members
        accepted: list[_Member] = []
        attempt = 0
        stalled = False
        while len(accepted) < population:
            # cycle over the previous generation, one mutation per attempt;
            # a wave covers the currently missing slots so batches and
            # results are identical at any worker count
            need = population - len(accepted)
            candidates: list[tuple[_Member, Genome, Mutation]] = []
            while len(candidates) < need and attempt < budget:
                parent = parents[attempt % len(parents)]
                rng = derive_rng(seed, "walk", k, attempt)
                attempt += 1
                try:
                    m = _sample_member_mutation(parent, rng)
                except MutationError:
                    continue
                child = apply_mutation(parent.variant.genome, m)
                if size_cap and size_of(child) > origin_size:
                    continue
                candidates.append((parent, child, m))
            verdicts = evaluate_many([c[1] for c in candidates], suite, limits, jobs)
            for (parent, child, m), verdict in zip(candidates, verdicts):
                if verdict.neutral and len(accepted) < population:
                    variant = Variant(child, parent.variant.provenance + (m,), origin_key)
                    accepted.append(_Member(variant, coverage_of(child, suite, limits)))
            if attempt >= budget and len(accepted) < population:
                stalled = True
                break
        if stalled:
            if accepted:
                series.append(
                    _walk_step(k, accepted, suite, limits, robustness_samples, seed, jobs)
                )
                members = accepted
            return WalkResult(
                tuple(series),
                tuple(m.variant for m in members),
                _size_unit(target),
                stalled_at_step=k,
            )
        members = accepted
        series.append(_walk_step(k, members, suite, limits, robustness_samples, seed, jobs))

    return WalkResult(tuple(series), tuple(m.variant for m in members), _size_unit(target))


def _size_unit(genome: Genome) -> str:
    return "sites" if isinstance(genome, TreeGenome) else "instructions"


def _walk_step(
    k: int, members: list[_Member], suite, limits, robustness_samples, seed, jobs
) -> WalkStep:
    mean_size = sum(size_of(m.variant.genome) for m in members) / len(members)
    mean_mutrb = None
    if robustness_samples > 0:
        vals = []
        for idx, member in enumerate(members):
            rng = derive_rng(seed, "walk-robustness", k, idx)
            vals.append(
                _sampled_robustness(member, suite, limits, robustness_samples, rng, jobs)
            )
        mean_mutrb = sum(vals) / len(vals)
    digests = tuple(canonical_key(m.variant.genome) for m in members)
    return WalkStep(k, mean_size, mean_mutrb, digests)
