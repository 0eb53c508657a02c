"""Defect seeding and proactive repair with populations of neutral variants.

Seeded defects are latent by construction: each keeps the visible suite
passing while a held-out test detects it.  The held-out test is synthesized
by searching for an input where the buggy and pristine outputs diverge
(short inputs exhaustively, then random ones); its expected output is the
pristine program's output on that input.

Variant generation for repair is blind to the held-out tests by interface:
generation only ever receives the buggy program and the visible suite, and
scoring against held-out tests happens strictly afterwards.  A variant
repairs a defect when it passes the visible suite and that defect's
held-out test.
"""

from __future__ import annotations

import copy
import itertools
import statistics
from dataclasses import dataclass

from . import syntax
from .errors import ExperimentError, SeedingError
from .experiments import _operator_pools, evaluate_many, gate_original
from .genome import (
    OPERATOR_KINDS,
    Genome,
    Mutation,
    Site,
    TreeGenome,
    Variant,
    apply_mutation,
    canonical_key,
    derive_rng,
    derive_seed,
)
from .harness import DedupLedger, TestCase, TestSuite, compare_output, evaluate
from .minilang import COMPLETED, Limits, coverage_of, run_program

MISSING_CONDITIONAL_CLAUSE = "missing_conditional_clause"
EXTRA_STATEMENT = "extra_statement"
CONSTANT_FOR_VARIABLE = "constant_for_variable"
WRONG_PARAMETER = "wrong_parameter"
DEFECT_CLASSES = (
    MISSING_CONDITIONAL_CLAUSE,
    EXTRA_STATEMENT,
    CONSTANT_FOR_VARIABLE,
    WRONG_PARAMETER,
)

SAME_LINE = "same_line"
NEAR = "near"
COMPENSATORY = "compensatory"
NEAR_LINE_RADIUS = 5

SAMPLED = "sampled"
EXHAUSTIVE_FIRST_ORDER = "exhaustive-first-order"
REPAIR_MODES = (SAMPLED, EXHAUSTIVE_FIRST_ORDER)

_GENERATION_WAVE = 32  # fixed so results are identical at any worker count


@dataclass(frozen=True)
class DefectSpec:
    """One seeded latent fault and the held-out test that detects it."""

    defect_class: str
    site: Site  # site of the defective statement in the buggy genome
    held_out: TestCase
    description: str


# ---------------------------------------------------------------------------
# Expression and condition accessors (in-place edits with exact undo)


def _expr_slots(stmt) -> list[tuple[object, object]]:
    """(node, setter) for every value-position expression node in a statement."""
    out: list[tuple[object, object]] = []

    def walk(e, setter):
        out.append((e, setter))
        if isinstance(e, syntax.Index):
            walk(e.index, lambda v, e=e: setattr(e, "index", v))
        elif isinstance(e, syntax.Neg):
            walk(e.operand, lambda v, e=e: setattr(e, "operand", v))
        elif isinstance(e, syntax.Bin):
            walk(e.left, lambda v, e=e: setattr(e, "left", v))
            walk(e.right, lambda v, e=e: setattr(e, "right", v))

    def walk_cond(c):
        if isinstance(c, syntax.Cmp):
            walk(c.left, lambda v, c=c: setattr(c, "left", v))
            walk(c.right, lambda v, c=c: setattr(c, "right", v))
        elif isinstance(c, syntax.Bool):
            for a in c.args:
                walk_cond(a)

    if isinstance(stmt, syntax.Assign):
        walk(stmt.value, lambda v, s=stmt: setattr(s, "value", v))
        if isinstance(stmt.target, syntax.Index):
            walk(stmt.target.index, lambda v, t=stmt.target: setattr(t, "index", v))
    elif isinstance(stmt, syntax.Read):
        if isinstance(stmt.target, syntax.Index):
            walk(stmt.target.index, lambda v, t=stmt.target: setattr(t, "index", v))
    elif isinstance(stmt, syntax.Print):
        walk(stmt.value, lambda v, s=stmt: setattr(s, "value", v))
    elif isinstance(stmt, (syntax.If, syntax.While)):
        walk_cond(stmt.cond)
    return out


def _droppable_clauses(stmt) -> list[tuple[syntax.Bool, int, object]]:
    """(bool_node, arg_index, setter_of_bool_node) for each droppable clause."""
    out: list[tuple[syntax.Bool, int, object]] = []
    if not isinstance(stmt, (syntax.If, syntax.While)):
        return out

    def walk(c, setter):
        if isinstance(c, syntax.Bool):
            for i in range(len(c.args)):
                out.append((c, i, setter))
            for i, a in enumerate(c.args):
                walk(a, lambda v, c=c, i=i: c.args.__setitem__(i, v))

    walk(stmt.cond, lambda v, s=stmt: setattr(s, "cond", v))
    return out


def _remove_by_identity(lst: list, node) -> None:
    for i, x in enumerate(lst):
        if x is node:
            del lst[i]
            return
    raise AssertionError("node vanished from its statement list")


def _program_names(root: list) -> list[str]:
    names: set[str] = set()

    def visit_expr(e):
        if isinstance(e, (syntax.Var, syntax.Index)):
            names.add(e.name)
            if isinstance(e, syntax.Index):
                visit_expr(e.index)
        elif isinstance(e, syntax.Neg):
            visit_expr(e.operand)
        elif isinstance(e, syntax.Bin):
            visit_expr(e.left)
            visit_expr(e.right)

    def visit_cond(c):
        if isinstance(c, syntax.Cmp):
            visit_expr(c.left)
            visit_expr(c.right)
        elif isinstance(c, syntax.Bool):
            for a in c.args:
                visit_cond(a)

    for s in syntax.iter_statements(root):
        if isinstance(s, (syntax.Assign, syntax.Read)):
            names.add(s.target.name)
            if isinstance(s.target, syntax.Index):
                visit_expr(s.target.index)
            if isinstance(s, syntax.Assign):
                visit_expr(s.value)
        elif isinstance(s, syntax.Print):
            visit_expr(s.value)
        elif isinstance(s, (syntax.If, syntax.While)):
            visit_cond(s.cond)
    return sorted(names)


# ---------------------------------------------------------------------------
# Defect edits; each returns (undo, anchor_statement, description) or None


def _edit_missing_clause(working, covered_nodes, rng, names):
    candidates = []
    for _, node in covered_nodes:
        for entry in _droppable_clauses(node):
            candidates.append((node, entry))
    if not candidates:
        return None
    node, (bool_node, idx, setter) = rng.choice(candidates)
    remaining = bool_node.args[:idx] + bool_node.args[idx + 1 :]
    new = remaining[0] if len(remaining) == 1 else syntax.Bool(bool_node.op, remaining)
    setter(new)
    return (
        lambda: setter(bool_node),
        node,
        f"dropped clause {idx + 1} of a {len(bool_node.args)}-clause {bool_node.op}-guard",
    )


def _edit_extra_statement(working, covered_nodes, rng, names):
    info = {id(s): (s, lst, i) for s, lst, i in _site_info(working)}
    _, src = rng.choice(covered_nodes)
    _, tgt = rng.choice(covered_nodes)
    dup = copy.deepcopy(src)
    tnode, tlst, tidx = info[id(tgt)]
    if isinstance(tnode, syntax.Block):
        tnode.body.insert(0, dup)
        host = tnode.body
    else:
        tlst.insert(tidx + 1, dup)
        host = tlst
    return (
        lambda: _remove_by_identity(host, dup),
        dup,
        "inserted a duplicate of a covered statement",
    )


def _edit_constant_for_variable(working, covered_nodes, rng, names):
    candidates = []
    for _, node in covered_nodes:
        for e, setter in _expr_slots(node):
            if isinstance(e, syntax.Var):
                candidates.append((node, e, setter))
    if not candidates:
        return None
    node, var_node, setter = rng.choice(candidates)
    const = rng.randint(-3, 3)
    setter(syntax.Lit(const))
    return (
        lambda: setter(var_node),
        node,
        f"replaced a use of {var_node.name!r} with the constant {const}",
    )


def _edit_wrong_parameter(working, covered_nodes, rng, names):
    candidates = []
    for _, node in covered_nodes:
        for e, setter in _expr_slots(node):
            if isinstance(e, (syntax.Lit, syntax.Var)):
                candidates.append((node, e, setter))
    if not candidates:
        return None
    node, leaf, setter = rng.choice(candidates)
    if isinstance(leaf, syntax.Lit):
        delta = rng.choice((-2, -1, 1, 2))
        setter(syntax.Lit(leaf.value + delta))
        desc = f"perturbed the literal {leaf.value} by {delta:+d}"
    else:
        others = [n for n in names if n != leaf.name]
        if not others:
            return None
        replacement = rng.choice(others)
        setter(syntax.Var(replacement))
        desc = f"substituted {replacement!r} for {leaf.name!r}"
    return (lambda: setter(leaf), node, desc)


_DEFECT_EDITS = {
    MISSING_CONDITIONAL_CLAUSE: _edit_missing_clause,
    EXTRA_STATEMENT: _edit_extra_statement,
    CONSTANT_FOR_VARIABLE: _edit_constant_for_variable,
    WRONG_PARAMETER: _edit_wrong_parameter,
}


def _site_info(root: list):
    info = []

    def walk(lst):
        for i, s in enumerate(lst):
            info.append((s, lst, i))
            for child in syntax.child_lists(s):
                walk(child)

    walk(root)
    return info


# ---------------------------------------------------------------------------
# Held-out test synthesis


def find_discriminating_input(
    original: TreeGenome,
    buggy: TreeGenome,
    comparator: str,
    limits: Limits | None,
    rng,
    exhaustive_len: int = 2,
    random_tries: int = 10_000,
    value_range: tuple[int, int] = (-9, 9),
    max_random_len: int = 6,
) -> tuple[str, str] | None:
    """Search for an input whose outputs diverge; returns (input, expected).

    Expected output is the original's; the original must complete on the
    input for it to qualify.  Short vectors are enumerated exhaustively
    first, then random vectors are tried.
    """
    lo, hi = value_range

    def check(vec) -> tuple[str, str] | None:
        text = " ".join(str(v) for v in vec)
        ref = run_program(original, text, limits)
        if ref.status != COMPLETED:
            return None
        got = run_program(buggy, text, limits)
        if got.status != COMPLETED or not compare_output(got.output, ref.output, comparator):
            return (text, ref.output)
        return None

    for length in range(exhaustive_len + 1):
        for vec in itertools.product(range(lo, hi + 1), repeat=length):
            found = check(vec)
            if found:
                return found
    for _ in range(random_tries):
        length = rng.randint(0, max_random_len)
        vec = [rng.randint(lo, hi) for _ in range(length)]
        found = check(vec)
        if found:
            return found
    return None


# ---------------------------------------------------------------------------
# Seeding


def seed_defects(
    target: TreeGenome,
    suite: TestSuite,
    n: int,
    seed: int,
    limits: Limits | None = None,
    class_weights: dict[str, float] | None = None,
    attempt_budget: int = 400,
    exhaustive_len: int = 2,
    random_tries: int = 10_000,
) -> tuple[TreeGenome, list[DefectSpec]]:
    """Seed ``n`` latent defects, each verified by a fresh held-out test.

    Defects accumulate in one program.  Every accepted defect keeps the
    visible suite passing and keeps every earlier held-out test failing, so
    the final buggy program exhibits all ``n`` faults at once.  A draw that
    is inapplicable at its site, visible to the suite, or not discriminable
    within the search budget is undone and redrawn.
    """
    if n < 0:
        raise SeedingError("cannot seed a negative number of defects")
    gate_original(target, suite, limits)
    if n == 0:
        return target, []

    classes = list(DEFECT_CLASSES)
    weights = [(class_weights or {}).get(c, 1.0) for c in classes]
    working = copy.deepcopy(target.root)
    anchors: list[tuple[str, object, str]] = []
    held_outs: list[TestCase] = []
    current_key = canonical_key(target)

    for k in range(n):
        snapshot = TreeGenome(copy.deepcopy(working))
        coverage = coverage_of(snapshot, suite, limits)
        nodes = list(syntax.iter_statements(working))
        covered_nodes = [
            (sid, nodes[sid]) for sid, c in sorted(coverage.counts.items()) if c > 0
        ]
        names = _program_names(working)
        accepted = False
        for attempt in range(attempt_budget):
            rng = derive_rng(seed, "defect", k, attempt)
            defect_class = rng.choices(classes, weights=weights, k=1)[0]
            edit = _DEFECT_EDITS[defect_class](working, covered_nodes, rng, names)
            if edit is None:
                continue  # inapplicable at this draw; redraw elsewhere
            undo, anchor, description = edit
            candidate = TreeGenome(copy.deepcopy(working))
            if canonical_key(candidate) == current_key:
                undo()
                continue
            if not evaluate(candidate, suite, limits).neutral:
                undo()
                continue
            if any(_passes_case(candidate, case, suite.comparator, limits) for case in held_outs):
                undo()  # masks an earlier defect
                continue
            found = find_discriminating_input(
                target, candidate, suite.comparator, limits,
                derive_rng(seed, "heldout", k, attempt),
                exhaustive_len, random_tries,
            )
            if found is None:
                undo()
                continue
            input_text, expected = found
            held_outs.append(TestCase(f"held_out_{k}", input_text, expected))
            anchors.append((defect_class, anchor, description))
            current_key = canonical_key(candidate)
            accepted = True
            break
        if not accepted:
            raise SeedingError(
                f"could not seed defect {k + 1} of {n} within {attempt_budget} attempts"
            )

    buggy = TreeGenome(working)
    index_of = {id(node): i for i, node in enumerate(syntax.iter_statements(working))}
    defects = []
    for (defect_class, anchor, description), case in zip(anchors, held_outs):
        site = buggy.sites[index_of[id(anchor)]]
        defects.append(DefectSpec(defect_class, site, case, description))

    # final invariants: the accumulated program hides every defect from the
    # visible suite while each held-out test still exposes one
    if not evaluate(buggy, suite, limits).neutral:
        raise SeedingError("accumulated defects no longer pass the visible suite")
    for d in defects:
        if _passes_case(buggy, d.held_out, suite.comparator, limits):
            raise SeedingError("a held-out test stopped failing on the buggy program")
        if not _passes_case(target, d.held_out, suite.comparator, limits):
            raise SeedingError("a held-out test does not pass on the original")
    return buggy, defects


def _passes_case(genome: TreeGenome, case: TestCase, comparator: str, limits) -> bool:
    ex = run_program(genome, case.input, limits)
    return ex.status == COMPLETED and compare_output(ex.output, case.expected, comparator)


# ---------------------------------------------------------------------------
# Proactive repair


@dataclass(frozen=True)
class RepairFinding:
    variant_index: int
    variant_digest: str
    defect_index: int
    locality: str


@dataclass(frozen=True)
class RepairReport:
    variants_generated: int
    generated_digests: tuple[str, ...]
    findings: tuple[RepairFinding, ...]
    unique_bugs_fixed: int
    bug_fix_variants: int
    variants_needed: int | None  # 1-based index of the first fixing variant
    generation_exhausted: bool
    mode: str


def generate_neutral_variants(
    buggy: TreeGenome,
    suite: TestSuite,
    n_variants: int,
    seed: int,
    mode: str = SAMPLED,
    limits: Limits | None = None,
    jobs: int = 1,
) -> tuple[list[Variant], bool]:
    """Unique first-order neutral variants of the buggy program.

    Returns (variants, exhausted) where ``exhausted`` records that the
    eligible mutation space ran out before ``n_variants`` neutral variants
    were found.  This function never sees held-out tests.
    """
    if mode not in REPAIR_MODES:
        raise ExperimentError(f"unknown repair mode {mode!r}")
    if n_variants < 1:
        raise ExperimentError("n_variants must be at least 1")
    origin_key = canonical_key(buggy)
    coverage = coverage_of(buggy, suite, limits)
    pools = _operator_pools(buggy, coverage)

    if mode == EXHAUSTIVE_FIRST_ORDER:
        ledger = DedupLedger()
        ordered: list[tuple[Mutation, Genome]] = []
        for kind in OPERATOR_KINDS:
            for m in pools[kind]:
                mutant = apply_mutation(buggy, m)
                if ledger.offer(mutant):
                    ordered.append((m, mutant))
        verdicts = evaluate_many([g for _, g in ordered], suite, limits, jobs)
        neutrals = [
            Variant(g, (m,), origin_key)
            for (m, g), v in zip(ordered, verdicts)
            if v.neutral
        ]
        exhausted = len(neutrals) < n_variants
        return neutrals[:n_variants], exhausted

    flat: list[Mutation] = []
    for kind in OPERATOR_KINDS:
        flat.extend(pools[kind])
    if not flat:
        return [], True
    rng = derive_rng(seed, "repair-gen")
    ledger = DedupLedger()
    tried: set[int] = set()
    neutrals: list[Variant] = []
    while len(neutrals) < n_variants and len(tried) < len(flat):
        wave: list[tuple[Mutation, Genome]] = []
        while len(wave) < _GENERATION_WAVE and len(tried) < len(flat):
            k = rng.randrange(len(flat))
            tried.add(k)
            mutant = apply_mutation(buggy, flat[k])
            if ledger.offer(mutant):
                wave.append((flat[k], mutant))
        verdicts = evaluate_many([g for _, g in wave], suite, limits, jobs)
        for (m, g), v in zip(wave, verdicts):
            if v.neutral and len(neutrals) < n_variants:
                neutrals.append(Variant(g, (m,), origin_key))
    return neutrals, len(neutrals) < n_variants


def select_distinct_site_order(variants: list[Variant]) -> list[Variant]:
    """Greedy reordering that front-loads variants touching unseen sites."""
    remaining = list(enumerate(variants))
    covered: set[int] = set()
    ordered: list[Variant] = []
    while remaining:
        best_pos, best_gain = 0, -1
        for pos, (_, v) in enumerate(remaining):
            gain = len(set(v.provenance[-1].site_ids()) - covered)
            if gain > best_gain:
                best_pos, best_gain = pos, gain
        _, chosen = remaining.pop(best_pos)
        covered.update(chosen.provenance[-1].site_ids())
        ordered.append(chosen)
    return ordered


def proactive_repair(
    buggy: TreeGenome,
    suite: TestSuite,
    defects: list[DefectSpec],
    n_variants: int,
    seed: int,
    mode: str = SAMPLED,
    limits: Limits | None = None,
    jobs: int = 1,
    select_distinct_sites: bool = False,
) -> RepairReport:
    """Generate neutral variants of the buggy program, then score held-outs.

    Generation consumes nothing from the held-out tests.  A variant repairs
    defect ``d`` when it passes the visible suite (guaranteed for generated
    variants) and ``d``'s held-out test.
    """
    gate_original(buggy, suite, limits)
    variants, exhausted = generate_neutral_variants(
        buggy, suite, n_variants, seed, mode, limits, jobs
    )
    if select_distinct_sites:
        variants = select_distinct_site_order(variants)

    findings: list[RepairFinding] = []
    genomes = [v.genome for v in variants]
    for d_idx, defect in enumerate(defects):
        held_suite = TestSuite((defect.held_out,), suite.comparator)
        verdicts = evaluate_many(genomes, held_suite, limits, jobs)
        for v_idx, (variant, verdict) in enumerate(zip(variants, verdicts)):
            if verdict.neutral:
                findings.append(
                    RepairFinding(
                        v_idx,
                        canonical_key(variant.genome),
                        d_idx,
                        classify_repair_locality(variant, defect),
                    )
                )
    fixed_defects = {f.defect_index for f in findings}
    fixing_variants = {f.variant_index for f in findings}
    return RepairReport(
        variants_generated=len(variants),
        generated_digests=tuple(canonical_key(v.genome) for v in variants),
        findings=tuple(sorted(findings, key=lambda f: (f.variant_index, f.defect_index))),
        unique_bugs_fixed=len(fixed_defects),
        bug_fix_variants=len(fixing_variants),
        variants_needed=min(fixing_variants) + 1 if fixing_variants else None,
        generation_exhausted=exhausted,
        mode=mode,
    )


def _span_distance(a: tuple[int, int], b: tuple[int, int]) -> int:
    if a[0] <= b[1] and b[0] <= a[1]:
        return 0
    return max(b[0] - a[1], a[0] - b[1])


def classify_repair_locality(repair: Variant, defect: DefectSpec) -> str:
    """Same line, within five lines, or compensatory (anywhere else).

    The repair's edit location is the target span of its mutation (both
    swapped spans for a swap); the defect's location is its seeded site's
    span.  Both are line ranges of the buggy program's canonical text.
    """
    if not repair.provenance:
        return COMPENSATORY
    m = repair.provenance[-1]
    spans = [m.target.span]
    if m.kind == "swap" and m.source is not None:
        spans.append(m.source.span)
    distance = min(_span_distance(span, defect.site.span) for span in spans)
    if distance == 0:
        return SAME_LINE
    if distance <= NEAR_LINE_RADIUS:
        return NEAR
    return COMPENSATORY


# ---------------------------------------------------------------------------
# Seeded-bug sweep


@dataclass(frozen=True)
class SweepPoint:
    n_seeded: int
    bugs_fixed: int
    variants_needed: int | None


@dataclass(frozen=True)
class SweepReport:
    points: tuple[SweepPoint, ...]
    pearson_r: float | None  # None when either series is constant
    seed: int


def pearson(xs: list[float], ys: list[float]) -> float | None:
    try:
        return statistics.correlation(xs, ys)
    except statistics.StatisticsError:
        return None


def seeded_bug_sweep(
    target: TreeGenome,
    suite: TestSuite,
    n_values: list[int],
    n_variants: int,
    seed: int,
    mode: str = SAMPLED,
    limits: Limits | None = None,
    jobs: int = 1,
    attempt_budget: int = 400,
) -> SweepReport:
    """Repair runs across defect counts, with the seeded/fixed correlation.

    Each point seeds ``n`` fresh defects into the pristine target (with a
    seed derived from the master seed and ``n``), generates neutral variants
    ordered to maximize distinct mutated sites, and records how many unique
    bugs those variants fix.
    """
    if not n_values or any(n < 1 for n in n_values):
        raise ExperimentError("n_values must be non-empty counts of at least 1")
    gate_original(target, suite, limits)
    points = []
    for n in n_values:
        buggy, defects = seed_defects(
            target, suite, n, derive_seed(seed, "sweep-seed", n), limits,
            attempt_budget=attempt_budget,
        )
        report = proactive_repair(
            buggy, suite, defects, n_variants, derive_seed(seed, "sweep-repair", n),
            mode, limits, jobs, select_distinct_sites=True,
        )
        points.append(SweepPoint(n, report.unique_bugs_fixed, report.variants_needed))
    r = pearson([float(p.n_seeded) for p in points], [float(p.bugs_fixed) for p in points])
    return SweepReport(tuple(points), r, seed)
