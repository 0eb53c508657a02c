"""Neutral-mutation tooling: measurement, landscape walks, proactive repair."""

from .errors import (
    ConfigError,
    ExperimentError,
    MiniLangSyntaxError,
    MutationError,
    MutRobustError,
    OriginalFailsSuiteError,
    SeedingError,
    SuiteError,
)
from .experiments import (
    OperatorStats,
    RobustnessReport,
    WalkResult,
    WalkStep,
    estimate_mutrb,
    exhaustive_mutrb,
    neutral_walk,
)
from .genome import (
    COPY,
    DELETE,
    OPERATOR_KINDS,
    SWAP,
    LinearGenome,
    Mutation,
    Site,
    TreeGenome,
    Variant,
    apply_mutation,
    canonical_key,
    derive_rng,
    derive_seed,
    enumerate_mutations,
    enumerate_sites,
    parse_linear,
    parse_tree,
    replay,
    sample_mutation,
    serialize,
    size_of,
)
from .harness import (
    COMPARATORS,
    CRASH_ONLY,
    EXACT,
    WHITESPACE,
    DedupLedger,
    TestCase,
    TestSuite,
    Verdict,
    compare_output,
    dedup,
    evaluate,
    load_suite,
)
from .minilang import (
    CoverageMap,
    Execution,
    Limits,
    coverage_of,
    full_coverage,
    run_program,
)
from .repair import (
    DEFECT_CLASSES,
    DefectSpec,
    RepairFinding,
    RepairReport,
    SweepPoint,
    SweepReport,
    classify_repair_locality,
    proactive_repair,
    seed_defects,
    seeded_bug_sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
