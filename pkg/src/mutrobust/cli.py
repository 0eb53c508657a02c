"""Command-line surface.

Subcommands: measure, exhaustive, coverage, walk, seed-bugs, repair, sweep.
Configuration can come from a JSON file (``--config``) or flags; flags
override file values, unknown file keys are rejected, and the seed is
always explicit.  Exit codes: 0 success, 2 configuration error, 3 the
original program fails its suite, 4 experiment-level failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments, repair, reports
from .errors import (
    ConfigError,
    ExperimentError,
    MiniLangSyntaxError,
    MutRobustError,
    OriginalFailsSuiteError,
    SuiteError,
)
from .genome import derive_seed, parse_tree
from .harness import COMPARATORS, EXACT, load_suite
from .minilang import Limits, coverage_of

COMMANDS = ("measure", "exhaustive", "coverage", "walk", "seed-bugs", "repair", "sweep")

_COMMON_KEYS = {
    "target": (str, None),
    "suite": (str, None),
    "comparator": (str, EXACT),
    "seed": (int, None),
    "jobs": (int, 1),
    "output": (str, None),
    "max_steps": (int, 100_000),
    "max_output": (int, 65_536),
    "max_input_reads": (int, 10_000),
}

_COMMAND_KEYS = {
    "measure": {"per_op_samples": (int, 200)},
    "exhaustive": {"cap": (int, 250_000)},
    "coverage": {},
    "walk": {
        "population": (int, 100),
        "steps": (int, 250),
        "size_cap": (bool, False),
        "robustness_samples": (int, 30),
        "walk_attempts": (int, 0),  # 0 = automatic budget
    },
    "seed-bugs": {"n_defects": (int, 5)},
    "repair": {
        "n_defects": (int, 5),
        "n_variants": (int, 5000),
        "mode": (str, repair.SAMPLED),
    },
    "sweep": {
        "n_values": (str, "1-8"),
        "n_variants": (int, 500),
        "mode": (str, repair.SAMPLED),
    },
}

_POSITIVE = {
    "jobs", "max_steps", "max_output", "max_input_reads", "per_op_samples",
    "cap", "population", "steps", "robustness_samples", "n_defects",
    "n_variants",
}
# fields where 0 is meaningful (disabled robustness sampling, degenerate walk)
_ALLOW_ZERO = {"steps", "robustness_samples", "walk_attempts"}


def _parse_n_values(text: str) -> list[int]:
    values: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            values.extend(range(int(lo), int(hi) + 1))
        elif part:
            values.append(int(part))
    if not values or any(v < 1 for v in values):
        raise ConfigError("n_values: expected counts of at least 1, e.g. '1-8' or '1,2,4'")
    return values


def load_config(command: str, args: argparse.Namespace) -> dict:
    """Merge config file and flags into a validated configuration dict."""
    spec = dict(_COMMON_KEYS)
    spec.update(_COMMAND_KEYS[command])

    file_values: dict = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            file_values = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file is not valid JSON: {e}") from None
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(file_values) - set(spec)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    config: dict = {}
    for key, (typ, default) in spec.items():
        flag_value = getattr(args, key.replace("-", "_"), None)
        value = flag_value if flag_value is not None else file_values.get(key, default)
        if key == "n_values" and isinstance(value, list):
            value = ",".join(str(v) for v in value)
        if value is None:
            if key in ("target", "suite", "seed"):
                raise ConfigError(f"missing mandatory field: {key}")
            config[key] = None
            continue
        if typ is bool and isinstance(value, str):
            if value not in ("on", "off"):
                raise ConfigError(f"{key}: expected 'on' or 'off'")
            value = value == "on"
        if typ is int and isinstance(value, bool):
            raise ConfigError(f"{key}: expected an integer")
        try:
            value = typ(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected {typ.__name__}") from None
        if key in _POSITIVE and key not in _ALLOW_ZERO and value < 1:
            raise ConfigError(f"{key}: must be at least 1")
        if key in _ALLOW_ZERO and value < 0:
            raise ConfigError(f"{key}: must not be negative")
        config[key] = value

    if config["comparator"] not in COMPARATORS:
        raise ConfigError(f"comparator: expected one of {', '.join(COMPARATORS)}")
    if "mode" in config and config["mode"] not in repair.REPAIR_MODES:
        raise ConfigError(f"mode: expected one of {', '.join(repair.REPAIR_MODES)}")
    if "n_values" in config:
        config["n_values"] = _parse_n_values(config["n_values"])
    if config["output"] is None:
        config["output"] = f"{command}-report.json"
    return config


def _semantic_config(command: str, config: dict) -> dict:
    """The reproducibility-relevant slice of the configuration."""
    skip = {"jobs", "output"}
    return {"command": command, **{k: v for k, v in config.items() if k not in skip}}


def _limits(config: dict) -> Limits:
    return Limits(config["max_steps"], config["max_output"], config["max_input_reads"])


def _load_target(config: dict):
    path = Path(config["target"])
    if not path.is_file():
        raise ConfigError(f"target not found: {path}")
    if path.suffix != ".mini":
        raise ConfigError(
            "hermetic subcommands take a .mini target; drive other targets "
            "through the external-adapter library interface"
        )
    try:
        return parse_tree(path.read_text())
    except MiniLangSyntaxError as e:
        raise ConfigError(f"target does not parse: {e}") from None


def _operator_stats_doc(report: experiments.RobustnessReport) -> dict:
    return {
        op: {
            "unique_mutants": s.unique,
            "neutral": s.neutral,
            "mutrb": s.mutrb,
            "attempts": s.attempts,
            "exhausted": s.exhausted,
            "skipped": s.skipped,
        }
        for op, s in report.per_operator.items()
    }


def _robustness_doc(report: experiments.RobustnessReport) -> dict:
    return {
        "per_operator": _operator_stats_doc(report),
        "pooled": {
            "unique_mutants": report.pooled_unique,
            "neutral": report.pooled_neutral,
            "mutrb": report.pooled_mutrb,
            "ci95": report.ci95,
        },
        "comparator": report.comparator,
        "coverage_fraction": report.coverage_fraction,
        "mode": report.mode,
    }


def run_command(command: str, config: dict) -> tuple[int, dict | None, str]:
    """Execute one subcommand; returns (exit_code, report_doc, summary_line)."""
    genome = _load_target(config)
    suite = load_suite(config["suite"], config["comparator"])
    limits = _limits(config)
    seed = config["seed"]
    jobs = config["jobs"]
    csv_out: str | None = None
    exit_code = 0

    if command == "measure":
        rep = experiments.estimate_mutrb(
            genome, suite, config["per_op_samples"], config["comparator"], seed, limits, jobs
        )
        doc = {"schema": reports.SCHEMA_MEASURE, **_robustness_doc(rep)}
        summary = (
            f"pooled MutRB {rep.pooled_mutrb:.6f} +/- {rep.ci95:.6f} "
            f"over {rep.pooled_unique} unique mutants"
        )
    elif command == "exhaustive":
        rep = experiments.exhaustive_mutrb(
            genome, suite, config["comparator"], limits, config["cap"], jobs
        )
        doc = {"schema": reports.SCHEMA_MEASURE, **_robustness_doc(rep)}
        summary = (
            f"exact pooled MutRB {rep.pooled_mutrb:.6f} "
            f"over {rep.pooled_unique} unique mutants"
        )
    elif command == "coverage":
        cov = coverage_of(genome, suite, limits)
        doc = {
            "schema": reports.SCHEMA_COVERAGE,
            "covered_fraction": cov.covered_fraction,
            "total_sites": genome.site_count,
            "counts": [[site.id, cov.counts.get(site.id, 0)] for site in genome.sites],
        }
        covered = sum(1 for c in cov.counts.values() if c > 0)
        summary = f"statement coverage {cov.covered_fraction:.6f} ({covered}/{genome.site_count} sites)"
    elif command == "walk":
        result = experiments.neutral_walk(
            genome, suite, config["population"], config["steps"], config["size_cap"],
            seed, limits, config["robustness_samples"],
            config["walk_attempts"] or None, jobs,
        )
        doc = {
            "schema": reports.SCHEMA_WALK,
            "size_unit": result.size_unit,
            "size_cap": config["size_cap"],
            "population": config["population"],
            "steps_requested": config["steps"],
            "stalled_at_step": result.stalled_at_step,
            "series": [
                {
                    "step": s.step,
                    "mean_size": s.mean_size,
                    "mean_mutrb": s.mean_mutrb,
                    "population": list(s.population),
                }
                for s in result.series
            ],
        }
        csv_out = reports.csv_text(
            ["step", "mean_size", "mean_mutrb"],
            [[s.step, s.mean_size, s.mean_mutrb] for s in result.series],
        )
        if result.completed:
            summary = (
                f"walk completed {config['steps']} steps; "
                f"final mean size {result.series[-1].mean_size:.6f} {result.size_unit}"
            )
        else:
            summary = f"walk stalled at step {result.stalled_at_step}"
            exit_code = 4
    elif command == "seed-bugs":
        buggy, defects = repair.seed_defects(genome, suite, config["n_defects"], seed, limits)
        doc = {
            "schema": reports.SCHEMA_SEED_BUGS,
            "n_defects": config["n_defects"],
            "buggy_source": buggy.text,
            "defects": _defects_doc(defects),
        }
        summary = f"seeded {len(defects)} defects"
    elif command == "repair":
        buggy, defects = repair.seed_defects(genome, suite, config["n_defects"], seed, limits)
        rep = repair.proactive_repair(
            buggy, suite, defects, config["n_variants"],
            derive_seed(seed, "repair"), config["mode"], limits, jobs,
        )
        doc = {
            "schema": reports.SCHEMA_REPAIR,
            "mode": rep.mode,
            "buggy_source": buggy.text,
            "defects": _defects_doc(defects),
            "variants_generated": rep.variants_generated,
            "generation_exhausted": rep.generation_exhausted,
            "generated_digests": list(rep.generated_digests),
            "repairs": [
                {
                    "variant_index": f.variant_index,
                    "variant_digest": f.variant_digest,
                    "defect_index": f.defect_index,
                    "locality": f.locality,
                }
                for f in rep.findings
            ],
            "unique_bugs_fixed": rep.unique_bugs_fixed,
            "bug_fix_variants": rep.bug_fix_variants,
            "variants_needed": rep.variants_needed,
        }
        summary = (
            f"fixed {rep.unique_bugs_fixed}/{len(defects)} seeded bugs "
            f"with {rep.bug_fix_variants} fixing variants"
        )
    elif command == "sweep":
        rep = repair.seeded_bug_sweep(
            genome, suite, config["n_values"], config["n_variants"], seed,
            config["mode"], limits, jobs,
        )
        doc = {
            "schema": reports.SCHEMA_SWEEP,
            "points": [
                {
                    "n_seeded": p.n_seeded,
                    "bugs_fixed": p.bugs_fixed,
                    "variants_needed": p.variants_needed,
                }
                for p in rep.points
            ],
            "pearson_r": rep.pearson_r,
        }
        csv_out = reports.csv_text(
            ["n_seeded", "bugs_fixed", "variants_needed"],
            [[p.n_seeded, p.bugs_fixed, p.variants_needed] for p in rep.points],
        )
        summary = (
            f"pearson r {rep.pearson_r:.6f}" if rep.pearson_r is not None
            else "pearson r undefined (constant series)"
        )
    else:  # pragma: no cover
        raise ConfigError(f"unknown command {command!r}")

    doc["seed"] = seed
    semantic = _semantic_config(command, config)
    doc["config"] = semantic
    doc["config_digest"] = reports.config_digest(semantic)
    doc["corpus_digests"] = reports.corpus_digests(config["target"], config["suite"])

    out_path = Path(config["output"])
    out_path.write_text(reports.canonical_json(doc))
    if csv_out is not None:
        out_path.with_suffix(".csv").write_text(csv_out)
    return exit_code, doc, summary


def _defects_doc(defects) -> list[dict]:
    return [
        {
            "class": d.defect_class,
            "site": d.site.id,
            "span": list(d.site.span),
            "description": d.description,
            "held_out": {"input": d.held_out.input, "expected": d.held_out.expected},
        }
        for d in defects
    ]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mutrobust",
        description="Neutral-mutation measurement, walks, and proactive repair.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        p = sub.add_parser(command)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--target", help="mini-language program (.mini)")
        p.add_argument("--suite", help="directory of <name>.in/<name>.out cases")
        p.add_argument("--comparator", choices=COMPARATORS)
        p.add_argument("--seed", type=int, help="master RNG seed (mandatory)")
        p.add_argument("--jobs", type=int, help="worker count; results do not depend on it")
        p.add_argument("--output", help="report path (JSON; walk/sweep add a .csv)")
        p.add_argument("--max-steps", type=int, dest="max_steps")
        p.add_argument("--max-output", type=int, dest="max_output")
        p.add_argument("--max-input-reads", type=int, dest="max_input_reads")
        for key, (typ, _) in _COMMAND_KEYS[command].items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, choices=("on", "off"), dest=key)
            elif typ is int:
                p.add_argument(flag, type=int, dest=key)
            else:
                p.add_argument(flag, dest=key)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.command, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        exit_code, _, summary = run_command(args.command, config)
    except (ConfigError, SuiteError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except OriginalFailsSuiteError as e:
        print(f"refusing to run: {e}", file=sys.stderr)
        return 3
    except (ExperimentError, MutRobustError) as e:
        print(f"experiment failed: {e}", file=sys.stderr)
        return 4
    print(summary)
    return exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
