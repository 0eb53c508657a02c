"""Canonical report serialization: sorted keys, 6-significant-digit floats.

Reports embed everything needed to reproduce them: the master seed, a
digest of the semantic configuration, and digests of the corpus files.
Execution-only knobs (worker count, output path) are excluded from the
config digest so runs at different parallelism emit byte-identical reports.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path

SCHEMA_MEASURE = "mutational-robustness-report/1"
SCHEMA_COVERAGE = "coverage-report/1"
SCHEMA_WALK = "neutral-walk-report/1"
SCHEMA_SEED_BUGS = "seeded-defects-report/1"
SCHEMA_REPAIR = "proactive-repair-report/1"
SCHEMA_SWEEP = "seeded-bug-sweep-report/1"


def round6(value: float) -> float:
    """Force a float through 6 significant digits (platform-stable)."""
    return float(f"{value:.6g}")


def _canonicalize(value):
    if isinstance(value, float):
        return round6(value)
    if isinstance(value, dict):
        return {str(k): _canonicalize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonicalize(v) for v in value]
    return value


def canonical_json(doc: dict) -> str:
    return json.dumps(_canonicalize(doc), sort_keys=True, indent=2) + "\n"


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_digest(semantic_config: dict) -> str:
    return text_digest(canonical_json(semantic_config))


def corpus_digests(target_path: str | Path, suite_dir: str | Path | None) -> dict:
    digests = {"target": file_digest(target_path)}
    if suite_dir is not None:
        suite_files = sorted(Path(suite_dir).glob("*.in")) + sorted(
            Path(suite_dir).glob("*.out")
        )
        digests["suite"] = {p.name: file_digest(p) for p in sorted(suite_files)}
    return digests


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if v is None else f"{v:.6g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()
