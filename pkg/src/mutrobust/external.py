"""Adapter for non-hermetic targets driven through subprocesses.

A target descriptor is a key-value file:

    build_cmd = cc -O2 -o {work}/prog {variant}
    timeout_ms = 2000
    coverage_file = coverage.txt
    test.1.cmd = {work}/prog 3 1 2
    test.1.expected_file = tests/t1.out
    test.2.cmd = ...

``{work}`` expands to the working directory and ``{variant}`` to the file
the serialized variant was written to.  Exit statuses are interpreted as:
0 pass, nonzero fail, killed by a signal crashed, deadline exceeded timeout.
A nonzero build status makes the variant invalid.  The optional coverage
file maps ``site_id count`` per line.

Callers are responsible for isolating the commands they configure; this
adapter only runs them.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .genome import Genome, serialize
from .harness import CRASHED, INVALID, NEUTRAL, TEST_FAILED, TIMEOUT, EXACT, Verdict, compare_output
from .minilang import CoverageMap


@dataclass(frozen=True)
class ExternalTest:
    name: str
    cmd: str
    expected_file: str


@dataclass(frozen=True)
class ExternalTarget:
    build_cmd: str
    tests: tuple[ExternalTest, ...]
    timeout_ms: int
    coverage_file: str | None = None


_TOP_KEYS = {"build_cmd", "timeout_ms", "coverage_file"}
_TEST_KEYS = {"cmd", "expected_file"}


def load_target_descriptor(path: str | Path) -> ExternalTarget:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"target descriptor not found: {path}")
    top: dict[str, str] = {}
    tests: dict[int, dict[str, str]] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key.startswith("test."):
            parts = key.split(".")
            if len(parts) != 3 or not parts[1].isdigit() or parts[2] not in _TEST_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            tests.setdefault(int(parts[1]), {})[parts[2]] = value
        elif key in _TOP_KEYS:
            top[key] = value
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
    if "build_cmd" not in top:
        raise ConfigError(f"{path}: missing build_cmd")
    if "timeout_ms" not in top or not top["timeout_ms"].isdigit():
        raise ConfigError(f"{path}: timeout_ms must be a positive integer")
    if not tests:
        raise ConfigError(f"{path}: at least one test.N.cmd is required")
    specs = []
    for n in sorted(tests):
        entry = tests[n]
        if _TEST_KEYS - entry.keys():
            raise ConfigError(f"{path}: test.{n} needs both cmd and expected_file")
        specs.append(ExternalTest(f"test.{n}", entry["cmd"], entry["expected_file"]))
    return ExternalTarget(
        build_cmd=top["build_cmd"],
        tests=tuple(specs),
        timeout_ms=int(top["timeout_ms"]),
        coverage_file=top.get("coverage_file"),
    )


def _run(cmd: str, timeout_s: float):
    return subprocess.run(
        shlex.split(cmd), capture_output=True, text=True, timeout=timeout_s
    )


def _strip_one_newline(text: str) -> str:
    return text[:-1] if text.endswith("\n") else text


def evaluate_external(
    target: ExternalTarget,
    genome: Genome,
    work_dir: str | Path,
    comparator: str = EXACT,
    base_dir: str | Path | None = None,
) -> Verdict:
    """Write the variant, build it, and run every configured test."""
    work = Path(work_dir)
    work.mkdir(parents=True, exist_ok=True)
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    variant_path = work / "variant.src"
    variant_path.write_text(serialize(genome))
    subst = {"work": str(work), "variant": str(variant_path)}
    timeout_s = target.timeout_ms / 1000.0

    try:
        build = _run(target.build_cmd.format(**subst), timeout_s)
    except subprocess.TimeoutExpired:
        return Verdict(INVALID, None, 0)
    if build.returncode != 0:
        return Verdict(INVALID, None, 0)

    ran = 0
    for test in target.tests:
        try:
            proc = _run(test.cmd.format(**subst), timeout_s)
        except subprocess.TimeoutExpired:
            return Verdict(TIMEOUT, None, ran + 1)
        ran += 1
        if proc.returncode < 0:  # terminated by a signal
            return Verdict(CRASHED, None, ran)
        if proc.returncode != 0:
            return Verdict(TEST_FAILED, test.name, ran)
        expected_path = Path(test.expected_file)
        if not expected_path.is_absolute():
            expected_path = base / expected_path
        expected = _strip_one_newline(expected_path.read_text())
        if not compare_output(_strip_one_newline(proc.stdout), expected, comparator):
            return Verdict(TEST_FAILED, test.name, ran)
    return Verdict(NEUTRAL, None, ran)


def read_coverage_file(path: str | Path, total_sites: int) -> CoverageMap:
    """Parse ``site_id count`` lines into a coverage map."""
    counts: dict[int, int] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"{path}:{lineno}: expected 'site_id count'")
        try:
            sid, count = int(parts[0]), int(parts[1])
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: expected integers") from None
        counts[sid] = counts.get(sid, 0) + count
    return CoverageMap.from_counts(counts, total_sites)
