"""Program representations under mutation.

Two representations are supported: statement trees parsed from mini-language
source, and linear instruction listings split from text one instruction per
line.  Both expose the same mutation surface: a list of sites (one per
mutable unit), the copy/delete/swap operators, uniform site sampling
restricted to covered code, and a canonical content digest used to count
duplicate mutants only once.

Site identifiers are the pre-order traversal index of the mutable unit and
are re-derived every time a genome is built, so they stay dense and stable
under serialization round-trips.  Genomes are treated as immutable values:
``apply_mutation`` always returns a fresh genome.
"""

from __future__ import annotations

import copy
import hashlib
import random
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

from . import syntax
from .errors import MutationError

if TYPE_CHECKING:  # pragma: no cover
    from .minilang import CoverageMap

COPY, DELETE, SWAP = "copy", "delete", "swap"
OPERATOR_KINDS = (COPY, DELETE, SWAP)


@dataclass(frozen=True)
class Site:
    """One mutable unit: a statement subtree or an instruction line.

    ``id`` is the pre-order index among mutable units; ``span`` is the
    (start, end) line range in the genome's canonical text, 1-based and
    inclusive, kept for locality reporting.
    """

    id: int
    span: tuple[int, int]


def _normalize_text(text: str) -> str:
    lines = []
    for raw in text.splitlines():
        line = " ".join(raw.split())
        if line:
            lines.append(line)
    return "\n".join(lines)


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class TreeGenome:
    """A statement tree plus its derived site table.

    The constructor takes ownership of ``root``; callers must not mutate the
    tree afterwards.
    """

    __slots__ = ("root", "text", "sites", "_info", "_sizes", "_ckey", "_compiled")

    def __init__(self, root: list):
        if not root:
            raise MutationError("a program must contain at least one statement")
        self.root = root
        text, spans = syntax.render(root)
        self.text = text
        info: list[tuple[syntax.Stmt, list, int]] = []

        def walk(lst: list):
            for i, s in enumerate(lst):
                info.append((s, lst, i))
                for child in syntax.child_lists(s):
                    walk(child)

        walk(root)
        self._info = info
        self._sizes = [sum(1 for _ in syntax.iter_statements([node])) for node, _, _ in info]
        self.sites = tuple(Site(i, spans[i]) for i in range(len(info)))
        self._ckey: str | None = None
        self._compiled = None

    @property
    def site_count(self) -> int:
        return len(self.sites)

    def subtree_size(self, site_id: int) -> int:
        """Number of statements in the subtree rooted at a site, inclusive."""
        return self._sizes[site_id]

    def nested(self, a: int, b: int) -> bool:
        """True when one site's subtree contains the other (or a == b)."""
        return (a <= b < a + self._sizes[a]) or (b <= a < b + self._sizes[b])

    def same_structure(self, other: "TreeGenome") -> bool:
        return isinstance(other, TreeGenome) and self.root == other.root


class LinearGenome:
    """An ordered instruction listing with directive lines protected.

    A line whose leading non-blank text starts with one of ``prefixes`` is
    protected from mutation and gets no site.
    """

    __slots__ = ("instructions", "prefixes", "protected", "sites", "_site_lines", "_ckey")

    def __init__(self, instructions: tuple[str, ...], prefixes: tuple[str, ...] = (".",)):
        if not instructions:
            raise MutationError("a listing must contain at least one instruction")
        self.instructions = instructions
        self.prefixes = prefixes
        protected = frozenset(
            i for i, line in enumerate(instructions) if line.lstrip().startswith(prefixes)
        )
        self.protected = protected
        site_lines = [i for i in range(len(instructions)) if i not in protected]
        self._site_lines = site_lines
        self.sites = tuple(Site(sid, (i + 1, i + 1)) for sid, i in enumerate(site_lines))
        self._ckey: str | None = None

    @property
    def text(self) -> str:
        return "\n".join(self.instructions) + "\n"

    @property
    def site_count(self) -> int:
        return len(self.sites)

    def nested(self, a: int, b: int) -> bool:
        return a == b

    def same_structure(self, other: "LinearGenome") -> bool:
        return isinstance(other, LinearGenome) and self.instructions == other.instructions


Genome = Union[TreeGenome, LinearGenome]


def parse_tree(source_text: str) -> TreeGenome:
    """Parse mini-language source into a tree genome, one site per statement."""
    return TreeGenome(syntax.parse(source_text))


def parse_linear(listing_text: str, prefixes: tuple[str, ...] = (".",)) -> LinearGenome:
    """Split listing text on line breaks; blank lines are dropped."""
    lines = tuple(line.rstrip() for line in listing_text.splitlines() if line.strip())
    if not lines:
        raise MutationError("listing contains no instructions")
    return LinearGenome(lines, prefixes)


def serialize(genome: Genome) -> str:
    """Deterministic canonical text; parsing it back reproduces the genome."""
    return genome.text


def size_of(genome: Genome) -> int:
    """Walk-size measure: site count for trees, line count for listings."""
    if isinstance(genome, TreeGenome):
        return genome.site_count
    return len(genome.instructions)


def canonical_key(genome: Genome) -> str:
    """Digest of the canonical form, equal for structurally identical live code.

    For trees, statements that follow an unconditional ``break``/``exit`` in
    the same statement list are dropped before hashing, so mutants that only
    differ in syntactically unreachable code share a key.
    """
    if genome._ckey is not None:
        return genome._ckey
    if isinstance(genome, TreeGenome):
        pruned = _drop_unreachable(genome.root)
        text, _ = syntax.render(pruned)
    else:
        text = genome.text
    key = _digest(_normalize_text(text))
    genome._ckey = key
    return key


def _drop_unreachable(stmts: list) -> list:
    out = []
    for s in stmts:
        if isinstance(s, syntax.If):
            orelse = None if s.orelse is None else _drop_unreachable(s.orelse)
            out.append(syntax.If(s.cond, _drop_unreachable(s.then), orelse))
        elif isinstance(s, syntax.While):
            out.append(syntax.While(s.cond, _drop_unreachable(s.body)))
        elif isinstance(s, syntax.Block):
            out.append(syntax.Block(_drop_unreachable(s.body)))
        else:
            out.append(s)
        if isinstance(s, (syntax.Break, syntax.Exit)):
            break
    return out


@dataclass(frozen=True)
class Mutation:
    """One edit: operator kind plus the site(s) it acts on.

    ``source`` is present for copy and swap; delete only has a target.  The
    sites belong to the genome the mutation was sampled against.
    """

    kind: str
    source: Site | None
    target: Site

    def site_ids(self) -> tuple[int, ...]:
        if self.source is None or self.source.id == self.target.id:
            return (self.target.id,)
        return (self.source.id, self.target.id)


@dataclass(frozen=True)
class Variant:
    """A genome plus the mutation chain separating it from its origin."""

    genome: Genome
    provenance: tuple[Mutation, ...]
    origin: str


def replay(origin: Genome, provenance: tuple[Mutation, ...]) -> Genome:
    """Re-apply a provenance chain to the origin genome."""
    g = origin
    for m in provenance:
        g = apply_mutation(g, m)
    return g


# ---------------------------------------------------------------------------
# Applying mutations


def _check_site(genome: Genome, site: Site):
    n = len(genome.sites)
    if not 0 <= site.id < n:
        raise MutationError(f"site {site.id} does not exist in this genome")


def apply_mutation(genome: Genome, mutation: Mutation) -> Genome:
    """Apply one mutation, returning a new genome of the same representation."""
    if mutation.kind not in OPERATOR_KINDS:
        raise MutationError(f"unknown operator kind {mutation.kind!r}")
    _check_site(genome, mutation.target)
    if mutation.kind in (COPY, SWAP):
        if mutation.source is None:
            raise MutationError(f"{mutation.kind} requires a source site")
        _check_site(genome, mutation.source)
    if mutation.kind == SWAP:
        assert mutation.source is not None
        if mutation.source.id == mutation.target.id:
            raise MutationError("swap requires two distinct sites")
        if genome.nested(mutation.source.id, mutation.target.id):
            raise MutationError("swap of nested subtrees is not defined")
    if isinstance(genome, TreeGenome):
        return _apply_tree(genome, mutation)
    return _apply_linear(genome, mutation)


def _apply_tree(genome: TreeGenome, mutation: Mutation) -> TreeGenome:
    newroot = copy.deepcopy(genome.root)
    info: list[tuple[syntax.Stmt, list, int]] = []

    def walk(lst: list):
        for i, s in enumerate(lst):
            info.append((s, lst, i))
            for child in syntax.child_lists(s):
                walk(child)

    walk(newroot)

    if mutation.kind == DELETE:
        node, lst, idx = info[mutation.target.id]
        if lst is newroot and len(newroot) == 1:
            raise MutationError("deleting the only statement of the program is rejected")
        del lst[idx]
    elif mutation.kind == COPY:
        assert mutation.source is not None
        dup = copy.deepcopy(info[mutation.source.id][0])
        tnode, tlst, tidx = info[mutation.target.id]
        if isinstance(tnode, syntax.Block):
            # a block header as target promotes the duplicate to first child,
            # which keeps block interiors reachable as insertion points
            tnode.body.insert(0, dup)
        else:
            tlst.insert(tidx + 1, dup)
    else:  # SWAP
        assert mutation.source is not None
        na, la, ia = info[mutation.source.id]
        nb, lb, ib = info[mutation.target.id]
        la[ia] = nb
        lb[ib] = na
    return TreeGenome(newroot)


def _apply_linear(genome: LinearGenome, mutation: Mutation) -> LinearGenome:
    lines = list(genome.instructions)
    tgt = genome._site_lines[mutation.target.id]
    if mutation.kind == DELETE:
        if len(genome.sites) == 1:
            raise MutationError("deleting the only instruction of the listing is rejected")
        del lines[tgt]
    elif mutation.kind == COPY:
        assert mutation.source is not None
        src = genome._site_lines[mutation.source.id]
        lines.insert(tgt + 1, lines[src])
    else:  # SWAP
        assert mutation.source is not None
        src = genome._site_lines[mutation.source.id]
        lines[src], lines[tgt] = lines[tgt], lines[src]
    return LinearGenome(tuple(lines), genome.prefixes)


# ---------------------------------------------------------------------------
# Coverage-restricted site enumeration and sampling


def enumerate_sites(genome: Genome, coverage: "CoverageMap") -> list[Site]:
    """Sites with a positive visit count, in program order."""
    counts = coverage.counts
    n = len(genome.sites)
    for sid in counts:
        if not 0 <= sid < n:
            raise MutationError(f"coverage references unknown site {sid}")
    return [s for s in genome.sites if counts.get(s.id, 0) > 0]


def _deletable(genome: Genome, site: Site) -> bool:
    if isinstance(genome, TreeGenome):
        _, lst, _ = genome._info[site.id]
        return not (lst is genome.root and len(genome.root) == 1)
    return len(genome.sites) > 1


def enumerate_mutations(genome: Genome, coverage: "CoverageMap", kind: str) -> list[Mutation]:
    """Every valid mutation of one kind over the covered sites."""
    covered = enumerate_sites(genome, coverage)
    if kind == DELETE:
        return [Mutation(DELETE, None, s) for s in covered if _deletable(genome, s)]
    if kind == COPY:
        return [Mutation(COPY, src, tgt) for src in covered for tgt in covered]
    if kind == SWAP:
        out = []
        for i, a in enumerate(covered):
            for b in covered[i + 1 :]:
                if not genome.nested(a.id, b.id):
                    out.append(Mutation(SWAP, a, b))
        return out
    raise MutationError(f"unknown operator kind {kind!r}")


def sample_mutation(
    genome: Genome, coverage: "CoverageMap", kind: str, rng: random.Random
) -> Mutation:
    """Draw one mutation uniformly over the eligible covered sites (or pairs)."""
    covered = enumerate_sites(genome, coverage)
    if not covered:
        raise MutationError("no covered sites to mutate")
    if kind == COPY:
        return Mutation(COPY, rng.choice(covered), rng.choice(covered))
    if kind == DELETE:
        eligible = [s for s in covered if _deletable(genome, s)]
        if not eligible:
            raise MutationError("no deletable covered sites")
        return Mutation(DELETE, None, rng.choice(eligible))
    if kind == SWAP:
        pairs = enumerate_mutations(genome, coverage, SWAP)
        if not pairs:
            raise MutationError("swap needs at least two mutually non-nested covered sites")
        return rng.choice(pairs)
    raise MutationError(f"unknown operator kind {kind!r}")


# ---------------------------------------------------------------------------
# Deterministic seed splitting for concurrent or staged sampling


def derive_seed(master_seed: int, *parts: object) -> int:
    """Child seed from a master seed and a task path; stable across platforms."""
    blob = repr((master_seed,) + parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def derive_rng(master_seed: int, *parts: object) -> random.Random:
    return random.Random(derive_seed(master_seed, *parts))
