"""Hermetic interpreter for the mini-language with statement-level tracing.

Execution is a pure function of (genome, input, limits): integer scalars and
arrays, truncating integer division (division by zero is a runtime fault),
``read`` consumes the next whitespace-separated integer token (exhausted
input is a fault), ``print`` appends the value followed by a single space.
The interpreter binds one scalar before execution starts: ``inlen``, the
number of input tokens, which is how programs learn the input length (there
is no end-of-input probe).  Undeclared scalars and unset array elements read
as 0.  Values are confined to |v| <= 2**63; exceeding that is a fault, which
keeps mutant arithmetic from ballooning.

Every statement execution costs one step and increments the statement's
site count; a ``while`` or ``if`` is counted each time its guard is
evaluated.  Runs stop with status ``step_limit`` exactly when the budget is
exhausted before normal termination.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

from . import syntax
from .genome import TreeGenome

COMPLETED = "completed"
STEP_LIMIT = "step_limit"
RUNTIME_ERROR = "runtime_error"

VALUE_LIMIT = 2**63

INPUT_LENGTH_VAR = "inlen"


@dataclass(frozen=True)
class Limits:
    """Sandbox budget for one run; all fields strictly positive."""

    max_steps: int = 100_000
    max_output: int = 65_536
    max_input_reads: int = 10_000

    def __post_init__(self):
        for name in ("max_steps", "max_output", "max_input_reads"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_LIMITS = Limits()


@dataclass(frozen=True)
class Execution:
    """Outcome of one run: status, produced output, visit counts, steps."""

    status: str
    output: str
    trace: dict[int, int]
    steps: int


@dataclass(frozen=True)
class CoverageMap:
    """Per-site visit counts summed over a suite, plus the covered fraction."""

    counts: dict[int, int]
    covered_fraction: float

    @classmethod
    def from_counts(cls, counts: dict[int, int], total_sites: int) -> "CoverageMap":
        covered = sum(1 for c in counts.values() if c > 0)
        frac = covered / total_sites if total_sites else 0.0
        return cls(dict(counts), frac)


def full_coverage(genome: TreeGenome) -> CoverageMap:
    """A synthetic map marking every site visited once; handy for tests."""
    return CoverageMap({s.id: 1 for s in genome.sites}, 1.0 if genome.sites else 0.0)


# ---------------------------------------------------------------------------
# Compilation to closures (kept per-genome for speed across suite runs)


class _Signal(Exception):
    pass


class _StepLimitHit(_Signal):
    pass


class _Fault(_Signal):
    pass


class _BreakSignal(_Signal):
    pass


class _ExitSignal(_Signal):
    pass


class _State:
    __slots__ = (
        "scalars",
        "arrays",
        "tokens",
        "pos",
        "reads",
        "out",
        "out_len",
        "steps",
        "max_steps",
        "max_output",
        "max_reads",
        "counts",
    )


def _bound(v: int) -> int:
    if -VALUE_LIMIT <= v <= VALUE_LIMIT:
        return v
    raise _Fault


def _c_expr(e) -> Callable[[_State], int]:
    if isinstance(e, syntax.Lit):
        v = e.value

        def lit(st, v=v):
            return v

        return lit
    if isinstance(e, syntax.Var):
        name = e.name

        def var(st, name=name):
            return st.scalars.get(name, 0)

        return var
    if isinstance(e, syntax.Index):
        name = e.name
        idxf = _c_expr(e.index)

        def index(st, name=name, idxf=idxf):
            i = idxf(st)
            arr = st.arrays.get(name)
            return arr.get(i, 0) if arr is not None else 0

        return index
    if isinstance(e, syntax.Neg):
        f = _c_expr(e.operand)

        def neg(st, f=f):
            return -f(st)

        return neg
    if isinstance(e, syntax.Bin):
        lf, rf = _c_expr(e.left), _c_expr(e.right)
        op = e.op
        if op == "+":

            def add(st, lf=lf, rf=rf):
                return _bound(lf(st) + rf(st))

            return add
        if op == "-":

            def sub(st, lf=lf, rf=rf):
                return _bound(lf(st) - rf(st))

            return sub
        if op == "*":

            def mul(st, lf=lf, rf=rf):
                return _bound(lf(st) * rf(st))

            return mul

        def div(st, lf=lf, rf=rf):
            a, b = lf(st), rf(st)
            if b == 0:
                raise _Fault
            q = a // b
            if q < 0 and q * b != a:
                q += 1  # truncate toward zero
            return q

        return div
    raise TypeError(f"not an expression node: {e!r}")


_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def _c_cond(c) -> Callable[[_State], bool]:
    if isinstance(c, syntax.Cmp):
        lf, rf = _c_expr(c.left), _c_expr(c.right)
        opf = _CMP[c.op]

        def cmp(st, lf=lf, rf=rf, opf=opf):
            return opf(lf(st), rf(st))

        return cmp
    if isinstance(c, syntax.Bool):
        fns = tuple(_c_cond(a) for a in c.args)
        if c.op == "and":

            def call_and(st, fns=fns):
                for fn in fns:
                    if not fn(st):
                        return False
                return True

            return call_and

        def call_or(st, fns=fns):
            for fn in fns:
                if fn(st):
                    return True
            return False

        return call_or
    raise TypeError(f"not a condition node: {c!r}")


def _c_store(target) -> Callable[[_State, int], None]:
    if isinstance(target, syntax.Var):
        name = target.name

        def store_var(st, v, name=name):
            st.scalars[name] = v

        return store_var
    name = target.name
    idxf = _c_expr(target.index)

    def store_elem(st, v, name=name, idxf=idxf):
        i = idxf(st)
        arr = st.arrays.get(name)
        if arr is None:
            arr = {}
            st.arrays[name] = arr
        arr[i] = v

    return store_elem


def _c_stmt(s, sid: int, ids: dict[int, int]) -> Callable[[_State], None]:
    if isinstance(s, syntax.Assign):
        valf = _c_expr(s.value)
        storef = _c_store(s.target)

        def assign(st, sid=sid, valf=valf, storef=storef):
            if st.steps >= st.max_steps:
                raise _StepLimitHit
            st.steps += 1
            st.counts[sid] += 1
            storef(st, valf(st))

        return assign
    if isinstance(s, syntax.Read):
        storef = _c_store(s.target)

        def read(st, sid=sid, storef=storef):
            if st.steps >= st.max_steps:
                raise _StepLimitHit
            st.steps += 1
            st.counts[sid] += 1
            if st.pos >= len(st.tokens):
                raise _Fault
            st.reads += 1
            if st.reads > st.max_reads:
                raise _Fault
            v = st.tokens[st.pos]
            st.pos += 1
            storef(st, v)

        return read
    if isinstance(s, syntax.Print):
        valf = _c_expr(s.value)

        def emit(st, sid=sid, valf=valf):
            if st.steps >= st.max_steps:
                raise _StepLimitHit
            st.steps += 1
            st.counts[sid] += 1
            piece = str(valf(st)) + " "
            st.out_len += len(piece)
            if st.out_len > st.max_output:
                keep = st.max_output - (st.out_len - len(piece))
                if keep > 0:
                    st.out.append(piece[:keep])
                st.out_len = st.max_output
                raise _Fault
            st.out.append(piece)

        return emit
    if isinstance(s, syntax.If):
        condf = _c_cond(s.cond)
        then_fns = _c_body(s.then, ids)
        else_fns = _c_body(s.orelse or [], ids)

        def branch(st, sid=sid, condf=condf, then_fns=then_fns, else_fns=else_fns):
            if st.steps >= st.max_steps:
                raise _StepLimitHit
            st.steps += 1
            st.counts[sid] += 1
            for fn in then_fns if condf(st) else else_fns:
                fn(st)

        return branch
    if isinstance(s, syntax.While):
        condf = _c_cond(s.cond)
        body_fns = _c_body(s.body, ids)

        def loop(st, sid=sid, condf=condf, body_fns=body_fns):
            while True:
                if st.steps >= st.max_steps:
                    raise _StepLimitHit
                st.steps += 1
                st.counts[sid] += 1
                if not condf(st):
                    return
                try:
                    for fn in body_fns:
                        fn(st)
                except _BreakSignal:
                    return

        return loop
    if isinstance(s, syntax.Break):

        def brk(st, sid=sid):
            if st.steps >= st.max_steps:
                raise _StepLimitHit
            st.steps += 1
            st.counts[sid] += 1
            raise _BreakSignal

        return brk
    if isinstance(s, syntax.Exit):

        def halt(st, sid=sid):
            if st.steps >= st.max_steps:
                raise _StepLimitHit
            st.steps += 1
            st.counts[sid] += 1
            raise _ExitSignal

        return halt
    if isinstance(s, syntax.Block):
        body_fns = _c_body(s.body, ids)

        def block(st, sid=sid, body_fns=body_fns):
            if st.steps >= st.max_steps:
                raise _StepLimitHit
            st.steps += 1
            st.counts[sid] += 1
            for fn in body_fns:
                fn(st)

        return block
    raise TypeError(f"not a statement node: {s!r}")


def _c_body(stmts: list, ids: dict[int, int]) -> tuple:
    return tuple(_c_stmt(s, ids[id(s)], ids) for s in stmts)


def _compiled(genome: TreeGenome):
    cached = genome._compiled
    if cached is not None:
        return cached
    ids = {id(node): i for i, node in enumerate(syntax.iter_statements(genome.root))}
    fns = _c_body(genome.root, ids)
    compiled = (fns, len(ids))
    genome._compiled = compiled
    return compiled


def parse_input_tokens(input_text: str) -> list[int]:
    tokens = []
    for tok in input_text.split():
        try:
            tokens.append(int(tok))
        except ValueError:
            raise ValueError(f"input token {tok!r} is not an integer") from None
    return tokens


def run_program(genome: TreeGenome, input_text: str, limits: Limits | None = None) -> Execution:
    """Run a tree genome on one input; deterministic for fixed arguments."""
    limits = limits or DEFAULT_LIMITS
    tokens = parse_input_tokens(input_text)
    fns, n_sites = _compiled(genome)

    st = _State()
    st.scalars = {INPUT_LENGTH_VAR: len(tokens)}
    st.arrays = {}
    st.tokens = tokens
    st.pos = 0
    st.reads = 0
    st.out = []
    st.out_len = 0
    st.steps = 0
    st.max_steps = limits.max_steps
    st.max_output = limits.max_output
    st.max_reads = limits.max_input_reads
    st.counts = [0] * n_sites

    status = COMPLETED
    try:
        for fn in fns:
            fn(st)
    except _StepLimitHit:
        status = STEP_LIMIT
    except _ExitSignal:
        pass
    except (_Fault, _BreakSignal):
        # a break that escapes every loop is treated as a runtime fault
        status = RUNTIME_ERROR
    trace = {i: c for i, c in enumerate(st.counts) if c}
    return Execution(status, "".join(st.out), trace, st.steps)


def coverage_of(genome: TreeGenome, suite, limits: Limits | None = None) -> CoverageMap:
    """Visit counts summed over every case of a suite (or iterable of cases)."""
    cases: Iterable = getattr(suite, "cases", suite)
    totals: dict[int, int] = {}
    for case in cases:
        ex = run_program(genome, case.input, limits)
        for sid, c in ex.trace.items():
            totals[sid] = totals.get(sid, 0) + c
    return CoverageMap.from_counts(totals, genome.site_count)


def well_formed_error(genome) -> str | None:
    """Static well-formedness check, the hermetic analog of compiling.

    Returns a message for genomes with a ``break`` outside any loop, None
    when the genome is statically acceptable.  Linear genomes carry no
    checkable structure.
    """
    if not isinstance(genome, TreeGenome):
        return None

    def walk(stmts: list, loop_depth: int) -> str | None:
        for s in stmts:
            if isinstance(s, syntax.Break) and loop_depth == 0:
                return "break outside of any loop"
            if isinstance(s, syntax.While):
                bad = walk(s.body, loop_depth + 1)
            elif isinstance(s, syntax.If):
                bad = walk(s.then, loop_depth) or walk(s.orelse or [], loop_depth)
            elif isinstance(s, syntax.Block):
                bad = walk(s.body, loop_depth)
            else:
                bad = None
            if bad:
                return bad
        return None

    return walk(genome.root, 0)
