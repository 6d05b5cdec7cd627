"""Gap series and verdicts for semi-uniform Feller continuity and its equivalents.

Every limit statement is checked along one declared parameter sequence.
For each term the relevant supremum (or infimum) over measurable sets of
the second coordinate is computed exactly: the signed per-atom differences
are accumulated as rationals and split into positive and negative parts.

A report's verdict is a diagnostic of that sequence only:

* PASS when every tail gap is at most ``eps``, or when the tail gaps decay
  like a positive power (log-log slope at least ``min_rate``) of the
  distance to the limit;
* FAIL when every tail gap is at least ``fail_floor`` and they do not decay;
* INCONCLUSIVE otherwise.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from .kernel import (
    JointKernel,
    MeasureSpace,
    ParamSequence,
    belief_kernel_phi,
    determining_family,
    disintegrate,
    integrated_kernel,
    restrict_to_atoms,
)
from .measure import (
    CONSTANT_ONE,
    DomainError,
    FunctionFamily,
    Measure,
    MetricSpace,
    ProductSpace,
    Space,
    TestFunction,
    coordinate,
    weak_metric,
)

DEFAULT_EPS = 1e-6
DEFAULT_FAIL_FLOOR = 1e-3
DEFAULT_LENGTH = 64
MIN_RATE = 0.5


class ConditionId(str, enum.Enum):
    SUF_A = "SUF_A"
    WTV_B = "WTV_B"
    CLOSED_C = "CLOSED_C"
    CONTSET_D = "CONTSET_D"
    LSC_E = "LSC_E"
    MARGINAL_TV = "MARGINAL_TV"
    ASSUMPTION_KERN = "ASSUMPTION_KERN"
    ASSUMPTION_H = "ASSUMPTION_H"
    ASSUMPTION_M = "ASSUMPTION_M"


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


def tail_start(length: int) -> int:
    return math.ceil(3 * length / 4)


# ---------------------------------------------------------------------------
# test sets


@dataclass(frozen=True)
class FiniteSet:
    """A subset of a finite discrete space; clopen, with empty boundary."""

    space: Space
    points: frozenset

    def __post_init__(self) -> None:
        if self.space.metric != "discrete":
            raise DomainError("FiniteSet witnesses need a discrete space")
        object.__setattr__(self, "points", frozenset(self.points))

    @property
    def name(self) -> str:
        return "{" + ",".join(p.id for p in self.space if p in self.points) + "}"

    is_open = True
    is_closed = True

    def contains(self, atom: Any) -> bool:
        return atom in self.points

    def boundary_mass(self, mu: Measure) -> float:
        return 0.0

    def intersect(self, other: "FiniteSet") -> "FiniteSet":
        return FiniteSet(self.space, self.points & other.points)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self) -> None:
        if math.isinf(self.lo):
            object.__setattr__(self, "lo_closed", False)
        if math.isinf(self.hi):
            object.__setattr__(self, "hi_closed", False)

    @property
    def empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed))

    def contains_x(self, x: float) -> bool:
        above = x > self.lo or (self.lo_closed and x == self.lo)
        below = x < self.hi or (self.hi_closed and x == self.hi)
        return above and below

    def intersect(self, other: "Interval") -> "Interval":
        if self.lo > other.lo:
            lo, lo_c = self.lo, self.lo_closed
        elif other.lo > self.lo:
            lo, lo_c = other.lo, other.lo_closed
        else:
            lo, lo_c = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_c = self.hi, self.hi_closed
        elif other.hi < self.hi:
            hi, hi_c = other.hi, other.hi_closed
        else:
            hi, hi_c = self.hi, self.hi_closed and other.hi_closed
        return Interval(lo, hi, lo_c, hi_c)

    def __str__(self) -> str:
        left = "[" if self.lo_closed else "("
        right = "]" if self.hi_closed else ")"
        return f"{left}{self.lo:g},{self.hi:g}{right}"


@dataclass(frozen=True)
class IntervalUnion:
    """A finite union of intervals of the real line, acting on the first coordinate."""

    intervals: tuple[Interval, ...]

    def __post_init__(self) -> None:
        kept = sorted({iv for iv in self.intervals if not iv.empty}, key=lambda iv: (iv.lo, iv.hi, iv.lo_closed, iv.hi_closed))
        object.__setattr__(self, "intervals", tuple(kept))

    @classmethod
    def of(cls, *intervals: Interval) -> "IntervalUnion":
        return cls(tuple(intervals))

    @property
    def name(self) -> str:
        return "U".join(str(iv) for iv in self.intervals) if self.intervals else "{}"

    def contains_x(self, x: float) -> bool:
        return any(iv.contains_x(x) for iv in self.intervals)

    def contains(self, atom: Any) -> bool:
        return self.contains_x(coordinate(atom))

    def _endpoints(self) -> list[float]:
        ends = {e for iv in self.intervals for e in (iv.lo, iv.hi) if math.isfinite(e)}
        return sorted(ends)

    def boundary(self) -> list[float]:
        out = []
        for e in self._endpoints():
            inside = self.contains_x(e)
            right = any(iv.lo <= e < iv.hi for iv in self.intervals)
            left = any(iv.lo < e <= iv.hi for iv in self.intervals)
            if inside and left and right:
                continue
            if not (inside or left or right):
                continue
            out.append(e)
        return out

    @property
    def is_open(self) -> bool:
        return not any(self.contains_x(e) for e in self.boundary())

    @property
    def is_closed(self) -> bool:
        return all(self.contains_x(e) for e in self.boundary())

    def boundary_mass(self, mu: Measure) -> float:
        edge = set(self.boundary())
        return mu.measure_of(lambda a: coordinate(a) in edge)

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion(tuple(a.intersect(b) for a in self.intervals for b in other.intervals))


WHOLE_LINE = IntervalUnion.of(Interval(-math.inf, math.inf))


def set_indicator(s) -> TestFunction:
    return TestFunction(f"1{s.name}", 1.0, lambda a: 1.0 if s.contains(a) else 0.0)


# ---------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class ContinuousFunction:
    fn: TestFunction

    @property
    def name(self) -> str:
        return self.fn.name


@dataclass(frozen=True)
class LscFunction:
    """A nonnegative bounded lower semi-continuous function."""

    fn: TestFunction

    @property
    def name(self) -> str:
        return self.fn.name


@dataclass(frozen=True)
class OpenSet:
    set: Any

    def __post_init__(self) -> None:
        if not self.set.is_open:
            raise DomainError(f"{self.set.name} is not open")

    @property
    def name(self) -> str:
        return self.set.name


@dataclass(frozen=True)
class ClosedSet:
    set: Any

    def __post_init__(self) -> None:
        if not self.set.is_closed:
            raise DomainError(f"{self.set.name} is not closed")

    @property
    def name(self) -> str:
        return self.set.name


@dataclass(frozen=True)
class ContinuitySet:
    """A set whose boundary must carry no mass under the limit S1 marginal (checked per sequence)."""

    set: Any

    @property
    def name(self) -> str:
        return self.set.name


_WITNESS_TYPES = {
    ConditionId.SUF_A: ContinuousFunction,
    ConditionId.WTV_B: OpenSet,
    ConditionId.CLOSED_C: ClosedSet,
    ConditionId.CONTSET_D: ContinuitySet,
    ConditionId.LSC_E: LscFunction,
}


# ---------------------------------------------------------------------------
# reports


def _decay_rate(gaps: Sequence[float], distances: Sequence[float]) -> float | None:
    if len(gaps) < 2 or min(gaps) <= 0.0 or min(distances) <= 0.0:
        return None
    xs = [math.log(d) for d in distances]
    ys = [math.log(g) for g in gaps]
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    if sxx == 0.0:
        return None
    return math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx


def judge(
    gaps: Sequence[float],
    distances: Sequence[float],
    eps: float = DEFAULT_EPS,
    fail_floor: float = DEFAULT_FAIL_FLOOR,
    start: int | None = None,
    min_rate: float = MIN_RATE,
) -> tuple[Verdict, float | None]:
    """Verdict on the tail ``n >= start`` (1-based) of a gap series, and the fitted decay rate."""
    start = tail_start(len(gaps)) if start is None else start
    tail = list(gaps[start - 1 :]) if start >= 1 else list(gaps)
    dist = list(distances[start - 1 :]) if start >= 1 else list(distances)
    if not tail:
        return Verdict.INCONCLUSIVE, None
    if max(tail) <= eps:
        return Verdict.PASS, None
    rate = _decay_rate(tail, dist)
    if rate is not None and rate >= min_rate:
        return Verdict.PASS, rate
    if min(tail) >= fail_floor:
        return Verdict.FAIL, rate
    return Verdict.INCONCLUSIVE, rate


@dataclass(frozen=True)
class GapReport:
    condition: str
    witness: str
    gaps: tuple[float, ...]
    distances: tuple[float, ...]
    verdict: Verdict
    eps: float
    fail_floor: float
    tail_start: int
    rate: float | None = None
    note: str = ""

    def rows(self) -> list[dict]:
        return [
            {"condition": self.condition, "witness": self.witness, "n": n, "distance": d, "gap": g}
            for n, (d, g) in enumerate(zip(self.distances, self.gaps), start=1)
        ]

    def summary(self) -> dict:
        return {
            "condition": self.condition,
            "witness": self.witness,
            "verdict": self.verdict.value,
            "eps": self.eps,
            "fail_floor": self.fail_floor,
            "tail_start": self.tail_start,
            "terminal_gap": self.gaps[-1] if self.gaps else None,
            "rate": self.rate,
            "note": self.note,
        }


def make_report(condition, witness: str, gaps, seq: ParamSequence, eps, fail_floor, start=None, note="") -> GapReport:
    start = tail_start(len(gaps)) if start is None else start
    verdict, rate = judge(gaps, seq.distances, eps, fail_floor, start)
    cond = condition.value if isinstance(condition, ConditionId) else str(condition)
    return GapReport(cond, witness, tuple(gaps), tuple(seq.distances), verdict, eps, fail_floor, start, rate, note)


def aggregate(verdicts: Iterable[Verdict]) -> Verdict:
    verdicts = list(verdicts)
    if any(v is Verdict.FAIL for v in verdicts):
        return Verdict.FAIL
    if all(v is Verdict.PASS for v in verdicts):
        return Verdict.PASS
    return Verdict.INCONCLUSIVE


def conjunction(*verdicts: Verdict) -> Verdict:
    return aggregate(verdicts)


@dataclass(frozen=True)
class ConditionReport:
    """All witness reports of one condition; the condition fails if any witness fails."""

    condition: str
    reports: tuple[GapReport, ...]
    verdict: Verdict
    note: str = ""

    @classmethod
    def of(cls, condition, reports: Iterable[GapReport], note: str = "") -> "ConditionReport":
        reports = tuple(reports)
        cond = condition.value if isinstance(condition, ConditionId) else str(condition)
        return cls(cond, reports, aggregate(r.verdict for r in reports), note)

    def worst(self) -> GapReport | None:
        if not self.reports:
            return None
        return max(self.reports, key=lambda r: r.gaps[-1] if r.gaps else 0.0)

    def summary(self) -> dict:
        return {
            "condition": self.condition,
            "verdict": self.verdict.value,
            "witnesses": len(self.reports),
            "note": self.note,
            "reports": [r.summary() for r in self.reports],
        }


# ---------------------------------------------------------------------------
# exact slice differences


class SequenceProbe:
    """Exact joint differences ``psi(.|s3_n) - psi(.|s3)`` along a sequence, computed once.

    Differences are stored as integers over one common denominator per
    term, and witness values as integers over one common denominator, so
    every slice sum and every positive or negative part is exact.
    """

    def __init__(self, psi: JointKernel, seq: ParamSequence):
        if seq.space != psi.params:
            raise DomainError(f"sequence lives on {seq.space.name!r}, kernel is given {psi.params.name!r}")
        self.psi = psi
        self.seq = seq
        self.limit = psi(seq.limit)
        self._tables: list | None = None
        self._atoms: list = []

    @property
    def limit_s1(self) -> Measure:
        return self.limit.marginal(0)

    def _index(self, s1, index: dict) -> int:
        try:
            return index[s1]
        except KeyError:
            index[s1] = len(self._atoms)
            self._atoms.append(s1)
            return index[s1]

    def tables(self) -> list[tuple[int, dict]]:
        """Per term: denominator D and columns ``s2 -> [(atom index, D * difference)]``."""
        if self._tables is None:
            index: dict = {}
            base: dict = {}
            for (s1, s2), w in self.limit.items():
                base.setdefault(s2, {})[self._index(s1, index)] = -Fraction(w)
            out = []
            for term in self.seq.terms:
                table = {s2: dict(col) for s2, col in base.items()}
                for (s1, s2), w in self.psi(term).items():
                    col = table.setdefault(s2, {})
                    i = self._index(s1, index)
                    col[i] = col.get(i, 0) + Fraction(w)
                denom = math.lcm(*(d.denominator for col in table.values() for d in col.values()))
                out.append((denom, {
                    s2: [(i, d.numerator * (denom // d.denominator)) for i, d in col.items() if d]
                    for s2, col in table.items()
                }))
            self._tables = out
        return self._tables

    def weights(self, weight: Callable[[Any], float], nonneg: bool = False) -> tuple[int, list[int]]:
        """Witness values at every charged S1 atom as integers over one denominator."""
        self.tables()
        values = []
        for s1 in self._atoms:
            v = weight(s1)
            if nonneg and v < 0:
                raise DomainError(f"l.s.c. witness is negative at {s1!r}")
            values.append(Fraction(v))
        scale = math.lcm(*(v.denominator for v in values)) if values else 1
        return scale, [v.numerator * (scale // v.denominator) for v in values]

    def _integer_slices(self, n: int, coef: list[int]) -> tuple[int, dict]:
        denom, table = self.tables()[n]
        out = {}
        for s2, col in table.items():
            acc = 0
            for i, d in col:
                c = coef[i]
                if c:
                    acc += c * d
            out[s2] = acc
        return denom, out

    def slice_diffs(self, n: int, weight: Callable[[Any], float]) -> dict:
        """Per-S2-atom exact ``∫ weight d psi(., {s2}|s3_n) - ∫ weight d psi(., {s2}|s3)``, n from 1."""
        if not 1 <= n <= len(self.seq):
            raise DomainError(f"term {n} is outside 1..{len(self.seq)}")
        scale, coef = self.weights(weight)
        denom, ints = self._integer_slices(n - 1, coef)
        return {s2: Fraction(v, denom * scale) for s2, v in ints.items()}

    def series(self, weight: Callable[[Any], float], side: str, nonneg: bool = False) -> list[float]:
        """Sup (``pos``), minus inf (``neg``) or two-sided sup over sets B, for every term."""
        scale, coef = self.weights(weight, nonneg)
        out = []
        for n in range(len(self.seq)):
            denom, ints = self._integer_slices(n, coef)
            pos = sum(v for v in ints.values() if v > 0)
            neg = -sum(v for v in ints.values() if v < 0)
            top = max(pos, neg) if side == "two" else (pos if side == "pos" else neg)
            out.append(float(Fraction(top, denom * scale)))
        return out


def _series(probe: SequenceProbe, weight: Callable[[Any], float], side: str, nonneg: bool = False) -> list[float]:
    return probe.series(weight, side, nonneg)


def slice_differences(psi: JointKernel, s3a: Any, s3b: Any, f: Callable[[Any], float]) -> dict:
    """Exact per-S2-atom differences ``∫ f dpsi(., {s2}|s3a) - ∫ f dpsi(., {s2}|s3b)``."""
    seq = ParamSequence(psi.params, (s3a,), s3b, "pair")
    return SequenceProbe(psi, seq).slice_diffs(1, f)


_ONE = lambda _a: 1.0  # noqa: E731


def condition_gap(
    psi: JointKernel,
    seq: ParamSequence,
    cond: ConditionId | str,
    w: Any = None,
    eps: float = DEFAULT_EPS,
    fail_floor: float = DEFAULT_FAIL_FLOOR,
    start: int | None = None,
    probe: SequenceProbe | None = None,
) -> GapReport:
    """Gap series of one condition and one witness along ``seq``.

    SUF_A: two-sided sup over B of the f-integrated slices.  WTV_B: the
    negative part (one-sided inf) for an open set.  CLOSED_C: the positive
    part for a closed set.  CONTSET_D: two-sided, for a set whose boundary
    is null under the limit.  LSC_E: negative part for a nonnegative l.s.c.
    function.  MARGINAL_TV: total variation of the S2 marginals.
    """
    cond = ConditionId(cond)
    probe = probe or SequenceProbe(psi, seq)
    if cond is ConditionId.MARGINAL_TV:
        if w is not None:
            raise DomainError("MARGINAL_TV takes no witness")
        return make_report(cond, "S2-marginal", _series(probe, _ONE, "two"), seq, eps, fail_floor, start)
    expected = _WITNESS_TYPES.get(cond)
    if expected is None:
        raise DomainError(f"{cond.value} is checked by its own assumption checker")
    if not isinstance(w, expected):
        raise DomainError(f"{cond.value} needs a {expected.__name__} witness, got {type(w).__name__}")
    if cond is ConditionId.SUF_A:
        gaps = _series(probe, w.fn, "two")
    elif cond is ConditionId.LSC_E:
        gaps = _series(probe, w.fn, "neg", nonneg=True)
    else:
        indicator = set_indicator(w.set)
        if cond is ConditionId.CONTSET_D:
            mass = w.set.boundary_mass(probe.limit_s1)
            if mass != 0.0:
                raise DomainError(f"boundary of {w.name} carries mass {mass!r} under the limit: not a continuity set")
        side = {ConditionId.WTV_B: "neg", ConditionId.CLOSED_C: "pos", ConditionId.CONTSET_D: "two"}[cond]
        gaps = _series(probe, indicator, side)
    return make_report(cond, w.name, gaps, seq, eps, fail_floor, start)


def suf_condition(
    psi: JointKernel,
    seq: ParamSequence,
    family: Iterable[TestFunction],
    eps: float = DEFAULT_EPS,
    fail_floor: float = DEFAULT_FAIL_FLOOR,
    probe: SequenceProbe | None = None,
    label: str = "SUF_A",
) -> ConditionReport:
    probe = probe or SequenceProbe(psi, seq)
    reports = [condition_gap(psi, seq, ConditionId.SUF_A, ContinuousFunction(f), eps, fail_floor, probe=probe) for f in family]
    return ConditionReport.of(label, reports)


# ---------------------------------------------------------------------------
# witness plans


def _all_subsets(space: Space) -> list[FiniteSet]:
    pts = list(space)
    return [FiniteSet(space, frozenset(c)) for r in range(len(pts) + 1) for c in itertools.combinations(pts, r)]


@dataclass(frozen=True)
class WitnessPlan:
    """Witness families for every condition on one S1."""

    functions: FunctionFamily
    sets: tuple
    lsc: tuple[TestFunction, ...]
    base: tuple
    note: str = ""

    @classmethod
    def discrete(cls, space: Space, family: FunctionFamily | None = None) -> "WitnessPlan":
        """Exhaustive plan for a finite discrete S1: every subset is clopen with empty boundary."""
        if not (isinstance(space, Space) and space.metric == "discrete"):
            raise DomainError("exhaustive witnesses need a finite discrete S1")
        subsets = _all_subsets(space)
        k = len(space)
        staircase = TestFunction(
            "staircase", 1.0, lambda a: space.position(a) / (k - 1) if k > 1 else 1.0
        )
        lsc = tuple(set_indicator(s) for s in subsets) + (staircase,)
        base = tuple(FiniteSet(space, frozenset([p])) for p in space) + (FiniteSet(space, frozenset(space)),)
        return cls(family or determining_family(space), tuple(subsets), lsc, base,
                   "l.s.c. witnesses are indicator and staircase step functions")

    @classmethod
    def intervals(cls, sets: Iterable[IntervalUnion], family: FunctionFamily | None = None) -> "WitnessPlan":
        """Plan for real-line atoms: declared finite unions of intervals plus the whole line."""
        from .measure import REAL_FAMILY

        sets = tuple(dict.fromkeys((WHOLE_LINE,) + tuple(sets)))
        opens = tuple(s for s in sets if s.is_open)
        lsc = (CONSTANT_ONE,) + tuple(set_indicator(s) for s in opens if s != WHOLE_LINE)
        return cls(family or REAL_FAMILY, sets, lsc, opens,
                   "sets are declared interval unions; l.s.c. witnesses are open-set indicators")

    def open_sets(self) -> list[OpenSet]:
        return [OpenSet(s) for s in self.sets if s.is_open]

    def closed_sets(self) -> list[ClosedSet]:
        return [ClosedSet(s) for s in self.sets if s.is_closed]


def default_plan(space: MetricSpace) -> WitnessPlan:
    if isinstance(space, Space) and space.metric == "discrete":
        return WitnessPlan.discrete(space)
    raise DomainError(f"no generated witnesses for S1 = {space.name!r}; pass a WitnessPlan")


# ---------------------------------------------------------------------------
# assumption checkers


def _intersection_closure(base: Sequence) -> list:
    seen = dict.fromkeys(base)
    frontier = list(seen)
    while frontier:
        new = []
        current = list(seen)
        for a in frontier:
            for b in current:
                c = a.intersect(b)
                if c not in seen:
                    seen[c] = None
                    new.append(c)
        frontier = new
    return list(seen)


def check_assumption_kern(
    psi: JointKernel,
    seq: ParamSequence,
    eps: float = DEFAULT_EPS,
    fail_floor: float = DEFAULT_FAIL_FLOOR,
    base: Sequence | None = None,
    probe: SequenceProbe | None = None,
) -> ConditionReport:
    """Equicontinuity at the limit of ``s3 -> psi(O x B|s3)`` over B, for finite intersections O of a base.

    On a finite discrete S1 the base is the singletons plus S1.  For other S1 a
    base must be supplied; base sets whose boundary is charged by the limit are
    dropped, which the dependence of the base on the limit point permits.
    """
    probe = probe or SequenceProbe(psi, seq)
    note = ""
    if base is None:
        s1 = psi.s1
        if not (isinstance(s1, Space) and s1.metric == "discrete"):
            raise DomainError("ASSUMPTION_KERN without an explicit base is supported only for a finite discrete S1")
        base = [FiniteSet(s1, frozenset([p])) for p in s1] + [FiniteSet(s1, frozenset(s1))]
    else:
        kept = [O for O in base if O.boundary_mass(probe.limit_s1) == 0.0]
        if len(kept) < len(base):
            note = f"{len(base) - len(kept)} base sets dropped: boundary charged at the limit"
        base = kept
    family = _intersection_closure(base)
    reports = [
        make_report(ConditionId.ASSUMPTION_KERN, O.name, _series(probe, set_indicator(O), "two"), seq, eps, fail_floor)
        for O in family
    ]
    return ConditionReport.of(ConditionId.ASSUMPTION_KERN, reports, note)


def check_assumption_h(
    psi: JointKernel,
    seq: ParamSequence,
    fam: FunctionFamily | None = None,
    eps: float = DEFAULT_EPS,
    fail_floor: float = DEFAULT_FAIL_FLOOR,
) -> ConditionReport:
    """Weak convergence of the conditionals ``Phi(.|s2, s3_n)`` at every s2 charged by the limit.

    The full sequence is checked; a FAIL reads "full-sequence check failed"
    and does not by itself refute convergence along a subsequence.
    """
    notes = []
    if not psi.s1.finite:
        psi = restrict_to_atoms(psi, seq.terms + (seq.limit,))
        seq = ParamSequence(psi.params, seq.terms, seq.limit, seq.name)
        notes.append("S1 restricted to the atoms charged along the sequence")
    fam = fam or determining_family(psi.s1)
    at_limit = disintegrate(psi, seq.limit)
    along = [disintegrate(psi, t) for t in seq.terms]
    reports = []
    null_terms = 0
    for s2 in at_limit.marginal.support:
        target = at_limit.conditional(s2)
        gaps = []
        for d in along:
            if d.is_null(s2):
                null_terms += 1
            gaps.append(weak_metric(d.conditional(s2), target, fam))
        reports.append(make_report(ConditionId.ASSUMPTION_H, f"s2={psi.s2.label(s2)}", gaps, seq, eps, fail_floor))
    if null_terms:
        notes.append(f"uniform null-atom convention used in {null_terms} term(s)")
    verdict = aggregate(r.verdict for r in reports)
    if verdict is Verdict.FAIL:
        notes.append("full-sequence check failed")
    return ConditionReport(ConditionId.ASSUMPTION_H.value, tuple(reports), verdict, "; ".join(notes))


def check_assumption_m(
    psi: JointKernel,
    seq: ParamSequence,
    fam: FunctionFamily,
    eps: float = DEFAULT_EPS,
    fail_floor: float = DEFAULT_FAIL_FLOOR,
    probe: SequenceProbe | None = None,
) -> ConditionReport:
    """The SUF_A limit for every member of a determining family that contains the constant one."""
    if not isinstance(fam, FunctionFamily) or not len(fam):
        raise DomainError("ASSUMPTION_M needs a nonempty FunctionFamily headed by the constant one")
    report = suf_condition(psi, seq, fam, eps, fail_floor, probe, label=ConditionId.ASSUMPTION_M.value)
    return report


# ---------------------------------------------------------------------------
# suites


PHI_SUF_A = "SUF_A[phi]"
MARGINAL_AND_H = "MARGINAL_TV&ASSUMPTION_H"
EQUIVALENT = (
    "SUF_A", "WTV_B", "CLOSED_C", "CONTSET_D", "LSC_E",
    "ASSUMPTION_KERN", MARGINAL_AND_H, "ASSUMPTION_M", PHI_SUF_A,
)


@dataclass(frozen=True)
class SuiteReport:
    conditions: dict
    agreement: bool
    note: str = ""

    def verdict(self, key: str) -> Verdict:
        return self.conditions[key].verdict

    def verdicts(self) -> dict[str, Verdict]:
        return {k: c.verdict for k, c in self.conditions.items()}

    def summary(self) -> dict:
        return {
            "agreement": self.agreement,
            "verdicts": {k: v.value for k, v in self.verdicts().items()},
            "note": self.note,
        }


def equivalence_suite(
    psi: JointKernel,
    seq: ParamSequence,
    eps: float = DEFAULT_EPS,
    fail_floor: float = DEFAULT_FAIL_FLOOR,
    plan: WitnessPlan | None = None,
    net: Sequence[Measure] | None = None,
) -> SuiteReport:
    """Every condition equivalent to semi-uniform Feller continuity, along one sequence.

    AGREEMENT holds when all equivalent conditions share a verdict and a
    PASS of SUF_A comes with a PASS of MARGINAL_TV.
    """
    plan = plan or default_plan(psi.s1)
    probe = SequenceProbe(psi, seq)
    limit_s1 = probe.limit_s1
    out: dict = {}

    out["SUF_A"] = suf_condition(psi, seq, plan.functions, eps, fail_floor, probe)
    out["WTV_B"] = ConditionReport.of(
        "WTV_B", [condition_gap(psi, seq, "WTV_B", o, eps, fail_floor, probe=probe) for o in plan.open_sets()]
    )
    out["CLOSED_C"] = ConditionReport.of(
        "CLOSED_C", [condition_gap(psi, seq, "CLOSED_C", c, eps, fail_floor, probe=probe) for c in plan.closed_sets()]
    )
    certified = [ContinuitySet(s) for s in plan.sets if s.boundary_mass(limit_s1) == 0.0]
    out["CONTSET_D"] = ConditionReport.of(
        "CONTSET_D",
        [condition_gap(psi, seq, "CONTSET_D", a, eps, fail_floor, probe=probe) for a in certified],
        f"{len(plan.sets) - len(certified)} uncertified sets skipped" if len(certified) < len(plan.sets) else "",
    )
    out["LSC_E"] = ConditionReport.of(
        "LSC_E",
        [condition_gap(psi, seq, "LSC_E", LscFunction(f), eps, fail_floor, probe=probe) for f in plan.lsc],
        "witnesses are a strict subset of the nonnegative bounded l.s.c. functions",
    )
    out["MARGINAL_TV"] = ConditionReport.of("MARGINAL_TV", [condition_gap(psi, seq, "MARGINAL_TV", None, eps, fail_floor, probe=probe)])
    base = None if isinstance(psi.s1, Space) and psi.s1.metric == "discrete" else plan.base
    out["ASSUMPTION_KERN"] = check_assumption_kern(psi, seq, eps, fail_floor, base=base, probe=probe)
    out["ASSUMPTION_H"] = check_assumption_h(psi, seq, None if base is None else plan.functions, eps, fail_floor)
    out[MARGINAL_AND_H] = ConditionReport(
        MARGINAL_AND_H, (), conjunction(out["MARGINAL_TV"].verdict, out["ASSUMPTION_H"].verdict)
    )
    out["ASSUMPTION_M"] = check_assumption_m(psi, seq, plan.functions, eps, fail_floor, probe)
    phi = belief_kernel_phi(psi)
    if net is None and not psi.s1.finite:
        net = _limit_net(probe)
    bfam = determining_family(phi.s1, net)
    out[PHI_SUF_A] = suf_condition(phi, seq, bfam, eps, fail_floor, label=PHI_SUF_A)

    verdicts = [out[k].verdict for k in EQUIVALENT]
    agree = len(set(verdicts)) == 1
    if out["SUF_A"].verdict is Verdict.PASS and out["MARGINAL_TV"].verdict is not Verdict.PASS:
        agree = False
    return SuiteReport(out, agree, "verdicts certify behaviour along the declared sequence only")


def _limit_net(probe: SequenceProbe) -> list[Measure]:
    from .measure import dirac

    s1 = probe.psi.s1
    return [dirac(a, s1) for a in probe.limit_s1.support]


# ---------------------------------------------------------------------------
# integration preservation


@dataclass(frozen=True)
class PreservationReport:
    xi: ConditionReport
    integrated: ConditionReport
    mixing_certificate: GapReport

    @property
    def agreement(self) -> bool:
        return self.xi.verdict == self.integrated.verdict

    def summary(self) -> dict:
        return {
            "xi": self.xi.verdict.value,
            "integrated": self.integrated.verdict.value,
            "agreement": self.agreement,
        }


def _dirac_atom(mu: Measure):
    return mu.support[0] if len(mu) == 1 else None


def preservation_check(
    xi: JointKernel,
    mu_seq: ParamSequence,
    s4_seq: ParamSequence,
    eps: float = DEFAULT_EPS,
    fail_floor: float = DEFAULT_FAIL_FLOOR,
    family: FunctionFamily | None = None,
) -> PreservationReport:
    """SUF_A for ``xi`` given ``S3 x S4`` and for its integral against ``mu`` given ``P(S3) x S4``.

    ``xi`` is probed along ``(atom of mu_n, s4_n)`` when every ``mu_n`` is a
    point mass, otherwise along ``(s3, s4_n)`` for each ``s3`` charged by the
    limit of ``mu_n``.
    """
    if len(mu_seq) != len(s4_seq):
        raise DomainError("mixing and S4 sequences differ in length")
    s3_space, s4_space = xi.params.factors
    if mu_seq.space != MeasureSpace(s3_space) or s4_seq.space != s4_space:
        raise DomainError("sequences do not live on P(S3) and S4")
    s3_family = determining_family(s3_space)
    cert_gaps = [weak_metric(m, mu_seq.limit, s3_family) for m in mu_seq.terms]
    certificate = make_report("MIXING_WEAK", "weak_metric", cert_gaps, mu_seq, eps, fail_floor)
    if certificate.verdict is not Verdict.PASS:
        raise DomainError("mixing measures are not certified to converge weakly")
    family = family or determining_family(xi.s1)

    atoms = [_dirac_atom(m) for m in mu_seq.terms + (mu_seq.limit,)]
    if all(a is not None for a in atoms):
        paths = [(atoms[:-1], atoms[-1])]
    else:
        paths = [([s3] * len(mu_seq), s3) for s3 in mu_seq.limit.support]
    xi_reports = []
    for s3_terms, s3_limit in paths:
        seq = ParamSequence(xi.params, tuple(zip(s3_terms, s4_seq.terms)), (s3_limit, s4_seq.limit), "xi-path")
        xi_reports.extend(suf_condition(xi, seq, family, eps, fail_floor).reports)
    xi_report = ConditionReport.of("SUF_A[xi]", xi_reports)

    integrated = integrated_kernel(xi)
    seq = ParamSequence(integrated.params, tuple(zip(mu_seq.terms, s4_seq.terms)), (mu_seq.limit, s4_seq.limit), "mixing-path")
    integrated_report = suf_condition(integrated, seq, family, eps, fail_floor, label="SUF_A[integrated]")
    return PreservationReport(xi_report, integrated_report, certificate)


def product_sequence(space: ProductSpace, *seqs: ParamSequence, name: str = "product") -> ParamSequence:
    """Zip component sequences of equal length into a sequence on their product."""
    lengths = {len(s) for s in seqs}
    if len(lengths) != 1:
        raise DomainError("component sequences differ in length")
    return ParamSequence(space, tuple(zip(*(s.terms for s in seqs))), tuple(s.limit for s in seqs), name)
