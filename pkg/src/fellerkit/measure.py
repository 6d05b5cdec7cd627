"""Finite-support measures on labeled metric spaces.

Every measure in the package has finitely many atoms.  Spaces may still be
infinite (the real line, spaces of beliefs); only supports are finite, which
makes every supremum over measurable sets an exact finite computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence

MASS_TOL = 1e-12


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


@dataclass(frozen=True)
class Point:
    id: str
    coord: tuple[float, ...] | None = None

    def __repr__(self) -> str:
        return f"Point({self.id!r})"


class MetricSpace:
    """Common interface of the spaces measures live on.

    Subclasses decide membership, enumeration and distance.  Atoms are any
    hashable objects the space accepts.
    """

    name: str
    metric: str
    finite: bool = False

    def __contains__(self, atom: object) -> bool:
        raise NotImplementedError

    def distance(self, a: Any, b: Any) -> float:
        raise NotImplementedError

    def label(self, atom: Any) -> str:
        """Stable text label of an atom, used for sorting and serialization."""
        return atom.id


@dataclass(frozen=True, eq=True)
class Space(MetricSpace):
    """A finite space of labeled points.

    ``metric`` is ``"discrete"`` (distance one between distinct points) or
    ``"euclidean"`` (distance between coordinate vectors).
    """

    name: str
    points: tuple[Point, ...]  # type: ignore[assignment]
    metric: str = "discrete"
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)  # type: ignore[assignment]

    finite = True

    def __post_init__(self) -> None:
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise DomainError(f"space {self.name!r} has no points")
        if self.metric not in ("discrete", "euclidean"):
            raise DomainError(f"unknown metric {self.metric!r}")
        index = {}
        for p in pts:
            if p.id in index:
                raise DomainError(f"duplicate point id {p.id!r} in space {self.name!r}")
            index[p.id] = p
        dims = {None if p.coord is None else len(p.coord) for p in pts}
        if len(dims) > 1:
            raise DomainError(f"points of {self.name!r} have mixed coordinate dimensions")
        if self.metric == "euclidean" and None in dims:
            raise DomainError("euclidean metric needs coordinates on every point")
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_ids(cls, name: str, ids: Iterable[str]) -> "Space":
        return cls(name, tuple(Point(str(i)) for i in ids))

    def __contains__(self, atom: object) -> bool:
        return isinstance(atom, Point) and self._index.get(atom.id) == atom

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[Point]:
        return iter(self.points)

    def __getitem__(self, point_id: str) -> Point:
        try:
            return self._index[point_id]
        except KeyError:
            raise DomainError(f"no point {point_id!r} in space {self.name!r}") from None

    def position(self, p: Point) -> int:
        return self.points.index(p)

    def distance(self, a: Point, b: Point) -> float:
        if self.metric == "discrete":
            return 0.0 if a == b else 1.0
        return math.dist(a.coord, b.coord)


def real_point(x: float) -> Point:
    """The point of the real line at ``x`` (negative zero folds to zero)."""
    x = float(x) + 0.0
    return Point(repr(x), (x,))


@dataclass(frozen=True)
class RealLine(MetricSpace):
    """The real line (or a closed sub-interval), with atoms built by ``real_point``."""

    name: str = "R"
    lo: float = -math.inf
    hi: float = math.inf

    metric = "euclidean"

    def __contains__(self, atom: object) -> bool:
        if not isinstance(atom, Point) or atom.coord is None or len(atom.coord) != 1:
            return False
        x = atom.coord[0]
        return self.lo <= x <= self.hi and atom.id == repr(x)

    @property
    def points(self) -> tuple:
        raise DomainError(f"space {self.name!r} is not finite")

    def point(self, x: float) -> Point:
        p = real_point(x)
        if p not in self:
            raise DomainError(f"{x} outside [{self.lo}, {self.hi}]")
        return p

    def distance(self, a: Point, b: Point) -> float:
        return abs(a.coord[0] - b.coord[0])


@dataclass(frozen=True)
class ProductSpace(MetricSpace):
    """Finite product of spaces; atoms are tuples, distance is the max metric."""

    factors: tuple[MetricSpace, ...]

    metric = "product"

    def __post_init__(self) -> None:
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 2:
            raise DomainError("a product needs at least two factors")

    @property
    def name(self) -> str:  # type: ignore[override]
        return "x".join(f.name for f in self.factors)

    @property
    def finite(self) -> bool:  # type: ignore[override]
        return all(f.finite for f in self.factors)

    @property
    def points(self) -> tuple:
        import itertools

        return tuple(itertools.product(*(f.points for f in self.factors)))

    def __contains__(self, atom: object) -> bool:
        return (
            isinstance(atom, tuple)
            and len(atom) == len(self.factors)
            and all(a in f for a, f in zip(atom, self.factors))
        )

    def distance(self, a: tuple, b: tuple) -> float:
        return max(f.distance(x, y) for f, x, y in zip(self.factors, a, b))

    def label(self, atom: tuple) -> str:
        return "|".join(f.label(x) for f, x in zip(self.factors, atom))


class Measure:
    """A nonnegative measure with finitely many atoms and total mass at most one.

    Zero-weight atoms are dropped on construction, so two measures compare
    equal iff they agree atom by atom.
    """

    __slots__ = ("space", "_weights", "_hash")

    def __init__(self, space: MetricSpace, weights: Mapping[Hashable, float]):
        clean: dict = {}
        for atom, w in weights.items():
            w = float(w)
            if not w >= 0.0:
                raise DomainError(f"negative or NaN weight {w} at {atom!r}")
            if atom not in space:
                raise DomainError(f"atom {atom!r} is not in space {space.name!r}")
            if w > 0.0:
                clean[atom] = w
        total = math.fsum(clean.values())
        if total > 1.0 + MASS_TOL:
            raise DomainError(f"total mass {total!r} exceeds one")
        self.space = space
        self._weights = clean
        self._hash = None

    @property
    def mass(self) -> float:
        return math.fsum(self._weights.values())

    @property
    def is_probability(self) -> bool:
        return abs(self.mass - 1.0) <= MASS_TOL

    def require_probability(self, what: str = "measure") -> "Measure":
        if not self.is_probability:
            raise DomainError(f"{what} has total mass {self.mass!r}, expected 1")
        return self

    def __getitem__(self, atom: Hashable) -> float:
        return self._weights.get(atom, 0.0)

    def items(self):
        return self._weights.items()

    @property
    def support(self) -> tuple:
        return tuple(self._weights)

    def __len__(self) -> int:
        return len(self._weights)

    def integrate(self, f: Callable[[Any], float]) -> float:
        return math.fsum(f(a) * w for a, w in self._weights.items())

    def measure_of(self, predicate: Callable[[Any], bool]) -> float:
        return math.fsum(w for a, w in self._weights.items() if predicate(a))

    def marginal(self, index: int) -> "Measure":
        """Projection of a measure on a product space onto one factor."""
        if not isinstance(self.space, ProductSpace):
            raise DomainError("marginal of a measure that is not on a product space")
        target = self.space.factors[index]
        parts: dict = {}
        for atom, w in self._weights.items():
            parts.setdefault(atom[index], []).append(w)
        return Measure(target, {a: math.fsum(ws) for a, ws in parts.items()})

    def sorted_items(self) -> list:
        space = self.space
        if isinstance(space, Space):
            return sorted(self._weights.items(), key=lambda kv: space.position(kv[0]))
        return sorted(self._weights.items(), key=lambda kv: space.label(kv[0]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Measure):
            return NotImplemented
        return self.space == other.space and self._weights == other._weights

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.space, frozenset(self._weights.items())))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{self.space.label(a)}: {w!r}" for a, w in self.sorted_items())
        return f"Measure({{{body}}})"

    def to_record(self) -> dict:
        """Structured record: space name and (label, weight) pairs in space order."""
        return {
            "space": self.space.name,
            "atoms": [[self.space.label(a), w] for a, w in self.sorted_items()],
        }


def measure_from_record(record: Mapping, space: Space) -> Measure:
    if record.get("space") != space.name:
        raise DomainError(f"record is on space {record.get('space')!r}, not {space.name!r}")
    return Measure(space, {space[str(pid)]: float(w) for pid, w in record["atoms"]})


def dirac(p: Hashable, space: MetricSpace) -> Measure:
    if p not in space:
        raise DomainError(f"{p!r} is not a point of {space.name!r}")
    return Measure(space, {p: 1.0})


def uniform(space: MetricSpace) -> Measure:
    pts = space.points
    return Measure(space, {p: 1.0 / len(pts) for p in pts})


def mixture(terms: Iterable[tuple[float, Measure]]) -> Measure:
    """Convex combination ``sum(c * mu)``; all measures must share a space."""
    terms = [(float(c), mu) for c, mu in terms if c != 0]
    if not terms:
        raise DomainError("empty mixture")
    space = terms[0][1].space
    parts: dict = {}
    for c, mu in terms:
        if mu.space != space:
            raise DomainError("mixture of measures on different spaces")
        for a, w in mu.items():
            parts.setdefault(a, []).append(c * w)
    return Measure(space, {a: math.fsum(ws) for a, ws in parts.items()})


def pushforward(mu: Measure, mapping: Callable[[Any], Any], target: MetricSpace) -> Measure:
    parts: dict = {}
    for a, w in mu.items():
        b = mapping(a)
        if b not in target:
            raise DomainError(f"image {b!r} of {a!r} is outside {target.name!r}")
        parts.setdefault(b, []).append(w)
    return Measure(target, {b: math.fsum(ws) for b, ws in parts.items()})


def _signed_parts(values: Iterable) -> tuple[Fraction, Fraction]:
    pos = Fraction(0)
    neg = Fraction(0)
    for d in values:
        d = Fraction(d)
        if d > 0:
            pos += d
        elif d < 0:
            neg -= d
    return pos, neg


def signed_parts(diffs: Mapping | Iterable) -> tuple[float, float]:
    """Exact positive-part and negative-part sums of signed atom differences.

    ``pos`` is ``sup_B sum_{p in B} d(p)`` and ``neg`` is ``-inf_B`` of the
    same sum, both over all subsets ``B``.
    """
    values = diffs.values() if isinstance(diffs, Mapping) else diffs
    pos, neg = _signed_parts(values)
    return float(pos), float(neg)


def signed_sup_gap(diffs: Mapping | Iterable) -> float:
    """``sup_B |sum_{p in B} diffs[p]|``, computed exactly in rational arithmetic."""
    values = diffs.values() if isinstance(diffs, Mapping) else diffs
    pos, neg = _signed_parts(values)
    return float(max(pos, neg))


def exact_differences(mu: Measure, nu: Measure) -> dict:
    if mu.space != nu.space:
        raise DomainError(f"measures live on different spaces: {mu.space.name!r}, {nu.space.name!r}")
    out: dict = {}
    for a, w in mu.items():
        out[a] = Fraction(w)
    for a, w in nu.items():
        out[a] = out.get(a, Fraction(0)) - Fraction(w)
    return out


def tv_distance(mu: Measure, nu: Measure) -> float:
    """``sup_C |mu(C) - nu(C)|`` over all measurable sets, exactly."""
    return signed_sup_gap(exact_differences(mu, nu))


@dataclass(frozen=True)
class TestFunction:
    """A bounded real function on the atoms of a space, with its declared bound."""

    __test__ = False  # keep pytest from collecting the class

    name: str
    bound: float
    fn: Callable[[Any], float] = field(compare=False)

    def __call__(self, atom: Any) -> float:
        return self.fn(atom)


CONSTANT_ONE = TestFunction("constant-one", 1.0, lambda _atom: 1.0)


def coordinate(atom: Point) -> float:
    if atom.coord is None:
        raise DomainError(f"point {atom.id!r} has no coordinate")
    return atom.coord[0] if len(atom.coord) == 1 else math.hypot(*atom.coord)


def indicator_of(points: Iterable[Point], name: str | None = None) -> TestFunction:
    members = frozenset(points)
    label = name or "1{" + ",".join(sorted(p.id for p in members)) + "}"
    return TestFunction(label, 1.0, lambda a: 1.0 if a in members else 0.0)


CLIPPED_ABS = TestFunction("clipped-abs", 1.0, lambda a: min(abs(coordinate(a)), 1.0))
ATAN = TestFunction("atan", math.pi / 2, lambda a: math.atan(coordinate(a)))


@dataclass(frozen=True)
class FunctionFamily:
    """An ordered family of bounded test functions whose first member is the constant one."""

    members: tuple[TestFunction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        if self.members and self.members[0] != CONSTANT_ONE:
            raise DomainError("member 0 of a determining family must be the constant-one function")

    def __iter__(self) -> Iterator[TestFunction]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def names(self) -> list[str]:
        return [m.name for m in self.members]

    def extended(self, extra: Sequence[TestFunction]) -> "FunctionFamily":
        return FunctionFamily(self.members + tuple(extra))

    def check_bounds(self, atoms: Iterable[Any]) -> None:
        for atom in atoms:
            for m in self.members:
                if abs(m(atom)) > m.bound + 1e-12:
                    raise DomainError(f"{m.name} exceeds its bound {m.bound} at {atom!r}")


def singleton_family(space: Space) -> FunctionFamily:
    """``{1} ∪ {indicator of each point}``; determines weak convergence on a finite discrete space."""
    return FunctionFamily((CONSTANT_ONE,) + tuple(indicator_of([p], f"1{{{p.id}}}") for p in space))


REAL_FAMILY = FunctionFamily((CONSTANT_ONE, CLIPPED_ABS, ATAN))


def weak_metric(mu: Measure, nu: Measure, fam: FunctionFamily | Sequence[TestFunction]) -> float:
    """``sum_m 2^-m |∫ f_m dmu - ∫ f_m dnu|`` with m counted from one.

    Each member is rescaled by ``max(bound, 1)`` so the family is uniformly bounded.
    """
    members = list(fam)
    if not members:
        raise DomainError("weak_metric needs a nonempty family")
    if mu.space != nu.space:
        raise DomainError("weak_metric of measures on different spaces")
    terms = []
    for m, f in enumerate(members, start=1):
        scale = max(f.bound, 1.0)
        terms.append(math.ldexp(abs(mu.integrate(f) - nu.integrate(f)) / scale, -m))
    return math.fsum(terms)
