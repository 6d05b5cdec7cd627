"""Stochastic kernels on product spaces and their finite disintegrations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

from .measure import (
    CONSTANT_ONE,
    MASS_TOL,
    REAL_FAMILY,
    DomainError,
    FunctionFamily,
    Measure,
    MetricSpace,
    Point,
    ProductSpace,
    RealLine,
    Space,
    TestFunction,
    dirac,
    mixture,
    singleton_family,
    uniform,
    weak_metric,
)

TABLE_TOL = 1e-9
BELIEF_DECIMALS = 12


class Kernel:
    """A stochastic kernel: parameter atom -> probability measure on ``target``.

    ``rule`` must be pure; evaluations are cached per parameter.
    """

    def __init__(self, target: MetricSpace, params: MetricSpace, rule: Callable[[Any], Measure], name: str = "kernel"):
        self.target = target
        self.params = params
        self.rule = rule
        self.name = name
        self._cache: dict = {}

    def __call__(self, s3: Hashable) -> Measure:
        try:
            return self._cache[s3]
        except KeyError:
            pass
        if s3 not in self.params:
            raise DomainError(f"{s3!r} is not a parameter of kernel {self.name!r}")
        mu = self.rule(s3)
        if mu.space != self.target:
            raise DomainError(f"kernel {self.name!r} produced a measure on {mu.space.name!r}")
        mu.require_probability(f"{self.name}({self.params.label(s3)})")
        self._cache[s3] = mu
        return mu

    @classmethod
    def from_table(
        cls,
        target: MetricSpace,
        params: MetricSpace,
        table: Mapping[Hashable, Mapping[Hashable, float]],
        name: str = "kernel",
        tol: float = TABLE_TOL,
    ) -> "Kernel":
        rows = _validated_rows(target, params, table, name, tol)
        return cls(target, params, rows.__getitem__, name)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}: {self.params.name} -> {self.target.name})"


class JointKernel(Kernel):
    """A kernel on ``s1 x s2`` given ``params``."""

    def __init__(self, s1: MetricSpace, s2: MetricSpace, params: MetricSpace, rule: Callable[[Any], Measure], name: str = "psi"):
        super().__init__(ProductSpace((s1, s2)), params, rule, name)

    @property
    def s1(self) -> MetricSpace:
        return self.target.factors[0]

    @property
    def s2(self) -> MetricSpace:
        return self.target.factors[1]

    @classmethod
    def from_table(  # type: ignore[override]
        cls,
        s1: MetricSpace,
        s2: MetricSpace,
        params: MetricSpace,
        table: Mapping[Hashable, Mapping[tuple, float]],
        name: str = "psi",
        tol: float = TABLE_TOL,
    ) -> "JointKernel":
        rows = _validated_rows(ProductSpace((s1, s2)), params, table, name, tol)
        return cls(s1, s2, params, rows.__getitem__, name)

    @classmethod
    def constant(cls, measure: Measure, params: MetricSpace, name: str = "constant") -> "JointKernel":
        s1, s2 = measure.space.factors
        return cls(s1, s2, params, lambda _s3: measure, name)


def _validated_rows(target, params, table, name, tol) -> dict:
    rows = {}
    for s3, row in table.items():
        if s3 not in params:
            raise DomainError(f"{name}: conditioning input {s3!r} is not in {params.name!r}")
        total = math.fsum(float(w) for w in row.values())
        if abs(total - 1.0) > tol:
            raise DomainError(
                f"{name}: row for conditioning input {params.label(s3)} sums to {total!r}, not 1"
            )
        if abs(total - 1.0) > MASS_TOL:
            row = {a: float(w) / total for a, w in row.items()}
        rows[s3] = Measure(target, row)
    if params.finite:
        missing = [p for p in params.points if p not in rows]
        if missing:
            raise DomainError(f"{name}: no row for conditioning input {params.label(missing[0])}")
    return rows


@dataclass(frozen=True)
class ParamSequence:
    """A declared sequence ``terms[n-1] -> limit`` (n = 1..N) in a parameter space."""

    space: MetricSpace
    terms: tuple
    limit: Any
    name: str = "sequence"
    distances: tuple = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms + (self.limit,):
            if t not in self.space:
                raise DomainError(f"sequence {self.name!r}: {t!r} is not in {self.space.name!r}")
        d = tuple(self.space.distance(t, self.limit) for t in self.terms)
        for n in range(1, len(d)):
            if d[n] > d[n - 1] + 1e-12:
                raise DomainError(
                    f"sequence {self.name!r}: distance to the limit increases at n={n + 1}"
                )
        if len(d) > 1 and d[0] > 0 and not d[-1] < d[0]:
            raise DomainError(f"sequence {self.name!r} does not approach its limit")
        object.__setattr__(self, "distances", d)

    def __len__(self) -> int:
        return len(self.terms)

    @classmethod
    def along(
        cls,
        space: MetricSpace,
        build: Callable[[float], Any],
        length: int = 64,
        scale: float = 1.0,
        name: str = "harmonic",
    ) -> "ParamSequence":
        """Terms ``build(scale / n)`` for n = 1..length, limit ``build(0.0)``."""
        return cls(space, tuple(build(scale / n) for n in range(1, length + 1)), build(0.0), name)

    @classmethod
    def constant(cls, space: MetricSpace, point: Any, length: int = 64, name: str = "constant") -> "ParamSequence":
        return cls(space, (point,) * length, point, name)

    def map(self, space: MetricSpace, fn: Callable[[Any], Any], name: str | None = None) -> "ParamSequence":
        return ParamSequence(space, tuple(fn(t) for t in self.terms), fn(self.limit), name or self.name)


def marginal(psi: JointKernel, side: str) -> Kernel:
    """``side='S2'`` gives ``psi(S1, .|s3)``; ``side='S1'`` gives ``psi(., S2|s3)``."""
    if side not in ("S1", "S2"):
        raise DomainError(f"side must be 'S1' or 'S2', not {side!r}")
    index = 0 if side == "S1" else 1
    return Kernel(psi.target.factors[index], psi.params, lambda s3: psi(s3).marginal(index), f"{psi.name}[{side}]")


@dataclass(frozen=True)
class Disintegration:
    """Marginal on S2 and conditionals on S1 of one joint measure."""

    marginal: Measure
    conditionals: Mapping[Hashable, Measure]
    s1: MetricSpace

    def conditional(self, s2: Hashable) -> Measure:
        try:
            return self.conditionals[s2]
        except KeyError:
            pass
        if s2 not in self.marginal.space:
            raise DomainError(f"{s2!r} is not in {self.marginal.space.name!r}")
        if not self.s1.finite:
            raise DomainError(
                f"no conditional at null atom {s2!r}: the uniform convention needs a finite S1 "
                "(restrict the kernel to its atoms first)"
            )
        return uniform(self.s1)

    def is_null(self, s2: Hashable) -> bool:
        return s2 not in self.conditionals

    def reconstruct(self) -> Measure:
        target = ProductSpace((self.s1, self.marginal.space))
        weights = {}
        for s2, m in self.marginal.items():
            for s1, p in self.conditional(s2).items():
                weights[(s1, s2)] = p * m
        return Measure(target, weights)


def disintegrate_measure(joint: Measure) -> Disintegration:
    s1, s2 = joint.space.factors
    columns: dict = {}
    for (a, b), w in joint.items():
        columns.setdefault(b, []).append((a, w))
    masses = {b: math.fsum(w for _, w in col) for b, col in columns.items()}
    conditionals = {b: Measure(s1, {a: w / masses[b] for a, w in col}) for b, col in columns.items()}
    return Disintegration(Measure(s2, masses), conditionals, s1)


def disintegrate(psi: JointKernel, s3: Hashable) -> Disintegration:
    """Split ``psi(.|s3)`` into its S2 marginal and the conditional kernel on S1.

    At S2 atoms of zero marginal mass the conditional is uniform on S1.
    """
    return disintegrate_measure(psi(s3))


def conditional_kernel(psi: JointKernel) -> Callable[[Hashable, Hashable], Measure]:
    return lambda s2, s3: disintegrate(psi, s3).conditional(s2)


class BeliefPoint:
    """A probability measure used as an atom of the space of beliefs.

    Identity is the canonical key: (label, weight rounded to 12 decimals)
    pairs sorted by label.
    """

    __slots__ = ("belief", "key", "_hash")

    def __init__(self, belief: Measure):
        belief.require_probability("belief")
        self.belief = belief
        pairs = ((belief.space.label(a), round(w, BELIEF_DECIMALS)) for a, w in belief.items())
        self.key = tuple(sorted((lab, w) for lab, w in pairs if w != 0.0))
        self._hash = hash((belief.space, self.key))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BeliefPoint):
            return NotImplemented
        return self.key == other.key and self.belief.space == other.belief.space

    def __hash__(self) -> int:
        return self._hash

    @property
    def id(self) -> str:
        return "{" + ",".join(f"{lab}:{w!r}" for lab, w in self.key) + "}"

    def __repr__(self) -> str:
        return f"BeliefPoint({self.id})"


@dataclass(frozen=True)
class BeliefSpace(MetricSpace):
    """Probability measures on ``base`` as atoms (``BeliefPoint``), weak-metric distance."""

    base: MetricSpace

    metric = "weak"

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"P({self.base.name})"

    @property
    def points(self) -> tuple:
        raise DomainError(f"space {self.name!r} is not finite")

    def __contains__(self, atom: object) -> bool:
        return isinstance(atom, BeliefPoint) and atom.belief.space == self.base

    def distance(self, a: BeliefPoint, b: BeliefPoint) -> float:
        return weak_metric(a.belief, b.belief, determining_family(self.base))


@dataclass(frozen=True)
class MeasureSpace(MetricSpace):
    """Probability measures on ``base`` as parameters (raw ``Measure`` atoms)."""

    base: MetricSpace

    metric = "weak"

    @property
    def name(self) -> str:  # type: ignore[override]
        return f"P({self.base.name})"

    @property
    def points(self) -> tuple:
        raise DomainError(f"space {self.name!r} is not finite")

    def __contains__(self, atom: object) -> bool:
        return isinstance(atom, Measure) and atom.space == self.base and atom.is_probability

    def distance(self, a: Measure, b: Measure) -> float:
        return weak_metric(a, b, determining_family(self.base))

    def label(self, atom: Measure) -> str:
        return "{" + ",".join(f"{self.base.label(a)}:{w!r}" for a, w in atom.sorted_items()) + "}"


def _as_measure(x: Any) -> Measure:
    return x.belief if isinstance(x, BeliefPoint) else x


def default_net(base: MetricSpace) -> list[Measure]:
    """Point masses at every point of a finite ``base``: the vertices of the simplex of beliefs.

    Distances to vertices are affine on the interior of the simplex, so they
    carry no kinks that a convergent belief sequence could straddle.
    """
    if not base.finite:
        raise DomainError(f"no default belief net on infinite space {base.name!r}")
    return [dirac(p, base) for p in base.points]


def belief_family(base: MetricSpace, net: Sequence[Measure] | None = None) -> FunctionFamily:
    """``{1} ∪ {z -> rho(z, beta) : beta in net}``, weakly continuous functions on beliefs."""
    net = default_net(base) if net is None else list(net)
    fam = determining_family(base)
    members = [CONSTANT_ONE]
    for i, beta in enumerate(net):
        members.append(
            TestFunction(f"rho(.,net[{i}])", 2.0, lambda x, beta=beta: weak_metric(_as_measure(x), beta, fam))
        )
    return FunctionFamily(tuple(members))


def determining_family(space: MetricSpace, net: Sequence[Measure] | None = None) -> FunctionFamily:
    """Default countable family determining weak convergence on ``space``."""
    if isinstance(space, Space) and space.metric == "discrete":
        return singleton_family(space)
    if isinstance(space, (Space, RealLine)):
        return REAL_FAMILY
    if isinstance(space, (BeliefSpace, MeasureSpace)):
        return belief_family(space.base, net)
    raise DomainError(f"no default determining family on {space.name!r}")


def belief_kernel_phi(psi: JointKernel) -> JointKernel:
    """Image of the S2 marginal under ``s2 -> (conditional belief, s2)``."""

    target = ProductSpace((BeliefSpace(psi.s1), psi.s2))

    def rule(s3):
        d = disintegrate(psi, s3)
        return Measure(target, {(BeliefPoint(d.conditional(s2)), s2): m for s2, m in d.marginal.items()})

    return JointKernel(BeliefSpace(psi.s1), psi.s2, psi.params, rule, f"phi[{psi.name}]")


def integrate_kernel(xi: JointKernel, mu: Measure, s4: Hashable) -> Measure:
    """``sum_{s3} xi(.|s3, s4) mu({s3})`` for a kernel given ``S3 x S4``."""
    params = xi.params
    if not isinstance(params, ProductSpace) or len(params.factors) != 2:
        raise DomainError("integrate_kernel needs a kernel given a two-factor product S3 x S4")
    if mu.space != params.factors[0]:
        raise DomainError(f"mixing measure lives on {mu.space.name!r}, kernel expects {params.factors[0].name!r}")
    mu.require_probability("mixing measure")
    return mixture((w, xi((s3, s4))) for s3, w in mu.items())


def integrated_kernel(xi: JointKernel) -> JointKernel:
    """The kernel ``(mu, s4) -> integrate_kernel(xi, mu, s4)`` given ``P(S3) x S4``."""
    s3_space, s4_space = xi.params.factors
    params = ProductSpace((MeasureSpace(s3_space), s4_space))
    return JointKernel(xi.s1, xi.s2, params, lambda p: integrate_kernel(xi, p[0], p[1]), f"int[{xi.name}]")


def product_pomdp1(P1: Kernel, Q1: Kernel) -> JointKernel:
    """Product form ``P(B x C|w,a) = P1(B|w,a) Q1(C|w,a)``."""
    if P1.params != Q1.params:
        raise DomainError("P1 and Q1 must share their conditioning space W x A")
    target = ProductSpace((P1.target, Q1.target))

    def rule(wa):
        p, q = P1(wa), Q1(wa)
        return Measure(target, {(w2, y): pw * qy for w2, pw in p.items() for y, qy in q.items()})

    return JointKernel(P1.target, Q1.target, P1.params, rule, "P")


def compose_pomdp2(P2: Kernel, Q2: Kernel) -> JointKernel:
    """``P({w'} x {y}|w,a) = P2({w'}|w,a) Q2({y}|a,w')``, observation of the new state."""
    W, A = P2.params.factors
    if P2.target != W or Q2.params.factors != (A, W):
        raise DomainError("P2 must be given W x A on W, and Q2 given A x W")
    target = ProductSpace((W, Q2.target))

    def rule(wa):
        a = wa[1]
        weights = {}
        for w2, pw in P2(wa).items():
            for y, qy in Q2((a, w2)).items():
                weights[(w2, y)] = pw * qy
        return Measure(target, weights)

    return JointKernel(W, Q2.target, P2.params, rule, "P")


def _atom_space(name: str, atoms: Iterable[Point]) -> Space:
    atoms = set(atoms)
    if all(isinstance(a, Point) and a.coord is not None for a in atoms):
        return Space(name, tuple(sorted(atoms, key=lambda p: p.coord)), "euclidean")
    if all(isinstance(a, Point) for a in atoms):
        return Space(name, tuple(sorted(atoms, key=lambda p: p.id)))
    raise DomainError("only kernels with point atoms can be restricted")


def restrict_to_atoms(psi: JointKernel, params: Iterable[Hashable]) -> JointKernel:
    """Re-home ``psi`` onto the finite spaces of atoms it charges at ``params``.

    Suprema over measurable sets are unchanged; only conventions at null
    atoms (uniform conditionals) see the smaller space.
    """
    params = list(params)
    evals = [psi(p) for p in params]
    s1 = _atom_space(f"{psi.s1.name}|atoms", (a for mu in evals for (a, _b) in mu.support))
    s2 = _atom_space(f"{psi.s2.name}|atoms", (b for mu in evals for (_a, b) in mu.support))
    target = ProductSpace((s1, s2))
    return JointKernel(s1, s2, psi.params, lambda s3: Measure(target, dict(psi(s3).items())), f"{psi.name}|atoms")


__all__ = [
    "BeliefPoint",
    "BeliefSpace",
    "Disintegration",
    "JointKernel",
    "Kernel",
    "MeasureSpace",
    "ParamSequence",
    "belief_family",
    "belief_kernel_phi",
    "compose_pomdp2",
    "conditional_kernel",
    "default_net",
    "determining_family",
    "disintegrate",
    "disintegrate_measure",
    "integrate_kernel",
    "integrated_kernel",
    "marginal",
    "product_pomdp1",
    "restrict_to_atoms",
]
