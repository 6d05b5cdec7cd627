"""Closed-form example kernels, seeded ground-truth instance generators and the subset oracle."""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from .continuity import DEFAULT_LENGTH, Interval, IntervalUnion, WitnessPlan
from .kernel import (
    BeliefPoint,
    BeliefSpace,
    JointKernel,
    Kernel,
    MeasureSpace,
    ParamSequence,
    compose_pomdp2,
    product_pomdp1,
)
from .measure import (
    DomainError,
    Measure,
    Point,
    ProductSpace,
    RealLine,
    Space,
    coordinate,
    dirac,
    mixture,
    pushforward,
    real_point,
)

REALS = RealLine("R")
UNIT = RealLine("t", 0.0, 1.0)
ORACLE_BUDGET = 10
ZERO = real_point(0.0)


class Truth(str, enum.Enum):
    CONTINUOUS = "CONTINUOUS"
    DISCONTINUOUS = "DISCONTINUOUS_AT_LIMIT"


def identity_mixing(t: float) -> float:
    return t


def step_mixing(t: float) -> float:
    return 1.0 if t > 0 else 0.0


MIXINGS: dict[str, Callable[[float], float]] = {"identity": identity_mixing, "step": step_mixing}


def mixing_for(truth: Truth) -> str:
    return "identity" if truth is Truth.CONTINUOUS else "step"


# ---------------------------------------------------------------------------
# closed forms on the real line


def positive_part(x: float) -> float:
    return max(x, 0.0)


def negative_part(x: float) -> float:
    return min(x, 0.0)


def _real_dirac(x: float) -> Measure:
    return dirac(real_point(x), REALS)


WA = ProductSpace((REALS, REALS))
WY = ProductSpace((REALS, REALS))


def _pair_dirac(x: float, y: float) -> Measure:
    return dirac((real_point(x), real_point(y)), WY)


def closed_form(rule_id: str) -> Kernel:
    """The example kernels by rule id.  W = Y = A = R; actions are ignored.

    Transition kernels are given ``(w, a)``; observation kernels ``(a, w)``.
    """
    rules: dict[str, Callable[[], Kernel]] = {
        "EXAMPLE1_P2": lambda: Kernel(REALS, WA, lambda wa: _real_dirac(positive_part(coordinate(wa[0]))), "P2"),
        "EXAMPLE1_Q2": lambda: Kernel(REALS, WA, lambda aw: _real_dirac(negative_part(coordinate(aw[1]))), "Q2"),
        "EXAMPLE1_P": lambda: JointKernel(
            REALS, REALS, WA, lambda wa: _pair_dirac(positive_part(coordinate(wa[0])), 0.0), "P"
        ),
        "REMARK_P2": lambda: Kernel(REALS, WA, lambda wa: dirac(wa[0], REALS), "P2"),
        "REMARK_Q2": lambda: Kernel(REALS, WA, lambda aw: dirac(aw[1], REALS), "Q2"),
        "REMARK_P": lambda: JointKernel(REALS, REALS, WA, lambda wa: dirac((wa[0], wa[0]), WY), "P"),
    }
    try:
        return rules[rule_id]()
    except KeyError:
        raise DomainError(f"unknown closed-form rule {rule_id!r}") from None


CLOSED_FORM_IDS = ("EXAMPLE1_P2", "EXAMPLE1_Q2", "EXAMPLE1_P", "REMARK_P2", "REMARK_Q2", "REMARK_P")


@dataclass(frozen=True)
class ClosedFormModel:
    P2: Kernel
    Q2: Kernel
    P: JointKernel
    q_hat: Kernel | None = None
    H: Callable[[Measure, Any, Any], Measure] | None = None


def example1() -> ClosedFormModel:
    return ClosedFormModel(closed_form("EXAMPLE1_P2"), closed_form("EXAMPLE1_Q2"), closed_form("EXAMPLE1_P"))


def remark_q_hat() -> Kernel:
    """``q_hat(.|z, a)``: the image of z under ``w -> delta_w`` on the space of beliefs."""
    beliefs = BeliefSpace(REALS)
    params = ProductSpace((MeasureSpace(REALS), REALS))
    return Kernel(
        beliefs, params, lambda za: pushforward(za[0], lambda w: BeliefPoint(dirac(w, REALS)), beliefs), "q_hat"
    )


def remark_filter(z: Measure, a: Any, y: Any) -> Measure:
    """The explicit filter of the identity-observation model: the new belief is ``delta_y``."""
    return dirac(y, REALS)


def remark_model() -> ClosedFormModel:
    return ClosedFormModel(
        closed_form("REMARK_P2"), closed_form("REMARK_Q2"), closed_form("REMARK_P"), remark_q_hat(), remark_filter
    )


def real_sequence(
    center: float = 0.0, scale: float = 1.0, length: int = DEFAULT_LENGTH, action: float = 0.0, sign: float = 1.0
) -> ParamSequence:
    """``(w_n, a) = (center + sign * scale / n, a)`` in ``R x R``."""
    a = real_point(action)
    return ParamSequence.along(
        WA, lambda h: (real_point(center + sign * h), a), length=length, scale=scale, name="w=1/n"
    )


def example_plan(limit: float = 0.0, spread: float = 1.0) -> WitnessPlan:
    """Interval witnesses with endpoints at, and around, the sequence limit."""
    c, s = limit, spread
    sets = [
        IntervalUnion.of(Interval(c - s, c + s)),
        IntervalUnion.of(Interval(c - s, c + s, True, True)),
        IntervalUnion.of(Interval(c, c + s)),
        IntervalUnion.of(Interval(c, c + s, True, True)),
        IntervalUnion.of(Interval(c - s, c, True, True)),
        IntervalUnion.of(Interval(-float("inf"), c), Interval(c, float("inf"))),
        IntervalUnion.of(Interval(c, c, True, True)),
    ]
    return WitnessPlan.intervals(sets)


# ---------------------------------------------------------------------------
# random finite instances


def _dirichlet(rng: random.Random, k: int) -> list[float]:
    xs = [rng.gammavariate(1.0, 1.0) for _ in range(k)]
    total = sum(xs)
    return [x / total for x in xs]


def random_measure(rng: random.Random, space: ProductSpace | Space, floor: float = 0.5) -> Measure:
    """``floor * uniform + (1 - floor) * Dirichlet(1, ..., 1)``; every atom charged when floor > 0."""
    pts = list(space.points)
    raw = _dirichlet(rng, len(pts))
    k = len(pts)
    return Measure(space, {p: floor / k + (1.0 - floor) * r for p, r in zip(pts, raw)})


def separated_measure(rng: random.Random, space, base: Measure, index: int = 1) -> Measure:
    """``0.4 * random + 0.6 * delta`` at the atom whose ``index``-marginal under ``base`` is smallest.

    When that factor has at least two points its marginal differs from the
    base marginal by at least ``0.6 - 1/2 = 0.1``; the joint measures always
    differ by at least 0.1 in total variation.
    """
    factor = space.factors[index]
    if len(factor) == 1:
        index = 1 - index
        factor = space.factors[index]
        if len(factor) == 1:
            raise DomainError("a jump needs at least two atoms in S1 x S2")
    marg = base.marginal(index)
    target = min(factor, key=lambda p: (marg[p], factor.position(p)))
    other = next(iter(q for q in space.factors[1 - index]))
    atom = (other, target) if index == 1 else (target, other)
    noise = random_measure(rng, space, floor=0.0)
    return mixture([(0.4, noise), (0.6, dirac(atom, space))])


def finite_spaces(sizes: tuple[int, int]) -> tuple[Space, Space]:
    k1, k2 = sizes
    if k1 < 1 or k2 < 1:
        raise DomainError("sizes must be at least 1")
    if k2 > ORACLE_BUDGET:
        raise DomainError(f"|S2| = {k2} exceeds the oracle budget of {ORACLE_BUDGET}")
    return Space.from_ids("S1", [f"x{i}" for i in range(1, k1 + 1)]), Space.from_ids("S2", [f"y{i}" for i in range(1, k2 + 1)])


def mixture_kernel(m0: Measure, m1: Measure, mixing: str, params=UNIT, name: str = "psi") -> JointKernel:
    g = MIXINGS[mixing]
    s1, s2 = m0.space.factors

    def rule(t):
        w = g(coordinate(t))
        return mixture([(1.0 - w, m0), (w, m1)])

    return JointKernel(s1, s2, params, rule, name)


def unit_sequence(length: int = DEFAULT_LENGTH) -> ParamSequence:
    return ParamSequence.along(UNIT, real_point, length=length, name="t=1/n")


@dataclass(frozen=True)
class GeneratedInstance:
    """``psi(.|t) = (1 - g(t)) M0 + g(t) M1`` on a finite ``S1 x S2``, ``t`` in [0, 1]."""

    kernel: JointKernel
    m0: Measure
    m1: Measure
    mixing: str
    ground_truth: Truth
    seed: int
    sizes: tuple[int, int]

    def sequence(self, length: int = DEFAULT_LENGTH) -> ParamSequence:
        return unit_sequence(length)


def generate_instance(seed: int, truth: Truth | str, sizes: tuple[int, int] = (2, 2)) -> GeneratedInstance:
    truth = Truth(truth) if not isinstance(truth, Truth) else truth
    s1, s2 = finite_spaces(sizes)
    space = ProductSpace((s1, s2))
    rng = random.Random(f"instance:{seed}:{sizes}")
    m0 = random_measure(rng, space)
    if truth is Truth.CONTINUOUS:
        m1 = random_measure(rng, space, floor=0.0)
    else:
        m1 = separated_measure(rng, space, m0)
    mixing = mixing_for(truth)
    return GeneratedInstance(mixture_kernel(m0, m1, mixing), m0, m1, mixing, truth, seed, tuple(sizes))


# ---------------------------------------------------------------------------
# preservation pairs


@dataclass(frozen=True)
class PreservationInstance:
    xi: JointKernel
    mu_seq: ParamSequence
    s4_seq: ParamSequence
    ground_truth: Truth
    seed: int


MIXING_SPACE = Space.from_ids("S3", ["a", "b"])


def mixing_sequence(length: int = DEFAULT_LENGTH, space: Space = MIXING_SPACE) -> ParamSequence:
    """``mu_n = (1 - 1/n) delta_a + (1/n) delta_b -> delta_a``."""
    a, b = space.points[0], space.points[1]
    return ParamSequence.along(
        MeasureSpace(space),
        lambda h: mixture([(1.0 - h, dirac(a, space)), (h, dirac(b, space))]),
        length=length,
        name="mu_n",
    )


def generate_preservation(seed: int, truth: Truth | str, sizes: tuple[int, int] = (2, 2)) -> PreservationInstance:
    """``xi(.|s3, s4) = (1 - g(s4)) M0[s3] + g(s4) M1[s3]`` with ``S3 = {a, b}``, ``S4 = [0, 1]``."""
    truth = Truth(truth)
    s1, s2 = finite_spaces(sizes)
    space = ProductSpace((s1, s2))
    rng = random.Random(f"preservation:{seed}:{sizes}")
    m0 = {s3: random_measure(rng, space) for s3 in MIXING_SPACE}
    if truth is Truth.CONTINUOUS:
        m1 = {s3: random_measure(rng, space, floor=0.0) for s3 in MIXING_SPACE}
    else:
        m1 = {s3: separated_measure(rng, space, m0[s3]) for s3 in MIXING_SPACE}
    g = MIXINGS[mixing_for(truth)]
    params = ProductSpace((MIXING_SPACE, UNIT))

    def rule(p):
        s3, s4 = p
        w = g(coordinate(s4))
        return mixture([(1.0 - w, m0[s3]), (w, m1[s3])])

    xi = JointKernel(s1, s2, params, rule, "xi")
    return PreservationInstance(xi, mixing_sequence(), unit_sequence(), truth, seed)


# ---------------------------------------------------------------------------
# finite POMDP families with an interval of actions


ACTIONS = RealLine("A", 0.0, 1.0)


@dataclass(frozen=True)
class GeneratedPOMDP:
    P2: Kernel | None
    Q2: Kernel | None
    P1: Kernel | None
    Q1: Kernel | None
    W: Space
    Y: Space
    ground_truth: Truth
    seed: int
    toggles: tuple[bool, bool] = (True, True)


def _blend(a0: Measure, a1: Measure, w: float) -> Measure:
    return mixture([(1.0 - w, a0), (w, a1)])


def generate_pomdp2(seed: int, truth: Truth | str, sizes: tuple[int, int] = (2, 2)) -> GeneratedPOMDP:
    """``P2(.|w, a) = (1 - a) T0[w] + a T1[w]``; ``Q2(.|a, w') = (1 - l) R[w'] + l ((1 - g(a)) u + g(a) v)``.

    ``u`` and ``v`` are point masses on distinct observations, ``l = 1/2``,
    and ``g`` jumps at ``a = 0`` for the discontinuous family.
    """
    truth = Truth(truth)
    kw, ky = sizes
    if ky < 2:
        raise DomainError("the observation jump needs |Y| >= 2")
    W = Space.from_ids("W", [f"w{i}" for i in range(1, kw + 1)])
    Y = Space.from_ids("Y", [f"y{i}" for i in range(1, ky + 1)])
    rng = random.Random(f"pomdp2:{seed}:{sizes}")
    t0 = {w: random_measure(rng, W) for w in W}
    t1 = {w: random_measure(rng, W, floor=0.0) for w in W}
    r = {w: random_measure(rng, Y) for w in W}
    u, v = dirac(Y.points[0], Y), dirac(Y.points[1], Y)
    g = MIXINGS[mixing_for(truth)]
    lam = 0.5
    P2 = Kernel(W, ProductSpace((W, ACTIONS)), lambda wa: _blend(t0[wa[0]], t1[wa[0]], coordinate(wa[1])), "P2")
    Q2 = Kernel(
        Y,
        ProductSpace((ACTIONS, W)),
        lambda aw: _blend(r[aw[1]], _blend(u, v, g(coordinate(aw[0]))), lam),
        "Q2",
    )
    return GeneratedPOMDP(P2, Q2, None, None, W, Y, truth, seed)


def generate_pomdp1(
    seed: int, p1_continuous: bool, q1_continuous: bool, sizes: tuple[int, int] = (2, 2)
) -> GeneratedPOMDP:
    """``P1 = (1 - g1(a)) T0 + g1(a) T1`` and ``Q1 = (1 - g2(a)) R0 + g2(a) R1``, each g toggled independently."""
    kw, ky = sizes
    if kw < 2 or ky < 2:
        raise DomainError("toggled POMDP families need |W|, |Y| >= 2")
    W = Space.from_ids("W", [f"w{i}" for i in range(1, kw + 1)])
    Y = Space.from_ids("Y", [f"y{i}" for i in range(1, ky + 1)])
    rng = random.Random(f"pomdp1:{seed}:{sizes}:{p1_continuous}:{q1_continuous}")
    t0 = {w: random_measure(rng, W) for w in W}
    t1 = {w: _separated_point_mass(rng, W, t0[w]) for w in W}
    r0 = {w: random_measure(rng, Y) for w in W}
    r1 = {w: _separated_point_mass(rng, Y, r0[w]) for w in W}
    g1 = MIXINGS["identity" if p1_continuous else "step"]
    g2 = MIXINGS["identity" if q1_continuous else "step"]
    params = ProductSpace((W, ACTIONS))
    P1 = Kernel(W, params, lambda wa: _blend(t0[wa[0]], t1[wa[0]], g1(coordinate(wa[1]))), "P1")
    Q1 = Kernel(Y, params, lambda wa: _blend(r0[wa[0]], r1[wa[0]], g2(coordinate(wa[1]))), "Q1")
    truth = Truth.CONTINUOUS if (p1_continuous and q1_continuous) else Truth.DISCONTINUOUS
    return GeneratedPOMDP(None, None, P1, Q1, W, Y, truth, seed, (p1_continuous, q1_continuous))


def _separated_point_mass(rng: random.Random, space: Space, base: Measure) -> Measure:
    """``0.4 * random + 0.6 * delta`` at the least charged point; TV from ``base`` at least 0.1."""
    target = min(space, key=lambda p: (base[p], space.position(p)))
    return mixture([(0.4, random_measure(rng, space, floor=0.0)), (0.6, dirac(target, space))])


def pomdp_joint(model: GeneratedPOMDP) -> JointKernel:
    if model.P2 is not None:
        return compose_pomdp2(model.P2, model.Q2)
    return product_pomdp1(model.P1, model.Q1)


def action_sequence(W: Space, w: Point, length: int = DEFAULT_LENGTH) -> ParamSequence:
    """``(w, a_n) = (w, 1/n) -> (w, 0)`` in ``W x A``."""
    return ParamSequence.along(ProductSpace((W, ACTIONS)), lambda h: (w, real_point(h)), length=length, name="a=1/n")


# ---------------------------------------------------------------------------
# oracle


def brute_force_gap(psi: JointKernel, s3a: Any, s3b: Any, f: Callable[[Any], float]) -> float:
    """``max_B |∫ f dpsi(., B|s3a) - ∫ f dpsi(., B|s3b)|`` by enumerating every subset B of S2.

    Exact: weights and f values are converted to rationals before any
    arithmetic, and subset sums are accumulated over a common denominator.
    """
    mu, nu = psi(s3a), psi(s3b)
    if psi.s2.finite:
        atoms = list(psi.s2.points)
    else:
        atoms = list(dict.fromkeys([b for (_a, b) in mu.support] + [b for (_a, b) in nu.support]))
    if len(atoms) > ORACLE_BUDGET:
        raise DomainError(f"{len(atoms)} S2 atoms exceed the enumeration budget of {ORACLE_BUDGET}")
    values = {b: Fraction(0) for b in atoms}
    for (a, b), w in mu.items():
        values[b] += Fraction(f(a)) * Fraction(w)
    for (a, b), w in nu.items():
        values[b] -= Fraction(f(a)) * Fraction(w)
    column = [values[b] for b in atoms]
    denom = math.lcm(*(v.denominator for v in column)) if column else 1
    ints = [int(v * denom) for v in column]
    sums = [0] * (1 << len(ints))
    best = 0
    for mask in range(1, len(sums)):
        low = mask & -mask
        sums[mask] = sums[mask ^ low] + ints[low.bit_length() - 1]
        if abs(sums[mask]) > best:
            best = abs(sums[mask])
    return float(Fraction(best, denom))
