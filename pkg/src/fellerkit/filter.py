"""Reduction of a partially observable model to its belief model, and the nonlinear filter.

Beliefs ``z`` are finite-support probability measures on W.  The joint
predictive ``R(.|z, y, a)`` mixes the transition kernel against ``z``; the
filter ``H`` is Bayes' rule on ``R``; ``q`` is the law of the pair
(new belief, new observation) and ``q_hat`` its belief marginal.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

from .continuity import (
    DEFAULT_EPS,
    DEFAULT_FAIL_FLOOR,
    ConditionReport,
    GapReport,
    make_report,
    suf_condition,
)
from .kernel import (
    BeliefPoint,
    BeliefSpace,
    JointKernel,
    Kernel,
    MeasureSpace,
    ParamSequence,
    belief_family,
    compose_pomdp2,
    determining_family,
    product_pomdp1,
)
from .measure import (
    DomainError,
    Measure,
    MetricSpace,
    ProductSpace,
    RealLine,
    dirac,
    mixture,
    real_point,
    uniform,
    weak_metric,
)

ZERO_EVIDENCE = "ZERO_EVIDENCE"


class Variant(str, enum.Enum):
    GENERAL = "GENERAL"
    PLATZMAN = "PLATZMAN"
    POMDP1 = "POMDP1"
    POMDP2 = "POMDP2"


@dataclass(frozen=True)
class MDPIIModel:
    """Hidden states W, observations Y, actions A and the joint transition kernel P on W x Y.

    P is given ``(w, y, a)`` for the GENERAL variant and ``(w, a)`` otherwise.
    """

    W: MetricSpace
    Y: MetricSpace
    A: MetricSpace
    P: JointKernel
    variant: Variant = Variant.GENERAL
    parts: dict = field(default_factory=dict, compare=False)
    name: str = "model"

    def __post_init__(self) -> None:
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        if self.P.s1 != self.W or self.P.s2 != self.Y:
            raise DomainError("P must be a kernel on W x Y")
        expected = (self.W, self.Y, self.A) if variant is Variant.GENERAL else (self.W, self.A)
        if self.P.params != ProductSpace(expected):
            raise DomainError(f"P of a {variant.value} model must be given {ProductSpace(expected).name}")

    @classmethod
    def general(cls, W, Y, A, P: JointKernel, name: str = "model") -> "MDPIIModel":
        return cls(W, Y, A, P, Variant.GENERAL, name=name)

    @classmethod
    def platzman(cls, W, Y, A, P: JointKernel, name: str = "model") -> "MDPIIModel":
        return cls(W, Y, A, P, Variant.PLATZMAN, name=name)

    @classmethod
    def pomdp1(cls, P1: Kernel, Q1: Kernel, name: str = "model") -> "MDPIIModel":
        W, A = P1.params.factors
        return cls(W, Q1.target, A, product_pomdp1(P1, Q1), Variant.POMDP1, {"P1": P1, "Q1": Q1}, name)

    @classmethod
    def pomdp2(cls, P2: Kernel, Q2: Kernel, name: str = "model") -> "MDPIIModel":
        W, A = P2.params.factors
        return cls(W, Q2.target, A, compose_pomdp2(P2, Q2), Variant.POMDP2, {"P2": P2, "Q2": Q2}, name)

    @property
    def observes_y(self) -> bool:
        return self.variant is Variant.GENERAL

    def p_at(self, w: Hashable, y: Hashable, a: Hashable) -> Measure:
        return self.P((w, y, a)) if self.observes_y else self.P((w, a))

    def p_param(self, w, y, a):
        return (w, y, a) if self.observes_y else (w, a)


@dataclass(frozen=True)
class BeliefState:
    z: Measure
    y: Any = None

    def __post_init__(self) -> None:
        self.z.require_probability("belief")


@dataclass(frozen=True)
class Posterior:
    belief: Measure
    evidence: float
    flags: tuple[str, ...] = ()

    @property
    def zero_evidence(self) -> bool:
        return ZERO_EVIDENCE in self.flags


def _check_args(model: MDPIIModel, z: Measure, y, a) -> None:
    if z.space != model.W:
        raise DomainError(f"belief lives on {z.space.name!r}, model hidden states are {model.W.name!r}")
    z.require_probability("belief")
    if a not in model.A:
        raise DomainError(f"{a!r} is not an action of {model.name!r}")
    if model.observes_y and y not in model.Y:
        raise DomainError(f"{y!r} is not an observation of {model.name!r}")


def r_kernel(model: MDPIIModel, z: Measure, y: Hashable, a: Hashable) -> Measure:
    """``R(.|z, y, a) = sum_w z({w}) P(.|w, y, a)`` on W x Y.  ``y`` is ignored unless GENERAL."""
    _check_args(model, z, y, a)
    return mixture((zw, model.p_at(w, y, a)) for w, zw in z.items())


def _evidence_column(joint: Measure, y_next) -> dict:
    return {w: p for (w, y), p in joint.items() if y == y_next}


def _posterior_from_joint(model: MDPIIModel, joint: Measure, y_next) -> Posterior:
    column = _evidence_column(joint, y_next)
    evidence = math.fsum(column.values())
    if evidence <= 0.0:
        if model.W.finite:
            return Posterior(uniform(model.W), 0.0, (ZERO_EVIDENCE,))
        # uniform on an infinite W does not exist; keep the predictive hidden-state law
        return Posterior(joint.marginal(0), 0.0, (ZERO_EVIDENCE,))
    return Posterior(Measure(model.W, {w: p / evidence for w, p in column.items()}), evidence)


def filter_update(model: MDPIIModel, z: Measure, y: Hashable, a: Hashable, y_next: Hashable) -> Posterior:
    """``H(.|z, y, a, y')``: Bayes' rule on the joint predictive.

    When ``y'`` has zero predictive probability the new belief is uniform on
    W (the predictive W law on an infinite W) and the step is flagged.
    """
    if y_next not in model.Y:
        raise DomainError(f"{y_next!r} is not an observation of {model.name!r}")
    return _posterior_from_joint(model, r_kernel(model, z, y, a), y_next)


def default_observation(model: MDPIIModel):
    """A fixed observation to fill the ignored y slot of Platzman-type models."""
    if model.Y.finite:
        return model.Y.points[0]
    if isinstance(model.Y, RealLine):
        return real_point(min(max(0.0, model.Y.lo), model.Y.hi))
    raise DomainError(f"no default observation in {model.Y.name!r}")


def _r_params(model: MDPIIModel) -> ProductSpace:
    return ProductSpace((MeasureSpace(model.W), model.Y, model.A))


def r_joint_kernel(model: MDPIIModel) -> JointKernel:
    """R as a kernel on W x Y given ``(z, y, a)`` in P(W) x Y x A."""
    return JointKernel(model.W, model.Y, _r_params(model), lambda zya: r_kernel(model, *zya), f"R[{model.name}]")


def _q_measure(model: MDPIIModel, z: Measure, y, a, target: ProductSpace) -> Measure:
    joint = r_kernel(model, z, y, a)
    evidence = joint.marginal(1)
    weights = {}
    for y_next, p in evidence.items():
        post = _posterior_from_joint(model, joint, y_next)
        weights[(BeliefPoint(post.belief), y_next)] = p
    return Measure(target, weights)


def q_kernel(model: MDPIIModel) -> JointKernel:
    """``q(D x C|z, y, a) = sum_{y' in C} 1{H(z, y, a, y') in D} R(W, {y'}|z, y, a)``."""
    beliefs = BeliefSpace(model.W)
    target = ProductSpace((beliefs, model.Y))
    return JointKernel(
        beliefs, model.Y, _r_params(model), lambda zya: _q_measure(model, *zya, target), f"q[{model.name}]"
    )


def q_hat(model: MDPIIModel) -> Kernel:
    """Belief marginal of q given ``(z, a)``; defined only when P does not read the current observation."""
    if model.observes_y:
        raise DomainError("q_hat is defined only for models whose P does not depend on the observation")
    beliefs = BeliefSpace(model.W)
    target = ProductSpace((beliefs, model.Y))
    params = ProductSpace((MeasureSpace(model.W), model.A))
    return Kernel(beliefs, params, lambda za: _q_measure(model, za[0], None, za[1], target).marginal(0), f"q_hat[{model.name}]")


def bayes_reconstruction_error(model: MDPIIModel, z: Measure, y, a) -> float:
    """``max |sum_y' R(W, {y'}) H({w'}|y') - R({w'} x Y)|`` over hidden-state atoms."""
    joint = r_kernel(model, z, y, a)
    evidence = joint.marginal(1)
    predictive = joint.marginal(0)
    rebuilt: dict = {}
    for y_next, p in evidence.items():
        for w, h in _posterior_from_joint(model, joint, y_next).belief.items():
            rebuilt[w] = rebuilt.get(w, 0.0) + p * h
    atoms = set(rebuilt) | set(predictive.support)
    return max((abs(rebuilt.get(w, 0.0) - predictive[w]) for w in atoms), default=0.0)


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class TrajectoryStep:
    index: int
    state: BeliefState
    action: Any = None
    observation: Any = None
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class BeliefTrajectory:
    model: MDPIIModel
    steps: tuple[TrajectoryStep, ...]

    @property
    def final(self) -> Measure:
        return self.steps[-1].state.z

    @property
    def flagged(self) -> list[TrajectoryStep]:
        return [s for s in self.steps if s.flags]

    def rows(self) -> list[dict]:
        W, A, Y = self.model.W, self.model.A, self.model.Y
        out = []
        for s in self.steps:
            row = {
                "step": s.index,
                "action": "" if s.action is None else A.label(s.action),
                "observation": "" if s.observation is None else Y.label(s.observation),
            }
            if W.finite:
                for w in W.points:
                    row[f"z[{W.label(w)}]"] = repr(s.state.z[w])
            else:
                row["belief"] = ";".join(f"{W.label(w)}:{p!r}" for w, p in s.state.z.sorted_items())
            row["flags"] = "|".join(s.flags)
            out.append(row)
        return out

    def to_csv(self) -> str:
        rows = self.rows()
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()


def run_filter(
    model: MDPIIModel,
    z0: Measure,
    actions: Sequence[Hashable],
    observations: Sequence[Hashable],
    y0: Hashable = None,
) -> BeliefTrajectory:
    """Iterate the filter from ``(z0, y0)``; step t uses ``actions[t]`` and then observes ``observations[t]``."""
    if len(actions) != len(observations):
        raise DomainError(f"{len(actions)} actions but {len(observations)} observations")
    if model.observes_y and y0 is None:
        raise DomainError("a model whose P reads the observation needs an initial observation y0")
    state = BeliefState(z0, y0)
    steps = [TrajectoryStep(0, state, None, y0)]
    for t, (a, y_next) in enumerate(zip(actions, observations), start=1):
        post = filter_update(model, state.z, state.y, a, y_next)
        state = BeliefState(post.belief, y_next)
        steps.append(TrajectoryStep(t, state, a, y_next, post.flags))
    return BeliefTrajectory(model, tuple(steps))


# ---------------------------------------------------------------------------
# continuity of the reduction


@dataclass(frozen=True)
class MDPCIReport:
    P: ConditionReport
    R: ConditionReport
    q: ConditionReport

    @property
    def agreement(self) -> bool:
        return self.P.verdict == self.R.verdict == self.q.verdict

    def summary(self) -> dict:
        return {"P": self.P.verdict.value, "R": self.R.verdict.value, "q": self.q.verdict.value, "agreement": self.agreement}


def _single_atom(mu: Measure):
    return mu.support[0] if len(mu) == 1 else None


def p_sequences(model: MDPIIModel, seq: ParamSequence) -> list[ParamSequence]:
    """Sequences for P induced by a sequence ``(z_n, y_n, a_n)``.

    Point-mass beliefs give ``(w_n, y_n, a_n)``; otherwise each atom w of the
    limit belief gives ``(w, y_n, a_n)``.
    """
    terms = list(seq.terms) + [seq.limit]
    atoms = [_single_atom(z) for z, _y, _a in terms]
    if all(w is not None for w in atoms):
        paths = [atoms]
    else:
        paths = [[w] * len(terms) for w in seq.limit[0].support]
    out = []
    for path in paths:
        params = [model.p_param(w, y, a) for w, (_z, y, a) in zip(path, terms)]
        out.append(ParamSequence(model.P.params, tuple(params[:-1]), params[-1], "induced"))
    return out


def mdpci_equivalence_check(
    model: MDPIIModel,
    seq: ParamSequence,
    eps: float = DEFAULT_EPS,
    fail_floor: float = DEFAULT_FAIL_FLOOR,
    net: Sequence[Measure] | None = None,
) -> MDPCIReport:
    """SUF_A verdicts for P, R and q along one sequence of ``(z, y, a)``."""
    w_family = determining_family(model.W)
    p_reports = []
    for s in p_sequences(model, seq):
        p_reports.extend(suf_condition(model.P, s, w_family, eps, fail_floor).reports)
    p_report = ConditionReport.of("SUF_A[P]", p_reports)
    r_report = suf_condition(r_joint_kernel(model), seq, w_family, eps, fail_floor, label="SUF_A[R]")
    if net is None and not model.W.finite:
        net = [dirac(w, model.W) for w in seq.limit[0].support]
    q_family = belief_family(model.W, net)
    q_report = suf_condition(q_kernel(model), seq, q_family, eps, fail_floor, label="SUF_A[q]")
    return MDPCIReport(p_report, r_report, q_report)


def q_hat_weak_check(
    kernel: Kernel,
    seq: ParamSequence,
    net: Sequence[Measure],
    eps: float = DEFAULT_EPS,
    fail_floor: float = DEFAULT_FAIL_FLOOR,
) -> GapReport:
    """``rho(q_hat(.|z_n, a_n), q_hat(.|z, a))`` along ``seq`` for a kernel on beliefs."""
    base = kernel.target.base
    fam = determining_family(kernel.target, net)
    limit = kernel(seq.limit)
    gaps = [weak_metric(kernel(t), limit, fam) for t in seq.terms]
    return make_report("Q_HAT_WEAK", f"rho over {len(fam)} functions on P({base.name})", gaps, seq, eps, fail_floor)


def belief_segment(
    model: MDPIIModel,
    z: Measure,
    z_other: Measure,
    a: Hashable,
    y: Hashable = None,
    length: int = 64,
    actions: ParamSequence | None = None,
) -> ParamSequence:
    """``(z_n, y, a_n)`` with ``z_n = (1 - 1/n) z + (1/n) z'`` -> ``(z, y, a)``.

    ``a_n = a`` unless an action sequence of the same length is given.
    ``y`` defaults to the first observation for models that ignore it.
    """
    if y is None:
        y = default_observation(model)
    if actions is not None and len(actions) != length:
        raise DomainError("action sequence length differs from the belief segment")
    terms = []
    for n in range(1, length + 1):
        h = 1.0 / n
        an = a if actions is None else actions.terms[n - 1]
        terms.append((mixture([(1.0 - h, z), (h, z_other)]), y, an))
    a_lim = a if actions is None else actions.limit
    return ParamSequence(_r_params(model), tuple(terms), (z, y, a_lim), "belief-segment")


def dirac_path(model: MDPIIModel, seq: ParamSequence, y: Hashable = None) -> ParamSequence:
    """Lift a sequence ``(w_n, a_n)`` of P-parameters (Platzman variants) to ``(delta_{w_n}, y, a_n)``."""
    if model.observes_y:
        raise DomainError("dirac_path lifts (w, a) sequences; GENERAL models carry y already")
    if y is None:
        y = default_observation(model)

    def lift(wa):
        return (dirac(wa[0], model.W), y, wa[1])

    return seq.map(_r_params(model), lift, "dirac-path")


def q_hat_segment(model: MDPIIModel, z: Measure, z_other: Measure, a: Hashable, length: int = 64) -> ParamSequence:
    """``(z_n, a) -> (z, a)`` with the straight-line mixture ``z_n``."""
    params = ProductSpace((MeasureSpace(model.W), model.A))
    return ParamSequence.along(
        params, lambda h: (mixture([(1.0 - h, z), (h, z_other)]), a), length=length, name="belief-segment"
    )
