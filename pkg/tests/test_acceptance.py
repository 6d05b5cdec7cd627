"""The ten acceptance criteria, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line, printed again in the terminal summary.
"""

import random
import time
from fractions import Fraction

import pytest

from conftest import record
from oracles import TWOSTATE_POSTERIOR_Y1
from fellerkit.continuity import (
    MARGINAL_AND_H,
    PHI_SUF_A,
    ConditionId,
    ContinuousFunction,
    Verdict,
    aggregate,
    check_assumption_m,
    condition_gap,
    equivalence_suite,
    preservation_check,
    slice_differences,
    suf_condition,
)
from fellerkit.filter import (
    MDPIIModel,
    bayes_reconstruction_error,
    belief_segment,
    dirac_path,
    filter_update,
    mdpci_equivalence_check,
    q_hat_weak_check,
    q_kernel,
    r_joint_kernel,
)
from fellerkit.instances import (
    ACTIONS,
    REALS,
    Truth,
    action_sequence,
    brute_force_gap,
    example1,
    generate_instance,
    generate_pomdp1,
    generate_pomdp2,
    generate_preservation,
    real_sequence,
    remark_model,
)
from fellerkit.kernel import BeliefPoint, MeasureSpace, ParamSequence, belief_kernel_phi, determining_family
from fellerkit.measure import (
    CLIPPED_ABS,
    CONSTANT_ONE,
    Measure,
    ProductSpace,
    TestFunction,
    dirac,
    indicator_of,
    mixture,
    real_point,
    signed_sup_gap,
    singleton_family,
    tv_distance,
)
from fellerkit.specfile import load

EPS = 1e-6
FAIL_FLOOR = 1e-3


def expected(truth: Truth) -> Verdict:
    return Verdict.PASS if truth is Truth.CONTINUOUS else Verdict.FAIL


def suite_sizes(seed: int) -> tuple[int, int]:
    return (2 + seed % 3, 2 + (seed // 3) % 3)


# ---------------------------------------------------------------------------
# 1, 2: closed-form examples


def test_criterion_1_example_reproduction():
    start = time.perf_counter()
    model = example1()
    zero = real_point(0.0)
    failures = []
    for n in range(1, 65):
        w = real_point(1.0 / n)
        if tv_distance(model.P2((w, zero)), model.P2((zero, zero))) != 1.0:
            failures.append(f"P2 n={n}")
        if tv_distance(model.Q2((zero, real_point(-1.0 / n))), model.Q2((zero, zero))) != 1.0:
            failures.append(f"Q2 n={n}")
    report = condition_gap(
        model.P, real_sequence(), ConditionId.SUF_A, ContinuousFunction(CLIPPED_ABS), EPS, FAIL_FLOOR, start=48
    )
    exact = all(g == 1.0 / n for n, g in enumerate(report.gaps, start=1))
    elapsed = time.perf_counter() - start
    passed = not failures and exact and report.verdict is Verdict.PASS and elapsed < 1.0
    record(1, passed, f"TV jumps exact={not failures}, SUF_A gap 1/n exact={exact}, "
           f"verdict {report.verdict.value}, {elapsed:.3f}s")
    assert passed, failures


def test_criterion_2_remark_reproduction():
    start = time.perf_counter()
    model = remark_model()
    suf = condition_gap(model.P, real_sequence(), ConditionId.SUF_A, ContinuousFunction(CONSTANT_ONE), EPS, FAIL_FLOOR)
    constant_one = all(g == 1.0 for g in suf.gaps)

    z = mixture([(0.5, dirac(real_point(0.0), REALS)), (0.5, dirac(real_point(1.0), REALS))])
    z_other = dirac(real_point(2.0), REALS)
    params = ProductSpace((MeasureSpace(REALS), REALS))
    a = real_point(0.0)
    seq = ParamSequence.along(params, lambda h: (mixture([(1.0 - h, z), (h, z_other)]), a), name="belief-segment")
    net = [dirac(real_point(x), REALS) for x in (0.0, 1.0, 2.0)]
    weak = q_hat_weak_check(model.q_hat, seq, net, EPS, FAIL_FLOOR)
    elapsed = time.perf_counter() - start
    passed = (
        constant_one and suf.verdict is Verdict.FAIL and weak.verdict is Verdict.PASS
        and weak.gaps[-1] < weak.gaps[0] and elapsed < 1.0
    )
    record(2, passed, f"SUF_A gap == 1: {constant_one}, verdict {suf.verdict.value}; "
           f"q_hat weak gap {weak.gaps[0]:.3g} -> {weak.gaps[-1]:.3g}, verdict {weak.verdict.value}, {elapsed:.3f}s")
    assert passed


# ---------------------------------------------------------------------------
# 3: oracle equivalence


def _random_test_function(rng: random.Random, s1) -> TestFunction:
    kind = rng.randrange(3)
    if kind == 0:
        return CONSTANT_ONE
    if kind == 1:
        chosen = [p for p in s1 if rng.random() < 0.5]
        return indicator_of(chosen)
    values = {p: rng.randint(-8, 8) / 8 for p in s1}
    return TestFunction("random-table", 1.0, values.__getitem__)


def test_criterion_3_oracle_equivalence():
    start = time.perf_counter()
    rng = random.Random("criterion-3")
    mismatches = 0
    for i in range(1000):
        sizes = (rng.randint(1, 4), rng.randint(1, 10))
        # a single joint atom leaves no room for a jump
        truth = Truth.CONTINUOUS if i % 2 == 0 or sizes == (1, 1) else Truth.DISCONTINUOUS
        inst = generate_instance(i, truth, sizes)
        s3a = real_point(1.0 / rng.randint(1, 64))
        s3b = real_point(0.0) if rng.random() < 0.7 else real_point(rng.random())
        f = _random_test_function(rng, inst.kernel.s1)
        fast = signed_sup_gap(slice_differences(inst.kernel, s3a, s3b, f))
        oracle = brute_force_gap(inst.kernel, s3a, s3b, f)
        if fast - oracle != 0.0:
            mismatches += 1
    elapsed = time.perf_counter() - start
    passed = mismatches == 0 and elapsed < 30.0
    record(3, passed, f"{1000 - mismatches}/1000 exact matches, {elapsed:.2f}s")
    assert passed


# ---------------------------------------------------------------------------
# 4, 5, 6: the generated suite


@pytest.fixture(scope="module")
def suite_runs():
    start = time.perf_counter()
    runs = []
    for truth in (Truth.CONTINUOUS, Truth.DISCONTINUOUS):
        for seed in range(100):
            inst = generate_instance(seed, truth, suite_sizes(seed))
            runs.append((inst, equivalence_suite(inst.kernel, inst.sequence(), EPS, FAIL_FLOOR)))
    return runs, time.perf_counter() - start


def test_criterion_4_condition_equivalence(suite_runs):
    runs, elapsed = suite_runs
    keys = ("SUF_A", "WTV_B", "CLOSED_C", "LSC_E", "CONTSET_D", "MARGINAL_TV")
    agree = sum(all(rep.verdict(k) is expected(inst.ground_truth) for k in keys) for inst, rep in runs)
    passed = agree == len(runs) == 200 and elapsed < 60.0
    record(4, passed, f"{agree}/{len(runs)} instances agree with ground truth on {', '.join(keys)}, {elapsed:.2f}s")
    assert passed


def test_criterion_5_kernel_assumptions(suite_runs):
    runs, _ = suite_runs
    keys = ("SUF_A", "ASSUMPTION_KERN", MARGINAL_AND_H, PHI_SUF_A)
    agree = sum(len({rep.verdict(k) for k in keys}) == 1 and rep.verdict("SUF_A") is expected(inst.ground_truth)
                for inst, rep in runs)
    passed = agree == len(runs) == 200
    record(5, passed, f"{agree}/{len(runs)} instances agree on {', '.join(keys)}")
    assert passed


def test_criterion_6_determining_families(suite_runs):
    runs, _ = suite_runs
    agree = 0
    for inst, rep in runs:
        singletons = check_assumption_m(inst.kernel, inst.sequence(), singleton_family(inst.kernel.s1), EPS, FAIL_FLOOR)
        if rep.verdict("ASSUMPTION_M") is rep.verdict("SUF_A") is singletons.verdict:
            agree += 1
    passed = agree == len(runs) == 200
    record(6, passed, f"{agree}/{len(runs)} instances: ASSUMPTION_M (default and singleton families) == SUF_A")
    assert passed


# ---------------------------------------------------------------------------
# 7: integration preservation


def test_criterion_7_preservation():
    start = time.perf_counter()
    agree = 0
    for seed in range(50):
        truth = Truth.CONTINUOUS if seed % 2 == 0 else Truth.DISCONTINUOUS
        pair = generate_preservation(seed, truth, suite_sizes(seed))
        rep = preservation_check(pair.xi, pair.mu_seq, pair.s4_seq, EPS, FAIL_FLOOR)
        agree += rep.agreement and rep.xi.verdict is expected(truth)
    elapsed = time.perf_counter() - start
    passed = agree == 50
    record(7, passed, f"{agree}/50 pairs agree (xi vs integrated kernel), {elapsed:.2f}s")
    assert passed


# ---------------------------------------------------------------------------
# 8: POMDP2 reduction


def _atomwise_q_equals_phi_of_r(model: MDPIIModel, z: Measure, a) -> bool:
    """q(.|z, a) and phi(R)(.|z, a) put identical mass on identical atoms."""
    y = model.Y.points[0]
    q = q_kernel(model)((z, y, a))
    phi = belief_kernel_phi(r_joint_kernel(model))((z, y, a))
    return dict(q.items()) == {(BeliefPoint(b.belief), y2): p for (b, y2), p in phi.items()}


def test_criterion_8_pomdp2_reduction():
    start = time.perf_counter()
    agree = bayes_ok = atoms_ok = 0
    worst_bayes = 0.0
    for seed in range(50):
        truth = Truth.CONTINUOUS if seed % 2 == 0 else Truth.DISCONTINUOUS
        gen = generate_pomdp2(seed, truth, suite_sizes(seed))
        model = MDPIIModel.pomdp2(gen.P2, gen.Q2)
        w0 = gen.W.points[0]
        seqs = [dirac_path(model, action_sequence(gen.W, w)) for w in gen.W]
        actions = action_sequence(gen.W, w0).map(ACTIONS, lambda wa: wa[1])
        z_lim = Measure(gen.W, {w: 1.0 / len(gen.W) for w in gen.W})
        seqs.append(belief_segment(model, z_lim, dirac(w0, gen.W), None, actions=actions))
        reports = [mdpci_equivalence_check(model, s, EPS, FAIL_FLOOR) for s in seqs]
        agree += all(r.agreement for r in reports) and reports[-1].P.verdict is expected(truth)
        checks = [(z, a) for z in (z_lim, dirac(w0, gen.W)) for a in (real_point(0.0), real_point(0.5))]
        errors = [bayes_reconstruction_error(model, z, None, a) for z, a in checks]
        worst_bayes = max([worst_bayes] + errors)
        bayes_ok += max(errors) <= 1e-12
        atoms_ok += all(_atomwise_q_equals_phi_of_r(model, z, a) for z, a in checks)
    elapsed = time.perf_counter() - start
    passed = agree == bayes_ok == atoms_ok == 50
    record(8, passed, f"P/R/q agreement {agree}/50, Bayes reconstruction {bayes_ok}/50 (max {worst_bayes:.1e}), "
           f"q == phi(R) atoms {atoms_ok}/50, {elapsed:.2f}s")
    assert passed


# ---------------------------------------------------------------------------
# 9: POMDP1 toggles


def test_criterion_9_pomdp1_toggles():
    start = time.perf_counter()
    agree = total = 0
    for p1_cont in (True, False):
        for q1_cont in (True, False):
            for seed in range(25):
                gen = generate_pomdp1(seed, p1_cont, q1_cont, suite_sizes(seed))
                model = MDPIIModel.pomdp1(gen.P1, gen.Q1)
                fam = determining_family(gen.W)
                verdicts = [suf_condition(model.P, action_sequence(gen.W, w), fam, EPS, FAIL_FLOOR).verdict
                            for w in gen.W]
                verdict = aggregate(verdicts)
                want = Verdict.PASS if (p1_cont and q1_cont) else Verdict.FAIL
                agree += verdict is want
                total += 1
    elapsed = time.perf_counter() - start
    passed = agree == total == 100
    record(9, passed, f"{agree}/{total} SUF_A verdicts equal the toggle conjunction, {elapsed:.2f}s")
    assert passed


# ---------------------------------------------------------------------------
# 10: filter exactness


def test_criterion_10_filter_exactness():
    spec = load("twostate-demo")
    model = spec.model
    post = filter_update(model, spec.prior("uniform"), None, model.A["a1"], model.Y["y1"])
    got = {w.id: p for w, p in post.belief.items()}
    errors = {k: abs(Fraction(got[k]) - v) for k, v in TWOSTATE_POSTERIOR_Y1.items()}
    worst = float(max(errors.values()))
    passed = worst <= 1e-12 and not post.zero_evidence
    record(10, passed, f"posterior {got} vs 9/11, 2/11 (max error {worst:.1e})")
    assert passed
