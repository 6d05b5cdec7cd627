import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fellerkit.kernel import (
    BeliefPoint,
    BeliefSpace,
    JointKernel,
    Kernel,
    MeasureSpace,
    ParamSequence,
    belief_family,
    belief_kernel_phi,
    compose_pomdp2,
    default_net,
    determining_family,
    disintegrate,
    disintegrate_measure,
    integrate_kernel,
    integrated_kernel,
    marginal,
    product_pomdp1,
    restrict_to_atoms,
)
from fellerkit.measure import (
    REAL_FAMILY,
    DomainError,
    Measure,
    ProductSpace,
    RealLine,
    Space,
    coordinate,
    dirac,
    real_point,
    uniform,
)

W = Space.from_ids("W", ["w1", "w2"])
Y = Space.from_ids("Y", ["y1", "y2"])
A = Space.from_ids("A", ["a"])
S3 = Space.from_ids("S3", ["a", "b"])
WY = ProductSpace((W, Y))


def joint(**weights) -> Measure:
    # keys like w1_y1
    return Measure(WY, {(W[k.split("_")[0]], Y[k.split("_")[1]]): v for k, v in weights.items()})


EXAMPLE = joint(w1_y1=0.3, w1_y2=0.2, w2_y1=0.5)


class TestKernelConstruction:
    def test_table_rows_validated(self):
        with pytest.raises(DomainError, match="conditioning input a sums to 0.9"):
            Kernel.from_table(W, A, {A["a"]: {W["w1"]: 0.5, W["w2"]: 0.4}}, "P2")

    def test_missing_row(self):
        with pytest.raises(DomainError, match="no row"):
            Kernel.from_table(W, S3, {S3["a"]: {W["w1"]: 1.0}})

    def test_near_one_rows_renormalized(self):
        k = Kernel.from_table(W, A, {A["a"]: {W["w1"]: 0.5, W["w2"]: 0.5 + 5e-10}})
        assert k(A["a"]).mass == pytest.approx(1.0, abs=1e-15)

    def test_parameter_outside_space(self):
        k = Kernel.from_table(W, A, {A["a"]: {W["w1"]: 1.0}})
        with pytest.raises(DomainError, match="not a parameter"):
            k(W["w1"])

    def test_sub_probability_rule_rejected(self):
        k = Kernel(W, A, lambda _a: Measure(W, {W["w1"]: 0.5}))
        with pytest.raises(DomainError):
            k(A["a"])


class TestParamSequence:
    def test_along_harmonic(self):
        unit = RealLine("t", 0.0, 1.0)
        seq = ParamSequence.along(unit, real_point, length=4)
        assert [coordinate(t) for t in seq.terms] == [1.0, 0.5, 1 / 3, 0.25]
        assert seq.limit == real_point(0.0)
        assert seq.distances == (1.0, 0.5, 1 / 3, 0.25)

    def test_receding_sequence_rejected(self):
        unit = RealLine("t", 0.0, 1.0)
        with pytest.raises(DomainError, match="increases"):
            ParamSequence(unit, (real_point(0.1), real_point(0.5)), real_point(0.0))

    def test_constant(self):
        seq = ParamSequence.constant(S3, S3["a"], length=3)
        assert seq.distances == (0.0, 0.0, 0.0)


class TestMarginal:
    def test_sides(self):
        psi = JointKernel.constant(EXAMPLE, A)
        assert marginal(psi, "S2")(A["a"]) == Measure(Y, {Y["y1"]: 0.8, Y["y2"]: 0.2})
        assert marginal(psi, "S1")(A["a"]) == Measure(W, {W["w1"]: 0.5, W["w2"]: 0.5})

    def test_product_marginal(self):
        mu = Measure(W, {W["w1"]: 0.25, W["w2"]: 0.75})
        nu = Measure(Y, {Y["y1"]: 0.4, Y["y2"]: 0.6})
        prod = Measure(WY, {(w, y): p * q for w, p in mu.items() for y, q in nu.items()})
        assert marginal(JointKernel.constant(prod, A), "S2")(A["a"]) == nu

    def test_bad_side(self):
        with pytest.raises(DomainError):
            marginal(JointKernel.constant(EXAMPLE, A), "S3")


class TestDisintegrate:
    def test_example(self):
        d = disintegrate(JointKernel.constant(EXAMPLE, A), A["a"])
        c = d.conditional(Y["y1"])
        assert (c[W["w1"]], c[W["w2"]]) == pytest.approx((0.375, 0.625), abs=1e-15)
        assert d.conditional(Y["y2"]) == dirac(W["w1"], W)

    def test_factorization_over_all_rectangles(self):
        d = disintegrate_measure(EXAMPLE)
        for r1 in range(3):
            for B in itertools.combinations(W, r1):
                for r2 in range(3):
                    for C in itertools.combinations(Y, r2):
                        lhs = EXAMPLE.measure_of(lambda wy: wy[0] in B and wy[1] in C)
                        rhs = sum(d.marginal[y] * d.conditional(y).measure_of(lambda w: w in B) for y in C)
                        assert lhs == pytest.approx(rhs, abs=1e-15)

    def test_reconstruct(self):
        assert disintegrate_measure(EXAMPLE).reconstruct() == EXAMPLE

    def test_product_conditionals(self):
        mu = Measure(W, {W["w1"]: 0.25, W["w2"]: 0.75})
        prod = Measure(WY, {(w, y): p * 0.5 for w, p in mu.items() for y in Y})
        d = disintegrate_measure(prod)
        assert all(d.conditional(y) == mu for y in Y)

    def test_dirac(self):
        d = disintegrate_measure(joint(w1_y1=1.0))
        assert d.conditional(Y["y1"]) == dirac(W["w1"], W)
        # a null atom takes the uniform conditional
        assert d.is_null(Y["y2"])
        assert d.conditional(Y["y2"]) == uniform(W)


class TestPhi:
    def test_example(self):
        phi = belief_kernel_phi(JointKernel.constant(EXAMPLE, A))(A["a"])
        b1 = BeliefPoint(Measure(W, {W["w1"]: 0.375, W["w2"]: 0.625}))
        b2 = BeliefPoint(dirac(W["w1"], W))
        assert dict(phi.items()) == {(b1, Y["y1"]): 0.8, (b2, Y["y2"]): 0.2}

    def test_product(self):
        mu = Measure(W, {W["w1"]: 0.25, W["w2"]: 0.75})
        prod = Measure(WY, {(w, y): p * q for w, p in mu.items() for y, q in zip(Y, (0.4, 0.6))})
        phi = belief_kernel_phi(JointKernel.constant(prod, A))(A["a"])
        assert phi.marginal(0) == dirac(BeliefPoint(mu), BeliefSpace(W))
        assert phi.marginal(1) == Measure(Y, {Y["y1"]: 0.4, Y["y2"]: 0.6})

    def test_dirac(self):
        phi = belief_kernel_phi(JointKernel.constant(joint(w1_y1=1.0), A))(A["a"])
        assert dict(phi.items()) == {(BeliefPoint(dirac(W["w1"], W)), Y["y1"]): 1.0}

    def test_belief_points_compare_by_value(self):
        z = Measure(W, {W["w1"]: 0.375, W["w2"]: 0.625})
        assert BeliefPoint(z) == BeliefPoint(Measure(W, dict(z.items())))
        assert hash(BeliefPoint(z)) == hash(BeliefPoint(Measure(W, dict(z.items()))))


class TestIntegrate:
    XI = JointKernel.from_table(
        W, Y, ProductSpace((S3, A)),
        {(S3["a"], A["a"]): {(W["w1"], Y["y1"]): 1.0}, (S3["b"], A["a"]): {(W["w2"], Y["y2"]): 1.0}},
        "xi",
    )

    def test_dirac_mixing(self):
        assert integrate_kernel(self.XI, dirac(S3["a"], S3), A["a"]) == self.XI((S3["a"], A["a"]))

    def test_linearity(self):
        mu = Measure(S3, {S3["a"]: 0.5, S3["b"]: 0.5})
        assert integrate_kernel(self.XI, mu, A["a"]) == joint(w1_y1=0.5, w2_y2=0.5)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_total_mass(self, p):
        mu = Measure(S3, {S3["a"]: p, S3["b"]: 1.0 - p})
        assert integrate_kernel(self.XI, mu, A["a"]).mass == pytest.approx(1.0, abs=1e-15)

    def test_integrated_kernel_params(self):
        k = integrated_kernel(self.XI)
        assert k.params == ProductSpace((MeasureSpace(S3), A))
        assert k((dirac(S3["b"], S3), A["a"])) == joint(w2_y2=1.0)

    def test_wrong_mixing_space(self):
        with pytest.raises(DomainError):
            integrate_kernel(self.XI, dirac(W["w1"], W), A["a"])


WA = ProductSpace((W, A))
AW = ProductSpace((A, W))


class TestPomdpJoints:
    def test_product_of_diracs(self):
        P1 = Kernel(W, WA, lambda _wa: dirac(W["w1"], W))
        Q1 = Kernel(Y, WA, lambda _wa: dirac(Y["y1"], Y))
        assert product_pomdp1(P1, Q1)((W["w2"], A["a"])) == joint(w1_y1=1.0)

    def test_product_of_uniforms(self):
        P1 = Kernel(W, WA, lambda _wa: uniform(W))
        Q1 = Kernel(Y, WA, lambda _wa: uniform(Y))
        out = product_pomdp1(P1, Q1)((W["w1"], A["a"]))
        assert out == joint(w1_y1=0.25, w1_y2=0.25, w2_y1=0.25, w2_y2=0.25)
        assert out.marginal(0) == uniform(W) and out.marginal(1) == uniform(Y)

    def test_compose_two_state(self):
        P2 = Kernel(W, WA, lambda wa: dirac(wa[0], W))
        table = {W["w1"]: {Y["y1"]: 0.9, Y["y2"]: 0.1}, W["w2"]: {Y["y1"]: 0.2, Y["y2"]: 0.8}}
        Q2 = Kernel(Y, AW, lambda aw: Measure(Y, table[aw[1]]))
        P = compose_pomdp2(P2, Q2)
        assert P((W["w1"], A["a"])) == joint(w1_y1=0.9, w1_y2=0.1)
        assert P((W["w2"], A["a"])).marginal(0) == P2((W["w2"], A["a"]))

    def test_compose_with_state_free_observation_is_a_product(self):
        mix = Measure(W, {W["w1"]: 0.3, W["w2"]: 0.7})
        obs = Measure(Y, {Y["y1"]: 0.6, Y["y2"]: 0.4})
        P2 = Kernel(W, WA, lambda _wa: mix)
        Q2 = Kernel(Y, AW, lambda _aw: obs)
        Q1 = Kernel(Y, WA, lambda _wa: obs)
        wa = (W["w1"], A["a"])
        assert compose_pomdp2(P2, Q2)(wa) == product_pomdp1(P2, Q1)(wa)

    def test_compose_checks_spaces(self):
        P2 = Kernel(W, WA, lambda wa: dirac(wa[0], W))
        with pytest.raises(DomainError):
            compose_pomdp2(P2, Kernel(Y, WA, lambda _wa: uniform(Y)))


class TestFamilies:
    def test_default_net_is_vertices(self):
        assert default_net(W) == [dirac(W["w1"], W), dirac(W["w2"], W)]

    def test_belief_family_members(self):
        fam = belief_family(W)
        z = BeliefPoint(dirac(W["w1"], W))
        assert [f.name for f in fam][0] == "constant-one"
        assert fam.members[1](z) == 0.0 and fam.members[2](z) > 0.0

    def test_determining_family_dispatch(self):
        assert determining_family(RealLine("R")) == REAL_FAMILY
        assert len(determining_family(W)) == 3

    def test_restrict_to_atoms(self):
        R = RealLine("R")
        psi = JointKernel(R, R, R, lambda w: dirac((w, w), ProductSpace((R, R))))
        small = restrict_to_atoms(psi, [real_point(0.0), real_point(1.0)])
        assert small.s1.finite and len(small.s1) == 2
        assert small(real_point(1.0)).support == ((real_point(1.0), real_point(1.0)),)


@settings(max_examples=40)
@given(st.lists(st.integers(min_value=0, max_value=9), min_size=4, max_size=4).filter(any))
def test_disintegration_round_trip(raw):
    total = sum(raw)
    mu = Measure(WY, {k: r / total for k, r in zip(WY.points, raw)})
    back = disintegrate_measure(mu).reconstruct()
    assert set(back.support) == set(mu.support)
    assert all(back[k] == pytest.approx(mu[k], abs=1e-15) for k in mu.support)
