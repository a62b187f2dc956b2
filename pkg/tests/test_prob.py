import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from helpers import random_joint
from binfwd.errors import (AxisNotFoundError, DomainError, FactorError, NormalizationError,
                           ZeroProbabilityError)
from binfwd.prob import (Alphabet, CondPmf, JointPmf, binary_entropy, compose, condition, entropy,
                         marginalize, mutual_information)

X, Y, Z, S, U = (Alphabet(n, 2) for n in "XYZSU")


def pmf(probs, *axes):
    return JointPmf(axes, probs)


class TestAlphabetAndJoint:
    def test_alphabet_size_positive(self):
        with pytest.raises(DomainError):
            Alphabet("X", 0)

    def test_axes_sorted(self):
        j = JointPmf([Y, X], [[0.1, 0.2], [0.3, 0.4]])
        assert j.names == ("X", "Y")
        np.testing.assert_allclose(j.probs, [[0.1, 0.3], [0.2, 0.4]])

    def test_structurally_equal_joints_compare_equal(self):
        a = JointPmf([Y, X], [[0.1, 0.2], [0.3, 0.4]])
        b = JointPmf([X, Y], [[0.1, 0.3], [0.2, 0.4]])
        assert a == b

    def test_rejects_bad_mass(self):
        with pytest.raises(NormalizationError):
            pmf([0.5, 0.6], X)
        with pytest.raises(NormalizationError):
            pmf([1.5, -0.5], X)

    def test_rejects_duplicate_names(self):
        with pytest.raises(DomainError):
            JointPmf([X, X], np.full((2, 2), 0.25))

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            pmf([0.2, 0.3, 0.5], X)

    def test_immutable(self):
        j = pmf([0.5, 0.5], X)
        with pytest.raises(ValueError):
            j.probs[0] = 1.0


class TestEntropy:
    def test_uniform(self):
        assert entropy(pmf([0.5, 0.5], X), "X") == pytest.approx(1.0, abs=1e-12)

    def test_point_mass(self):
        assert entropy(pmf([1.0, 0.0], X), "X") == 0.0

    def test_biased(self):
        # independent -sum p log p
        assert entropy(pmf([0.75, 0.25], X), "X") == pytest.approx(0.8112781244591328, abs=1e-12)

    def test_unknown_axis(self):
        with pytest.raises(AxisNotFoundError):
            entropy(pmf([0.5, 0.5], X), "Q")

    def test_overlapping_sets(self):
        j = pmf(np.full((2, 2), 0.25), X, Y)
        with pytest.raises(DomainError):
            entropy(j, "X", "X")

    def test_conditional_zero_slices_contribute_nothing(self):
        j = pmf([[0.5, 0.5], [0.0, 0.0]], X, Y)
        assert entropy(j, "Y", "X") == pytest.approx(1.0)


class TestMutualInformation:
    def test_independent(self):
        j = pmf(np.outer([0.3, 0.7], [0.6, 0.4]), X, Y)
        assert mutual_information(j, "X", "Y") == 0.0

    def test_copy(self):
        j = pmf([[0.5, 0.0], [0.0, 0.5]], X, Y)
        assert mutual_information(j, "X", "Y") == pytest.approx(1.0)

    def test_bsc(self):
        a = 0.25
        j = pmf(0.5 * np.array([[1 - a, a], [a, 1 - a]]), X, Y)
        assert mutual_information(j, "X", "Y") == pytest.approx(0.18872187554086717, abs=1e-12)

    def test_sets_must_be_disjoint(self):
        j = pmf(np.full((2, 2), 0.25), X, Y)
        with pytest.raises(DomainError):
            mutual_information(j, "X", ("X", "Y"))

    def test_matches_oracle_on_random_joints(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            j = random_joint(rng, (2, 3, 2), zeros=0.2)
            t = oracles.table(j.names, j.probs)
            got = mutual_information(j, "A0", "A2", "A1")
            assert got == pytest.approx(max(oracles.I(t, ["A0"], ["A2"], ["A1"]), 0.0), abs=1e-10)


class TestBinaryEntropy:
    @pytest.mark.parametrize("a,want", [(0.5, 1.0), (0.0, 0.0), (1.0, 0.0), (0.75, 0.8112781244591328)])
    def test_values(self, a, want):
        assert binary_entropy(a) == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("a", [-0.1, 1.1, float("nan")])
    def test_domain(self, a):
        with pytest.raises(DomainError):
            binary_entropy(a)


class TestCompose:
    def test_diagonal(self):
        j = compose([CondPmf.unconditional(S, [0.3, 0.7]), CondPmf.deterministic(Z, (S,), [0, 1])])
        np.testing.assert_allclose(j.marginal_probs(("S", "Z")), [[0.3, 0.0], [0.0, 0.7]])

    def test_single_factor_identity(self):
        j = pmf([[0.1, 0.2], [0.3, 0.4]], X, Y)
        assert compose([j]) == j

    def test_hand_multiplication(self):
        k = np.array([[0.9, 0.1], [0.2, 0.8]])
        j = compose([CondPmf.unconditional(S, [0.5, 0.5]), CondPmf((U,), (S,), k)])
        np.testing.assert_allclose(j.probs, [[0.45, 0.05], [0.1, 0.4]], atol=1e-15)

    def test_dangling_conditioning(self):
        with pytest.raises(FactorError):
            compose([CondPmf((U,), (S,), np.eye(2))])

    def test_duplicate_production(self):
        with pytest.raises(FactorError):
            compose([CondPmf.unconditional(S, [0.5, 0.5]), CondPmf((S,), (), [0.5, 0.5])])

    def test_kernel_rows_checked(self):
        with pytest.raises(NormalizationError):
            CondPmf((U,), (S,), [[0.5, 0.6], [0.5, 0.5]])

    def test_deterministic_flag(self):
        assert CondPmf.deterministic(Z, (S,), [1, 0]).is_deterministic
        assert not CondPmf((U,), (S,), np.full((2, 2), 0.5)).is_deterministic


class TestMarginalizeCondition:
    def test_product_marginal(self):
        j = pmf(np.outer([0.3, 0.7], [0.6, 0.4]), X, Y)
        np.testing.assert_allclose(marginalize(j, "X").probs, [0.3, 0.7])

    def test_condition_diagonal(self):
        j = pmf([[0.3, 0.0], [0.0, 0.7]], S, Z)
        np.testing.assert_allclose(condition(j, {"S": 0}).probs, [1.0, 0.0])

    def test_three_axis_hand_computation(self):
        p = np.arange(1, 9, dtype=float).reshape(2, 2, 2) / 36.0
        j = pmf(p, X, Y, Z)
        np.testing.assert_allclose(marginalize(j, ("X", "Z")).probs, [[4 / 36, 6 / 36], [12 / 36, 14 / 36]])
        np.testing.assert_allclose(condition(j, {"X": 1, "Z": 0}).probs, [5 / 12, 7 / 12])

    def test_zero_probability_event(self):
        j = pmf([[0.5, 0.5], [0.0, 0.0]], X, Y)
        with pytest.raises(ZeroProbabilityError):
            condition(j, {"X": 1})

    def test_empty_keep(self):
        with pytest.raises(DomainError):
            marginalize(pmf([0.5, 0.5], X), ())


@st.composite
def joints(draw):
    sizes = draw(st.lists(st.integers(1, 3), min_size=3, max_size=3))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_joint(np.random.default_rng(seed), tuple(sizes), zeros=draw(st.sampled_from([0.0, 0.3])))


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(joints())
    def test_chain_rule(self, j):
        assert entropy(j, ("A0", "A1")) == pytest.approx(entropy(j, "A0") + entropy(j, "A1", "A0"), abs=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(joints())
    def test_conditioning_reduces_entropy(self, j):
        assert entropy(j, "A0", "A1") <= entropy(j, "A0") + 1e-9

    @settings(max_examples=200, deadline=None)
    @given(joints())
    def test_symmetry_and_nonnegativity(self, j):
        a = mutual_information(j, "A0", "A1", "A2")
        assert a == pytest.approx(mutual_information(j, "A1", "A0", "A2"), abs=1e-9)
        assert a >= 0.0

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_compose_recovers_factor_marginal(self, seed):
        rng = np.random.default_rng(seed)
        ps = rng.dirichlet(np.ones(3))
        k = rng.dirichlet(np.ones(2), size=3)
        S3 = Alphabet("S", 3)
        j = compose([CondPmf.unconditional(S3, ps), CondPmf((U,), (S3,), k)])
        np.testing.assert_allclose(j.marginal_probs("S"), ps, atol=1e-9)
        np.testing.assert_allclose(j.marginal_probs("U"), ps @ k, atol=1e-9)
