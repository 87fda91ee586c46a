import numpy as np
import pytest

from instances import crandn, random_positive_elem
from douglaskit.cstar_core import AlgebraElement, functional_calculus, multiply, norm
from douglaskit.errors import HypothesisViolatedError, NonPositiveError, ShapeMismatchError
from douglaskit.hilbert_module import AdjointableOperator
from douglaskit.lemma_engine import (
    CutoffFunction,
    check_order_consequences,
    check_positivity_characterization,
    lemma_witness,
    square_monotonicity_forward,
)

D = AlgebraElement.diag
op = AdjointableOperator.from_mats


class TestCutoff:
    def test_values(self):
        f = CutoffFunction(2.0)
        assert [f(t) for t in (-1.0, 0.0, 1.0, 1.5, 2.0, 5.0)] == [0, 0, 0, 0.5, 1, 1]

    def test_vectorized(self):
        assert np.array_equal(CutoffFunction(4.0)(np.array([0.0, 3.0, 4.0])), [0, 0.5, 1])

    def test_rejects_nonpositive_m(self):
        with pytest.raises(ValueError):
            CutoffFunction(0.0)


class TestPositivityCharacterization:
    def test_psd(self):
        r = check_positivity_characterization(op([1], [[[2, 1], [1, 1]]]))
        assert r.spectral and r.quadratic_form and r.agree

    def test_indefinite(self):
        r = check_positivity_characterization(op([1], [np.diag([1.0, -1.0])]))
        assert not r.spectral and not r.quadratic_form and r.agree
        assert r.witness is not None

    def test_non_hermitian_with_psd_symmetric_part(self):
        # <Tx,x> has nonzero imaginary part for a non-self-adjoint T
        r = check_positivity_characterization(op([1], [[[1, 1], [0, 1]]]))
        assert not r.spectral and not r.quadratic_form

    def test_requires_square(self):
        with pytest.raises(ShapeMismatchError):
            check_positivity_characterization(op([1], [np.ones((2, 3))]))

    def test_multi_block_nontrivial_algebra(self):
        rng = np.random.default_rng(20)
        w = crandn(rng, 3, 3)
        T = op([2, 3], [w.conj().T @ w, np.diag([1.0, 0.0])])
        assert check_positivity_characterization(T).agree
        T2 = op([2, 3], [w.conj().T @ w, np.diag([1.0, -1e-3])])
        r = check_positivity_characterization(T2)
        assert r.agree and not r.spectral


class TestOrderConsequences:
    def test_diag(self):
        r = check_order_consequences(D(1, 0), D(2, 1), AlgebraElement.from_blocks([[[1, 2], [3, 4]]]))
        assert r.holds and r.norm_x == 1 and r.norm_y == 2

    def test_random(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            x = random_positive_elem(rng, [2, 3])
            y = x + random_positive_elem(rng, [2, 3])
            z = AlgebraElement.from_blocks([crandn(rng, 2, 2), crandn(rng, 3, 3)])
            assert check_order_consequences(x, y, z).holds

    def test_hypothesis_violated(self):
        with pytest.raises(HypothesisViolatedError):
            check_order_consequences(D(2, 0), D(1, 1), D(1, 1))
        with pytest.raises(HypothesisViolatedError):
            check_order_consequences(D(-1, 0), D(1, 1), D(1, 1))


class TestLemmaWitness:
    def test_hand_example(self):
        # normalized by 1/2: a=diag(1,0), b=diag(1/2,1/2), a^2-b^2=diag(3/4,-1/4)
        w = lemma_witness(D(2, 0), D(1, 1))
        assert w.scale == 0.5
        assert w.m == pytest.approx(0.75)
        assert w.c.allclose(D(1, 0), atol=1e-15)
        assert w.lhs_norm == pytest.approx(1.0) and w.rhs_norm == pytest.approx(0.5)
        assert w.verified and w.chain["branch"] == "state"

    def test_cb2c_zero_branch(self):
        w = lemma_witness(D(1, 0), D(0, 1))
        assert w.chain["branch"] == "cb2c-zero" and w.verified and w.rho is None

    def test_raises_when_squares_ordered(self):
        with pytest.raises(HypothesisViolatedError):
            lemma_witness(D(1, 1), D(2, 1))

    def test_rejects_non_positive(self):
        with pytest.raises(NonPositiveError):
            lemma_witness(D(1, -1), D(1, 1))

    def test_classic_non_monotone_square(self):
        # a <= b yet b^2 - a^2 = [[4,3],[3,2]] has determinant -1
        a = AlgebraElement.from_blocks([[[1.0, 0.0], [0.0, 0.0]]])
        b = AlgebraElement.from_blocks([[[2.0, 1.0], [1.0, 1.0]]])
        assert check_order_consequences(a, b, AlgebraElement.identity((2,))).holds
        w = lemma_witness(a, b)
        assert w.verified and w.gap > 0

    def test_random_witnesses(self):
        rng = np.random.default_rng(22)
        found = 0
        while found < 20:
            a, b = random_positive_elem(rng, [2, 3]), random_positive_elem(rng, [2, 3])
            try:
                w = lemma_witness(a, b)
            except HypothesisViolatedError:
                continue
            found += 1
            assert w.verified, w.chain
            c = w.c
            assert norm(multiply(w.a, c)) > norm(multiply(w.b, c))
            assert c.allclose(functional_calculus(CutoffFunction(w.m), multiply(w.a, w.a) - multiply(w.b, w.b)),
                              atol=1e-12)


class TestForwardDirection:
    def test_ordered_squares(self):
        v = square_monotonicity_forward(D(1, 1), D(2, 1))
        assert v.squares_ordered and v.sample_violations == 0 and v.consistent

    def test_unordered_squares(self):
        v = square_monotonicity_forward(D(2, 0), D(1, 1))
        assert not v.squares_ordered and v.witness_found and v.consistent
