import math

import numpy as np
import pytest

import oracles
from instances import random_pair, random_T, solvable_Tprime
from douglaskit.douglas import (
    build_V,
    check_majorization,
    check_norm_majorization,
    compare_loewner_and_norms,
    douglas_solve,
    is_majorized_at,
    is_reduced_solution,
    lambda_bisection,
    minimal_lambda,
    range_inclusion,
    theorem_report,
)
from douglaskit.errors import NoSolutionError, NotMajorizedError, ShapeMismatchError
from douglaskit.hilbert_module import (
    AdjointableOperator,
    adjoint_op,
    compose,
    null_submodule,
    opnorm,
    range_submodule,
)
from douglaskit.tolerance import DEFAULT_TOL

op = AdjointableOperator.from_mats


@pytest.fixture
def diag_pair():
    return op([1], [np.diag([1.0, 0.0])]), op([1], [np.diag([2.0, 0.0])])


@pytest.fixture
def disjoint_pair():
    return op([1], [np.diag([0.0, 1.0])]), op([1], [np.diag([1.0, 0.0])])


class TestDiagonalExample:
    def test_lambda_star(self, diag_pair):
        Tp, T = diag_pair
        want = oracles.lambda_grid(np.diag([1.0, 0]), np.diag([4.0, 0]), 0, 1, 401)
        assert want == pytest.approx(0.25)
        assert check_majorization(Tp, T).lambda_star == pytest.approx(want, rel=1e-14)
        assert minimal_lambda(Tp, T) == pytest.approx(0.25, rel=1e-14)
        assert lambda_bisection(Tp, T) == pytest.approx(0.25, rel=1e-12)

    def test_mu_star(self, diag_pair):
        r = check_norm_majorization(*diag_pair)
        assert r.holds and r.mu_star == pytest.approx(0.5)
        assert r.samples_ok and r.sample_violations == 0

    def test_solution(self, diag_pair):
        sol = douglas_solve(*diag_pair)
        assert np.allclose(sol.D.mats[0], np.diag([0.5, 0.0]), atol=1e-15)
        assert sol.reduced and sol.residual < 1e-15
        assert sol.norm_sq == pytest.approx(sol.lambda_star)

    def test_range_inclusion(self, diag_pair):
        assert range_inclusion(*diag_pair)

    def test_report(self, diag_pair):
        rep = theorem_report(*diag_pair)
        assert rep.consistency
        assert rep.holds == {"i": True, "ii": True, "iii": True, "iv": True}
        assert rep.witness is None


class TestNegativeExample:
    def test_all_fail_with_common_witness(self, disjoint_pair):
        Tp, T = disjoint_pair
        c1, c2 = check_majorization(Tp, T), check_norm_majorization(Tp, T)
        assert not c1 and not c2 and not range_inclusion(Tp, T)
        assert math.isinf(c1.lambda_star) and math.isinf(c2.mu_star)
        z1, z2 = c1.witness.blocks[0][:, 0], c2.witness.blocks[0][:, 0]
        assert np.allclose(np.abs(z1), [0, 1]) and np.allclose(z1, z2)

    def test_solve_raises_with_witness(self, disjoint_pair):
        with pytest.raises(NoSolutionError) as exc:
            douglas_solve(*disjoint_pair)
        assert np.allclose(np.abs(exc.value.witness.blocks[0][:, 0]), [0, 1])
        assert exc.value.residual == pytest.approx(1.0)

    def test_minimal_lambda_raises(self, disjoint_pair):
        with pytest.raises(NotMajorizedError):
            minimal_lambda(*disjoint_pair)
        with pytest.raises(NotMajorizedError):
            build_V(*disjoint_pair)

    def test_report(self, disjoint_pair):
        rep = theorem_report(*disjoint_pair)
        assert rep.consistency and not any(rep.holds.values())
        assert rep.witness is not None


def test_identity_T_gives_norm_squared():
    a = np.array([[2.0, 1.0], [1.0, 1.0]])
    hi, _ = oracles.eig2_sym(2, 1, 1)
    T = op([1], [np.eye(2)])
    assert minimal_lambda(op([1], [a]), T) == pytest.approx(hi ** 2, rel=1e-13)


def test_zero_Tprime():
    T = op([1], [np.eye(2)])
    Tp = op([1], [np.zeros((2, 3))])
    assert minimal_lambda(Tp, T) == 0.0
    assert douglas_solve(Tp, T).norm_sq == 0.0


def test_zero_T_nonzero_Tprime():
    T = op([1], [np.zeros((2, 2))])
    Tp = op([1], [np.eye(2)])
    assert not check_majorization(Tp, T)
    assert not check_norm_majorization(Tp, T)


def test_codomain_mismatch():
    with pytest.raises(ShapeMismatchError):
        check_majorization(op([1], [np.eye(2)]), op([1], [np.eye(3)]))


def test_multi_block_takes_max():
    T = op([1, 2], [np.diag([1.0, 1.0]), [[4.0]]])
    Tp = op([1, 2], [np.diag([3.0, 0.0]), [[2.0]]])
    # block 0 gives 9, block 1 gives 1/4
    assert minimal_lambda(Tp, T) == pytest.approx(9.0)


def test_is_majorized_at_monotone(diag_pair):
    Tp, T = diag_pair
    assert not is_majorized_at(Tp, T, 0.2499)
    assert is_majorized_at(Tp, T, 0.2501)


@pytest.mark.parametrize("mode", ["full", "deficient", "near", "tiny"])
def test_random_solvable_agree(mode):
    rng = np.random.default_rng({"full": 1, "deficient": 2, "near": 3, "tiny": 4}[mode])
    for _ in range(15):
        Tp, T = random_pair(rng, True, mode)
        rep = theorem_report(Tp, T)
        assert rep.consistency and all(rep.holds.values())
        if mode == "near":
            # cond(T)^2 ~ 1e12 puts the pencil deficit below eigensolver rounding
            continue
        lam_b = lambda_bisection(Tp, T)
        assert abs(rep.solution.norm_sq - lam_b) <= 1e-6 * max(1, lam_b)


@pytest.mark.parametrize("mode", ["deficient", "tiny"])
def test_random_unsolvable_agree(mode):
    rng = np.random.default_rng(5)
    for _ in range(15):
        Tp, T = random_pair(rng, False, mode)
        rep = theorem_report(Tp, T)
        assert rep.consistency and not any(rep.holds.values())


def test_reducedness_is_detected():
    rng = np.random.default_rng(6)
    T = random_T(rng, [2], [4], [5], "deficient")
    Tp = solvable_Tprime(rng, T, [3])
    sol = douglas_solve(Tp, T)
    assert is_reduced_solution(Tp, T, sol.D) == (True, True)
    # a perturbation with range in N(T) still solves but is no longer reduced
    N = compose(null_submodule(T).projector(), op([2], [rng.standard_normal((5, 3))]))
    assert opnorm(N) > 0.1
    assert is_reduced_solution(Tp, T, sol.D + N) == (True, False)


def test_build_V():
    rng = np.random.default_rng(7)
    Tp, T = random_pair(rng, True, "deficient")
    v = build_V(Tp, T)
    assert v.identity_residual < 1e-10 * max(1, opnorm(Tp))
    assert v.alpha_ok and v.adjoint_ok and v.kernel_residual < 1e-12


def test_compare_loewner_and_norms():
    A = op([1], [np.diag([1.0, 0.5])])
    B = op([1], [np.diag([2.0, 0.5])])
    r = compare_loewner_and_norms(A, B)
    assert r.loewner and r.norms and r.agree
    r2 = compare_loewner_and_norms(B, A)
    assert not r2.loewner and not r2.norms and r2.violations > 0


def test_seed_determinism(diag_pair):
    a = check_norm_majorization(*diag_pair, DEFAULT_TOL)
    b = check_norm_majorization(*diag_pair, DEFAULT_TOL)
    assert a.sampled_max_ratio == b.sampled_max_ratio


def test_Tprime_equal_T():
    rng = np.random.default_rng(8)
    _, T = random_pair(rng, True, "deficient")
    while opnorm(T) == 0:
        _, T = random_pair(rng, True, "deficient")
    rep = theorem_report(T, T)
    assert rep.consistency and all(rep.holds.values())
    assert rep.lambda_star == pytest.approx(1.0, rel=1e-12)
    assert rep.mu_star == pytest.approx(1.0, rel=1e-12)
    V = build_V(T, T).V
    # identity on R(T*), zero on N(T)
    P = range_submodule(adjoint_op(T)).projector()
    assert opnorm(V - P) <= 1e-10


def test_identity_T_solution_is_Tprime():
    rng = np.random.default_rng(9)
    Tp = op([2, 1], [rng.standard_normal((3, 4)), rng.standard_normal((2, 2))])
    T = AdjointableOperator.identity(Tp.codomain)
    sol = douglas_solve(Tp, T)
    assert opnorm(sol.D - Tp) <= 1e-14
    assert sol.norm_sq == pytest.approx(opnorm(Tp) ** 2)


def test_V_diag_example(diag_pair):
    v = build_V(*diag_pair)
    assert np.allclose(v.V.mats[0], np.diag([0.5, 0.0]), atol=1e-15)
    assert v.norm_sq == pytest.approx(0.25) and v.alpha_ok and v.adjoint_ok
