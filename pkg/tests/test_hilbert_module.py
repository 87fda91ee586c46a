import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from douglaskit.cstar_core import AlgebraElement, is_positive, norm
from douglaskit.errors import ShapeMismatchError
from douglaskit.hilbert_module import (
    AdjointableOperator,
    ModuleElement,
    ModuleShape,
    Submodule,
    adjoint_op,
    apply,
    check_orthogonally_complemented,
    compose,
    element_norm,
    inner_product,
    is_positive_operator,
    module_vector,
    null_submodule,
    opnorm,
    orthogonal_complement,
    random_module_element,
    random_operator,
    range_submodule,
    submodule_contains,
)
from douglaskit.tolerance import DEFAULT_TOL

SH = ModuleShape.of([2, 1], [3, 2])


def test_shape_checks():
    with pytest.raises(ShapeMismatchError):
        ModuleShape.of([2], [3, 1])
    with pytest.raises(ShapeMismatchError):
        ModuleElement(SH, (np.zeros((3, 2)),))
    with pytest.raises(ShapeMismatchError):
        AdjointableOperator(SH, SH, (np.eye(3), np.eye(3)))


class TestInnerProduct:
    @pytest.fixture
    def xyz(self):
        rng = np.random.default_rng(10)
        return [random_module_element(SH, rng) for _ in range(3)], rng

    def test_linear_in_second(self, xyz):
        (x, y, z), _ = xyz
        lhs = inner_product(x, y * 2.0 + z)
        assert lhs.allclose(inner_product(x, y) * 2.0 + inner_product(x, z), atol=1e-12)

    def test_right_module_action(self, xyz):
        (x, y, _), rng = xyz
        a = AlgebraElement.from_blocks([rng.standard_normal((2, 2)), [[1.5j]]])
        assert inner_product(x, y * a).allclose(inner_product(x, y) @ a, atol=1e-12)

    def test_hermitian(self, xyz):
        (x, y, _), _ = xyz
        assert inner_product(y, x).allclose(inner_product(x, y).H, atol=1e-12)

    def test_positive_and_definite(self, xyz):
        (x, _, _), _ = xyz
        assert is_positive(inner_product(x, x))
        z = ModuleElement.zero(SH)
        assert norm(inner_product(z, z)) == 0

    def test_norm_of_column_block(self):
        m = [[1, 0], [1, 0]]
        x = ModuleElement(ModuleShape.of([2], [2]), (np.array(m, float),))
        assert element_norm(x) == pytest.approx(oracles.singular_values_via_gram(m)[0])
        assert element_norm(x) == pytest.approx(math.sqrt(2))

    def test_shape_mismatch(self):
        other = ModuleShape.of([2, 1], [1, 2])
        with pytest.raises(ShapeMismatchError):
            inner_product(ModuleElement.zero(SH), ModuleElement.zero(other))


class TestOperators:
    def test_adjoint_identity(self):
        rng = np.random.default_rng(11)
        K = ModuleShape.of([2, 1], [4, 1])
        T = random_operator(SH, K, rng)
        x, y = random_module_element(SH, rng), random_module_element(K, rng)
        assert inner_product(apply(T, x), y).allclose(inner_product(x, apply(adjoint_op(T), y)),
                                                      atol=1e-10)

    def test_compose_order(self):
        rng = np.random.default_rng(12)
        K = ModuleShape.of([2, 1], [1, 3])
        T, S = random_operator(SH, K, rng), random_operator(K, SH, rng)
        x = random_module_element(SH, rng)
        assert apply(compose(S, T), x).allclose(apply(S, apply(T, x)), atol=1e-10)
        with pytest.raises(ShapeMismatchError):
            compose(T, T)

    def test_module_map(self):
        rng = np.random.default_rng(13)
        T = random_operator(SH, SH, rng)
        x = random_module_element(SH, rng)
        a = AlgebraElement.from_blocks([rng.standard_normal((2, 2)), [[2.0]]])
        assert apply(T, x * a).allclose(apply(T, x) * a, atol=1e-10)

    def test_opnorm_blocks(self):
        T = AdjointableOperator.from_mats([1, 1], [[[3.0]], [[0, 2], [0, 0]]])
        assert opnorm(T) == pytest.approx(3.0)

    def test_opnorm_bounds_elements(self):
        rng = np.random.default_rng(14)
        T = random_operator(SH, SH, rng)
        for _ in range(20):
            x = random_module_element(SH, rng)
            assert element_norm(apply(T, x)) <= opnorm(T) * element_norm(x) * (1 + 1e-12)

    def test_positive_operator(self):
        T = AdjointableOperator.from_mats([1], [[[2, 1], [1, 1]]])
        assert is_positive_operator(T)
        assert not is_positive_operator(AdjointableOperator.from_mats([1], [np.diag([1, -1])]))
        with pytest.raises(ShapeMismatchError):
            is_positive_operator(AdjointableOperator.from_mats([1], [np.ones((2, 3))]))


class TestSubmodules:
    def test_range_basis(self):
        T = AdjointableOperator.from_mats([1], [[[1, 0], [1, 0]]])
        R = range_submodule(T)
        want = oracles.gram_schmidt([[1, 0], [1, 0]])
        assert R.dims == (1,)
        assert abs(abs(np.vdot(want[:, 0], R.bases[0][:, 0])) - 1) < 1e-14

    def test_null_basis(self):
        T = AdjointableOperator.from_mats([1], [[[1, 0], [1, 0]]])
        N = null_submodule(T)
        assert N.dims == (1,)
        assert np.allclose(np.abs(N.bases[0][:, 0]), [0, 1])

    def test_rank_nullity(self):
        rng = np.random.default_rng(15)
        K = ModuleShape.of([2, 1], [4, 4])
        T = random_operator(SH, K, rng, rank=1)
        R, N = range_submodule(T), null_submodule(T)
        assert R.dims == (1, 1)
        assert tuple(r + k for r, k in zip(R.dims, N.dims)) == SH.row_dims

    def test_global_cutoff(self):
        # a block that is tiny relative to the operator norm is dropped
        T = AdjointableOperator.from_mats([1, 1], [[[1.0]], [[1e-12]]])
        assert range_submodule(T).dims == (1, 0)

    def test_marginal_flag(self):
        T = AdjointableOperator.from_mats([1], [np.diag([1.0, 5e-10])])
        assert range_submodule(T).marginal
        assert not range_submodule(AdjointableOperator.from_mats([1], [np.diag([1.0, 0.5])])).marginal

    def test_projector(self):
        rng = np.random.default_rng(16)
        T = random_operator(SH, SH, rng, rank=1)
        P = range_submodule(T).projector()
        assert compose(P, P).mats[0] == pytest.approx(P.mats[0], abs=1e-12)
        assert adjoint_op(P).mats[1] == pytest.approx(P.mats[1], abs=1e-12)
        assert compose(P, T).mats[0] == pytest.approx(T.mats[0], abs=1e-10)

    def test_injection_isometric(self):
        rng = np.random.default_rng(17)
        F = range_submodule(random_operator(SH, SH, rng, rank=1))
        J = F.injection()
        x = random_module_element(J.domain, rng)
        assert inner_product(J(x), J(x)).allclose(inner_product(x, x), atol=1e-12)

    def test_complement(self):
        rng = np.random.default_rng(18)
        F = range_submodule(random_operator(SH, SH, rng, rank=1))
        C = orthogonal_complement(F)
        assert C.dims == (2, 1)
        cert = check_orthogonally_complemented(F)
        assert cert and cert.max_overlap < 1e-14

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            Submodule(ModuleShape.of([1], [2]), (np.array([[1.0], [1.0]]),))

    def test_contains_element(self):
        F = Submodule(ModuleShape.of([1], [2]), (np.array([[1.0], [0.0]]),))
        assert F.contains_element(module_vector(F.ambient, 0, [3, 0]))
        assert not F.contains_element(module_vector(F.ambient, 0, [0, 1]))

    def test_containment_and_witness(self):
        amb = ModuleShape.of([1, 1], [3, 2])
        F = Submodule(amb, (np.eye(3)[:, :2], np.eye(2)))
        G = Submodule(amb, (np.eye(3)[:, 2:], np.eye(2)[:, :1]))
        c = submodule_contains(F, G)
        assert not c and c.residual == pytest.approx(1.0)
        w = c.witness_element(amb)
        assert np.allclose(np.abs(w.blocks[0][:, 0]), [0, 0, 1])
        assert submodule_contains(F, Submodule.zero(amb))
        assert submodule_contains(Submodule.full(amb), F)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(0, 3))
def test_range_and_kernel_of_adjoint_are_complements(seed, rank):
    rng = np.random.default_rng(seed)
    K = ModuleShape.of([2, 1], [4, 3])
    T = random_operator(SH, K, rng, rank=rank)
    R, Nstar = range_submodule(T, DEFAULT_TOL), null_submodule(adjoint_op(T), DEFAULT_TOL)
    assert tuple(a + b for a, b in zip(R.dims, Nstar.dims)) == K.row_dims
    for r, n in zip(R.bases, Nstar.bases):
        if r.size and n.size:
            assert np.linalg.norm(r.conj().T @ n) < 1e-10
