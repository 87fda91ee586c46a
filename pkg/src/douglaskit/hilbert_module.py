"""Hilbert modules ``E = M_{p1 x n1} + ... + M_{pk x nk}`` over a block algebra.

The inner product is ``<x, y> = x* y`` blockwise, and every adjointable map
between two such modules acts by left multiplication with one ``q_i x p_i``
matrix per block.  Submodules closed under the right action are exactly the
sets ``{x : columns of x_i lie in W_i}`` and are stored by orthonormal
bases of the ``W_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _linalg as la
from .cstar_core import AlgebraElement, AlgebraShape, PositivityResult, norm, psd_blocks
from .errors import ShapeMismatchError
from .tolerance import DEFAULT_TOL, ToleranceConfig

__all__ = [
    "ModuleShape",
    "ModuleElement",
    "AdjointableOperator",
    "Submodule",
    "Containment",
    "ComplementCertificate",
    "inner_product",
    "element_norm",
    "apply",
    "adjoint_op",
    "compose",
    "opnorm",
    "range_submodule",
    "null_submodule",
    "orthogonal_complement",
    "check_orthogonally_complemented",
    "submodule_contains",
    "is_positive_operator",
    "module_vector",
    "random_module_element",
    "random_operator",
]


@dataclass(frozen=True)
class ModuleShape:
    algebra: AlgebraShape
    row_dims: tuple[int, ...]

    def __post_init__(self):
        alg = self.algebra
        if not isinstance(alg, AlgebraShape):
            alg = AlgebraShape(tuple(alg))
            object.__setattr__(self, "algebra", alg)
        rows = tuple(int(p) for p in self.row_dims)
        if len(rows) != len(alg):
            raise ShapeMismatchError(
                f"{len(rows)} row dims for an algebra with {len(alg)} blocks")
        if any(p < 0 for p in rows):
            raise ValueError(f"row dims must be nonnegative, got {rows}")
        object.__setattr__(self, "row_dims", rows)

    @classmethod
    def of(cls, algebra: Sequence[int], rows: Sequence[int]) -> "ModuleShape":
        return cls(AlgebraShape(tuple(algebra)), tuple(rows))

    def block_shapes(self) -> list[tuple[int, int]]:
        return list(zip(self.row_dims, self.algebra.block_dims))


@dataclass(frozen=True, eq=False)
class ModuleElement:
    shape: ModuleShape
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        shapes = self.shape.block_shapes()
        if len(self.blocks) != len(shapes):
            raise ShapeMismatchError(f"{len(self.blocks)} blocks, expected {len(shapes)}")
        blocks = []
        for (p, n), b in zip(shapes, self.blocks):
            b = la.as_matrix(b, p, n)
            if b.shape != (p, n):
                raise ShapeMismatchError(f"block of shape {b.shape}, expected {(p, n)}")
            blocks.append(la.frozen(b))
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def zero(cls, shape: ModuleShape) -> "ModuleElement":
        return cls(shape, tuple(np.zeros(s) for s in shape.block_shapes()))

    def _check(self, other):
        if not isinstance(other, ModuleElement):
            return NotImplemented
        if other.shape != self.shape:
            raise ShapeMismatchError(f"{self.shape} vs {other.shape}")
        return None

    def __add__(self, other):
        if (r := self._check(other)) is NotImplemented:
            return r
        return ModuleElement(self.shape, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        if (r := self._check(other)) is NotImplemented:
            return r
        return ModuleElement(self.shape, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return ModuleElement(self.shape, tuple(-a for a in self.blocks))

    def __mul__(self, other):
        """Right action by an algebra element, or scalar multiplication."""
        if isinstance(other, AlgebraElement):
            if other.shape != self.shape.algebra:
                raise ShapeMismatchError(f"{other.shape} vs {self.shape.algebra}")
            return ModuleElement(self.shape, tuple(x @ a for x, a in zip(self.blocks, other.blocks)))
        return ModuleElement(self.shape, tuple(other * x for x in self.blocks))

    def __rmul__(self, scalar):
        return ModuleElement(self.shape, tuple(scalar * x for x in self.blocks))

    def norm(self) -> float:
        return element_norm(self)

    def allclose(self, other: "ModuleElement", atol: float = 1e-12) -> bool:
        self._check(other)
        return all(la.spectral_norm(a - b) <= atol for a, b in zip(self.blocks, other.blocks))


@dataclass(frozen=True, eq=False)
class AdjointableOperator:
    domain: ModuleShape
    codomain: ModuleShape
    mats: tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.domain.algebra != self.codomain.algebra:
            raise ShapeMismatchError("domain and codomain live over different algebras")
        if len(self.mats) != len(self.domain.row_dims):
            raise ShapeMismatchError(
                f"{len(self.mats)} matrices for {len(self.domain.row_dims)} blocks")
        mats = []
        for p, q, m in zip(self.domain.row_dims, self.codomain.row_dims, self.mats):
            m = la.as_matrix(m, q, p)
            if m.shape != (q, p):
                raise ShapeMismatchError(f"matrix of shape {m.shape}, expected {(q, p)}")
            mats.append(la.frozen(m))
        object.__setattr__(self, "mats", tuple(mats))

    @classmethod
    def from_mats(cls, algebra: Sequence[int], mats: Sequence) -> "AdjointableOperator":
        mats = [la.as_matrix(m) for m in mats]
        dom = ModuleShape.of(algebra, [m.shape[1] for m in mats])
        cod = ModuleShape.of(algebra, [m.shape[0] for m in mats])
        return cls(dom, cod, tuple(mats))

    @classmethod
    def identity(cls, shape: ModuleShape) -> "AdjointableOperator":
        return cls(shape, shape, tuple(np.eye(p) for p in shape.row_dims))

    @classmethod
    def zero(cls, domain: ModuleShape, codomain: ModuleShape) -> "AdjointableOperator":
        return cls(domain, codomain,
                   tuple(np.zeros((q, p)) for p, q in zip(domain.row_dims, codomain.row_dims)))

    def __call__(self, x: ModuleElement) -> ModuleElement:
        return apply(self, x)

    def __matmul__(self, other):
        if isinstance(other, AdjointableOperator):
            return compose(self, other)
        if isinstance(other, ModuleElement):
            return apply(self, other)
        return NotImplemented

    def _same(self, other):
        if not isinstance(other, AdjointableOperator):
            return NotImplemented
        if other.domain != self.domain or other.codomain != self.codomain:
            raise ShapeMismatchError("operators act between different modules")
        return None

    def __add__(self, other):
        if (r := self._same(other)) is NotImplemented:
            return r
        return AdjointableOperator(self.domain, self.codomain,
                                   tuple(a + b for a, b in zip(self.mats, other.mats)))

    def __sub__(self, other):
        if (r := self._same(other)) is NotImplemented:
            return r
        return AdjointableOperator(self.domain, self.codomain,
                                   tuple(a - b for a, b in zip(self.mats, other.mats)))

    def __mul__(self, scalar):
        if isinstance(scalar, (AdjointableOperator, ModuleElement)):
            return NotImplemented
        return AdjointableOperator(self.domain, self.codomain, tuple(scalar * m for m in self.mats))

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    @property
    def H(self) -> "AdjointableOperator":
        return adjoint_op(self)

    def norm(self) -> float:
        return opnorm(self)

    def is_square(self) -> bool:
        return self.domain == self.codomain


@dataclass(frozen=True, eq=False)
class Submodule:
    """``{x in ambient : every column of x_i lies in span(bases[i])}``."""

    ambient: ModuleShape
    bases: tuple[np.ndarray, ...]
    marginal: bool = False

    def __post_init__(self):
        if len(self.bases) != len(self.ambient.row_dims):
            raise ShapeMismatchError(f"{len(self.bases)} bases for {len(self.ambient.row_dims)} blocks")
        bases = []
        for q, b in zip(self.ambient.row_dims, self.bases):
            b = np.asarray(b, dtype=complex)
            if b.ndim != 2 and b.size == 0:
                b = np.zeros((q, 0), dtype=complex)
            if b.ndim != 2 or b.shape[0] != q:
                raise ShapeMismatchError(f"basis of shape {b.shape} in C^{q}")
            gram_err = la.spectral_norm(b.conj().T @ b - np.eye(b.shape[1]))
            if gram_err > 1e-12 * max(1, b.shape[1]):
                raise ValueError(f"basis columns are not orthonormal (defect {gram_err:.2e})")
            bases.append(la.frozen(b))
        object.__setattr__(self, "bases", tuple(bases))

    @classmethod
    def full(cls, ambient: ModuleShape) -> "Submodule":
        return cls(ambient, tuple(np.eye(q) for q in ambient.row_dims))

    @classmethod
    def zero(cls, ambient: ModuleShape) -> "Submodule":
        return cls(ambient, tuple(np.zeros((q, 0)) for q in ambient.row_dims))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(b.shape[1] for b in self.bases)

    def projector_mats(self) -> list[np.ndarray]:
        return [la.projector(b) for b in self.bases]

    def projector(self) -> AdjointableOperator:
        """Orthogonal projection of the ambient module onto this submodule."""
        return AdjointableOperator(self.ambient, self.ambient, tuple(self.projector_mats()))

    def injection(self) -> AdjointableOperator:
        """Isometric embedding of the coordinate module ``M_{r_i x n_i}``."""
        coord = ModuleShape(self.ambient.algebra, self.dims)
        return AdjointableOperator(coord, self.ambient, self.bases)

    def contains_element(self, x: ModuleElement, atol: float = 1e-10) -> bool:
        if x.shape != self.ambient:
            raise ShapeMismatchError("element is not in the ambient module")
        return all(la.spectral_norm(xb - la.projector(b) @ xb) <= atol * max(1.0, la.spectral_norm(xb))
                   for xb, b in zip(x.blocks, self.bases))


@dataclass(frozen=True)
class Containment:
    holds: bool
    residual: float
    witness_block: int | None = None
    witness_column: np.ndarray | None = field(default=None, compare=False)
    marginal: bool = False

    def __bool__(self) -> bool:
        return self.holds

    def witness_element(self, ambient: ModuleShape) -> ModuleElement | None:
        if self.witness_block is None:
            return None
        return module_vector(ambient, self.witness_block, self.witness_column)


@dataclass(frozen=True)
class ComplementCertificate:
    holds: bool
    dims: tuple[int, ...]
    complement_dims: tuple[int, ...]
    ambient_dims: tuple[int, ...]
    max_overlap: float
    note: str = ("finite-dimensional submodules are always orthogonally complemented; "
                 "in infinite dimension closed submodules can fail this")

    def __bool__(self) -> bool:
        return self.holds


def inner_product(x: ModuleElement, y: ModuleElement) -> AlgebraElement:
    if x.shape != y.shape:
        raise ShapeMismatchError(f"{x.shape} vs {y.shape}")
    return AlgebraElement(x.shape.algebra, tuple(a.conj().T @ b for a, b in zip(x.blocks, y.blocks)))


def element_norm(x: ModuleElement) -> float:
    """``sqrt(||<x, x>||)``, equal to the largest singular value over blocks."""
    return float(np.sqrt(norm(inner_product(x, x))))


def apply(T: AdjointableOperator, x: ModuleElement) -> ModuleElement:
    if x.shape != T.domain:
        raise ShapeMismatchError(f"element of {x.shape} outside domain {T.domain}")
    return ModuleElement(T.codomain, tuple(m @ b for m, b in zip(T.mats, x.blocks)))


def adjoint_op(T: AdjointableOperator) -> AdjointableOperator:
    return AdjointableOperator(T.codomain, T.domain, tuple(m.conj().T for m in T.mats))


def compose(S: AdjointableOperator, T: AdjointableOperator) -> AdjointableOperator:
    """``S o T``."""
    if T.codomain != S.domain:
        raise ShapeMismatchError("cannot compose: codomain of T is not the domain of S")
    return AdjointableOperator(T.domain, S.codomain, tuple(s @ t for s, t in zip(S.mats, T.mats)))


def opnorm(T: AdjointableOperator) -> float:
    return max(la.spectral_norm(m) for m in T.mats)


def _rank_cutoff(T: AdjointableOperator, tol: ToleranceConfig) -> tuple[float, float]:
    scale = opnorm(T)
    return scale, tol.rank_rtol * scale


def _any_marginal(svals: Sequence[np.ndarray], scale: float, tol: ToleranceConfig) -> bool:
    if scale == 0.0:
        return False
    return any(la.is_marginal(s / scale, tol.rank_rtol) for sv in svals for s in sv)


def range_submodule(T: AdjointableOperator, tol: ToleranceConfig = DEFAULT_TOL) -> Submodule:
    scale, cutoff = _rank_cutoff(T, tol)
    bases, svals = [], []
    for m in T.mats:
        b, s = la.column_basis(m, cutoff)
        bases.append(b)
        svals.append(s)
    return Submodule(T.codomain, tuple(bases), marginal=_any_marginal(svals, scale, tol))


def null_submodule(T: AdjointableOperator, tol: ToleranceConfig = DEFAULT_TOL) -> Submodule:
    scale, cutoff = _rank_cutoff(T, tol)
    bases = [la.null_basis(m, cutoff) for m in T.mats]
    svals = [np.linalg.svd(m, compute_uv=False) if m.size else np.zeros(0) for m in T.mats]
    return Submodule(T.domain, tuple(bases), marginal=_any_marginal(svals, scale, tol))


def orthogonal_complement(F: Submodule) -> Submodule:
    return Submodule(F.ambient, tuple(la.complement_basis(b) for b in F.bases), marginal=F.marginal)


def check_orthogonally_complemented(F: Submodule) -> ComplementCertificate:
    """Constructively verify ``E = F + F-perp`` blockwise.

    Checks the dimension count and that ``W_i`` meets its complement only in
    zero (largest cosine between the two bases).
    """
    comp = orthogonal_complement(F)
    overlap = 0.0
    for b, c in zip(F.bases, comp.bases):
        if b.shape[1] and c.shape[1]:
            overlap = max(overlap, la.spectral_norm(b.conj().T @ c))
    ok = all(r + s == q for r, s, q in zip(F.dims, comp.dims, F.ambient.row_dims))
    ok = ok and overlap <= 1e-10
    return ComplementCertificate(ok, F.dims, comp.dims, F.ambient.row_dims, overlap)


def submodule_contains(F: Submodule, G: Submodule,
                       tol: ToleranceConfig = DEFAULT_TOL) -> Containment:
    """Decide ``G <= F`` by projecting G's basis columns onto F.

    The witness is the basis column of G with the largest residual.
    """
    if F.ambient != G.ambient:
        raise ShapeMismatchError("submodules live in different ambient modules")
    worst, wblock, wcol = 0.0, None, None
    for i, (bf, bg) in enumerate(zip(F.bases, G.bases)):
        if bg.shape[1] == 0:
            continue
        res = bg - bf @ (bf.conj().T @ bg)
        col_norms = np.linalg.norm(res, axis=0)
        j = int(np.argmax(col_norms))
        if col_norms[j] > worst or wblock is None:
            worst, wblock, wcol = float(col_norms[j]), i, bg[:, j]
    holds = worst <= tol.incl_tol
    marginal = F.marginal or G.marginal or la.is_marginal(worst, tol.incl_tol)
    if holds:
        return Containment(True, worst, marginal=marginal)
    return Containment(False, worst, wblock, wcol.copy(), marginal=marginal)


def is_positive_operator(T: AdjointableOperator, tol: ToleranceConfig = DEFAULT_TOL,
                         scale: float | None = None) -> PositivityResult:
    """Positivity of a square operator, i.e. positivity of every matrix block."""
    if not T.is_square():
        raise ShapeMismatchError("positivity is only defined for operators on one module")
    return psd_blocks(T.mats, tol, scale)


def module_vector(shape: ModuleShape, block: int, vec: np.ndarray, column: int = 0) -> ModuleElement:
    """Module element whose only nonzero entry is ``vec`` in one column of one block."""
    blocks = [np.zeros(s, dtype=complex) for s in shape.block_shapes()]
    blocks[block][:, column] = np.asarray(vec, dtype=complex).reshape(-1)
    return ModuleElement(shape, tuple(blocks))


def random_module_element(shape: ModuleShape, rng: np.random.Generator) -> ModuleElement:
    return ModuleElement(shape, tuple(
        rng.standard_normal(s) + 1j * rng.standard_normal(s) for s in shape.block_shapes()))


def random_operator(domain: ModuleShape, codomain: ModuleShape, rng: np.random.Generator,
                    rank: int | None = None) -> AdjointableOperator:
    mats = []
    for p, q in zip(domain.row_dims, codomain.row_dims):
        r = min(p, q) if rank is None else min(rank, p, q)
        a = rng.standard_normal((q, r)) + 1j * rng.standard_normal((q, r))
        b = rng.standard_normal((r, p)) + 1j * rng.standard_normal((r, p))
        mats.append(a @ b)
    return AdjointableOperator(domain, codomain, tuple(mats))
