"""Finite-dimensional C*-algebras presented as direct sums of matrix blocks.

An element of ``M_{n1} + ... + M_{nk}`` is stored as a tuple of complex
square blocks.  Everything here is immutable: blocks are read-only arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _linalg as la
from .errors import NotSelfAdjointError, ShapeMismatchError, ZeroElementError
from .tolerance import DEFAULT_TOL, ToleranceConfig

__all__ = [
    "AlgebraShape",
    "AlgebraElement",
    "Spectrum",
    "State",
    "PositivityResult",
    "multiply",
    "adjoint",
    "norm",
    "is_positive",
    "spectrum",
    "functional_calculus",
    "norm_attaining_state",
    "random_element",
    "random_positive",
]


@dataclass(frozen=True)
class AlgebraShape:
    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        if not dims:
            raise ValueError("an algebra needs at least one block")
        if any(n < 1 for n in dims):
            raise ValueError(f"block dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "block_dims", dims)

    def __len__(self) -> int:
        return len(self.block_dims)

    @property
    def total_dim(self) -> int:
        return sum(self.block_dims)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    shape: AlgebraShape
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        shape = self.shape
        if not isinstance(shape, AlgebraShape):
            shape = AlgebraShape(tuple(shape))
            object.__setattr__(self, "shape", shape)
        if len(self.blocks) != len(shape):
            raise ShapeMismatchError(
                f"{len(self.blocks)} blocks for an algebra with {len(shape)} blocks")
        blocks = []
        for n, b in zip(shape.block_dims, self.blocks):
            b = la.as_matrix(b)
            if b.shape != (n, n):
                raise ShapeMismatchError(f"block of shape {b.shape}, expected {(n, n)}")
            blocks.append(la.frozen(b))
        object.__setattr__(self, "blocks", tuple(blocks))

    @classmethod
    def from_blocks(cls, blocks: Sequence) -> "AlgebraElement":
        mats = [la.as_matrix(b) for b in blocks]
        return cls(AlgebraShape(tuple(m.shape[0] for m in mats)), tuple(mats))

    @classmethod
    def diag(cls, *values) -> "AlgebraElement":
        """Single-block diagonal element."""
        return cls.from_blocks([np.diag(np.asarray(values, dtype=complex))])

    @classmethod
    def identity(cls, shape: AlgebraShape | Sequence[int]) -> "AlgebraElement":
        shape = shape if isinstance(shape, AlgebraShape) else AlgebraShape(tuple(shape))
        return cls(shape, tuple(np.eye(n) for n in shape.block_dims))

    @classmethod
    def zero(cls, shape: AlgebraShape | Sequence[int]) -> "AlgebraElement":
        shape = shape if isinstance(shape, AlgebraShape) else AlgebraShape(tuple(shape))
        return cls(shape, tuple(np.zeros((n, n)) for n in shape.block_dims))

    def _check(self, other: "AlgebraElement"):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if other.shape != self.shape:
            raise ShapeMismatchError(f"{self.shape} vs {other.shape}")
        return None

    def __add__(self, other):
        if (r := self._check(other)) is NotImplemented:
            return r
        return AlgebraElement(self.shape, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        if (r := self._check(other)) is NotImplemented:
            return r
        return AlgebraElement(self.shape, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return AlgebraElement(self.shape, tuple(-a for a in self.blocks))

    def __mul__(self, scalar):
        if isinstance(scalar, AlgebraElement):
            return NotImplemented
        return AlgebraElement(self.shape, tuple(scalar * a for a in self.blocks))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return multiply(self, other)

    @property
    def H(self) -> "AlgebraElement":
        return adjoint(self)

    def norm(self) -> float:
        return norm(self)

    def allclose(self, other: "AlgebraElement", atol: float = 1e-12) -> bool:
        self._check(other)
        return all(la.spectral_norm(a - b) <= atol for a, b in zip(self.blocks, other.blocks))

    def __repr__(self):
        return f"AlgebraElement(shape={self.shape.block_dims}, norm={norm(self):.6g})"


@dataclass(frozen=True)
class Spectrum:
    values: tuple[float, ...]

    @property
    def max(self) -> float:
        return max(self.values)

    @property
    def min(self) -> float:
        return min(self.values)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class State:
    """Vector state ``x -> <v, x_k v>`` supported on block ``k``."""

    shape: AlgebraShape
    block_index: int
    unit_vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.unit_vector, dtype=complex).reshape(-1)
        n = self.shape.block_dims[self.block_index]
        if v.shape != (n,):
            raise ShapeMismatchError(f"state vector of length {v.size}, block has size {n}")
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("state vector must have unit norm")
        object.__setattr__(self, "unit_vector", la.frozen(v[:, None])[:, 0])

    def __call__(self, x: AlgebraElement) -> complex:
        if x.shape != self.shape:
            raise ShapeMismatchError(f"{x.shape} vs {self.shape}")
        v = self.unit_vector
        return complex(v.conj() @ x.blocks[self.block_index] @ v)

    def real(self, x: AlgebraElement) -> float:
        return self(x).real


@dataclass(frozen=True)
class PositivityResult:
    holds: bool
    min_eig: float
    sa_defect: float
    scale: float
    witness: np.ndarray | None = field(default=None, compare=False)
    witness_block: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.holds


def _same_shape(x: AlgebraElement, y: AlgebraElement):
    if x.shape != y.shape:
        raise ShapeMismatchError(f"{x.shape} vs {y.shape}")


def multiply(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    _same_shape(x, y)
    return AlgebraElement(x.shape, tuple(a @ b for a, b in zip(x.blocks, y.blocks)))


def adjoint(x: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(x.shape, tuple(a.conj().T for a in x.blocks))


def norm(x: AlgebraElement) -> float:
    """C*-norm: the largest singular value over all blocks."""
    return max(la.spectral_norm(b) for b in x.blocks)


def psd_blocks(blocks: Sequence[np.ndarray], tol: ToleranceConfig,
               scale: float | None = None) -> PositivityResult:
    """Positivity test shared by algebra elements and module operators.

    ``scale`` is the reference magnitude the relative tolerances multiply;
    it defaults to the largest block norm.
    """
    if scale is None:
        scale = max((la.spectral_norm(b) for b in blocks), default=0.0)
    worst_sa, worst_sa_block = 0.0, None
    for i, b in enumerate(blocks):
        d = la.hermitian_defect(b)
        if d > worst_sa:
            worst_sa, worst_sa_block = d, i
    min_eig, wit, wit_block = np.inf, None, None
    for i, b in enumerate(blocks):
        if b.size == 0:
            continue
        w, v = la.eigh_sym(b)
        if w[0] < min_eig:
            min_eig, wit, wit_block = float(w[0]), v[:, 0], i
    if min_eig == np.inf:
        min_eig = 0.0
    if worst_sa > tol.sa_tol * scale:
        # direction along which the quadratic form leaves the real axis
        b = blocks[worst_sa_block]
        w, v = np.linalg.eigh((b - b.conj().T) / 2j)
        k = int(np.argmax(np.abs(w)))
        return PositivityResult(False, min_eig, worst_sa, scale, v[:, k], worst_sa_block,
                                "not self-adjoint")
    if min_eig < -tol.psd_tol * scale:
        return PositivityResult(False, min_eig, worst_sa, scale, wit, wit_block,
                                "negative eigenvalue")
    return PositivityResult(True, min_eig, worst_sa, scale)


def is_positive(x: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOL,
                scale: float | None = None) -> PositivityResult:
    """Decide ``x >= 0``.

    On failure the result carries a unit vector ``v`` in block
    ``witness_block`` with ``v* x v < -psd_tol * scale``, or the direction of
    the self-adjointness defect.
    """
    return psd_blocks(x.blocks, tol, scale)


def _symmetrized_blocks(x: AlgebraElement, tol: ToleranceConfig) -> list[np.ndarray]:
    scale = norm(x)
    out = []
    for b in x.blocks:
        d = la.hermitian_defect(b)
        if d > tol.sa_tol * max(scale, np.finfo(float).tiny):
            raise NotSelfAdjointError(f"self-adjointness defect {d:.3e} exceeds tolerance")
        out.append(la.hermitian_part(b))
    return out


def spectrum(x: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOL) -> Spectrum:
    vals = np.concatenate([np.linalg.eigvalsh(b) for b in _symmetrized_blocks(x, tol)])
    return Spectrum(tuple(float(t) for t in np.sort(vals)))


def _apply_scalar_fn(f: Callable, t: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(f(t), dtype=float)
        if out.shape == t.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(f(float(s))) for s in t])


def functional_calculus(f: Callable, x: AlgebraElement,
                        tol: ToleranceConfig = DEFAULT_TOL) -> AlgebraElement:
    """``U f(L) U*`` blockwise for self-adjoint ``x = U L U*``."""
    out = []
    for b in _symmetrized_blocks(x, tol):
        w, u = np.linalg.eigh(b)
        out.append((u * _apply_scalar_fn(f, w)) @ u.conj().T)
    return AlgebraElement(x.shape, tuple(out))


def norm_attaining_state(x: AlgebraElement, tol: ToleranceConfig = DEFAULT_TOL) -> State:
    """Vector state at a top eigenvector, so rho(x) is the largest eigenvalue."""
    blocks = _symmetrized_blocks(x, tol)
    if norm(x) == 0.0:
        raise ZeroElementError("no norm-attaining state is singled out for x = 0")
    best, best_block, best_vec = -np.inf, 0, None
    for i, b in enumerate(blocks):
        w, v = np.linalg.eigh(b)
        if w[-1] > best:
            best, best_block, best_vec = w[-1], i, v[:, -1]
    return State(x.shape, best_block, best_vec / np.linalg.norm(best_vec))


def random_element(shape: AlgebraShape, rng: np.random.Generator) -> AlgebraElement:
    return AlgebraElement(shape, tuple(
        rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        for n in shape.block_dims))


def random_positive(shape: AlgebraShape, rng: np.random.Generator,
                    rank: int | None = None) -> AlgebraElement:
    """``w* w`` for a random ``w``; ``rank`` caps the rank of every block."""
    blocks = []
    for n in shape.block_dims:
        r = n if rank is None else min(rank, n)
        w = rng.standard_normal((r, n)) + 1j * rng.standard_normal((r, n))
        blocks.append(w.conj().T @ w)
    return AlgebraElement(shape, tuple(blocks))
