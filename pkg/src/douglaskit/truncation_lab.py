"""Finite truncations of the multiplication-operator counterexample.

Over ``E`` infinite dimensional, ``T(x) = s x`` with ``s`` a positive compact
operator of dense range gives ``T' = (TT*)^(1/2)`` whose range sits inside
``R(T)`` while ``T' = TX`` has no adjointable solution: any solution would
force ``X u = u`` for all u, hence ``X*(I) = I``, which is not compact.

At size n everything is solvable.  The sweep below solves the truncated
equation and records how the solution is forced onto the identity; the
column tails of ``a = X*(I)`` never decay, which is the finite signature of
the obstruction.  Nothing here computes the infinite-dimensional statement.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _linalg as la
from .cstar_core import AlgebraElement, functional_calculus, is_positive
from .douglas import douglas_solve, minimal_lambda, range_inclusion
from .errors import NonPositiveError, ShapeMismatchError
from .hilbert_module import (
    AdjointableOperator,
    ModuleElement,
    ModuleShape,
    Submodule,
    adjoint_op,
    check_orthogonally_complemented,
    compose,
    element_norm,
    inner_product,
    module_vector,
    opnorm,
    random_module_element,
    range_submodule,
)
from .tolerance import DEFAULT_TOL, ToleranceConfig

__all__ = [
    "TruncationFamily",
    "MultiplicationPair",
    "Restriction",
    "RestrictionCertificate",
    "ObstructionReport",
    "build_multiplication_pair",
    "proper_inclusion_pair",
    "restriction_S",
    "verify_restriction_solution",
    "obstruction_sweep",
    "tail_mass",
    "sweep_csv",
    "SWEEP_NOTE",
]

SWEEP_NOTE = (
    "Each truncation is solvable; the solution X is forced to act as the identity and "
    "a = X*(I) equals I_n with undecaying column tails. In the infinite-dimensional limit "
    "this would put the identity among the compact operators, which is impossible. "
    "Unsolvability over K(E) is not computed here.")

CSV_COLUMNS = ("row", "family", "seed", "n", "k", "tail_mass", "sv_tail",
               "lambda_star", "forced_identity_residual", "max_tail_mass")


@dataclass(frozen=True)
class TruncationFamily:
    kind: str
    sizes: tuple[int, ...]
    custom: Callable[[np.ndarray], np.ndarray] | Sequence[float] | None = field(
        default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("harmonic", "geometric", "custom"):
            raise ValueError(f"unknown family kind {self.kind!r}")
        sizes = tuple(int(n) for n in self.sizes)
        if not sizes:
            raise ValueError("a truncation family needs at least one size")
        if any(n < 1 for n in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError(f"sizes must be positive and strictly increasing, got {sizes}")
        if self.kind == "custom" and self.custom is None:
            raise ValueError("custom family needs a sigma rule or sequence")
        object.__setattr__(self, "sizes", sizes)

    def sigmas(self, n: int) -> np.ndarray:
        j = np.arange(1, n + 1, dtype=float)
        if self.kind == "harmonic":
            out = 1.0 / j
        elif self.kind == "geometric":
            out = 2.0 ** (1.0 - j)
        elif callable(self.custom):
            out = np.asarray(self.custom(j), dtype=float)
        else:
            seq = np.asarray(self.custom, dtype=float)
            if seq.size < n:
                raise ValueError(f"custom sequence has {seq.size} values, size {n} requested")
            out = seq[:n]
        if out.shape != (n,) or not np.all(out > 0):
            raise ValueError("truncation sigmas must be strictly positive")
        return out

    def element(self, n: int) -> AlgebraElement:
        return AlgebraElement.diag(*self.sigmas(n))


@dataclass(frozen=True)
class MultiplicationPair:
    T: AdjointableOperator
    Tprime: AdjointableOperator
    sqrt_gap: float
    adjoint_gap: float
    verified: bool


def _matrix_module(n: int) -> ModuleShape:
    return ModuleShape.of((n,), (n,))


def build_multiplication_pair(s: AlgebraElement,
                              tol: ToleranceConfig = DEFAULT_TOL) -> MultiplicationPair:
    """``T = left multiplication by s`` on ``M_n`` and ``T' = (TT*)^(1/2)``.

    T' is computed by the functional calculus on the matrix of TT*, then
    compared with T (they agree since s is positive).
    """
    if len(s.shape) != 1:
        raise ShapeMismatchError("s must be a single matrix block")
    if not is_positive(s, tol):
        raise NonPositiveError("s must be positive")
    n = s.shape.block_dims[0]
    mod = _matrix_module(n)
    T = AdjointableOperator(mod, mod, (s.blocks[0],))
    tts = compose(T, adjoint_op(T))
    root = functional_calculus(lambda t: np.sqrt(np.maximum(t, 0.0)),
                               AlgebraElement(s.shape, tts.mats), tol)
    Tp = AdjointableOperator(mod, mod, root.blocks)
    sn = opnorm(T)
    sqrt_gap = opnorm(Tp - T)
    adj_gap = opnorm(adjoint_op(T) - T)
    verified = sqrt_gap <= 1e-10 * max(sn, 1e-300) and adj_gap <= 1e-12 * max(sn, 1.0)
    return MultiplicationPair(T, Tp, sqrt_gap, adj_gap, verified)


def proper_inclusion_pair(s: AlgebraElement, keep: int) -> tuple[AdjointableOperator, AdjointableOperator]:
    """``(T, T o P)`` with P the projection onto the first ``keep`` coordinates,
    so that R(T') is a proper part of R(T) whenever s is invertible."""
    n = s.shape.block_dims[0]
    mod = _matrix_module(n)
    T = AdjointableOperator(mod, mod, (s.blocks[0],))
    P = AdjointableOperator(mod, mod, (np.diag([1.0] * keep + [0.0] * (n - keep)),))
    return T, compose(T, P)


@dataclass(frozen=True)
class Restriction:
    G: Submodule
    S: AdjointableOperator
    injection: AdjointableOperator
    adjoint_residual: float
    range_contained: bool


def restriction_S(T: AdjointableOperator, tol: ToleranceConfig = DEFAULT_TOL) -> Restriction:
    """G = closure of R(T*) and S = T restricted to G.

    G is stored by orthonormal bases, so S lives on the coordinate module of G
    and equals ``T o J`` for the isometric injection J.  Checks
    ``J S* u = T* u`` on sampled u and ``R(S) <= R(T)``.
    """
    G = range_submodule(adjoint_op(T), tol)
    J = G.injection()
    S = compose(T, J)
    rng = np.random.default_rng(tol.rng_seed)
    worst = 0.0
    Ts, JSs = adjoint_op(T), compose(J, adjoint_op(S))
    for _ in range(tol.sample_count):
        u = random_module_element(T.codomain, rng)
        worst = max(worst, element_norm(JSs(u) - Ts(u)) / max(element_norm(u), 1e-300))
    contained = range_inclusion(S, T, tol).holds
    return Restriction(G, S, J, worst, contained)


@dataclass(frozen=True)
class RestrictionCertificate:
    X: AdjointableOperator
    solve_residual: float
    forced_identity_residual: float
    complemented: bool
    adjoint_residual: float

    @property
    def passes(self) -> bool:
        return (self.forced_identity_residual <= 1e-10 and self.complemented
                and self.adjoint_residual <= 1e-12)


def verify_restriction_solution(T: AdjointableOperator,
                                tol: ToleranceConfig = DEFAULT_TOL) -> RestrictionCertificate:
    """Solve ``S = TX`` and confirm the forced identity ``X* z = z`` on G.

    In coordinates of G this reads ``X^H B_i = I`` blockwise, B_i the basis
    of G.  Also certifies that G is orthogonally complemented.
    """
    r = restriction_S(T, tol)
    sol = douglas_solve(r.S, T, tol)
    X = sol.D
    worst = 0.0
    for x, b in zip(X.mats, r.G.bases):
        if b.shape[1]:
            worst = max(worst, la.spectral_norm(x.conj().T @ b - np.eye(b.shape[1])))
    comp = check_orthogonally_complemented(r.G)
    scale = max(opnorm(T), 1.0)
    return RestrictionCertificate(X, sol.residual, worst, comp.holds, r.adjoint_residual / scale)


@dataclass(frozen=True)
class ObstructionReport:
    n: int
    family: str
    sigmas: tuple[float, ...]
    forced_identity_residual: float
    a_element: AlgebraElement
    a_residual: float
    chain_residual: float
    tail_mass: tuple[float, ...]
    sv_tail: tuple[float, ...]
    lambda_star: float
    flags: tuple[str, ...] = ()
    note: str = SWEEP_NOTE

    @property
    def max_tail_mass(self) -> float:
        return max(self.tail_mass)


def tail_mass(a: np.ndarray) -> np.ndarray:
    """``sup_{j >= k} ||a[:, j]||`` for k = 0..n-1 (0-based columns)."""
    cols = np.linalg.norm(a, axis=0)
    return np.maximum.accumulate(cols[::-1])[::-1]


def _test_elements(n: int, rng: np.random.Generator, extra: int) -> list[ModuleElement]:
    mod = _matrix_module(n)
    elems = [module_vector(mod, 0, np.eye(n)[:, j]) for j in range(n)]
    elems.append(ModuleElement(mod, (np.eye(n),)))
    elems += [random_module_element(mod, rng) for _ in range(extra)]
    return elems


def _one_truncation(family: TruncationFamily, n: int, tol: ToleranceConfig) -> ObstructionReport:
    sig = family.sigmas(n)
    s = AlgebraElement.diag(*sig)
    pair = build_multiplication_pair(s, tol)
    T, Tp = pair.T, pair.Tprime
    flags = []
    if not pair.verified:
        flags.append("sqrt-mismatch")
    if range_submodule(T, tol).dims[0] < n:
        flags.append("numerically-singular")

    X = douglas_solve(Tp, T, tol).D
    Xs = adjoint_op(X)
    rng = np.random.default_rng([tol.rng_seed, n])
    elems = _test_elements(n, rng, min(tol.sample_count, 8))

    forced = 0.0
    for u in elems:
        forced = max(forced, element_norm(X(u) - u), element_norm(Xs(u) - u))
    # <Xu, v> against <u, v>: the adjoint identity read through the inner product
    chain = 0.0
    for u in elems[:: max(1, len(elems) // 8)]:
        for v in elems[-3:]:
            lhs = inner_product(X(u), v)
            rhs = inner_product(u, v)
            chain = max(chain, max(la.spectral_norm(p - q) for p, q in zip(lhs.blocks, rhs.blocks)))

    ident = ModuleElement(X.domain, (np.eye(n),))
    a_blk = Xs(ident).blocks[0]
    a = AlgebraElement(s.shape, (a_blk,))
    a_res = la.spectral_norm(a_blk - np.eye(n))
    tails = tail_mass(a_blk)
    sv = np.linalg.svd(a_blk, compute_uv=False)
    lam = minimal_lambda(Tp, T, tol)
    if forced > 1e-10:
        flags.append("forced-identity-broken")
    return ObstructionReport(
        n=n, family=family.kind, sigmas=tuple(float(x) for x in sig),
        forced_identity_residual=float(forced), a_element=a, a_residual=float(a_res),
        chain_residual=float(chain), tail_mass=tuple(float(t) for t in tails),
        sv_tail=tuple(float(x) for x in sv), lambda_star=float(lam), flags=tuple(flags))


def obstruction_sweep(family: TruncationFamily, tol: ToleranceConfig = DEFAULT_TOL,
                      max_workers: int | None = None) -> list[ObstructionReport]:
    """One :class:`ObstructionReport` per size, ordered by n."""
    if max_workers is None or max_workers <= 1:
        return [_one_truncation(family, n, tol) for n in family.sizes]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda n: _one_truncation(family, n, tol), family.sizes))


def sweep_csv(reports: Sequence[ObstructionReport], seed: int) -> str:
    """Render a sweep as CSV text: one ``tail`` row per (n, k), one ``summary`` row per n."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in sorted(reports, key=lambda r: r.n):
        for k, (tm, sv) in enumerate(zip(rep.tail_mass, rep.sv_tail)):
            w.writerow(("tail", rep.family, seed, rep.n, k, repr(tm), repr(sv), "", "", ""))
        w.writerow(("summary", rep.family, seed, rep.n, "", "", "", repr(rep.lambda_star),
                    repr(rep.forced_identity_residual), repr(rep.max_tail_mass)))
    return buf.getvalue()
