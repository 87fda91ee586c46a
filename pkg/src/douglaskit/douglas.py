"""Majorization, range inclusion and the reduced solution of ``T' = TX``.

For ``T in L(E, K)`` and ``T' in L(H, K)`` the four conditions

    (i)   T'T'* <= lam TT* for some lam > 0
    (ii)  ||T'* z|| <= mu ||T* z|| for all z in K
    (iii) T' = TX has an adjointable solution X
    (iv)  R(T') is contained in R(T)

coincide on the finite-dimensional modules of :mod:`hilbert_module`.  Each
one is decided below by its own computation so that :func:`theorem_report`
can use them as mutual oracles:

* (i) projects T' onto the range of T taken from an SVD of T,
* (ii) builds the map ``V = T'* (T*)^+`` from an SVD of T* and the kernel of T*,
* (iii) actually solves with the pseudoinverse and measures the residual,
* (iv) compares orthonormal bases of both ranges.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from .errors import CrossCheckError, NoSolutionError, NotMajorizedError, ShapeMismatchError
from .hilbert_module import (
    AdjointableOperator,
    Containment,
    ModuleElement,
    adjoint_op,
    compose,
    element_norm,
    is_positive_operator,
    module_vector,
    null_submodule,
    opnorm,
    random_module_element,
    range_submodule,
    submodule_contains,
)
from .tolerance import DEFAULT_TOL, ToleranceConfig

log = logging.getLogger(__name__)

__all__ = [
    "ToleranceConfig",
    "MajorizationCheck",
    "NormMajorizationCheck",
    "DouglasSolution",
    "VConstruction",
    "MajorizationReport",
    "LoewnerNormComparison",
    "check_majorization",
    "minimal_lambda",
    "lambda_bisection",
    "is_majorized_at",
    "check_norm_majorization",
    "range_inclusion",
    "douglas_solve",
    "is_reduced_solution",
    "build_V",
    "theorem_report",
    "compare_loewner_and_norms",
]

# relative agreement demanded between the independent routes to lambda*
LAMBDA_AGREEMENT = 1e-8
LAMBDA_AGREEMENT_MARGINAL = 1e-6
# relative step used to sandwich lambda* between a PSD and a non-PSD pencil
SANDWICH_STEP = 1e-6


def _check_codomain(Tp: AdjointableOperator, T: AdjointableOperator):
    if Tp.codomain != T.codomain:
        raise ShapeMismatchError(
            f"T' maps into {Tp.codomain.row_dims}, T maps into {T.codomain.row_dims}")


@dataclass(frozen=True)
class MajorizationCheck:
    holds: bool
    lambda_star: float
    leak: float
    witness: ModuleElement | None = field(default=None, compare=False)
    marginal: bool = False

    def __bool__(self):
        return self.holds


@dataclass(frozen=True)
class NormMajorizationCheck:
    holds: bool
    mu_star: float
    witness: ModuleElement | None = field(default=None, compare=False)
    sampled_max_ratio: float = 0.0
    sample_violations: int = 0
    maximizer_ratio: float = 0.0
    samples_ok: bool = True
    marginal: bool = False
    maximizer: ModuleElement | None = field(default=None, compare=False)

    def __bool__(self):
        return self.holds


@dataclass(frozen=True)
class DouglasSolution:
    D: AdjointableOperator
    residual: float
    reduced: bool
    reduced_defect: float
    norm_sq: float
    lambda_star: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class VConstruction:
    V: AdjointableOperator
    identity_residual: float
    kernel_residual: float
    norm_sq: float
    lambda_star: float
    alpha_ok: bool
    adjoint_gap: float
    adjoint_ok: bool
    note: str = ("V* exists at finite dimension and equals the reduced solution D; "
                 "over infinite-dimensional modules V need not be adjointable")


@dataclass(frozen=True)
class MajorizationReport:
    holds_i: bool
    lambda_star: float
    holds_ii: bool
    mu_star: float
    holds_iii: bool
    holds_iv: bool
    witness: ModuleElement | None
    consistency: bool
    flags: tuple[str, ...] = ()
    solution: DouglasSolution | None = field(default=None, compare=False)

    @property
    def holds(self) -> dict[str, bool]:
        return {"i": self.holds_i, "ii": self.holds_ii, "iii": self.holds_iii, "iv": self.holds_iv}


def _range_leak(Tp: AdjointableOperator, T: AdjointableOperator, tol: ToleranceConfig):
    """Per block: kept left singular vectors of T, kept singular values, and
    the part of T' outside span(U)."""
    cutoff = tol.rank_rtol * opnorm(T)
    out = []
    for tp, t in zip(Tp.mats, T.mats):
        if t.size == 0:
            u, s = np.zeros((t.shape[0], 0), dtype=complex), np.zeros(0)
        else:
            u, s, _ = np.linalg.svd(t, full_matrices=False)
        keep = s > cutoff
        u_r, s_r = u[:, keep], s[keep]
        out.append((u_r, s_r, s, tp - u_r @ (u_r.conj().T @ tp)))
    return out


def _kernel_witness(Tp: AdjointableOperator, T: AdjointableOperator,
                    tol: ToleranceConfig) -> tuple[ModuleElement, float]:
    """Unit z with T*z ~ 0 maximizing ||T'* z||: the obstruction to (i)/(ii)."""
    best, block, vec = -1.0, 0, None
    for i, (_, _, _, res) in enumerate(_range_leak(Tp, T, tol)):
        if res.size == 0:
            continue
        u, s, _ = np.linalg.svd(res, full_matrices=False)
        if s[0] > best:
            best, block, vec = float(s[0]), i, u[:, 0]
    return module_vector(T.codomain, block, vec), best


def _t_marginal(T: AdjointableOperator, tol: ToleranceConfig) -> bool:
    return range_submodule(T, tol).marginal


def check_majorization(Tp: AdjointableOperator, T: AdjointableOperator,
                       tol: ToleranceConfig = DEFAULT_TOL) -> MajorizationCheck:
    """Condition (i): is ``T'T'* <= lam TT*`` for some finite lam?

    With ``T = U S W*`` restricted to its numerical range, such a lam exists
    iff T' has no component outside span(U), and then the least one is
    ``||S^-1 U* T'||^2``.
    """
    _check_codomain(Tp, T)
    scale = opnorm(Tp)
    marginal = _t_marginal(T, tol)
    if scale == 0.0:
        return MajorizationCheck(True, 0.0, 0.0, marginal=marginal)
    parts = _range_leak(Tp, T, tol)
    leak = max(la.spectral_norm(res) for *_, res in parts) / scale
    marginal = marginal or la.is_marginal(leak, tol.incl_tol)
    if leak > tol.incl_tol:
        z, _ = _kernel_witness(Tp, T, tol)
        return MajorizationCheck(False, math.inf, leak, z, marginal)
    lam = 0.0
    for (u_r, s_r, _, _), tp in zip(parts, Tp.mats):
        if s_r.size:
            lam = max(lam, la.spectral_norm((u_r.conj().T @ tp) / s_r[:, None]) ** 2)
    return MajorizationCheck(True, lam, leak, marginal=marginal)


def is_majorized_at(Tp: AdjointableOperator, T: AdjointableOperator, lam: float,
                    tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """Is ``lam TT* - T'T'*`` positive, up to eigensolver rounding only?

    Deliberately avoids the psd_tol slack: the threshold is the backward
    error of the eigensolver, so that lam* can be pinned to ~1e-12.
    """
    _check_codomain(Tp, T)
    b = [t @ t.conj().T for t in T.mats]
    c = [tp @ tp.conj().T for tp in Tp.mats]
    scale = lam * max(la.spectral_norm(m) for m in b) + max(la.spectral_norm(m) for m in c)
    for bi, ci in zip(b, c):
        if bi.size == 0:
            continue
        w = np.linalg.eigvalsh(la.hermitian_part(lam * bi - ci))
        if w[0] < -la.numerical_floor(bi.shape[0], scale):
            return False
    return True


def lambda_bisection(Tp: AdjointableOperator, T: AdjointableOperator,
                     tol: ToleranceConfig = DEFAULT_TOL, rtol: float = 1e-13,
                     max_doublings: int = 200) -> float:
    """Least lam with ``T'T'* <= lam TT*`` by bisection on a PSD test.

    Oracle for :func:`minimal_lambda`; shares no code with the SVD routes.
    """
    _check_codomain(Tp, T)
    if opnorm(Tp) == 0.0:
        return 0.0
    hi = 1.0
    for _ in range(max_doublings):
        if is_majorized_at(Tp, T, hi, tol):
            break
        hi *= 2.0
    else:
        raise NotMajorizedError("no admissible lambda found by doubling")
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if is_majorized_at(Tp, T, mid, tol):
            hi = mid
        else:
            lo = mid
    return hi


def _pinv_mats(T: AdjointableOperator, tol: ToleranceConfig) -> list[np.ndarray]:
    cutoff = tol.rank_rtol * opnorm(T)
    return [la.pinv(m, cutoff) for m in T.mats]


def _reduced_mats(Tp: AdjointableOperator, T: AdjointableOperator,
                  tol: ToleranceConfig) -> list[np.ndarray]:
    return [tpinv @ tp for tpinv, tp in zip(_pinv_mats(T, tol), Tp.mats)]


def minimal_lambda(Tp: AdjointableOperator, T: AdjointableOperator,
                   tol: ToleranceConfig = DEFAULT_TOL, cross_check: bool = True) -> float:
    """lam* = inf{lam : T'T'* <= lam TT*}, computed as ||D||^2 for the
    reduced solution D = T^+ T'.

    With ``cross_check`` the pencil is tested at lam*(1 +- 1e-6): positive
    above, not positive below.  The lower test is skipped when the deficit it
    has to detect sits below eigensolver rounding (ill-conditioned T).
    """
    chk = check_majorization(Tp, T, tol)
    if not chk.holds:
        raise NotMajorizedError("T'T'* is not majorized by any multiple of TT*", chk.witness)
    D = AdjointableOperator(Tp.domain, T.domain, tuple(_reduced_mats(Tp, T, tol)))
    lam = opnorm(D) ** 2
    if cross_check and lam > 0.0:
        if not is_majorized_at(Tp, T, lam * (1 + SANDWICH_STEP), tol):
            raise CrossCheckError(f"pencil not positive just above lambda*={lam:.17g}")
        if _lower_sandwich_resolvable(Tp, T, lam, tol) and \
                is_majorized_at(Tp, T, lam * (1 - SANDWICH_STEP), tol):
            raise CrossCheckError(f"pencil still positive just below lambda*={lam:.17g}")
    return lam


def _lower_sandwich_resolvable(Tp, T, lam, tol) -> bool:
    nm = check_norm_majorization(Tp, T, tol.with_(sample_count=1))
    z = nm.maximizer
    if z is None:
        return False
    tz = element_norm(adjoint_op(T)(z))
    deficit = SANDWICH_STEP * lam * tz ** 2
    scale = lam * opnorm(T) ** 2 + opnorm(Tp) ** 2
    dim = max(T.codomain.row_dims)
    return deficit > 10.0 * la.numerical_floor(dim, scale)


def _v_mats(Tp: AdjointableOperator, T: AdjointableOperator, tol: ToleranceConfig):
    cutoff = tol.rank_rtol * opnorm(T)
    return [tp.conj().T @ la.pinv(t.conj().T, cutoff) for tp, t in zip(Tp.mats, T.mats)]


def _ratio(Tp, T, z) -> float:
    den = element_norm(adjoint_op(T)(z))
    num = element_norm(adjoint_op(Tp)(z))
    return num / den if den > 0 else (math.inf if num > 0 else 0.0)


def check_norm_majorization(Tp: AdjointableOperator, T: AdjointableOperator,
                            tol: ToleranceConfig = DEFAULT_TOL) -> NormMajorizationCheck:
    """Condition (ii): is there mu with ``||T'* z|| <= mu ||T* z||`` for all z?

    Decided exactly: mu exists iff T'* kills the kernel of T*, and then the
    best mu is ``||T'* (T*)^+||``.  Random z (plus the ratio maximizer) are
    evaluated as evidence; they never decide the answer.
    """
    _check_codomain(Tp, T)
    scale_p = opnorm(Tp)
    cutoff = tol.rank_rtol * opnorm(T)
    leak = 0.0
    for tp, t in zip(Tp.mats, T.mats):
        kernel = la.null_basis(t.conj().T, cutoff)
        if kernel.size and tp.size:
            leak = max(leak, la.spectral_norm(tp.conj().T @ kernel))
    rel = leak / scale_p if scale_p > 0 else 0.0
    marginal = _t_marginal(T, tol) or la.is_marginal(rel, tol.incl_tol)
    if rel > tol.incl_tol:
        z, _ = _kernel_witness(Tp, T, tol)
        return NormMajorizationCheck(False, math.inf, z, marginal=marginal)

    v = _v_mats(Tp, T, tol)
    mu = max(la.spectral_norm(m) for m in v)
    zmax = None
    if mu > 0:
        best, block = -1.0, 0
        for i, m in enumerate(v):
            if m.size and la.spectral_norm(m) > best:
                best, block = la.spectral_norm(m), i
        _, _, wh = np.linalg.svd(v[block])
        w = wh[0].conj()
        zvec = la.pinv(T.mats[block].conj().T, cutoff) @ w
        zmax = module_vector(T.codomain, block, zvec / np.linalg.norm(zvec))

    rng = np.random.default_rng(tol.rng_seed)
    Ts, Tps = adjoint_op(T), adjoint_op(Tp)
    violations, sup = 0, 0.0
    samples = [random_module_element(T.codomain, rng) for _ in range(tol.sample_count)]
    for z in samples + ([zmax] if zmax is not None else []):
        num, den = element_norm(Tps(z)), element_norm(Ts(z))
        if num > mu * den + 1e-9 * max(1.0, scale_p) * element_norm(z):
            violations += 1
        if den > 0:
            sup = max(sup, num / den)
    max_ratio = _ratio(Tp, T, zmax) if zmax is not None else 0.0
    samples_ok = violations == 0 and (mu == 0 or sup >= 0.99 * mu)
    return NormMajorizationCheck(True, mu, None, sup, violations, max_ratio, samples_ok,
                                 marginal, zmax)


def range_inclusion(Tp: AdjointableOperator, T: AdjointableOperator,
                    tol: ToleranceConfig = DEFAULT_TOL) -> Containment:
    """Condition (iv): ``R(T') <= R(T)``; the witness is a basis column of R(T')."""
    _check_codomain(Tp, T)
    return submodule_contains(range_submodule(T, tol), range_submodule(Tp, tol), tol)


def is_reduced_solution(Tp: AdjointableOperator, T: AdjointableOperator, X: AdjointableOperator,
                        tol: ToleranceConfig = DEFAULT_TOL) -> tuple[bool, bool]:
    """``(T' = TX, R(X) <= N(T)-perp)`` for a candidate X, each within 1e-10 scaled."""
    residual = opnorm(compose(T, X) - Tp)
    solves = residual <= 1e-10 * (1.0 + opnorm(T) * opnorm(X)) + tol.incl_tol * opnorm(Tp)
    p_null = null_submodule(T, tol).projector()
    reduced = opnorm(compose(p_null, X)) <= 1e-10 * max(1.0, opnorm(X))
    return solves, reduced


def douglas_solve(Tp: AdjointableOperator, T: AdjointableOperator,
                  tol: ToleranceConfig = DEFAULT_TOL) -> DouglasSolution:
    """Condition (iii): the unique reduced solution D of ``T' = TD``.

    D is ``T^+ T'`` blockwise.  It is accepted when ``||TD - T'||`` is within
    incl_tol of ``||T'||``; otherwise :class:`NoSolutionError` is raised with
    the range-inclusion witness attached.
    """
    _check_codomain(Tp, T)
    D = AdjointableOperator(Tp.domain, T.domain, tuple(_reduced_mats(Tp, T, tol)))
    residual = opnorm(compose(T, D) - Tp)
    scale_p = opnorm(Tp)
    if residual > tol.incl_tol * scale_p:
        inc = range_inclusion(Tp, T, tol)
        raise NoSolutionError(
            f"T' = TX has no solution (residual {residual:.3e})",
            witness=inc.witness_element(T.codomain), residual=residual)
    p_null = null_submodule(T, tol).projector()
    d_norm = opnorm(D)
    defect = opnorm(compose(p_null, D))
    reduced = defect <= 1e-10 * max(1.0, d_norm)
    chk = check_majorization(Tp, T, tol)
    flags = []
    if chk.marginal:
        flags.append("rank-marginal")
    if residual > 1e-10 * (1.0 + opnorm(T) * d_norm):
        flags.append("residual-marginal")
    return DouglasSolution(D, residual, reduced, defect, d_norm ** 2, chk.lambda_star, tuple(flags))


def build_V(Tp: AdjointableOperator, T: AdjointableOperator,
            tol: ToleranceConfig = DEFAULT_TOL) -> VConstruction:
    """The map V: E -> H with ``V(T* z) = T'* z`` and ``V = 0`` on N(T).

    Checks ``V T* = T'*``, ``||V||^2 = lam*`` and ``V* = D``.
    """
    chk = check_majorization(Tp, T, tol)
    if not chk.holds:
        raise NotMajorizedError("V is only defined when T' is majorized by T", chk.witness)
    V = AdjointableOperator(T.domain, Tp.domain, tuple(_v_mats(Tp, T, tol)))
    v_norm = opnorm(V)
    ident = opnorm(compose(V, adjoint_op(T)) - adjoint_op(Tp))
    kern = opnorm(compose(V, null_submodule(T, tol).projector()))
    lam = chk.lambda_star
    alpha_ok = abs(v_norm ** 2 - lam) <= LAMBDA_AGREEMENT * max(1.0, lam)
    D = AdjointableOperator(Tp.domain, T.domain, tuple(_reduced_mats(Tp, T, tol)))
    gap = opnorm(adjoint_op(V) - D)
    return VConstruction(V, ident, kern, v_norm ** 2, lam, alpha_ok, gap,
                         gap <= 1e-9 * max(1.0, opnorm(D)))


def theorem_report(Tp: AdjointableOperator, T: AdjointableOperator,
                   tol: ToleranceConfig = DEFAULT_TOL) -> MajorizationReport:
    """Evaluate (i)-(iv) independently and cross-check them.

    Consistency requires the four verdicts to agree and, when they hold,
    ``mu*^2 = lam* = ||D||^2`` to 1e-8 relative.  If a rank decision was
    marginal the agreement is relaxed to 1e-6, and a larger gap raises
    :class:`CrossCheckError`.
    """
    _check_codomain(Tp, T)
    c1 = check_majorization(Tp, T, tol)
    c2 = check_norm_majorization(Tp, T, tol)
    c4 = range_inclusion(Tp, T, tol)
    try:
        sol = douglas_solve(Tp, T, tol)
        c3 = True
    except NoSolutionError:
        sol, c3 = None, False

    flags = set()
    marginal = c1.marginal or c2.marginal or c4.marginal
    if marginal:
        flags.add("rank-marginal")
    if sol is not None:
        flags.update(sol.flags)
    if c2.holds and not c2.samples_ok:
        flags.add("sampling-anomaly")

    verdicts = (c1.holds, c2.holds, c3, c4.holds)
    consistent = len(set(verdicts)) == 1
    if consistent and c1.holds:
        lam = c1.lambda_star
        limit = (LAMBDA_AGREEMENT_MARGINAL if marginal else LAMBDA_AGREEMENT) * max(1.0, lam)
        gaps = (abs(c2.mu_star ** 2 - lam), abs(sol.norm_sq - lam))
        if max(gaps) > limit:
            if marginal:
                raise CrossCheckError(f"lambda* routes disagree by {max(gaps):.3e} near a rank cutoff")
            consistent = False
        consistent = consistent and sol.reduced and c2.samples_ok
    if not consistent:
        flags.add("inconsistent")
        log.warning("conditions disagree: i=%s ii=%s iii=%s iv=%s", *verdicts)

    return MajorizationReport(
        holds_i=c1.holds, lambda_star=c1.lambda_star,
        holds_ii=c2.holds, mu_star=c2.mu_star,
        holds_iii=c3, holds_iv=c4.holds,
        witness=c1.witness if not c1.holds else None,
        consistency=consistent, flags=tuple(sorted(flags)), solution=sol)


@dataclass(frozen=True)
class LoewnerNormComparison:
    loewner: bool
    norms: bool
    top_ratio: float
    violations: int

    @property
    def agree(self) -> bool:
        return self.loewner == self.norms


def compare_loewner_and_norms(A: AdjointableOperator, B: AdjointableOperator,
                              tol: ToleranceConfig = DEFAULT_TOL) -> LoewnerNormComparison:
    """Both sides of ``AA* <= BB*  <=>  ||A* z|| <= ||B* z|| for all z``.

    The left side is an eigenvalue test of ``BB* - AA*``; the right side is
    evaluated on ``sample_count`` random z plus the ratio-maximizing z (or a
    kernel witness when R(A) is not inside R(B)).  Both use psd_tol against
    the same scale ``max(||A||, ||B||)^2``.
    """
    _check_codomain(A, B)
    scale = max(opnorm(A), opnorm(B)) ** 2
    gram = compose(B, adjoint_op(B)) - compose(A, adjoint_op(A))
    loewner = bool(is_positive_operator(gram, tol, scale=scale))

    nm = check_norm_majorization(A, B, tol)
    if nm.holds:
        probe, top = nm.maximizer, nm.mu_star
    else:
        probe, top = nm.witness, math.inf
    rng = np.random.default_rng(tol.rng_seed)
    zs = [random_module_element(B.codomain, rng) for _ in range(tol.sample_count)]
    if probe is not None:
        zs.append(probe)
    As, Bs = adjoint_op(A), adjoint_op(B)
    violations = 0
    for z in zs:
        lhs = element_norm(As(z)) ** 2
        rhs = element_norm(Bs(z)) ** 2
        if lhs > rhs + tol.psd_tol * scale * element_norm(z) ** 2:
            violations += 1
    return LoewnerNormComparison(loewner, violations == 0, top, violations)
