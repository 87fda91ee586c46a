"""Verifiers for the positivity, order and square-monotonicity lemmas.

The square-monotonicity statement ("||ac|| <= ||bc|| for every positive c
forces a^2 <= b^2") quantifies over all c and cannot be decided by sampling.
It is handled in two parts: the conclusion ``a^2 <= b^2`` is decided exactly
from a spectrum, and when it fails :func:`lemma_witness` runs the
contrapositive construction and returns an explicit c with ``||ac|| > ||bc||``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from .cstar_core import (
    AlgebraElement,
    State,
    adjoint,
    functional_calculus,
    is_positive,
    multiply,
    norm,
    norm_attaining_state,
    random_positive,
    spectrum,
)
from .errors import HypothesisViolatedError, NonPositiveError, ShapeMismatchError
from .hilbert_module import (
    AdjointableOperator,
    ModuleElement,
    inner_product,
    is_positive_operator,
    module_vector,
    opnorm,
    random_module_element,
)
from .tolerance import DEFAULT_TOL, ToleranceConfig

__all__ = [
    "CutoffFunction",
    "PositivityComparison",
    "OrderConsequences",
    "MonotonicityVerdict",
    "WitnessBundle",
    "check_positivity_characterization",
    "check_order_consequences",
    "square_monotonicity_forward",
    "lemma_witness",
]

# absolute slack on the normalized (norm <= 1) witness inequalities
WITNESS_TOL = 1e-9


@dataclass(frozen=True)
class CutoffFunction:
    """Piecewise-linear f: 0 on (-inf, m/2], ramp ``2t/m - 1``, 1 on [m, inf)."""

    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("cutoff level m must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip(2.0 * t / self.m - 1.0, 0.0, 1.0)


@dataclass(frozen=True)
class PositivityComparison:
    spectral: bool
    quadratic_form: bool
    min_eig: float
    worst_form: float
    witness: ModuleElement | None = field(default=None, compare=False)

    @property
    def agree(self) -> bool:
        return self.spectral == self.quadratic_form


def _square_self_check(T: AdjointableOperator):
    if not T.is_square():
        raise ShapeMismatchError("positivity is only defined for operators on one module")


def _form_defect(T: AdjointableOperator, x: ModuleElement, tol: ToleranceConfig,
                 scale: float) -> tuple[bool, float]:
    """Is <Tx, x> positive with slack measured against ``scale * ||x||^2``?"""
    q = inner_product(T(x), x)
    ref = scale * max(la.spectral_norm(b) for b in inner_product(x, x).blocks)
    res = is_positive(q, tol, scale=ref)
    return res.holds, res.min_eig if res.reason != "not self-adjoint" else -res.sa_defect


def check_positivity_characterization(T: AdjointableOperator,
                                      tol: ToleranceConfig = DEFAULT_TOL) -> PositivityComparison:
    """``T >= 0`` via its spectrum, and via ``<Tx, x> >= 0`` on probes.

    Probes are ``sample_count`` random x, the bottom eigenvector of the
    Hermitian part of every block, and the top eigenvector of the
    skew-Hermitian part (which exposes a non-real form).
    """
    _square_self_check(T)
    scale = opnorm(T)
    spec = is_positive_operator(T, tol, scale=scale)

    probes: list[ModuleElement] = []
    for i, m in enumerate(T.mats):
        if m.size == 0:
            continue
        _, v = la.eigh_sym(m)
        probes.append(module_vector(T.domain, i, v[:, 0]))
        w, v = np.linalg.eigh((m - m.conj().T) / 2j)
        probes.append(module_vector(T.domain, i, v[:, int(np.argmax(np.abs(w)))]))
    rng = np.random.default_rng(tol.rng_seed)
    probes += [random_module_element(T.domain, rng) for _ in range(tol.sample_count)]

    form_ok, worst, witness = True, np.inf, None
    for x in probes:
        ok, val = _form_defect(T, x, tol, scale)
        if val < worst:
            worst = val
        if not ok and form_ok:
            form_ok, witness = False, x
    return PositivityComparison(spec.holds, form_ok, spec.min_eig, float(worst), witness)


@dataclass(frozen=True)
class OrderConsequences:
    norm_x: float
    norm_y: float
    norm_ordered: bool
    congruence_ordered: bool

    @property
    def holds(self) -> bool:
        return self.norm_ordered and self.congruence_ordered


def check_order_consequences(x: AlgebraElement, y: AlgebraElement, z: AlgebraElement,
                             tol: ToleranceConfig = DEFAULT_TOL) -> OrderConsequences:
    """For positive ``x <= y``: ``||x|| <= ||y||`` and ``z*xz <= z*yz``."""
    scale = max(norm(x), norm(y))
    for name, e in (("x", x), ("y", y)):
        if not is_positive(e, tol):
            raise HypothesisViolatedError(f"{name} is not positive")
    if not is_positive(y - x, tol, scale=scale):
        raise HypothesisViolatedError("x <= y does not hold")
    zs = adjoint(z)
    lo, hi = multiply(multiply(zs, x), z), multiply(multiply(zs, y), z)
    cong_scale = norm(z) ** 2 * scale
    nx, ny = norm(x), norm(y)
    return OrderConsequences(
        nx, ny, nx <= ny + 1e-10,
        bool(is_positive(hi - lo, tol, scale=cong_scale)))


def _require_positive(tol: ToleranceConfig, **elements: AlgebraElement):
    for name, e in elements.items():
        if not is_positive(e, tol):
            raise NonPositiveError(f"{name} must be positive")


@dataclass(frozen=True)
class MonotonicityVerdict:
    squares_ordered: bool
    sample_violations: int
    samples: int
    witness_found: bool | None
    consistent: bool


def square_monotonicity_forward(a: AlgebraElement, b: AlgebraElement,
                                tol: ToleranceConfig = DEFAULT_TOL) -> MonotonicityVerdict:
    """Decide ``a^2 <= b^2`` and check it against sampled ``||ac|| <= ||bc||``.

    If the squares are ordered no sampled positive c may violate the norm
    inequality.  If they are not, :func:`lemma_witness` must produce a c that
    does.  ``consistent`` records whether both expectations were met.
    """
    _require_positive(tol, a=a, b=b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{a.shape} vs {b.shape}")
    a2, b2 = multiply(a, a), multiply(b, b)
    ordered = bool(is_positive(b2 - a2, tol, scale=max(norm(a2), norm(b2))))

    rng = np.random.default_rng(tol.rng_seed)
    ab = max(norm(a), norm(b), 1.0)
    violations = 0
    for _ in range(tol.sample_count):
        c = random_positive(a.shape, rng)
        c = c * (1.0 / norm(c))
        if norm(multiply(a, c)) > norm(multiply(b, c)) + WITNESS_TOL * ab:
            violations += 1

    witness_found = None
    if ordered:
        consistent = violations == 0
    else:
        try:
            witness_found = lemma_witness(a, b, tol).verified
        except HypothesisViolatedError:
            witness_found = False
        consistent = witness_found
    return MonotonicityVerdict(ordered, violations, tol.sample_count, witness_found, consistent)


@dataclass(frozen=True)
class WitnessBundle:
    """Every intermediate of the contrapositive construction, for audit.

    ``a`` and ``b`` are the normalized inputs (``scale`` times the originals).
    """

    a: AlgebraElement
    b: AlgebraElement
    c: AlgebraElement
    m: float
    rho: State | None
    lhs_norm: float
    rhs_norm: float
    scale: float
    chain: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.lhs_norm - self.rhs_norm

    @property
    def verified(self) -> bool:
        return all(v for k, v in self.chain.items() if k.endswith("_ok"))


def lemma_witness(a: AlgebraElement, b: AlgebraElement,
                  tol: ToleranceConfig = DEFAULT_TOL) -> WitnessBundle:
    """Build a positive c with ``||ac|| > ||bc||`` when ``a^2 <= b^2`` fails.

    Steps, on inputs rescaled to norm <= 1:

    1. m = max sp(a^2 - b^2) > 0 and c = f(a^2 - b^2) for the cutoff f,
       with ``||c (a^2 - b^2) c|| = m``;
    2. ``c (a^2 - b^2) c - (m/2) c^2 >= 0``;
    3. at a state rho attaining ``||c b^2 c||``:
       ``rho(c a^2 c) >= rho(c b^2 c) + (m/2) rho(c^2)``; if ``c b^2 c = 0``
       instead ``||c a^2 c|| > 0``.

    Raises HypothesisViolatedError when ``a^2 <= b^2`` (no witness exists).
    """
    _require_positive(tol, a=a, b=b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{a.shape} vs {b.shape}")
    s = 1.0 / max(norm(a), norm(b), 1.0)
    a, b = a * s, b * s
    a2, b2 = multiply(a, a), multiply(b, b)
    d = a2 - b2
    if is_positive(-d, tol, scale=max(norm(a2), norm(b2))):
        raise HypothesisViolatedError("a^2 <= b^2 holds; no witness exists")
    m = spectrum(d, tol).max

    f = CutoffFunction(m)
    c = functional_calculus(f, d, tol)
    cdc = multiply(multiply(c, d), c)
    step1 = abs(norm(cdc) - m)

    c2 = multiply(c, c)
    step2 = is_positive(cdc - c2 * (m / 2), tol, scale=1.0)

    ca2c = multiply(multiply(c, a2), c)
    cb2c = multiply(multiply(c, b2), c)
    if norm(cb2c) > WITNESS_TOL:
        rho = norm_attaining_state(cb2c, tol)
        margin3 = rho.real(ca2c) - rho.real(cb2c) - (m / 2) * rho.real(c2)
        branch = "state"
    else:
        rho = None
        margin3 = norm(ca2c)
        branch = "cb2c-zero"

    lhs, rhs = norm(multiply(a, c)), norm(multiply(b, c))
    chain = {
        "branch": branch,
        "norm_cdc_minus_m": step1,
        "cdc_minus_half_m_c2_min_eig": step2.min_eig,
        "state_margin": float(margin3),
        "step1_ok": step1 <= WITNESS_TOL,
        "step2_ok": bool(step2),
        "step3_ok": bool(margin3 >= -WITNESS_TOL) if branch == "state" else bool(margin3 > WITNESS_TOL),
        "strict_gap_ok": lhs - rhs >= WITNESS_TOL,
    }
    return WitnessBundle(a, b, c, float(m), rho, float(lhs), float(rhs), s, chain)
