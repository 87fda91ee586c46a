from __future__ import annotations

from dataclasses import dataclass, replace

DEFAULT_SEED = 0x5EED


@dataclass(frozen=True)
class ToleranceConfig:
    """Every numerical threshold used by the library, threaded explicitly.

    psd_tol
        Relative eigenvalue slack for positivity: an element passes when its
        smallest eigenvalue is >= -psd_tol * scale.
    rank_rtol
        Singular values below rank_rtol * (operator norm) count as zero.
    sample_count
        Number of random elements drawn by sampling-based evidence.
    rng_seed
        Seed of every random draw.
    sa_tol
        Relative self-adjointness defect accepted before symmetrizing.
    incl_tol
        Relative residual accepted by range-inclusion style decisions.
    """

    psd_tol: float = 1e-9
    rank_rtol: float = 1e-10
    sample_count: int = 100
    rng_seed: int = DEFAULT_SEED
    sa_tol: float = 1e-10
    incl_tol: float = 1e-7

    def __post_init__(self):
        for name in ("psd_tol", "rank_rtol", "sa_tol", "incl_tol"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        if int(self.sample_count) < 1:
            raise ValueError("sample_count must be at least 1")
        if int(self.rng_seed) < 0:
            raise ValueError("rng_seed must be nonnegative")

    def with_(self, **changes) -> "ToleranceConfig":
        return replace(self, **changes)


DEFAULT_TOL = ToleranceConfig()
