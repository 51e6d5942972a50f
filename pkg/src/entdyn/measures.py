"""Entanglement measures of a Schmidt spectrum.

All logarithmic measures default to base 2 (bits). For a spectrum lam sorted
descending:

    renyi(lam, alpha)  = log(sum lam^alpha) / (1 - alpha)   for alpha not in {0, 1}
    von_neumann(lam)   = -sum lam * log lam                 (alpha -> 1 limit)
    min_entropy(lam)   = -log lam[0]                        (alpha -> infinity)
    log_sum_r0(lam)    = -sum log lam                       (alpha -> 0 companion)

The alpha -> 0 companion diverges whenever an eigenvalue vanishes, so it is
evaluated with a floor: eigenvalues below the floor are raised to it and the
sample is flagged. Flagged samples should be excluded from ensemble averages
of that one measure (aggregation in the sweep code does this and reports the
count).

Power sums S_k = sum lam^k feed the inverse participation ratio 1/S_2 and the
shape ratio S_3 / S_2^2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ParameterDomainError

R0_FLOOR = 1e-16
LOG2E = float(np.log2(np.e))


def _as_spectrum(lams) -> np.ndarray:
    lams = np.asarray(lams, dtype=float)
    if lams.ndim != 1 or lams.size == 0:
        raise ParameterDomainError("spectrum must be a nonempty 1-d array")
    return lams


def renyi(lams, alpha: float, base: float = 2.0) -> float:
    """Order-alpha entropy; alpha = 1 and alpha = inf dispatch to their limits."""
    lams = _as_spectrum(lams)
    if alpha == 1.0:
        return von_neumann(lams, base)
    if np.isinf(alpha):
        return min_entropy(lams, base)
    if alpha <= 0.0:
        raise ParameterDomainError(
            "alpha must be positive; use log_sum_r0 for the alpha -> 0 companion"
        )
    s = float(np.sum(lams**alpha))
    return float(np.log(s) / ((1.0 - alpha) * np.log(base)))


def von_neumann(lams, base: float = 2.0) -> float:
    lams = _as_spectrum(lams)
    pos = lams[lams > 0.0]
    return float(-np.sum(pos * np.log(pos)) / np.log(base))


def min_entropy(lams, base: float = 2.0) -> float:
    lams = _as_spectrum(lams)
    return float(-np.log(lams.max()) / np.log(base))


def log_sum_r0(
    lams, floor: float = R0_FLOOR, base: float = 2.0
) -> tuple[float, bool]:
    """alpha -> 0 companion -sum log lam with an underflow floor.

    Returns the value and a flag that is True when any eigenvalue was raised
    to the floor (the value is then a floor-dependent surrogate).
    """
    lams = _as_spectrum(lams)
    if not floor > 0.0:
        raise ParameterDomainError("floor must be positive")
    floored = bool(np.any(lams < floor))
    safe = np.maximum(lams, floor)
    return float(-np.sum(np.log(safe)) / np.log(base)), floored


def power_sums(lams, k_max: int = 3) -> dict[int, float]:
    """Power sums S_k for k = 1 .. k_max."""
    lams = _as_spectrum(lams)
    if k_max < 2:
        raise ParameterDomainError("k_max must be at least 2")
    return {k: float(np.sum(lams**k)) for k in range(1, k_max + 1)}


@dataclass(frozen=True)
class MeasureSet:
    """All measures of one spectrum.

    ``r0`` uses the configured base like everything else; ``r0_nat`` is the
    same quantity in natural log for callers that need it.
    """

    r1: float
    r_alpha: Mapping[float, float]
    r_inf: float
    r0: float
    r0_nat: float
    r0_floored: bool
    s: Mapping[int, float]
    base: float = 2.0

    @property
    def r2(self) -> float:
        return self.r_alpha[2.0]

    @property
    def s2(self) -> float:
        return self.s[2]

    @property
    def s3(self) -> float:
        return self.s[3]

    @property
    def inv_s2(self) -> float:
        return 1.0 / self.s[2]

    @property
    def shape_ratio(self) -> float:
        return self.s[3] / (self.s[2] * self.s[2])


def compute_measures(
    lams, floor: float = R0_FLOOR, base: float = 2.0
) -> MeasureSet:
    """Evaluate the full measure set of one spectrum."""
    lams = _as_spectrum(lams)
    r0, flag = log_sum_r0(lams, floor, base)
    sums = power_sums(lams)
    return MeasureSet(
        r1=von_neumann(lams, base),
        r_alpha={2.0: renyi(lams, 2.0, base)},
        r_inf=min_entropy(lams, base),
        r0=r0,
        r0_nat=r0 * float(np.log(base)),
        r0_floored=flag,
        s=sums,
        base=base,
    )


def batch_measures(spectra: np.ndarray, floor: float = R0_FLOOR) -> dict:
    """Vectorized base-2 measures of a (samples, n) block of spectra.

    Returns arrays keyed r1, r2, rinf, r0, r0_floored, s2, s3.
    """
    lam = np.asarray(spectra, dtype=float)
    if lam.ndim != 2:
        raise ParameterDomainError("expected a 2-d block of spectra")
    pos = np.where(lam > 0.0, lam, 1.0)
    r1 = -np.sum(lam * np.log2(pos), axis=1)
    s2 = np.sum(lam * lam, axis=1)
    s3 = np.sum(lam * lam * lam, axis=1)
    r2 = -np.log2(s2)
    rinf = -np.log2(np.max(lam, axis=1))
    floored = np.any(lam < floor, axis=1)
    safe = np.maximum(lam, floor)
    r0 = -np.sum(np.log2(safe), axis=1)
    return {
        "r1": r1,
        "r2": r2,
        "rinf": rinf,
        "r0": r0,
        "r0_floored": floored,
        "s2": s2,
        "s3": s3,
    }
