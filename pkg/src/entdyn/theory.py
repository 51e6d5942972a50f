"""Semi-empirical growth laws for the average entropies.

The predictions consume measured ensemble quantities (deep-regime R0 and
1/S2 averages, the conditional-trace slope g'(1)) and evaluate the
large-N growth laws: an exponential approach for R1 and a power-law
onset plus saturation plateau for R2. Everything here is deterministic
arithmetic on those inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complexity import GAMMA_DEFAULT
from .errors import ParameterDomainError

ALPHA_DEFAULT = 0.5


@dataclass(frozen=True)
class TheoryInputs:
    """Measured quantities feeding the growth-law predictions.

    nu is the spectral exponent of the eigenvalue density; a square
    coefficient matrix has nu = -1/2, and the effective dimension
    n_nu = n - 2 nu - 1 then equals n. The slope g'(1) of the
    trace-conditioned mean entropy must be positive for R1 and negative
    for R2; both signs are checked here because every downstream formula
    divides by them.
    """

    n: int
    nu: float
    beta: int
    r0_bar: float
    inv_s2_bar: float
    g1_slope_r1: float
    g1_slope_r2: float
    gamma: float = GAMMA_DEFAULT
    alpha_exp: float = ALPHA_DEFAULT
    n_nu: float = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ParameterDomainError("n must be at least 2")
        if self.beta not in (1, 2):
            raise ParameterDomainError("beta must be 1 or 2")
        n_nu = self.n - 2.0 * self.nu - 1.0
        if n_nu <= 0:
            raise ParameterDomainError(f"n_nu = {n_nu} must be positive")
        if self.r0_bar <= 0 or self.inv_s2_bar <= 0:
            raise ParameterDomainError("r0_bar and inv_s2_bar must be positive")
        if self.g1_slope_r1 <= 0:
            raise ParameterDomainError(
                f"g'(1) for R1 must be positive, got {self.g1_slope_r1}"
            )
        if self.g1_slope_r2 >= 0:
            raise ParameterDomainError(
                f"g'(1) for R2 must be negative, got {self.g1_slope_r2}"
            )
        if self.alpha_exp <= 0:
            raise ParameterDomainError("alpha_exp must be positive")
        object.__setattr__(self, "n_nu", float(n_nu))

    @classmethod
    def from_nu0(cls, n: int, nu0: int, **kw) -> "TheoryInputs":
        """Inputs for a coefficient matrix with nu0 extra columns."""
        return cls(n=n, nu=-(nu0 + 1) / 2.0, **kw)


@dataclass(frozen=True)
class PredictedCurve:
    """One measure's predicted growth along a grid.

    value is the curve written to CSV; small_y and saturation are the
    two analytic branches, and valid_small marks grid points where the
    onset branch still sits below the plateau.
    """

    measure: str
    y: np.ndarray
    value: np.ndarray
    small_y: np.ndarray
    saturation: float
    rate: float | None
    valid_small: np.ndarray


def _check_grid(y_grid, y0: float) -> np.ndarray:
    y = np.asarray(y_grid, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ParameterDomainError("y_grid must be a nonempty 1-d array")
    if np.any(y < y0):
        raise ParameterDomainError("grid points must not precede the origin y0")
    return y


def predict_r1(inputs: TheoryInputs, y_grid, y0: float = 0.0) -> PredictedCurve:
    """Exponential-approach prediction for the mean von Neumann entropy.

    Saturation r0_bar / (n g'(1)), approach rate beta n n_nu g'(1) / 2,
    and the small-Y linearization beta n_nu r0_bar (Y - Y0) / 2.
    """
    y = _check_grid(y_grid, y0)
    sat = inputs.r0_bar / (inputs.n * inputs.g1_slope_r1)
    rate = 0.5 * inputs.beta * inputs.n * inputs.n_nu * inputs.g1_slope_r1
    dy = y - y0
    value = sat * -np.expm1(-rate * dy)
    small = 0.5 * inputs.beta * inputs.n_nu * inputs.r0_bar * dy
    return PredictedCurve("R1", y, value, small, sat, rate, small < sat)


def predict_r2(inputs: TheoryInputs, y_grid, y0: float = 0.0) -> PredictedCurve:
    """Power-law onset and plateau for the mean collision entropy.

    Onset (Y - Y0)^alpha / (|g'(1)| n_nu), plateau
    inv_s2_bar / (2 |g'(1)| n_nu); the reported curve takes whichever
    branch is lower, which keeps it nondecreasing and concave past the
    rise.
    """
    y = _check_grid(y_grid, y0)
    slope_mag = abs(inputs.g1_slope_r2)
    sat = inputs.inv_s2_bar / (2.0 * slope_mag * inputs.n_nu)
    small = (y - y0) ** inputs.alpha_exp / (slope_mag * inputs.n_nu)
    value = np.minimum(small, sat)
    return PredictedCurve("R2", y, value, small, sat, None, small < sat)


def estimate_alpha(
    y, r2_values, y0: float = 0.0, onset_fraction: float = 0.25
) -> tuple[float, float]:
    """Log-log onset exponent of a measured R2 growth curve.

    Uses the grid points where the curve is still below onset_fraction of
    its maximum; returns the slope and its standard error.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(r2_values, dtype=float)
    mask = (y > y0) & (v > 0) & (v < onset_fraction * v.max())
    if np.count_nonzero(mask) < 3:
        raise ParameterDomainError(
            "too few onset points below the cutoff to estimate an exponent"
        )
    lx = np.log(y[mask] - y0)
    lv = np.log(v[mask])
    slope, intercept = np.polyfit(lx, lv, 1)
    resid = lv - (slope * lx + intercept)
    dof = lx.size - 2
    sxx = np.sum((lx - lx.mean()) ** 2)
    se = float(np.sqrt(np.sum(resid**2) / max(dof, 1) / sxx))
    return float(slope), se


def theory_rows(
    inputs: TheoryInputs,
    r1: PredictedCurve,
    r2: PredictedCurve,
    protocol: str = "EB",
    param: float = float("nan"),
) -> tuple[str, list[list]]:
    """Prediction curves in the sweep CSV schema plus a source column."""
    if not np.array_equal(r1.y, r2.y):
        raise ParameterDomainError("R1 and R2 predictions must share a grid")
    header = (
        "protocol,param,Y,N,beta,n,R1,R1_se,R2,R2_se,R0,R0_se,"
        "invS2,invS2_se,S3S22,S3S22_se,n_floored,source"
    )
    rows = []
    for i in range(r1.y.size):
        rows.append(
            [
                protocol,
                param,
                float(r1.y[i]),
                inputs.n,
                inputs.beta,
                0,
                float(r1.value[i]),
                0.0,
                float(r2.value[i]),
                0.0,
                inputs.r0_bar,
                0.0,
                inputs.inv_s2_bar,
                0.0,
                float("nan"),
                0.0,
                0,
                "theory",
            ]
        )
    return header, rows
