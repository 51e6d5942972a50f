"""Single rescaled evolution parameter for multi-parametric Gaussian ensembles.

An ensemble with per-component variances h and means b evolves, under the
diffusion that drives it toward the ergodic endpoint, along a single effective
coordinate

    Y = -(1 / (2 M gamma)) * sum' [ ln|1 - 2 gamma h[k,l,s]| + ln|b[k,l,s]|^2 ]

where the primed sum runs over the variance terms of every column except the
first and over the nonzero mean components, while M counts all variance terms
(first column included) plus the nonzero mean components. Dropping the
first-column variance terms from the sum fixes the arbitrary additive constant
so that the separable limit sits at Y = 0; their contribution is reported
separately as ``y0`` for callers that want the unanchored value ``y + y0``.

With this convention Y is zero in the separable limit and grows toward the
ergodic endpoint, diverging as any variance approaches the singular value
1 / (2 gamma). All named protocols have closed forms, evaluated with log1p to
keep precision near the separable end.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .ensembles import VarianceProfile, _need, build_profile
from .errors import (
    DegenerateProfileError,
    ParameterDomainError,
    SingularParameterError,
)

GAMMA_DEFAULT = 0.25


@dataclass(frozen=True)
class ComplexityValue:
    """Evolution coordinate of one ensemble.

    ``y`` is anchored so the separable limit gives 0 and ``y0`` records that
    reference origin. ``dropped_offset`` is the first-column contribution that
    the anchoring removed from the sum; ``y + dropped_offset`` recovers the
    unanchored value. ``m_count`` is the parameter count M entering the
    normalization.
    """

    y: float
    y0: float
    m_count: int
    gamma: float
    dropped_offset: float = 0.0


def _check_gamma(gamma: float) -> None:
    if not np.isfinite(gamma) or gamma <= 0:
        raise ParameterDomainError("gamma must be positive")


def _log_abs_one_minus(z: np.ndarray) -> np.ndarray:
    """Elementwise ln|1 - z|, accurate for small z."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 1.0
    out[small] = np.log1p(-z[small])
    out[~small] = np.log(np.abs(1.0 - z[~small]))
    return out


def _raise_if_singular(z: np.ndarray, gamma: float) -> None:
    if np.any(1.0 - z == 0.0):
        raise SingularParameterError(
            f"variance exactly equal to 1/(2*gamma) = {1.0 / (2.0 * gamma)!r}; "
            "the evolution coordinate diverges there"
        )


def complexity_general(
    profile: VarianceProfile, gamma: float = GAMMA_DEFAULT
) -> ComplexityValue:
    """Evaluate the evolution coordinate of an arbitrary profile."""
    _check_gamma(gamma)
    z = 2.0 * gamma * profile.h
    _raise_if_singular(z, gamma)
    logs = _log_abs_one_minus(z)
    beta = profile.beta

    m = beta * profile.n_rows * profile.n_cols
    if m == 0:
        raise DegenerateProfileError("profile has no variance terms")
    sum_rest = beta * float(np.sum(logs[:, 1:]))
    sum_first = beta * float(np.sum(logs[:, 0]))

    # Mean components enter through ln|b|^2 and extend the count M.
    if profile.has_means:
        if beta == 2:
            comps = np.concatenate(
                [profile.b.real.ravel(), profile.b.imag.ravel()]
            )
        else:
            comps = profile.b.real.ravel()
        nz = comps[comps != 0.0]
        m += nz.size
        sum_rest += float(np.sum(2.0 * np.log(np.abs(nz))))

    norm = 2.0 * m * gamma
    return ComplexityValue(-sum_rest / norm, 0.0, m, gamma, -sum_first / norm)


def complexity_closed_form(
    protocol: str,
    params: Mapping[str, float],
    n: int,
    nu0: int = 0,
    beta: int = 1,
    gamma: float = GAMMA_DEFAULT,
) -> ComplexityValue:
    """Closed-form evolution coordinate of a named zero-mean protocol."""
    _check_gamma(gamma)
    if n < 2 or nu0 < 0:
        raise ParameterDomainError("need n >= 2 and nu0 >= 0")
    if beta not in (1, 2):
        raise ParameterDomainError("beta must be 1 or 2")
    n_cols = n + nu0
    m = beta * n * n_cols

    if protocol == "EB":
        mu = _need(params, protocol, "mu")
        if not np.isfinite(mu) or mu <= 0:
            raise ParameterDomainError("EB requires mu > 0")
        z = np.array([2.0 * gamma / (1.0 + mu)])
        _raise_if_singular(z, gamma)
        sum_rest = beta * n * (n_cols - 1) * float(_log_abs_one_minus(z)[0])
    elif protocol in ("EP", "EE"):
        a, b = _need(params, protocol, "a"), _need(params, protocol, "b")
        if not (np.isfinite(a) and np.isfinite(b)) or a <= 0 or b <= 0:
            raise ParameterDomainError(f"{protocol} requires a > 0 and b > 0")
        k = np.arange(1, n + 1)[:, None]
        loff = np.arange(1, n_cols)[None, :]
        if protocol == "EP":
            w = 1.0 / (1.0 + (k / b) * (loff / a))
        else:
            with np.errstate(under="ignore"):
                w = np.exp(-k * loff / (a * b))
        z = 2.0 * gamma * w
        _raise_if_singular(z, gamma)
        sum_rest = beta * float(np.sum(_log_abs_one_minus(z)))
    else:
        raise ParameterDomainError(f"no closed form for protocol {protocol!r}")

    z1 = np.array([2.0 * gamma])
    _raise_if_singular(z1, gamma)
    sum_first = beta * n * float(_log_abs_one_minus(z1)[0])
    norm = 2.0 * m * gamma
    return ComplexityValue(-sum_rest / norm, 0.0, m, gamma, -sum_first / norm)


def y_grid(
    protocol: str,
    param_list: Sequence[Mapping[str, float]],
    n: int,
    nu0: int = 0,
    beta: int = 1,
    gamma: float = GAMMA_DEFAULT,
) -> list[ComplexityValue]:
    """Evolution coordinates of a sequence of parameter points."""
    if len(param_list) == 0:
        raise ParameterDomainError("parameter grid is empty")
    out = []
    for i, params in enumerate(param_list):
        try:
            out.append(
                complexity_closed_form(protocol, params, n, nu0, beta, gamma)
            )
        except (ParameterDomainError, SingularParameterError) as err:
            raise type(err)(f"grid point {i}: {err}") from None
    return out


def profile_complexity(
    protocol: str,
    params: Mapping[str, float],
    n: int,
    nu0: int = 0,
    beta: int = 1,
    gamma: float = GAMMA_DEFAULT,
) -> tuple[VarianceProfile, ComplexityValue]:
    """Build a named profile together with its evolution coordinate."""
    profile = build_profile(protocol, params, n, nu0, beta)
    return profile, complexity_closed_form(protocol, params, n, nu0, beta, gamma)
