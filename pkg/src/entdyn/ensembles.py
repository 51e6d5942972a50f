"""Gaussian coefficient-matrix ensembles with structured variance profiles.

A bipartite pure state with subsystem dimensions n and n + nu0 is encoded in
an n x (n + nu0) coefficient matrix C whose independent real components are
Gaussian. Entries are real for beta = 1 and complex for beta = 2; for beta = 2
the two real components of an entry share one variance. Three named variance
protocols interpolate between a separable state (a single dominant column) and
a fully ergodic one, with k the 1-based row index and l the 1-based column
index:

    EB(mu):   h[k][1] = 1 and h[k][l] = 1 / (1 + mu) for l > 1
    EP(a, b): h[k][l] = 1 / (1 + (k / b) * (l - 1) / a)
    EE(a, b): h[k][l] = exp(-k * (l - 1) / (a * b))

All three keep unit variance in the first column and have zero means. The
entangling direction is mu -> 0 for EB and a*b -> infinity for EP and EE;
mu -> infinity or a*b -> 0 approaches the separable limit. Custom profiles
accept arbitrary variances in (0, 1] and optional nonzero means.

Variance entries that underflow (EE with tiny a*b) are clamped to
``VARIANCE_FLOOR``; entries at the floor are sampled as exactly zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DegenerateStateError, ParameterDomainError

PROTOCOLS = ("EB", "EP", "EE", "custom")

# Below this variance an entry is treated as identically zero when sampling.
VARIANCE_FLOOR = 1e-300


@dataclass(frozen=True)
class VarianceProfile:
    """Per-entry variances and means of a Gaussian coefficient ensemble.

    ``h[k, l]`` is the variance of each real component of entry (k, l);
    ``b`` holds the entry means (real for beta=1, complex for beta=2).
    """

    n_rows: int
    n_cols: int
    beta: int
    h: np.ndarray
    b: np.ndarray
    protocol: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        if h.shape != (self.n_rows, self.n_cols):
            raise ParameterDomainError(
                f"variance shape {h.shape} does not match "
                f"({self.n_rows}, {self.n_cols})"
            )
        if not np.all(np.isfinite(h)):
            raise ParameterDomainError("variance profile has non-finite entries")
        if np.any(h <= 0.0) or np.any(h > 1.0):
            raise ParameterDomainError("variances must lie in (0, 1]")
        if self.b.shape != h.shape:
            raise ParameterDomainError("mean matrix shape does not match variances")
        if not np.all(np.isfinite(self.b)):
            raise ParameterDomainError("mean matrix has non-finite entries")
        if self.beta not in (1, 2):
            raise ParameterDomainError("beta must be 1 or 2")

    @property
    def has_means(self) -> bool:
        return bool(np.any(self.b != 0))


@dataclass(frozen=True)
class CMatrix:
    """A sampled coefficient matrix together with its symmetry class."""

    entries: np.ndarray
    beta: int
    source: str = "custom"

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cols(self) -> int:
        return self.entries.shape[1]


def _check_dims(n: int, nu0: int) -> None:
    if n < 2:
        raise ParameterDomainError("subsystem dimension n must be at least 2")
    if nu0 < 0:
        raise ParameterDomainError("nu0 must be nonnegative")


def _need(params: Mapping[str, float], protocol: str, name: str) -> float:
    try:
        return float(params[name])
    except KeyError:
        raise ParameterDomainError(
            f"{protocol} requires parameter {name!r}"
        ) from None


def build_profile(
    protocol: str,
    params: Mapping[str, float],
    n: int,
    nu0: int = 0,
    beta: int = 1,
) -> VarianceProfile:
    """Construct the variance profile of one of the named protocols."""
    _check_dims(n, nu0)
    if beta not in (1, 2):
        raise ParameterDomainError("beta must be 1 or 2")
    n_cols = n + nu0
    k = np.arange(1, n + 1)[:, None]
    loff = np.arange(0, n_cols)[None, :]
    if protocol == "EB":
        mu = _need(params, protocol, "mu")
        if not np.isfinite(mu) or mu <= 0:
            raise ParameterDomainError("EB requires mu > 0")
        h = np.where(loff == 0, 1.0, 1.0 / (1.0 + mu)) * np.ones((n, 1))
        kept = {"mu": mu}
    elif protocol == "EP":
        a, b = _need(params, protocol, "a"), _need(params, protocol, "b")
        if not (np.isfinite(a) and np.isfinite(b)) or a <= 0 or b <= 0:
            raise ParameterDomainError("EP requires a > 0 and b > 0")
        h = 1.0 / (1.0 + (k / b) * (loff / a))
        kept = {"a": a, "b": b}
    elif protocol == "EE":
        a, b = _need(params, protocol, "a"), _need(params, protocol, "b")
        if not (np.isfinite(a) and np.isfinite(b)) or a <= 0 or b <= 0:
            raise ParameterDomainError("EE requires a > 0 and b > 0")
        with np.errstate(under="ignore"):
            h = np.exp(-k * loff / (a * b))
        kept = {"a": a, "b": b}
    else:
        raise ParameterDomainError(
            f"unknown protocol {protocol!r}; use one of {PROTOCOLS[:3]} "
            "or custom_profile()"
        )
    h = np.maximum(h, VARIANCE_FLOOR)
    means = np.zeros((n, n_cols), dtype=complex if beta == 2 else float)
    return VarianceProfile(n, n_cols, beta, h, means, protocol, kept)


def custom_profile(
    h: np.ndarray,
    b: np.ndarray | None = None,
    beta: int = 1,
) -> VarianceProfile:
    """Wrap explicit variance and mean matrices as a profile."""
    h = np.array(h, dtype=float)
    if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < h.shape[0]:
        raise ParameterDomainError(
            "custom variances must be an n x (n + nu0) matrix with n >= 2"
        )
    h = np.maximum(h, VARIANCE_FLOOR)
    dtype = complex if beta == 2 else float
    if b is None:
        b = np.zeros(h.shape, dtype=dtype)
    else:
        b = np.array(b, dtype=dtype)
    return VarianceProfile(h.shape[0], h.shape[1], beta, h, b, "custom", {})


def separable_profile(n: int, nu0: int = 0, beta: int = 1) -> VarianceProfile:
    """Exact separable limit: unit-variance first column, the rest pinned at the floor."""
    _check_dims(n, nu0)
    h = np.full((n, n + nu0), VARIANCE_FLOOR)
    h[:, 0] = 1.0
    means = np.zeros((n, n + nu0), dtype=complex if beta == 2 else float)
    return VarianceProfile(n, n + nu0, beta, h, means, "custom", {"separable": 1.0})


def sample_c(profile: VarianceProfile, rng: np.random.Generator) -> CMatrix:
    """Draw one coefficient matrix from the profile."""
    shape = (profile.n_rows, profile.n_cols)
    scale = np.sqrt(profile.h)
    # Entries at the variance floor are exact zeros, not denormals.
    dead = profile.h <= VARIANCE_FLOOR
    if profile.beta == 1:
        c = profile.b.real + scale * rng.standard_normal(shape)
        if dead.any():
            c = np.where(dead, profile.b.real, c)
    else:
        re = scale * rng.standard_normal(shape)
        im = scale * rng.standard_normal(shape)
        if dead.any():
            re = np.where(dead, 0.0, re)
            im = np.where(dead, 0.0, im)
        c = profile.b + re + 1j * im
    return CMatrix(c, profile.beta, profile.protocol)


def sample_stationary(
    n: int,
    nu0: int = 0,
    beta: int = 1,
    gamma: float = 0.25,
    rng: np.random.Generator | None = None,
) -> CMatrix:
    """Draw from the ergodic endpoint ensemble.

    Every real component is i.i.d. Gaussian with mean zero and variance
    1 / (2 gamma), the scale at which the complexity measure of a flat
    profile diverges.
    """
    _check_dims(n, nu0)
    if beta not in (1, 2):
        raise ParameterDomainError("beta must be 1 or 2")
    if not np.isfinite(gamma) or gamma <= 0:
        raise ParameterDomainError("gamma must be positive")
    if rng is None:
        raise ParameterDomainError("an explicit generator is required")
    sigma = np.sqrt(1.0 / (2.0 * gamma))
    shape = (n, n + nu0)
    if beta == 1:
        c = sigma * rng.standard_normal(shape)
    else:
        c = sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return CMatrix(c, beta, "stationary")


def profile_to_config(
    profile: VarianceProfile,
    gamma: float | None = None,
    seed: int | None = None,
) -> dict:
    """Serialize a profile (plus run context) to a JSON-ready mapping.

    Floats survive a JSON round trip exactly; arrays are nested lists.
    """
    cfg: dict = {
        "protocol": profile.protocol,
        "N": profile.n_rows,
        "nu0": profile.n_cols - profile.n_rows,
        "beta": profile.beta,
    }
    cfg.update({key: float(val) for key, val in profile.params.items()})
    if profile.protocol == "custom":
        cfg["h"] = profile.h.tolist()
        if profile.has_means:
            if profile.beta == 2:
                cfg["b_re"] = profile.b.real.tolist()
                cfg["b_im"] = profile.b.imag.tolist()
            else:
                cfg["b"] = profile.b.real.tolist()
    if gamma is not None:
        cfg["gamma"] = float(gamma)
    if seed is not None:
        cfg["seed"] = int(seed)
    return cfg


def profile_from_config(cfg: Mapping) -> VarianceProfile:
    """Rebuild a profile from :func:`profile_to_config` output."""
    try:
        protocol = cfg["protocol"]
        n = int(cfg["N"])
        nu0 = int(cfg["nu0"])
        beta = int(cfg["beta"])
    except KeyError as missing:
        raise ParameterDomainError(f"profile config lacks key {missing}") from None
    if protocol == "custom":
        if "h" not in cfg:
            raise ParameterDomainError("custom profile config lacks variances")
        b = None
        if "b_re" in cfg:
            b = np.array(cfg["b_re"]) + 1j * np.array(cfg["b_im"])
        elif "b" in cfg:
            b = np.array(cfg["b"], dtype=float)
        return custom_profile(np.array(cfg["h"], dtype=float), b, beta)
    params = {k: cfg[k] for k in ("mu", "a", "b") if k in cfg}
    return build_profile(protocol, params, n, nu0, beta)
