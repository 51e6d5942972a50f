"""Two independent dynamical routes to the same spectral statistics.

Route one evolves the coefficient matrix itself: every real component follows
an Ornstein-Uhlenbeck process in the evolution coordinate Y,

    dC = -gamma C dY + sqrt(2 v^2) dW,

whose transition over a step D is exact in distribution:

    C(Y + D) = C(Y) e^{-gamma D} + V * sqrt(v^2 (1 - e^{-2 gamma D}) / gamma)

with V standard normal per real component. No discretization error, and the
two-step composition over D1 then D2 equals the one-step rule over D1 + D2.

Route two evolves the eigenvalues of the Gram matrix C C^dagger directly.
Second-order perturbation theory applied to the matrix increments above gives
the Ito equation

    dlam_n = [4 v^2 beta lam_n sum_{m != n} 1/(lam_n - lam_m)
              + 2 v^2 beta (nu0 + 1) - 2 gamma lam_n] dY
             + sqrt(8 v^2 lam_n) dW_n

whose stationary law is the Wishart eigenvalue density with per-component
scale v^2/gamma (see wishart_logpdf). The integrator is Euler-Maruyama with
per-path step halving: steps that break positivity or strict ordering are
rejected and retried with fresh noise at half the step, down to a floor.

The two verification reports check the matrix route against its analytic
one-step element moments and the stationary ensemble against its known
density, so each route is validated without reference to the other.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .complexity import GAMMA_DEFAULT
from .ensembles import CMatrix, VarianceProfile, custom_profile
from .errors import ParameterDomainError, StiffRegionError
from .schmidt import gram_spectrum

V2_DEFAULT = 0.25

BASE_STEP_SCALE = 1e-4
STEP_FLOOR = 1e-10


def _check_rates(gamma: float, v2: float) -> None:
    if not np.isfinite(gamma) or gamma <= 0:
        raise ParameterDomainError("gamma must be positive")
    if not np.isfinite(v2) or v2 <= 0:
        raise ParameterDomainError("v2 must be positive")


# ---------------------------------------------------------------- matrix route


@dataclass(frozen=True)
class LangevinState:
    """A coefficient matrix pinned at evolution coordinate y."""

    c0: CMatrix
    y: float
    gamma: float = GAMMA_DEFAULT
    v2: float = V2_DEFAULT

    def __post_init__(self):
        _check_rates(self.gamma, self.v2)
        if not np.isfinite(self.y) or self.y < 0:
            raise ParameterDomainError("y must be finite and nonnegative")


def separable_block(
    paths: int, n: int, nu0: int, beta: int, rng: np.random.Generator
) -> np.ndarray:
    """Stack of separable-start coefficient matrices, shape (paths, n, n+nu0).

    First column standard normal per real component, all other entries zero.
    """
    dtype = complex if beta == 2 else float
    block = np.zeros((paths, n, n + nu0), dtype=dtype)
    if beta == 2:
        block[:, :, 0] = rng.standard_normal((paths, n)) + 1j * rng.standard_normal(
            (paths, n)
        )
    else:
        block[:, :, 0] = rng.standard_normal((paths, n))
    return block


def evolve_block(
    block: np.ndarray,
    delta_y: float,
    beta: int,
    rng: np.random.Generator,
    gamma: float = GAMMA_DEFAULT,
    v2: float = V2_DEFAULT,
) -> np.ndarray:
    """Exact transition applied to a stack of coefficient matrices."""
    _check_rates(gamma, v2)
    if delta_y < 0:
        raise ParameterDomainError("evolution coordinate cannot decrease")
    if delta_y == 0:
        return block.copy()
    decay = np.exp(-gamma * delta_y)
    scale = np.sqrt(v2 * -np.expm1(-2.0 * gamma * delta_y) / gamma)
    if beta == 2:
        noise = rng.standard_normal(block.shape) + 1j * rng.standard_normal(
            block.shape
        )
    else:
        noise = rng.standard_normal(block.shape)
    return block * decay + scale * noise


def langevin_evolve(
    state: LangevinState, target_y: float, rng: np.random.Generator
) -> CMatrix:
    """Exact-in-distribution transition of the stored matrix to target_y."""
    if not np.isfinite(target_y) or target_y < state.y:
        raise ParameterDomainError(
            f"target_y {target_y!r} must be >= current y {state.y!r}"
        )
    ent = state.c0.entries[None, ...]
    out = evolve_block(
        ent, target_y - state.y, state.c0.beta, rng, state.gamma, state.v2
    )[0]
    return CMatrix(out, state.c0.beta, "langevin")


def langevin_advance(
    state: LangevinState, target_y: float, rng: np.random.Generator
) -> LangevinState:
    """Evolve and rewrap, for checkpointed trajectories."""
    c = langevin_evolve(state, target_y, rng)
    return dataclasses.replace(state, c0=c, y=float(target_y))


def langevin_profile(
    y: float,
    n: int,
    nu0: int = 0,
    beta: int = 1,
    gamma: float = GAMMA_DEFAULT,
    v2: float = V2_DEFAULT,
) -> VarianceProfile:
    """Ensemble law of the matrix route started separable, as a static profile.

    From the transition rule, a first-column entry has variance
    e^{-2 gamma y} + (v2/gamma)(1 - e^{-2 gamma y}) and every other entry
    (v2/gamma)(1 - e^{-2 gamma y}). Sampling this profile directly is
    distribution-identical to running the matrix route to y.
    """
    _check_rates(gamma, v2)
    if y < 0:
        raise ParameterDomainError("y must be nonnegative")
    grown = (v2 / gamma) * -np.expm1(-2.0 * gamma * y)
    h_first = np.exp(-2.0 * gamma * y) + grown
    if h_first > 1.0 + 1e-12 or grown > 1.0:
        raise ParameterDomainError(
            "profile variances exceed 1; this parametrization requires v2 <= gamma"
        )
    h = np.full((n, n + nu0), max(grown, 0.0))
    h[:, 0] = min(h_first, 1.0)
    return custom_profile(h, beta=beta)


# ------------------------------------------------------------ eigenvalue route


@dataclass(frozen=True)
class DysonState:
    """Unnormalized Gram-matrix eigenvalues of a bundle of paths.

    ``lambdas`` has shape (paths, n), strictly descending and positive along
    each row. ``nu`` parametrizes the rectangularity: nu = (nu0 - 1) / 2.
    """

    lambdas: np.ndarray
    y: float
    beta: int
    nu: float
    gamma: float = GAMMA_DEFAULT
    v2: float = V2_DEFAULT
    base_dt: float = 1e-5
    dt_floor: float = STEP_FLOOR

    def __post_init__(self):
        _check_rates(self.gamma, self.v2)
        lam = self.lambdas
        if lam.ndim != 2:
            raise ParameterDomainError("lambdas must have shape (paths, n)")
        if self.beta not in (1, 2):
            raise ParameterDomainError("beta must be 1 or 2")
        if not np.all(lam > 0.0):
            raise ParameterDomainError("eigenvalues must be strictly positive")
        if lam.shape[1] > 1 and not np.all(np.diff(lam, axis=1) < 0.0):
            raise ParameterDomainError("eigenvalues must be strictly descending")
        if not (self.base_dt > 0 and self.dt_floor > 0):
            raise ParameterDomainError("step sizes must be positive")

    @property
    def n(self) -> int:
        return self.lambdas.shape[1]

    @property
    def paths(self) -> int:
        return self.lambdas.shape[0]

    @property
    def nu0(self) -> int:
        return int(round(2 * self.nu + 1))


def dyson_init(
    spectra: np.ndarray,
    y: float,
    beta: int = 1,
    nu0: int = 0,
    gamma: float = GAMMA_DEFAULT,
    v2: float = V2_DEFAULT,
    base_dt: float | None = None,
    dt_floor: float = STEP_FLOOR,
) -> DysonState:
    """Wrap unnormalized spectra (descending rows) as an integrator state."""
    lam = np.atleast_2d(np.asarray(spectra, dtype=float))
    if base_dt is None:
        base_dt = BASE_STEP_SCALE / lam.shape[1]
    return DysonState(
        lam, float(y), beta, (nu0 - 1) / 2.0, gamma, v2, base_dt, dt_floor
    )


def _drift(lam: np.ndarray, beta: int, nu0: int, gamma: float, v2: float) -> np.ndarray:
    n = lam.shape[1]
    if n > 1:
        diff = lam[:, :, None] - lam[:, None, :]
        idx = np.arange(n)
        diff[:, idx, idx] = np.inf
        inter = np.sum(1.0 / diff, axis=2) * lam
    else:
        inter = np.zeros_like(lam)
    return 4.0 * v2 * beta * inter + 2.0 * v2 * beta * (nu0 + 1) - 2.0 * gamma * lam


def _describe_failure(row: np.ndarray) -> str:
    if row.min() <= 0.0:
        k = int(np.argmin(row))
        return f"eigenvalue {k} reached {row[k]!r}"
    gaps = -np.diff(row)
    k = int(np.argmin(gaps))
    return (
        f"eigenvalues {k} and {k + 1} collided "
        f"({row[k]!r} vs {row[k + 1]!r})"
    )


def _advance(
    lam: np.ndarray,
    dt: float,
    beta: int,
    nu0: int,
    gamma: float,
    v2: float,
    rng: np.random.Generator,
    dt_floor: float,
) -> np.ndarray:
    """One accepted step of size dt for every row, recursing on rejections."""
    prop = (
        lam
        + _drift(lam, beta, nu0, gamma, v2) * dt
        + np.sqrt(8.0 * v2 * dt * lam) * rng.standard_normal(lam.shape)
    )
    ok = np.all(prop > 0.0, axis=1)
    if lam.shape[1] > 1:
        ok &= np.all(np.diff(prop, axis=1) < 0.0, axis=1)
    if np.all(ok):
        return prop
    half = dt / 2.0
    if half < dt_floor:
        bad = int(np.flatnonzero(~ok)[0])
        raise StiffRegionError(
            f"step floor {dt_floor!r} reached: {_describe_failure(prop[bad])}",
            sample_id=bad,
        )
    sub = lam[~ok]
    sub = _advance(sub, half, beta, nu0, gamma, v2, rng, dt_floor)
    sub = _advance(sub, half, beta, nu0, gamma, v2, rng, dt_floor)
    prop[~ok] = sub
    return prop


def dyson_evolve(
    state: DysonState, target_y: float, rng: np.random.Generator
) -> DysonState:
    """Integrate every path to target_y."""
    if not np.isfinite(target_y) or target_y < state.y:
        raise ParameterDomainError(
            f"target_y {target_y!r} must be >= current y {state.y!r}"
        )
    if target_y == state.y:
        return state
    lam = state.lambdas
    nu0 = state.nu0
    remaining = target_y - state.y
    while remaining > 1e-15:
        dt = min(state.base_dt, remaining)
        lam = _advance(
            lam, dt, state.beta, nu0, state.gamma, state.v2, rng, state.dt_floor
        )
        remaining -= dt
    return dataclasses.replace(state, lambdas=lam, y=float(target_y))


def wishart_logpdf(
    lams: np.ndarray, beta: int, nu0: int, sigma2: float
) -> np.ndarray:
    """Unnormalized log-density of stationary Gram-matrix eigenvalues.

    sigma2 is the per-real-component variance of the underlying Gaussian
    matrix; the eigenvalue route relaxes to sigma2 = v2/gamma, direct
    stationary sampling uses sigma2 = 1/(2 gamma).
    """
    arr = np.asarray(lams, dtype=float)
    single = arr.ndim == 1
    lam = np.atleast_2d(arr)
    if np.any(lam <= 0.0):
        raise ParameterDomainError("eigenvalues must be positive")
    n = lam.shape[1]
    i, j = np.triu_indices(n, k=1)
    rep = np.sum(np.log(np.abs(lam[:, i] - lam[:, j])), axis=1) if n > 1 else 0.0
    shape = beta * (nu0 + 1) / 2.0 - 1.0
    body = shape * np.sum(np.log(lam), axis=1) - np.sum(lam, axis=1) / (2.0 * sigma2)
    out = beta * rep + body
    return float(out[0]) if single else out


# ----------------------------------------------------------- moment validation


@dataclass(frozen=True)
class MomentCheck:
    """One empirical moment against its analytic one-step value."""

    label: str
    estimate: float
    predicted: float
    se: float

    @property
    def z(self) -> float:
        if self.se == 0.0:
            return 0.0 if self.estimate == self.predicted else np.inf
        return (self.estimate - self.predicted) / self.se

    def passed(self, threshold: float) -> bool:
        return abs(self.z) <= threshold


@dataclass(frozen=True)
class MomentReport:
    checks: tuple[MomentCheck, ...]
    threshold: float

    @property
    def all_passed(self) -> bool:
        return all(c.passed(self.threshold) for c in self.checks)

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            verdict = "ok" if c.passed(self.threshold) else "FAIL"
            lines.append(
                f"{c.label}: est {c.estimate:.6g} vs {c.predicted:.6g} "
                f"(z = {c.z:+.2f}) {verdict}"
            )
        return "\n".join(lines)


class _Welford:
    """Streaming mean and variance over chunked samples."""

    def __init__(self):
        self.n = 0
        self.total = 0.0
        self.total_sq = 0.0

    def add(self, values: np.ndarray) -> None:
        self.n += values.size
        self.total += float(np.sum(values))
        self.total_sq += float(np.sum(values * values))

    def mean_se(self) -> tuple[float, float]:
        mean = self.total / self.n
        var = max(self.total_sq / self.n - mean * mean, 0.0)
        return mean, np.sqrt(var / self.n)


def element_moment_check(
    c: CMatrix,
    delta_y: float,
    n_samples: int,
    rng: np.random.Generator,
    gamma: float = GAMMA_DEFAULT,
    v2: float = V2_DEFAULT,
    threshold: float = 5.0,
    chunk: int = 100_000,
) -> MomentReport:
    """Validate one-step increments of W = C C^dagger against analytic moments.

    For a fixed matrix C, the transition rule gives, to first order in the
    step, elementwise moments of dW = W' - W:

        E[dW_mn] = 2 (beta v^2 n_cols delta_mn - gamma W_mn) dY

        beta=1:  Cov[dW_mn, dW_kl] = 2 v^2 dY (d_mk W_nl + d_ml W_nk
                                               + d_nk W_ml + d_nl W_mk)
        beta=2:  Cov[dW_mn, conj(dW_kl)] = 4 v^2 dY (d_mk W_ln + d_nl W_mk)
                 Cov[dW_mn, dW_kl]       = 4 v^2 dY (d_nk W_ml + d_ml W_kn)

    (d_ab = Kronecker delta.) The report covers one representative index
    tuple per structural class, including the identically-zero
    unconjugated class for beta = 2.
    """
    if not (0 < delta_y <= 1e-3):
        raise ParameterDomainError("delta_y must be in (0, 1e-3]")
    _check_rates(gamma, v2)
    beta = c.beta
    ent = c.entries
    n, n_cols = ent.shape
    if n < 4:
        raise ParameterDomainError("moment check needs at least 4 rows")
    w = ent @ ent.conj().T
    drift = 2.0 * (beta * v2 * n_cols * np.eye(n) - gamma * w) * delta_y

    # Index tuples: one per structural class of the covariance formula.
    first_targets = [("mean[0,0]", 0, 0), ("mean[0,1]", 0, 1)]
    second_targets = [
        ("cov[0,0 x 0,0]", (0, 0), (0, 0)),
        ("cov[0,1 x 0,1]", (0, 1), (0, 1)),
        ("cov[0,1 x 0,2]", (0, 1), (0, 2)),
        ("cov[0,1 x 2,3]", (0, 1), (2, 3)),
    ]

    def pred_cov(mn, kl):
        m, nn = mn
        k, l = kl
        d = lambda a, b: 1.0 if a == b else 0.0
        if beta == 1:
            return 2.0 * v2 * delta_y * (
                d(m, k) * w[nn, l]
                + d(m, l) * w[nn, k]
                + d(nn, k) * w[m, l]
                + d(nn, l) * w[m, k]
            )
        return 4.0 * v2 * delta_y * (d(m, k) * w[l, nn] + d(nn, l) * w[m, k])

    def pred_plain(mn, kl):
        # beta=2 product without conjugation; identically zero when the
        # Kronecker deltas cannot fire.
        m, nn = mn
        k, l = kl
        d = lambda a, b: 1.0 if a == b else 0.0
        return 4.0 * v2 * delta_y * (d(nn, k) * w[m, l] + d(m, l) * w[k, nn])

    acc_first = {label: (_Welford(), _Welford()) for label, _, _ in first_targets}
    acc_second = {label: (_Welford(), _Welford()) for label, _, _ in second_targets}
    acc_plain = (_Welford(), _Welford())

    decay = np.exp(-gamma * delta_y)
    scale = np.sqrt(v2 * -np.expm1(-2.0 * gamma * delta_y) / gamma)
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        shape = (m, n, n_cols)
        if beta == 2:
            noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        else:
            noise = rng.standard_normal(shape)
        cnew = ent[None] * decay + scale * noise
        dw = np.einsum("pij,pkj->pik", cnew, cnew.conj()) - w[None]
        centered = dw - drift[None]
        for label, i, j in first_targets:
            re, im = acc_first[label]
            re.add(dw[:, i, j].real)
            im.add(dw[:, i, j].imag)
        for label, mn, kl in second_targets:
            prod = centered[:, mn[0], mn[1]] * np.conj(centered[:, kl[0], kl[1]])
            re, im = acc_second[label]
            re.add(prod.real)
            im.add(prod.imag)
        if beta == 2:
            prod = centered[:, 0, 1] * centered[:, 0, 1]
            acc_plain[0].add(prod.real)
            acc_plain[1].add(prod.imag)
        done += m

    checks: list[MomentCheck] = []

    def add_checks(label, accs, predicted):
        re, im = accs
        mean, se = re.mean_se()
        checks.append(MomentCheck(f"{label}.re", mean, float(np.real(predicted)), se))
        if beta == 2:
            mean_i, se_i = im.mean_se()
            checks.append(
                MomentCheck(f"{label}.im", mean_i, float(np.imag(predicted)), se_i)
            )

    for label, i, j in first_targets:
        add_checks(label, acc_first[label], drift[i, j])
    for label, mn, kl in second_targets:
        add_checks(label, acc_second[label], pred_cov(mn, kl))
    if beta == 2:
        add_checks("plain[0,1 x 0,1]", acc_plain, pred_plain((0, 1), (0, 1)))

    return MomentReport(tuple(checks), threshold)


# -------------------------------------------------------- stationary validation


def fixed_trace_s2(beta: int, nu0: int = 0) -> float:
    """Mean of S_2 for two trace-normalized stationary eigenvalues.

    Brute-force quadrature over the ordered simplex slice lam = (u, 1-u),
    u in (1/2, 1), with the stationary eigenvalue weight.
    """
    if beta not in (1, 2):
        raise ParameterDomainError("beta must be 1 or 2")
    a = beta * (nu0 + 1) / 2.0 - 1.0

    def weight(u: float) -> float:
        return (2.0 * u - 1.0) ** beta * (u * (1.0 - u)) ** a

    num, _ = integrate.quad(
        lambda u: (u * u + (1.0 - u) ** 2) * weight(u), 0.5, 1.0, limit=200
    )
    den, _ = integrate.quad(weight, 0.5, 1.0, limit=200)
    return num / den


def stationary_mean_n1(beta: int, nu0: int, gamma: float, v2: float) -> float:
    """Stationary mean of a single eigenvalue, by quadrature of the density."""
    shape = beta * (nu0 + 1) / 2.0 - 1.0
    sigma2 = v2 / gamma

    def density(lam: float) -> float:
        return lam**shape * np.exp(-lam / (2.0 * sigma2))

    num, _ = integrate.quad(lambda x: x * density(x), 0.0, np.inf, limit=200)
    den, _ = integrate.quad(density, 0.0, np.inf, limit=200)
    return num / den


def stationary_check(
    n_samples: int,
    n: int,
    beta: int,
    gamma: float,
    rng: np.random.Generator,
    threshold: float = 3.0,
) -> MomentReport:
    """Check sampled stationary spectra against their analytic density.

    Three independent probes:

    1. Reweighting spectra sampled at rate gamma by the density ratio to a
       rate 1.25*gamma must reproduce direct sampling at the higher rate
       (first two spectral moments). This exercises the full functional form
       of the log-density through the only term that depends on the rate.
    2. Trace-normalized two-eigenvalue spectra must reproduce the quadrature
       value of <S_2> under the fixed-trace weight.
    3. Randomly relabeled eigenvalue pairs are exchangeable: the labeled
       mean difference is zero.
    """
    from .ensembles import sample_stationary

    if n > 8:
        raise ParameterDomainError("density checks are meant for n <= 8")
    if n_samples < 100:
        raise ParameterDomainError("need at least 100 samples")
    gamma2 = 1.25 * gamma

    def draw(g: float, dim: int) -> np.ndarray:
        out = np.empty((n_samples, dim))
        for i in range(n_samples):
            out[i] = gram_spectrum(
                sample_stationary(dim, 0, beta, g, rng)
            )
        return out

    lam_a = draw(gamma, n)
    lam_b = draw(gamma2, n)

    checks: list[MomentCheck] = []

    # Probe 1: importance reweighting across the rate parameter. The
    # density ratio depends only on the trace: exp(-(gamma2 - gamma) S1).
    s1_a = np.sum(lam_a, axis=1)
    logw = -(gamma2 - gamma) * s1_a
    wgt = np.exp(logw - logw.max())
    wgt /= wgt.mean()
    for label, stat_a, stat_b in (
        ("reweighted <S1>", s1_a, np.sum(lam_b, axis=1)),
        ("reweighted <S2>", np.sum(lam_a**2, axis=1), np.sum(lam_b**2, axis=1)),
    ):
        target = float(np.mean(stat_b))
        se_b = float(np.std(stat_b) / np.sqrt(n_samples))
        resid = wgt * (stat_a - target)
        est = target + float(np.mean(resid))
        se_a = float(np.std(resid) / np.sqrt(n_samples))
        checks.append(
            MomentCheck(label, est, target, float(np.hypot(se_a, se_b)))
        )

    # Probe 2: fixed-trace <S2> at n=2 against quadrature.
    lam2 = draw(gamma, 2)
    norm = lam2 / np.sum(lam2, axis=1, keepdims=True)
    s2 = np.sum(norm**2, axis=1)
    checks.append(
        MomentCheck(
            "fixed-trace <S2> (n=2)",
            float(np.mean(s2)),
            fixed_trace_s2(beta, 0),
            float(np.std(s2) / np.sqrt(n_samples)),
        )
    )

    # Probe 3: exchangeability under random relabeling.
    flip = rng.random(n_samples) < 0.5
    labeled = np.where(flip, lam2[:, 0] - lam2[:, 1], lam2[:, 1] - lam2[:, 0])
    checks.append(
        MomentCheck(
            "relabeled pair difference",
            float(np.mean(labeled)),
            0.0,
            float(np.std(labeled) / np.sqrt(n_samples)),
        )
    )

    return MomentReport(tuple(checks), threshold)


# ------------------------------------------------------------------ trajectories


def trajectory_rows(
    spectra_by_y: list[tuple[float, np.ndarray]]
) -> list[tuple[int, float, float, float, float, float]]:
    """Flatten checkpointed normalized spectra into trajectory rows.

    Row layout matches the trajectory CSV: (path_id, y, s2, s3, r1, r2).
    """
    from .measures import batch_measures

    rows = []
    for y, block in spectra_by_y:
        stats = batch_measures(block)
        for pid in range(block.shape[0]):
            rows.append(
                (
                    pid,
                    float(y),
                    float(stats["s2"][pid]),
                    float(stats["s3"][pid]),
                    float(stats["r1"][pid]),
                    float(stats["r2"][pid]),
                )
            )
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows
