"""Reduced density matrices and their spectra.

The state encoded by a coefficient matrix C is traced over the larger
subsystem, leaving rho = C C^dagger / Tr(C C^dagger). Its eigenvalues are the
squared Schmidt coefficients: nonnegative, summing to one, at most
min(n_rows, n_cols) of them nonzero. Spectra come back in descending order
with tiny negative round-off clamped to zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ensembles import CMatrix
from .errors import DegenerateStateError, NumericalError, ParameterDomainError

# Self-adjointness and unit-trace tolerances for constructed density matrices.
HERMITIAN_TOL = 1e-12
UNIT_TRACE_TOL = 1e-12

# Eigenvalues more negative than this indicate a real numerical problem
# rather than round-off.
NEGATIVE_TOL = 1e-12

# Normalized spectra may miss unit trace by round-off up to this much.
SPECTRUM_TRACE_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-normalized self-adjoint matrix.

    Positive semidefiniteness is enforced where it is observable: at
    spectrum extraction, where negative round-off is clamped and anything
    worse aborts the sample.
    """

    entries: np.ndarray
    trace: float

    def __post_init__(self):
        ent = self.entries
        if ent.ndim != 2 or ent.shape[0] != ent.shape[1]:
            raise ParameterDomainError("density matrix must be square")
        if not np.all(np.isfinite(ent)):
            raise ParameterDomainError("density matrix has non-finite entries")
        if np.max(np.abs(ent - ent.conj().T)) > HERMITIAN_TOL:
            raise NumericalError("density matrix is not self-adjoint")
        if abs(self.trace - 1.0) > UNIT_TRACE_TOL:
            raise NumericalError(f"density matrix trace {self.trace!r} is not 1")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class Spectrum:
    """Descending eigenvalues of a density matrix, clamped to [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        vals = self.values
        if vals.ndim != 1 or vals.size == 0:
            raise ParameterDomainError("spectrum must be a nonempty vector")
        if np.any(np.diff(vals) > 0.0):
            raise ParameterDomainError("spectrum must be descending")
        if vals[-1] < 0.0 or vals[0] > 1.0:
            raise ParameterDomainError("spectrum values must lie in [0, 1]")
        total = float(vals.sum())
        if abs(total - 1.0) > SPECTRUM_TRACE_TOL:
            raise NumericalError(f"spectrum sums to {total!r}, expected 1")

    def __array__(self, dtype=None, copy=None):
        if dtype is None and not copy:
            return self.values
        return np.array(self.values, dtype=dtype)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, idx):
        return self.values[idx]


def _entries(c) -> np.ndarray:
    return c.entries if isinstance(c, CMatrix) else np.asarray(c)


def reduce(c: CMatrix | np.ndarray) -> DensityMatrix:
    """Trace-normalized reduced density matrix of the smaller subsystem."""
    entries = _entries(c)
    gram = entries @ entries.conj().T
    total = float(np.real(np.trace(gram)))
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateStateError(
            "coefficient matrix has zero norm; cannot normalize"
        )
    rho = gram / total
    # Symmetrize away one-ulp asymmetry from the matmul.
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho, float(np.real(np.trace(rho))))


def spectrum(rho: DensityMatrix | np.ndarray, sample_id: int | None = None) -> Spectrum:
    """Eigenvalues of a density matrix, descending, clamped and validated."""
    ent = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    try:
        lams = np.linalg.eigvalsh(ent)[::-1].copy()
    except np.linalg.LinAlgError as err:
        raise NumericalError(f"eigensolver failed: {err}", sample_id) from None
    low = lams.min()
    if low < -NEGATIVE_TOL:
        raise NumericalError(
            f"eigenvalue {low!r} below round-off tolerance", sample_id
        )
    np.clip(lams, 0.0, 1.0, out=lams)
    total = float(lams.sum())
    if abs(total - 1.0) > SPECTRUM_TRACE_TOL:
        raise NumericalError(
            f"spectrum sums to {total!r}, expected 1 within {SPECTRUM_TRACE_TOL}",
            sample_id,
        )
    return Spectrum(lams)


def gram_spectrum(c: CMatrix | np.ndarray) -> np.ndarray:
    """Descending eigenvalues of C C^dagger without trace normalization."""
    sv = np.linalg.svd(_entries(c), compute_uv=False)
    return sv * sv


def spectrum_of(c: CMatrix | np.ndarray, sample_id: int | None = None) -> np.ndarray:
    """Normalized Schmidt spectrum straight from a coefficient matrix.

    Uses singular values of C, which is cheaper and more accurate than
    eigendecomposing the Gram matrix. Returns a plain descending array for
    batch pipelines; wrap in Spectrum for the validated form.
    """
    weights = gram_spectrum(c)
    total = float(weights.sum())
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateStateError(
            "coefficient matrix has zero norm; cannot normalize"
        )
    return weights / total
