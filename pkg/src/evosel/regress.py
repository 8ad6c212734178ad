"""Ordinary least squares over a descriptor subset; r-squared is the GA fitness.

The fit goes through a QR factorization of the intercept-augmented design
matrix rather than the normal equations, for numerical robustness. Rank
deficiency (duplicated or constant descriptors) is detected from the R
diagonal with a scale-aware cutoff and reported as an error so callers can
treat the offending genotype as unfit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .dataset import Dataset

# R-diagonal entries below RANK_TOL x (largest design column norm) mean the
# design matrix is effectively column-rank deficient.
RANK_TOL = 1e-10


class RegressionError(ValueError):
    pass


class RankDeficient(RegressionError):
    """Design matrix column rank < k+1; the genotype must be treated as unfit."""


class BadIndices(RegressionError):
    pass


@dataclass(frozen=True)
class RegressionModel:
    """OLS fit over the descriptor columns in ``indices`` (intercept first)."""

    indices: tuple[int, ...]
    coefficients: np.ndarray
    r2: float
    residual_ss: float
    total_ss: float

    def predict(self, descriptors: np.ndarray) -> np.ndarray:
        x = np.asarray(descriptors, dtype=float)[:, self.indices]
        return self.coefficients[0] + x @ self.coefficients[1:]


def _check_indices(data: Dataset, indices: Sequence[int]) -> tuple[int, ...]:
    idx = tuple(int(i) for i in indices)
    k = len(idx)
    if k < 1:
        raise BadIndices("need at least one descriptor index")
    if len(set(idx)) != k:
        raise BadIndices(f"descriptor indices must be distinct, got {idx}")
    if min(idx) < 0 or max(idx) >= data.n_descriptors:
        raise BadIndices(f"index out of range for {data.n_descriptors} descriptors: {idx}")
    # k = N-1 (saturated, zero residual dof) is still a determined fit; the
    # GA layer enforces the stricter N >= k+2 experiment-size rule.
    if data.n_compounds < k + 1:
        raise BadIndices(f"need at least k+1={k + 1} rows, dataset has {data.n_compounds}")
    return idx


def _design_qr(data: Dataset, idx: tuple[int, ...]):
    x = np.column_stack([np.ones(data.n_compounds), data.descriptors[:, idx]])
    q, r = np.linalg.qr(x)
    col_norms = np.linalg.norm(x, axis=0)
    if np.min(np.abs(np.diag(r))) < RANK_TOL * np.max(col_norms):
        raise RankDeficient(f"design matrix for indices {idx} is rank deficient")
    return x, q, r


def fit_mlr(data: Dataset, indices: Sequence[int]) -> RegressionModel:
    """Fit y = b0 + sum(b_i * x_indices[i]) by QR least squares.

    Returns the coefficient vector (intercept first), the determination
    coefficient r2 = 1 - RSS/TSS (TSS mean-centered, r2 clamped to [0, 1]),
    and both sums of squares. Raises RankDeficient when the chosen columns
    are collinear with each other or the intercept, BadIndices on malformed
    index lists.

    The factorization runs over the columns in sorted order and the
    coefficients are mapped back, so permuting ``indices`` permutes the
    non-intercept coefficients identically and leaves r2 bit-identical.
    """
    idx = _check_indices(data, indices)
    order = sorted(range(len(idx)), key=lambda i: idx[i])
    canonical = tuple(idx[i] for i in order)
    y = data.property_values
    x, q, r = _design_qr(data, canonical)
    beta_sorted = solve_triangular(r, q.T @ y)
    resid = y - x @ beta_sorted
    residual_ss = float(resid @ resid)
    centered = y - y.mean()
    total_ss = float(centered @ centered)
    r2 = min(1.0, max(0.0, 1.0 - residual_ss / total_ss))
    beta = np.empty_like(beta_sorted)
    beta[0] = beta_sorted[0]
    for pos, i in enumerate(order):
        beta[1 + i] = beta_sorted[1 + pos]
    return RegressionModel(idx, beta, r2, residual_ss, total_ss)


def loo_q2(data: Dataset, indices: Sequence[int]) -> float:
    """Leave-one-out PRESS-based q-squared, a secondary estimation-power statistic.

    Not part of the GA objective. Returns NaN when some observation has
    leverage ~1 (the deleted-residual is undefined there).
    """
    idx = _check_indices(data, indices)
    y = data.property_values
    x, q, r = _design_qr(data, idx)
    beta = solve_triangular(r, q.T @ y)
    resid = y - x @ beta
    leverage = np.einsum("ij,ij->i", q, q)
    if np.any(leverage >= 1.0 - 1e-10):
        return float("nan")
    press = float(np.sum((resid / (1.0 - leverage)) ** 2))
    centered = y - y.mean()
    return 1.0 - press / float(centered @ centered)
