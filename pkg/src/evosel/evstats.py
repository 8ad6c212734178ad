"""Distribution fits and summaries for batches of run observables.

Final best fitness and improvement-event counts are characterized with the
generalized extreme value family, estimated by the method of L-moments
(Hosking's rational approximation) with optional likelihood refinement; the
shape sign classifies the tail as Weibull (type III), Gumbel (type I) or
Frechet (type II). Relative improvement moments in (0, 1] get a
one-parameter log-Pearson III reduction: the negated logs are modeled as a
gamma with location fixed at 0 and scale tied to their mean, leaving the
shape alpha as the single free parameter. A full three-parameter fit of the
same family is exposed for comparison.

Shape convention: positive shape = heavy (Frechet) tail, matching the
common location/scale/shape quantile form; scipy's genextreme uses the
opposite sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import stats

#: |shape| at or below this is called Gumbel.
TAIL_EPSILON = 0.02
#: |shape| within this of the band edge is additionally flagged uncertain.
TAIL_UNCERTAIN_MARGIN = 0.02

EULER_GAMMA = 0.5772156649015329


class EvstatsError(ValueError):
    pass


class DegenerateSample(EvstatsError):
    pass


class NonPositiveValue(EvstatsError):
    pass


class Ecdf:
    """Right-continuous empirical CDF, queryable at arbitrary points."""

    def __init__(self, values: Sequence[float]):
        arr = np.sort(np.asarray(values, dtype=float))
        if arr.size == 0:
            raise DegenerateSample("empty sample")
        self._sorted = arr

    def __call__(self, x):
        pos = np.searchsorted(self._sorted, np.asarray(x, dtype=float), side="right")
        out = pos / self._sorted.size
        return float(out) if np.isscalar(x) or np.ndim(x) == 0 else out

    @property
    def support(self) -> np.ndarray:
        return self._sorted

    def table(self) -> list[tuple[float, float]]:
        """(value, cdf) at each distinct sample point."""
        xs = np.unique(self._sorted)
        return [(float(x), self(x)) for x in xs]


def prob_reach(traces: Iterable[Sequence[float]], optimum: float, fraction: float,
               budget: int) -> float:
    """Share of runs whose best-so-far trace reaches fraction*optimum by generation ``budget``."""
    if optimum <= 0:
        raise EvstatsError("optimum must be positive")
    if not 0.0 < fraction <= 1.0:
        raise EvstatsError("fraction must be in (0, 1]")
    if budget < 0:
        raise EvstatsError("budget must be >= 0")
    threshold = fraction * optimum
    total = 0
    reached = 0
    for trace in traces:
        total += 1
        upto = trace[: budget + 1]
        if max(upto) >= threshold:
            reached += 1
    if total == 0:
        raise EvstatsError("no runs supplied")
    return reached / total


def sample_lmoments(values: np.ndarray) -> tuple[float, float, float]:
    """Unbiased sample L-moments (l1, l2, l3) from the order statistics."""
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n < 3:
        raise DegenerateSample("need at least 3 values for L-moments")
    j = np.arange(n)
    b0 = x.mean()
    b1 = np.sum(j * x) / (n * (n - 1))
    b2 = np.sum(j * (j - 1) * x) / (n * (n - 1) * (n - 2))
    l1 = b0
    l2 = 2 * b1 - b0
    l3 = 6 * b2 - 6 * b1 + b0
    return float(l1), float(l2), float(l3)


@dataclass(frozen=True)
class GevFit:
    """Fitted GEV parameters with the tail class of the shape estimate.

    ``orientation="minima"`` means the fit describes the negated sample; the
    cdf/quantile methods translate back to the original scale.
    """

    location: float
    scale: float
    shape: float
    tail: str
    uncertain: bool
    ks: float
    orientation: str = "maxima"

    def _frozen(self):
        # scipy's shape c is the negated common-convention shape
        return stats.genextreme(c=-self.shape, loc=self.location, scale=self.scale)

    def cdf(self, x):
        if self.orientation == "minima":
            return 1.0 - self._frozen().cdf(-np.asarray(x, dtype=float))
        return self._frozen().cdf(x)

    def quantile(self, q: float) -> float:
        if not 0.0 < q < 1.0:
            raise EvstatsError("quantile level must be in (0, 1)")
        if self.orientation == "minima":
            return float(-self._frozen().ppf(1.0 - q))
        return float(self._frozen().ppf(q))


def classify_tail(shape: float, epsilon: float = TAIL_EPSILON) -> tuple[str, bool]:
    if shape < -epsilon:
        tail = "WeibullIII"
    elif shape > epsilon:
        tail = "FrechetII"
    else:
        tail = "GumbelI"
    uncertain = abs(abs(shape) - epsilon) <= TAIL_UNCERTAIN_MARGIN
    return tail, uncertain


def fit_gev(values: Sequence[float], orientation: str = "maxima", refine: bool = False) -> GevFit:
    """Fit a GEV by L-moments; optionally refine by maximum likelihood.

    ``orientation="minima"`` fits the extreme-minima law (the GEV of the
    negated sample). Requires at least 20 distinct values; fewer raise
    DegenerateSample. The Kolmogorov-Smirnov statistic of the fit is
    reported descriptively.
    """
    if orientation not in ("maxima", "minima"):
        raise EvstatsError("orientation must be 'maxima' or 'minima'")
    arr = np.asarray(values, dtype=float)
    if np.unique(arr).size < 20:
        raise DegenerateSample("need at least 20 distinct values for a GEV fit")
    work = -arr if orientation == "minima" else arr

    l1, l2, l3 = sample_lmoments(work)
    if l2 <= 0:
        raise DegenerateSample("second L-moment is not positive")
    t3 = l3 / l2
    # Hosking's rational approximation for the GEV shape (his k = -shape here)
    c = 2.0 / (3.0 + t3) - math.log(2.0) / math.log(3.0)
    k = 7.8590 * c + 2.9554 * c * c
    if abs(k) < 1e-8:
        scale = l2 / math.log(2.0)
        location = l1 - EULER_GAMMA * scale
        k = 0.0
    else:
        gam = math.gamma(1.0 + k)
        scale = l2 * k / (gam * (1.0 - 2.0 ** (-k)))
        location = l1 - scale * (1.0 - gam) / k

    if refine:
        c_mle, loc_mle, scale_mle = stats.genextreme.fit(work, k, loc=location, scale=scale)
        k, location, scale = float(c_mle), float(loc_mle), float(scale_mle)

    shape = -k
    tail, uncertain = classify_tail(shape)
    ks = float(stats.kstest(work, stats.genextreme(c=k, loc=location, scale=scale).cdf).statistic)
    return GevFit(float(location), float(scale), float(shape), tail, uncertain, ks, orientation)


def lottery(fit: GevFit, q: float) -> float:
    """Quantile of the fitted law; upper q for the lucky report, lower q for the unlucky one."""
    return fit.quantile(q)


LUCKY_LEVELS = (0.90, 0.95, 0.99)
UNLUCKY_LEVELS = (0.01, 0.05, 0.10)


@dataclass(frozen=True)
class Lp3Fit:
    """One-parameter log-Pearson III fit of values in (0, 1].

    W = -ln(V) is modeled as Gamma(alpha, scale) with location 0 and
    scale = mean(W)/alpha, so alpha is the single free parameter.
    """

    alpha: float
    log_scale: float
    ks: float

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        return stats.gamma.sf(-np.log(v), a=self.alpha, scale=self.log_scale)


def fit_lp3(values: Sequence[float]) -> Lp3Fit:
    """Fit the one-parameter log-Pearson III reduction by moments of the logs.

    alpha = mean(W)^2 / var(W) with W = -ln(values); the gamma scale is then
    mean(W)/alpha. All values must be positive (and at most 1, so W >= 0);
    an all-equal sample is degenerate.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise DegenerateSample("need at least 2 values")
    if np.any(arr <= 0.0):
        raise NonPositiveValue("all values must be positive")
    if np.any(arr > 1.0):
        raise EvstatsError("values must lie in (0, 1]")
    w = -np.log(arr)
    mean = float(w.mean())
    var = float(w.var(ddof=1))
    if var == 0.0 or mean == 0.0:
        raise DegenerateSample("sample has no spread on the log scale")
    alpha = mean * mean / var
    log_scale = mean / alpha
    fit = Lp3Fit(alpha, log_scale, 0.0)
    ks = float(stats.kstest(arr, fit.cdf).statistic)
    return Lp3Fit(alpha, log_scale, ks)


def fit_lp3_full(values: Sequence[float]) -> tuple[float, float, float, float]:
    """Full three-parameter fit of the same family: gamma MLE on -ln(values).

    Returns (alpha, location, scale, ks) for comparison with the
    one-parameter reduction.
    """
    arr = np.asarray(values, dtype=float)
    if np.any(arr <= 0.0):
        raise NonPositiveValue("all values must be positive")
    w = -np.log(arr)
    if np.ptp(w) == 0.0:
        raise DegenerateSample("sample has no spread on the log scale")
    alpha, loc, scale = stats.gamma.fit(w)
    ks = float(stats.kstest(w, stats.gamma(a=alpha, loc=loc, scale=scale).cdf).statistic)
    return float(alpha), float(loc), float(scale), ks


class VarianceSplit(NamedTuple):
    between_sd: float
    within_sd: float


def variance_split(per_group: Mapping[str, Sequence[float]]) -> VarianceSplit:
    """One-way decomposition of the pooled variance into between and within parts.

    between = sum_g n_g (mean_g - grand)^2 / N, within = pooled squared
    deviation from group means / N, so between + within equals the pooled
    population variance exactly. Returns the square roots.
    """
    groups = [np.asarray(v, dtype=float) for v in per_group.values()]
    if not groups or any(g.size == 0 for g in groups):
        raise EvstatsError("every group needs at least one value")
    total_n = sum(g.size for g in groups)
    grand = sum(float(g.sum()) for g in groups) / total_n
    between_ss = sum(g.size * (float(g.mean()) - grand) ** 2 for g in groups)
    within_ss = sum(float(((g - g.mean()) ** 2).sum()) for g in groups)
    return VarianceSplit(math.sqrt(between_ss / total_n), math.sqrt(within_ss / total_n))
