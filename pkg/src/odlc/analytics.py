"""Closed-form performance analysis of the shrinking-horizon controller.

Everything here is a pure function of the model parameters or of a single
scenario: the load-variance functional, its exact matrix evaluation and
its split into arrival-driven and baseload-driven components, the expected
value, the bounded-error worst case, a Bernstein-type tail bound with its
rate constant, a variance upper bound, and the Chebyshev comparison.

Two variance notions appear throughout the package:

* the *realized* variance of a trajectory, ``load_variance(d)``, which the
  engines report, and
* the *decomposed* variance ``V1 + V2`` from :func:`v_decomposition`, the
  sum of the variances each error source would cause alone.

The two differ pathwise by :func:`interaction_term` (zero in expectation).
The expectation formula holds for both; the worst-case, tail, and variance
bounds govern the decomposed variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import CausalFilter, ScenarioDraw

__all__ = [
    "ErrorBounds",
    "AnalyticReport",
    "load_variance",
    "v_decomposition",
    "interaction_term",
    "matrix_variance",
    "expected_variance",
    "worst_case_variance",
    "lambda1",
    "lambda1_trace",
    "bernstein_tail",
    "percentile_bound",
    "variance_upper_bound",
    "chebyshev_tail",
    "build_report",
]


@dataclass(frozen=True)
class ErrorBounds:
    """Almost-sure magnitude limits of the two error sources."""

    arrival: float
    baseload: float

    def __post_init__(self) -> None:
        if self.arrival < 0 or self.baseload < 0:
            raise ValueError("error bounds must be non-negative")

    @property
    def combined(self) -> float:
        """The larger of the two bounds; the tail bound depends on this."""
        return max(self.arrival, self.baseload)


def load_variance(d) -> float:
    """Time-averaged squared deviation of a load profile from its mean."""
    d = np.asarray(d, dtype=float)
    if d.ndim != 1 or d.shape[0] == 0:
        raise ValueError("load profile must be a non-empty vector")
    dev = d - d.mean()
    return float(dev @ dev / d.shape[0])


def _deviation_rows(values: np.ndarray) -> np.ndarray:
    """Apply the controller's error-to-deviation pattern to a vector.

    Row t is sum_{tau<=t} (tau-1)/(T(T-tau+1)) * v(tau)  -  (1/T) sum_{tau>t} v(tau),
    evaluated for t = 1..T with prefix sums in O(T).
    """
    T = values.shape[0]
    tau = np.arange(1.0, T + 1.0)
    weights = (tau - 1.0) / (T * (T - tau + 1.0))
    prefix = np.cumsum(weights * values)
    tail = values.sum() - np.cumsum(values)
    return prefix - tail / T


def _split_inputs(scenario: ScenarioDraw, filt: CausalFilter,
                  arrival_mean: float, T: int) -> tuple[np.ndarray, np.ndarray]:
    if scenario.horizon != T:
        raise ValueError(f"scenario covers {scenario.horizon} slots, expected {T}")
    x = scenario.a - arrival_mean
    F = filt.cumulative_profile(T)
    y = scenario.e * F[::-1]  # slot t pairs with F(T - t)
    return x, y


def v_decomposition(scenario: ScenarioDraw, filt: CausalFilter,
                    arrival_mean: float, T: int) -> tuple[float, float]:
    """Variance components attributable to each error source alone.

    Returns (V1, V2): the load variance the controller would realize if
    only arrival errors, respectively only baseload errors, were present.
    Their sum omits the cross term; see :func:`interaction_term`.
    """
    x, y = _split_inputs(scenario, filt, arrival_mean, T)
    rows_x = _deviation_rows(x)
    rows_y = _deviation_rows(y)
    return float(rows_x @ rows_x / T), float(rows_y @ rows_y / T)


def interaction_term(scenario: ScenarioDraw, filt: CausalFilter,
                     arrival_mean: float, T: int) -> float:
    """Cross contribution of the two error sources to the realized variance.

    Zero in expectation (the sources are independent and mean-centered) but
    generally nonzero pathwise; ``V1 + V2 + interaction`` equals the
    realized variance exactly.
    """
    x, y = _split_inputs(scenario, filt, arrival_mean, T)
    return float(2.0 * (_deviation_rows(x) @ _deviation_rows(y)) / T)


def matrix_variance(scenario: ScenarioDraw, filt: CausalFilter,
                    arrival_mean: float, T: int) -> float:
    """Exact closed-form evaluation of the realized load variance.

    Independent of the simulation engines: applies the deviation pattern to
    the combined error vector and matches the recursion's variance to float
    precision. Used as the oracle in the acceptance suite.
    """
    x, y = _split_inputs(scenario, filt, arrival_mean, T)
    rows = _deviation_rows(x + y)
    return float(rows @ rows / T)


def expected_variance(T: int, arrival_std: float, noise_std: float,
                      filt: CausalFilter) -> float:
    """Expected load variance under the stochastic error model."""
    if T < 1:
        raise ValueError("horizon must be at least 1")
    arrival_term = 0.0
    if T >= 2:
        arrival_term = arrival_std ** 2 / T * float(np.sum(1.0 / np.arange(2.0, T + 1.0)))
    F = filt.cumulative_profile(T)
    t = np.arange(T, dtype=float)
    baseload_term = noise_std ** 2 / T ** 2 * float(np.sum(F ** 2 * (T - t - 1.0) / (t + 1.0)))
    return arrival_term + baseload_term


def worst_case_variance(T: int, bounds: ErrorBounds, filt: CausalFilter) -> float:
    """Supremum of the decomposed load variance over bounded errors.

    The arrival part has a harmonic closed form; the baseload part is a
    double sum over cumulative-filter magnitudes, evaluated in O(T) via
    prefix sums (|F(tau)F(s)| factorizes into |F(tau)||F(s)|).
    """
    if T < 1:
        raise ValueError("horizon must be at least 1")
    harmonic = float(np.sum(1.0 / np.arange(1.0, T + 1.0)))
    arrival_term = bounds.arrival ** 2 * (1.0 - harmonic / T)
    g = np.abs(filt.cumulative_profile(T))
    G = np.cumsum(g)
    G_prev = np.concatenate(([0.0], G[:-1]))
    m = np.arange(T, dtype=float)
    coef = T / (m + 1.0) - 1.0
    baseload_term = bounds.baseload ** 2 / T ** 2 * float(
        np.sum(coef * (G ** 2 - G_prev ** 2)))
    return arrival_term + baseload_term


def _filter_rate_sum(T: int, filt: CausalFilter, shift: float) -> float:
    F = filt.cumulative_profile(T)
    t = np.arange(T, dtype=float)
    return float(np.sum(F ** 2 * (T - t + shift) / (t + 1.0))) / T ** 2


def lambda1(T: int, filt: CausalFilter) -> float:
    """Concentration rate constant of the tail bound (statement form).

    The larger of ln(T)/T and the cumulative-filter sum with the
    (T - t + 1)/(t + 1) factor. See :func:`lambda1_trace` for the sharper
    form from the underlying trace computation.
    """
    if T < 2:
        raise ValueError("rate constant requires a horizon of at least 2")
    return max(math.log(T) / T, _filter_rate_sum(T, filt, 1.0))


def lambda1_trace(T: int, filt: CausalFilter) -> float:
    """Sharper variant of :func:`lambda1` using the exact trace values:
    the harmonic sum in place of ln(T) and the (T - t - 1) factor.

    Never exceeds :func:`lambda1`; reports carry both, and the larger
    statement form feeds the bounds so they are never silently tightened.
    """
    if T < 2:
        raise ValueError("rate constant requires a horizon of at least 2")
    harmonic_tail = float(np.sum(1.0 / np.arange(2.0, T + 1.0))) / T
    return max(harmonic_tail, _filter_rate_sum(T, filt, -1.0))


def bernstein_tail(dev: float, expected_v: float, bounds: ErrorBounds,
                   rate: float) -> float:
    """Bernstein-type bound on P(V - E[V] > dev) for the decomposed variance.

    Returns 1 at dev = 0. With a zero error bound or zero rate the bound
    degenerates; 0 is returned for positive deviations in that case (the
    variance is then deterministic).
    """
    if dev < 0:
        raise ValueError("deviation must be non-negative")
    if expected_v < 0:
        raise ValueError("expected variance must be non-negative")
    if dev == 0.0:
        return 1.0
    eps = bounds.combined
    if eps == 0.0 or rate <= 0.0:
        return 0.0
    return float(math.exp(-dev ** 2 / (16.0 * eps ** 2 * rate * (2.0 * expected_v + dev))))


def percentile_bound(eta: float, expected_v: float, bounds: ErrorBounds,
                     rate: float) -> float:
    """Smallest level c such that the tail bound certifies P(V <= c) >= eta.

    Closed-form inversion of :func:`bernstein_tail`: with
    beta = 16 eps^2 rate ln(1/(1-eta)), the deviation solves
    dev^2 = beta (2 E[V] + dev).
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie strictly between 0 and 1")
    beta = 16.0 * bounds.combined ** 2 * rate * math.log(1.0 / (1.0 - eta))
    dev = 0.5 * (beta + math.sqrt(beta ** 2 + 8.0 * beta * expected_v))
    return expected_v + dev


def variance_upper_bound(T: int, bounds: ErrorBounds, arrival_std: float,
                         noise_std: float, filt: CausalFilter) -> float:
    """Upper bound on the variance of the (decomposed) load variance."""
    if T < 2:
        raise ValueError("variance bound requires a horizon of at least 2")
    arrival_part = 4.0 * bounds.arrival * arrival_std * math.log(T) / T
    baseload_part = 4.0 * bounds.baseload * noise_std * _filter_rate_sum(T, filt, 1.0)
    return arrival_part ** 2 + baseload_part ** 2


def chebyshev_tail(dev: float, variance_bound: float) -> float:
    """Chebyshev bound on P(|V - E[V]| > dev) given a variance bound."""
    if dev <= 0:
        raise ValueError("deviation must be positive")
    if variance_bound < 0:
        raise ValueError("variance bound must be non-negative")
    return min(1.0, variance_bound / dev ** 2)


@dataclass(frozen=True)
class AnalyticReport:
    """All closed-form quantities for one parameter set.

    ``rate`` is the statement-form rate constant used in the bounds;
    ``rate_trace`` the sharper trace variant, reported for comparison.
    ``tail_curve`` tabulates (deviation, Bernstein bound) on a grid that
    starts at deviation 0 (bound 1).
    """

    expected_v: float
    worst_case_v: float
    rate: float
    rate_trace: float
    variance_bound: float
    tail_curve: tuple[tuple[float, float], ...]
    percentile_bound_90: float

    def to_dict(self) -> dict:
        return {
            "expected_v": self.expected_v,
            "worst_case_v": self.worst_case_v,
            "lambda1": {
                "statement": self.rate,
                "trace": self.rate_trace,
                "used_for_bounds": "statement",
            },
            "variance_bound": self.variance_bound,
            "tail_curve": [[dev, bound] for dev, bound in self.tail_curve],
            "percentile_bound_90": self.percentile_bound_90,
        }


def build_report(T: int, arrival_std: float, noise_std: float,
                 bounds: ErrorBounds, filt: CausalFilter,
                 tail_points: int = 10) -> AnalyticReport:
    """Evaluate every closed form for one parameter set."""
    ev = expected_variance(T, arrival_std, noise_std, filt)
    wc = worst_case_variance(T, bounds, filt)
    rate = lambda1(T, filt)
    rate_tr = lambda1_trace(T, filt)
    vb = variance_upper_bound(T, bounds, arrival_std, noise_std, filt)
    span = wc - ev
    if span <= 0.0:
        span = ev if ev > 0.0 else 1.0
    devs = np.linspace(0.0, span, tail_points)
    curve = tuple((float(dev), bernstein_tail(float(dev), ev, bounds, rate))
                  for dev in devs)
    return AnalyticReport(
        expected_v=ev,
        worst_case_v=wc,
        rate=rate,
        rate_trace=rate_tr,
        variance_bound=vb,
        tail_curve=curve,
        percentile_bound_90=percentile_bound(0.9, ev, bounds, rate),
    )
