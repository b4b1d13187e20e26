"""Seeded ensembles of controller runs and their empirical statistics.

Each run draws a scenario from a deterministic per-run seed, executes the
requested engine, and records two variance numbers: the realized variance
of the trajectory and the decomposed variance (sum of the per-source
components) that the closed-form bounds govern. Runs are independent, so
the ensemble may execute on a thread pool; results are always assembled in
run order, making output independent of scheduling.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analytics
from .errors import OdlcError
from .models import (ArrivalModel, BaseloadModel, derive_seed,
                     sample_scenario)
from .qp import SolverOptions, fleet_from_scenario, run_mpc
from .valley import run_valley_mpc

__all__ = ["RunConfig", "EnsembleResult", "CdfTable", "run_ensemble",
           "empirical_cdf", "empirical_percentile"]

ENGINES = ("valley", "qp")


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to run one scenario through an engine."""

    baseload: BaseloadModel
    arrivals: ArrivalModel
    engine: str = "valley"
    qp_max_power: float | None = None
    qp_options: SolverOptions | None = None

    def __post_init__(self) -> None:
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")

    @property
    def horizon(self) -> int:
        return self.baseload.horizon

    def digest(self) -> str:
        """Stable hash of the numeric content, for stamping outputs."""
        parts = [
            repr(tuple(self.baseload.mean_profile.tolist())),
            repr(self.baseload.filter.coefficients),
            repr((self.baseload.std, self.baseload.bound)),
            repr((self.arrivals.mean_energy, self.arrivals.std,
                  self.arrivals.bound, self.arrivals.allow_negative)),
            self.engine,
            repr(self.qp_max_power),
        ]
        return hashlib.sha256("|".join(parts).encode()).hexdigest()


@dataclass(frozen=True)
class EnsembleResult:
    """Variance samples from a seeded ensemble.

    ``samples`` are realized trajectory variances; ``decomposed_samples``
    the corresponding per-source sums (the bound-governed quantity).
    """

    samples: np.ndarray
    decomposed_samples: np.ndarray
    seeds: np.ndarray
    engine: str
    config_digest: str

    def __post_init__(self) -> None:
        for name in ("samples", "decomposed_samples"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            if np.any(arr < 0.0):
                raise ValueError(f"{name} must be non-negative variances")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        seeds = np.asarray(self.seeds, dtype=np.uint64).copy()
        seeds.setflags(write=False)
        object.__setattr__(self, "seeds", seeds)

    @property
    def count(self) -> int:
        return int(self.samples.shape[0])


@dataclass(frozen=True)
class CdfTable:
    """Right-continuous empirical CDF: unique sorted values and the
    cumulative probability at each."""

    values: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).copy()
        probs = np.asarray(self.probabilities, dtype=float).copy()
        if values.shape != probs.shape or values.ndim != 1 or values.shape[0] == 0:
            raise ValueError("CDF table needs matching non-empty columns")
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probabilities", probs)

    def evaluate(self, x: float) -> float:
        """Fraction of samples at or below ``x``."""
        idx = int(np.searchsorted(self.values, x, side="right"))
        return 0.0 if idx == 0 else float(self.probabilities[idx - 1])


def _run_one(config: RunConfig, seed: int) -> tuple[float, float]:
    T = config.horizon
    scenario = sample_scenario(config.baseload, config.arrivals, T, seed)
    if config.engine == "valley":
        trajectory = run_valley_mpc(scenario, config.baseload, config.arrivals)
    else:
        fleet = fleet_from_scenario(scenario, max_power=config.qp_max_power)
        trajectory, _ = run_mpc(fleet, scenario, config.baseload,
                                config.arrivals, config.qp_options)
    v1, v2 = analytics.v_decomposition(scenario, config.baseload.filter,
                                       config.arrivals.mean_energy, T)
    return trajectory.variance, v1 + v2


def run_ensemble(config: RunConfig, count: int, base_seed: int,
                 engine: str | None = None, workers: int = 1) -> EnsembleResult:
    """Run ``count`` seeded scenarios and collect their variance samples.

    Run ``i`` uses a seed derived deterministically from (base_seed, i), so
    identical inputs reproduce identical outputs, and disjoint index ranges
    can run anywhere and be merged.
    """
    if count < 1:
        raise ValueError("ensemble needs at least one run")
    if engine is not None and engine != config.engine:
        config = RunConfig(baseload=config.baseload, arrivals=config.arrivals,
                           engine=engine, qp_max_power=config.qp_max_power,
                           qp_options=config.qp_options)
    seeds = np.array([derive_seed(base_seed, i) for i in range(count)],
                     dtype=np.uint64)

    def worker(i: int) -> tuple[float, float]:
        try:
            return _run_one(config, int(seeds[i]))
        except OdlcError as err:
            raise type(err)(f"run {i} (seed {int(seeds[i])}): {err}") from err

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(worker, range(count)))
    else:
        results = [worker(i) for i in range(count)]

    realized = np.array([r[0] for r in results])
    decomposed = np.array([r[1] for r in results])
    return EnsembleResult(samples=realized, decomposed_samples=decomposed,
                          seeds=seeds, engine=config.engine,
                          config_digest=config.digest())


def empirical_cdf(result: EnsembleResult | np.ndarray) -> CdfTable:
    """Empirical CDF of the realized variance samples."""
    samples = result.samples if isinstance(result, EnsembleResult) else np.asarray(result, dtype=float)
    if samples.shape[0] == 0:
        raise ValueError("cannot build a CDF from no samples")
    values, counts = np.unique(samples, return_counts=True)
    probs = np.cumsum(counts) / samples.shape[0]
    return CdfTable(values=values, probabilities=probs)


def empirical_percentile(result: EnsembleResult | np.ndarray, eta: float) -> float:
    """Lower order-statistic percentile: the ceil(eta * M)-th smallest sample.

    Always an attained sample value, which keeps bound comparisons
    conservative.
    """
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie strictly between 0 and 1")
    samples = result.samples if isinstance(result, EnsembleResult) else np.asarray(result, dtype=float)
    M = samples.shape[0]
    if M == 0:
        raise ValueError("cannot take a percentile of no samples")
    k = int(np.ceil(eta * M))
    return float(np.sort(samples)[k - 1])
