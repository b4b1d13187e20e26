"""Aggregate-level shrinking-horizon controller.

Valid whenever a flat (valley-filling) schedule exists at every step: the
aggregate load then equals the remaining obligations spread evenly over
the remaining horizon, so the whole controller reduces to a scalar
remaining-energy recursion and never needs per-device schedules. This is
the fast engine the closed-form analysis in :mod:`odlc.analytics` tracks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytics import load_variance
from .models import (ArrivalModel, BaseloadModel, ScenarioDraw,
                     expected_future_arrivals, predict_baseload)

__all__ = [
    "AggregateTrajectory",
    "RemainingEnergyState",
    "valley_level",
    "run_valley_mpc",
    "check_valley_filling",
]

#: Default relative flatness tolerance: two orders above solver tolerance.
FLATNESS_TOL = 1e-6


@dataclass(frozen=True)
class RemainingEnergyState:
    """Aggregate deferrable backlog at the start of a slot.

    At slot 1, the backlog is exactly the energy that arrived at slot 1
    (no pre-horizon carryover). Advancing subtracts the energy served this
    slot and folds in the next slot's arrivals.
    """

    energy: float
    slot: int

    def __post_init__(self) -> None:
        if self.slot < 1:
            raise ValueError("slot index starts at 1")

    @classmethod
    def initial(cls, scenario: ScenarioDraw) -> "RemainingEnergyState":
        return cls(energy=float(scenario.a[0]), slot=1)

    def advance(self, served: float, arriving: float) -> "RemainingEnergyState":
        return RemainingEnergyState(energy=self.energy - served + arriving,
                                    slot=self.slot + 1)


@dataclass(frozen=True)
class AggregateTrajectory:
    """Controlled aggregate load over the horizon.

    ``levels`` holds the flat level planned at each step (identical to the
    committed load for this engine). ``variance`` is recomputed from ``d``
    at construction. ``negative_power_slots`` counts slots where the
    implied deferrable consumption d(t) - b(t) went negative; the engine
    reports rather than clamps these so the closed-form oracle equalities
    stay exact.
    """

    d: np.ndarray
    levels: np.ndarray
    variance: float
    negative_power_slots: int = 0

    def __post_init__(self) -> None:
        d = np.asarray(self.d, dtype=float).copy()
        levels = np.asarray(self.levels, dtype=float).copy()
        if d.ndim != 1 or d.shape[0] == 0:
            raise ValueError("trajectory must be a non-empty vector")
        if levels.shape != d.shape:
            raise ValueError("levels must match the trajectory length")
        d.setflags(write=False)
        levels.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "levels", levels)
        recomputed = load_variance(d)
        if not np.isclose(self.variance, recomputed, rtol=1e-9, atol=1e-15):
            raise ValueError("stored variance disagrees with the trajectory")

    @property
    def horizon(self) -> int:
        return int(self.d.shape[0])


def valley_level(t: int, remaining_energy: float, expected_arrivals: float,
                 b_t: np.ndarray) -> float:
    """Flat aggregate level at step ``t``.

    Remaining deferrable energy, expected future arrivals, and the
    predicted baseload tail, spread evenly over slots t..T.
    """
    b_t = np.asarray(b_t, dtype=float)
    T = b_t.shape[0]
    if not 1 <= t <= T:
        raise ValueError(f"step must lie in [1, {T}], got {t}")
    tail = float(b_t[t - 1:].sum())
    return (remaining_energy + expected_arrivals + tail) / (T - t + 1)


def run_valley_mpc(scenario: ScenarioDraw, baseload: BaseloadModel,
                   arrivals: ArrivalModel) -> AggregateTrajectory:
    """Run the aggregate controller over one scenario.

    Per step: refresh the baseload prediction from the innovations observed
    so far, commit the flat level, then roll the remaining energy forward
    by what was actually served and what newly arrived.
    """
    T = scenario.horizon
    if T != baseload.horizon:
        raise ValueError("scenario horizon does not match the baseload model")
    d = np.empty(T)
    state = RemainingEnergyState.initial(scenario)
    for t in range(1, T + 1):
        b_t = predict_baseload(baseload, scenario.e, t)
        d[t - 1] = valley_level(t, state.energy,
                                expected_future_arrivals(arrivals, t, T), b_t)
        if t < T:
            served = d[t - 1] - scenario.realized_baseload[t - 1]
            state = state.advance(served, float(scenario.a[t]))
    power = d - scenario.realized_baseload
    return AggregateTrajectory(d=d, levels=d.copy(),
                               variance=load_variance(d),
                               negative_power_slots=int(np.sum(power < 0.0)))


def check_valley_filling(aggregate, tol: float = FLATNESS_TOL) -> bool:
    """Whether a remaining-horizon aggregate is flat to tolerance.

    Spread is compared against ``tol * max(1, |mean|)`` so the check is
    relative for large levels and absolute near zero.
    """
    values = np.asarray(aggregate, dtype=float)
    if values.ndim != 1 or values.shape[0] == 0:
        raise ValueError("aggregate slice must be a non-empty vector")
    spread = float(values.max() - values.min())
    return spread <= tol * max(1.0, abs(float(values.mean())))
