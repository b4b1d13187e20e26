"""Per-device shrinking-horizon controller.

At every step this solves the remaining-horizon quadratic program over all
arrived devices plus a pseudo-load standing in for expected future
arrivals: minimize the sum of squared aggregate loads subject to per-slot
power boxes and exact total-energy constraints. Because total energy over
the remaining horizon is fixed by the equality constraints, minimizing the
squared aggregate coincides with minimizing its variance.

The solver is projected gradient with the exact Euclidean projection onto
each profile's box-plus-sum set, a fixed 1/L step, and deterministic
iteration order, so runs are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytics import load_variance
from .errors import ConvergenceError, InfeasibleError, SolverError
from .models import (ArrivalModel, BaseloadModel, ScenarioDraw,
                     expected_future_arrivals, predict_baseload)
from .valley import AggregateTrajectory

__all__ = [
    "DeferrableLoad",
    "PseudoLoadBounds",
    "SolverOptions",
    "Schedule",
    "project_box_sum",
    "solve_odlc_t",
    "solve_odlc_offline",
    "run_mpc",
    "fleet_from_scenario",
]

_SUM_TOL = 1e-9
# 64 halvings shrink any bracket below double-precision resolution; the
# redistribution pass afterwards restores the sum exactly.
_BISECTION_ITERS = 64


@dataclass(frozen=True)
class DeferrableLoad:
    """One controllable device: per-slot power box plus a total-energy need.

    Bounds are full-horizon arrays (kW) that must be zero outside the
    [arrival, deadline] window; ``energy`` (kWh) must be reachable within
    the box.
    """

    arrival: int
    deadline: int
    p_min: np.ndarray
    p_max: np.ndarray
    energy: float

    def __post_init__(self) -> None:
        p_min = np.asarray(self.p_min, dtype=float).copy()
        p_max = np.asarray(self.p_max, dtype=float).copy()
        if p_min.shape != p_max.shape or p_min.ndim != 1:
            raise ValueError("power bounds must be equal-length vectors")
        T = p_min.shape[0]
        if not 1 <= self.arrival <= self.deadline <= T:
            raise ValueError("load window must satisfy 1 <= arrival <= deadline <= T")
        if np.any(p_min > p_max):
            raise ValueError("lower power bound exceeds upper bound")
        window = np.zeros(T, dtype=bool)
        window[self.arrival - 1:self.deadline] = True
        if np.any(p_min[~window] != 0.0) or np.any(p_max[~window] != 0.0):
            raise ValueError("power bounds must be zero outside the load window")
        if not p_min.sum() - _SUM_TOL <= self.energy <= p_max.sum() + _SUM_TOL:
            raise ValueError("energy requirement not reachable within the bounds")
        p_min.setflags(write=False)
        p_max.setflags(write=False)
        object.__setattr__(self, "p_min", p_min)
        object.__setattr__(self, "p_max", p_max)

    @classmethod
    def window(cls, arrival: int, deadline: int, energy: float, T: int,
               max_power: float | None = None,
               min_power: float = 0.0) -> "DeferrableLoad":
        """Build a load with constant bounds on its availability window.

        ``max_power=None`` gives the most permissive feasible cap: the
        device may take its whole energy in a single slot.
        """
        if max_power is None:
            max_power = max(float(energy), 0.0)
        p_min = np.zeros(T)
        p_max = np.zeros(T)
        p_min[arrival - 1:deadline] = min_power
        p_max[arrival - 1:deadline] = max_power
        return cls(arrival=arrival, deadline=deadline, p_min=p_min,
                   p_max=p_max, energy=float(energy))


@dataclass(frozen=True)
class PseudoLoadBounds:
    """Box and total constraints for the future-arrival stand-in.

    Arrays cover the remaining horizon; the first entry (the current slot)
    must be pinned to zero, since energy that has not arrived cannot be
    consumed now.
    """

    q_min: np.ndarray
    q_max: np.ndarray
    total: float

    def __post_init__(self) -> None:
        q_min = np.asarray(self.q_min, dtype=float).copy()
        q_max = np.asarray(self.q_max, dtype=float).copy()
        if q_min.shape != q_max.shape or q_min.ndim != 1 or q_min.shape[0] == 0:
            raise ValueError("pseudo-load bounds must be equal-length vectors")
        if q_min[0] != 0.0 or q_max[0] != 0.0:
            raise ValueError("pseudo-load must be pinned to zero at the current slot")
        if np.any(q_min > q_max):
            raise ValueError("pseudo-load lower bound exceeds upper bound")
        if not q_min.sum() - _SUM_TOL <= self.total <= q_max.sum() + _SUM_TOL:
            raise ValueError("pseudo-load total not reachable within the bounds")
        q_min.setflags(write=False)
        q_max.setflags(write=False)
        object.__setattr__(self, "q_min", q_min)
        object.__setattr__(self, "q_max", q_max)

    @classmethod
    def default(cls, horizon: int, total: float) -> "PseudoLoadBounds":
        """No-historical-data fallback: q in [0, total] per future slot."""
        q_min = np.zeros(horizon)
        q_max = np.full(horizon, float(total))
        q_max[0] = 0.0
        return cls(q_min=q_min, q_max=q_max, total=float(total))


@dataclass(frozen=True)
class SolverOptions:
    kkt_tol: float = 1e-8
    max_iters: int = 50_000
    step_rule: str = "lipschitz-constant"
    track_objective: bool = False

    def __post_init__(self) -> None:
        if self.kkt_tol <= 0:
            raise ValueError("kkt_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass(frozen=True)
class Schedule:
    """Solution of one remaining-horizon program.

    ``p`` has one row per input load over the remaining slots; ``q`` is the
    pseudo-load profile; ``planned_aggregate`` the implied aggregate load;
    ``objective`` its sum of squares.
    """

    p: np.ndarray
    q: np.ndarray
    objective: float
    planned_aggregate: np.ndarray
    iterations: int
    objective_history: np.ndarray | None = None


def _project_rows(v: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                  totals: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of ``v`` onto {x : l <= x <= u, sum x = total}.

    Shifts every coordinate by a per-row scalar found with bisection, then
    spreads the residual over unclipped coordinates so the sum constraint
    holds to the last bit.
    """
    lo = np.min(lower - v, axis=1)
    hi = np.max(upper - v, axis=1)
    for _ in range(_BISECTION_ITERS):
        mid = 0.5 * (lo + hi)
        s = np.clip(v + mid[:, None], lower, upper).sum(axis=1)
        too_high = s > totals
        hi = np.where(too_high, mid, hi)
        lo = np.where(too_high, lo, mid)
    x = np.clip(v + (0.5 * (lo + hi))[:, None], lower, upper)
    residual = totals - x.sum(axis=1)
    # Exactness pass: push any leftover into coordinates that can absorb it.
    for _ in range(2):
        needs = np.abs(residual) > 0.0
        if not np.any(needs):
            break
        room = np.where(residual[:, None] > 0.0, x < upper, x > lower) & needs[:, None]
        counts = room.sum(axis=1)
        counts = np.maximum(counts, 1)
        x = np.clip(x + room * (residual / counts)[:, None], lower, upper)
        residual = totals - x.sum(axis=1)
    return x


def project_box_sum(v, lower, upper, total: float) -> np.ndarray:
    """Closest point to ``v`` in {x : lower <= x <= upper, sum x = total}."""
    v = np.asarray(v, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not v.shape == lower.shape == upper.shape or v.ndim != 1:
        raise ValueError("value and bounds must be equal-length vectors")
    if np.any(lower > upper):
        raise ValueError("lower bound exceeds upper bound")
    slack = _SUM_TOL * max(1.0, abs(total))
    if not lower.sum() - slack <= total <= upper.sum() + slack:
        raise InfeasibleError(
            f"total {total} outside the reachable range "
            f"[{lower.sum()}, {upper.sum()}]")
    return _project_rows(v[None, :], lower[None, :], upper[None, :],
                         np.asarray([total]))[0]


@dataclass(frozen=True)
class _Stacked:
    """Remaining-horizon profiles stacked for the solver."""

    lower: np.ndarray   # (K, h)
    upper: np.ndarray   # (K, h)
    totals: np.ndarray  # (K,)


def _check_profile_feasible(lower: np.ndarray, upper: np.ndarray, total: float,
                            what: str) -> None:
    slack = _SUM_TOL * max(1.0, abs(total))
    if not lower.sum() - slack <= total <= upper.sum() + slack:
        raise InfeasibleError(
            f"{what}: required energy {total} outside the reachable range "
            f"[{lower.sum()}, {upper.sum()}]")


def _minimize_aggregate(stacked: _Stacked, b_tail: np.ndarray,
                        opts: SolverOptions,
                        initial: np.ndarray | None) -> tuple[np.ndarray, int, np.ndarray | None]:
    """Projected gradient on the stacked profiles with a fixed 1/L step."""
    K, h = stacked.lower.shape
    if initial is not None:
        z = _project_rows(np.asarray(initial, dtype=float), stacked.lower,
                          stacked.upper, stacked.totals)
    else:
        spread = np.repeat((stacked.totals / h)[:, None], h, axis=1)
        z = _project_rows(spread, stacked.lower, stacked.upper, stacked.totals)
    if h == 1:
        # Single slot: every profile is pinned to its total.
        return z, 0, None
    step = 1.0 / (2.0 * K)
    history = [] if opts.track_objective else None
    for iteration in range(1, opts.max_iters + 1):
        agg = z.sum(axis=0) + b_tail
        if history is not None:
            history.append(float(agg @ agg))
        z_new = _project_rows(z - step * (2.0 * agg), stacked.lower,
                              stacked.upper, stacked.totals)
        residual = float(np.max(np.abs(z_new - z))) / step
        z = z_new
        if residual <= opts.kkt_tol:
            hist = np.asarray(history) if history is not None else None
            return z, iteration, hist
    raise ConvergenceError(
        f"projected gradient did not reach tolerance {opts.kkt_tol} "
        f"within {opts.max_iters} iterations")


def solve_odlc_t(b_t, expected_A: float, loads, t: int,
                 opts: SolverOptions | None = None,
                 remaining=None,
                 pseudo: PseudoLoadBounds | None = None,
                 initial: np.ndarray | None = None) -> Schedule:
    """Solve the remaining-horizon program at step ``t``.

    ``b_t`` is the full-horizon baseload prediction; ``loads`` the devices
    that have arrived, with ``remaining`` giving the energy each still owes
    (defaults to each load's total). The pseudo-load defaults to the
    [0, expected_A] box summing to ``expected_A``. ``initial`` optionally
    warm-starts the stacked (p, q) profiles.
    """
    opts = opts or SolverOptions()
    b_t = np.asarray(b_t, dtype=float)
    T = b_t.shape[0]
    if not 1 <= t <= T:
        raise ValueError(f"step must lie in [1, {T}], got {t}")
    h = T - t + 1
    b_tail = b_t[t - 1:]
    loads = list(loads)
    if remaining is None:
        remaining = [load.energy for load in loads]
    if len(remaining) != len(loads):
        raise ValueError("remaining energies must match the load list")

    rows_lower, rows_upper, totals = [], [], []
    for load, energy in zip(loads, remaining):
        lower = load.p_min[t - 1:]
        upper = load.p_max[t - 1:]
        _check_profile_feasible(lower, upper, energy,
                                f"load arriving at slot {load.arrival}")
        rows_lower.append(lower)
        rows_upper.append(upper)
        totals.append(float(energy))

    if pseudo is None:
        pseudo = PseudoLoadBounds.default(h, expected_A)
    if pseudo.q_min.shape[0] != h:
        raise ValueError("pseudo-load bounds must cover the remaining horizon")
    use_pseudo = pseudo.total != 0.0 or np.any(pseudo.q_max > 0.0) \
        or np.any(pseudo.q_min < 0.0)
    if use_pseudo:
        _check_profile_feasible(pseudo.q_min, pseudo.q_max, pseudo.total,
                                "pseudo-load")
        rows_lower.append(pseudo.q_min)
        rows_upper.append(pseudo.q_max)
        totals.append(float(pseudo.total))

    n_loads = len(loads)
    if not rows_lower:
        agg = b_tail.copy()
        return Schedule(p=np.zeros((0, h)), q=np.zeros(h),
                        objective=float(agg @ agg), planned_aggregate=agg,
                        iterations=0)

    stacked = _Stacked(lower=np.vstack(rows_lower), upper=np.vstack(rows_upper),
                       totals=np.asarray(totals))
    if initial is not None:
        initial = np.asarray(initial, dtype=float)
        if initial.ndim != 2 or initial.shape[1] != h:
            raise ValueError("warm start must cover the remaining horizon")
        z0 = np.repeat((stacked.totals / h)[:, None], h, axis=1)
        rows = min(initial.shape[0], z0.shape[0])
        z0[:rows] = initial[:rows]
        initial = z0
    z, iterations, history = _minimize_aggregate(stacked, b_tail, opts, initial)
    p = z[:n_loads]
    q = z[n_loads] if use_pseudo else np.zeros(h)
    agg = z.sum(axis=0) + b_tail
    return Schedule(p=p, q=q, objective=float(agg @ agg),
                    planned_aggregate=agg, iterations=iterations,
                    objective_history=history)


def solve_odlc_offline(loads, b, opts: SolverOptions | None = None) -> Schedule:
    """Full-information benchmark: schedule every load against the realized
    baseload over the whole horizon, no pseudo-load."""
    b = np.asarray(b, dtype=float)
    empty = PseudoLoadBounds.default(b.shape[0], 0.0)
    return solve_odlc_t(b, 0.0, loads, 1, opts, pseudo=empty)


def run_mpc(loads, scenario: ScenarioDraw, baseload: BaseloadModel,
            arrivals: ArrivalModel,
            opts: SolverOptions | None = None) -> tuple[AggregateTrajectory, list[Schedule]]:
    """Run the per-device controller over one scenario.

    Per step: refresh predictions, solve the remaining-horizon program over
    the devices that have arrived, commit only the current slot, and roll
    each device's remaining energy forward. Consecutive solves are
    warm-started from the previous schedule's tail.
    """
    opts = opts or SolverOptions()
    T = scenario.horizon
    if T != baseload.horizon:
        raise ValueError("scenario horizon does not match the baseload model")
    loads = list(loads)
    remaining = np.array([load.energy for load in loads], dtype=float)
    committed = np.zeros((len(loads), T))
    schedules: list[Schedule] = []
    levels = np.empty(T)
    warm_rows: dict[int, np.ndarray] = {}

    for t in range(1, T + 1):
        h = T - t + 1
        active = [n for n, load in enumerate(loads) if load.arrival <= t]
        b_t = predict_baseload(baseload, scenario.e, t)
        expected_A = expected_future_arrivals(arrivals, t, T)
        initial = None
        if warm_rows:
            initial = np.zeros((len(active) + 1, h))
            for row, n in enumerate(active):
                if n in warm_rows:
                    initial[row] = warm_rows[n]
            initial[-1, 1:] = expected_A / max(h - 1, 1)
        schedule = solve_odlc_t(b_t, expected_A, [loads[n] for n in active], t,
                                opts, remaining=[remaining[n] for n in active],
                                initial=initial)
        schedules.append(schedule)
        for row, n in enumerate(active):
            committed[n, t - 1] = schedule.p[row, 0]
            remaining[n] -= schedule.p[row, 0]
        levels[t - 1] = float(schedule.planned_aggregate.mean())
        warm_rows = {n: schedule.p[row, 1:] for row, n in enumerate(active)}

    leftovers = np.abs(remaining)
    if np.any(leftovers > _SUM_TOL * np.maximum(1.0, np.abs([l.energy for l in loads]))):
        worst = int(np.argmax(leftovers))
        raise SolverError(
            f"energy conservation defect: load {worst} ends the horizon with "
            f"{remaining[worst]} kWh unserved")

    d = scenario.realized_baseload + committed.sum(axis=0)
    trajectory = AggregateTrajectory(
        d=d, levels=levels, variance=load_variance(d),
        negative_power_slots=int(np.sum(d - scenario.realized_baseload < 0.0)))
    return trajectory, schedules


def fleet_from_scenario(scenario: ScenarioDraw, max_power: float | None = None) -> list[DeferrableLoad]:
    """One device per slot carrying that slot's arrival energy.

    Each device may run from its arrival slot to the end of the horizon;
    slots with no arriving energy produce no device.
    """
    T = scenario.horizon
    fleet = []
    for t in range(1, T + 1):
        energy = float(scenario.a[t - 1])
        if energy <= 0.0:
            continue
        cap = max_power
        if cap is not None and t == T:
            # A last-slot arrival must be able to finish in one slot.
            cap = max(cap, energy)
        fleet.append(DeferrableLoad.window(arrival=t, deadline=T,
                                           energy=energy, T=T, max_power=cap))
    return fleet
