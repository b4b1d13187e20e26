"""Experiment orchestration: configs in, machine-readable reports out.

Every report carries the resolved config digest and the seeds involved, so
identical inputs reproduce byte-identical payloads. The analytics block
always includes both rate-constant variants and labels the one the bounds
used; simulation blocks report the realized variance next to its
decomposition so the interaction term is visible in every output.
"""

from __future__ import annotations

import numpy as np

from . import __version__
from .analytics import (ErrorBounds, build_report, interaction_term,
                        load_variance, v_decomposition)
from .config import ExperimentConfig, build_run_config, config_digest
from .errors import ConfigError
from .models import adversarial_scenario, sample_scenario
from .montecarlo import (empirical_cdf, empirical_percentile, run_ensemble)
from .qp import fleet_from_scenario, run_mpc
from .valley import run_valley_mpc

__all__ = ["run_bounds", "run_simulate", "run_mc", "run_worst_case"]

SCHEMA_VERSION = 1

#: Relative agreement required between the adversarial run and the closed form.
WORST_CASE_RTOL = 1e-9


def _require_resolved(config: ExperimentConfig) -> None:
    if not config.resolved:
        raise ConfigError("config still references a trace; resolve it first")


def _error_bounds(config: ExperimentConfig) -> ErrorBounds:
    return ErrorBounds(arrival=config.arrivals.bound,
                       baseload=config.baseload.noise_bound)


def _base_payload(config: ExperimentConfig, kind: str, engine: str) -> dict:
    report = build_report(
        T=config.horizon.slots,
        arrival_std=config.arrivals.std,
        noise_std=config.baseload.noise_std,
        bounds=_error_bounds(config),
        filt=build_run_config(config).baseload.filter,
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "generator": f"odlc {__version__}",
        "kind": kind,
        "config_digest": config_digest(config),
        "seed": None,  # effective seed; None for deterministic kinds
        "horizon": config.horizon.slots,
        "slot_minutes": config.horizon.slot_minutes,
        "engine": engine,
        "analytics": report.to_dict(),
    }


def run_bounds(config: ExperimentConfig) -> dict:
    """Closed-form quantities only; no simulation."""
    _require_resolved(config)
    return _base_payload(config, "bounds", config.engine)


def _run_engine(run_config, scenario):
    if run_config.engine == "valley":
        return run_valley_mpc(scenario, run_config.baseload, run_config.arrivals)
    fleet = fleet_from_scenario(scenario, max_power=run_config.qp_max_power)
    trajectory, _ = run_mpc(fleet, scenario, run_config.baseload,
                            run_config.arrivals, run_config.qp_options)
    return trajectory


def _variance_block(scenario, run_config, trajectory) -> dict:
    T = run_config.horizon
    filt = run_config.baseload.filter
    lam = run_config.arrivals.mean_energy
    v1, v2 = v_decomposition(scenario, filt, lam, T)
    cross = interaction_term(scenario, filt, lam, T)
    return {
        "v": trajectory.variance,
        "v_arrival": v1,
        "v_baseload": v2,
        "v_interaction": cross,
        "v_decomposed": v1 + v2,
        "negative_power_slots": trajectory.negative_power_slots,
    }


def run_simulate(config: ExperimentConfig, seed: int | None = None,
                 engine: str | None = None,
                 include_trajectory: bool = False) -> dict:
    """Single seeded run of the selected engine."""
    _require_resolved(config)
    run_config = build_run_config(config, engine)
    seed = config.seed if seed is None else seed
    scenario = sample_scenario(run_config.baseload, run_config.arrivals,
                               run_config.horizon, seed)
    trajectory = _run_engine(run_config, scenario)
    payload = _base_payload(config, "simulate", run_config.engine)
    payload["seed"] = seed
    simulation = {"seed": seed}
    simulation.update(_variance_block(scenario, run_config, trajectory))
    if include_trajectory:
        simulation["trajectory"] = [float(v) for v in trajectory.d]
        simulation["levels"] = [float(v) for v in trajectory.levels]
        simulation["realized_baseload"] = [float(v) for v in
                                           scenario.realized_baseload]
    payload["simulation"] = simulation
    return payload


def run_mc(config: ExperimentConfig, runs: int | None = None,
           seed: int | None = None, engine: str | None = None,
           workers: int = 1) -> tuple[dict, list[tuple[float, float]]]:
    """Seeded ensemble: summary report plus empirical CDF rows."""
    _require_resolved(config)
    run_config = build_run_config(config, engine)
    runs = config.runs if runs is None else runs
    seed = config.seed if seed is None else seed
    result = run_ensemble(run_config, count=runs, base_seed=seed,
                          workers=workers)
    payload = _base_payload(config, "mc", run_config.engine)
    payload["seed"] = seed
    analytics_block = payload["analytics"]

    def percentiles(samples) -> dict:
        return {f"p{int(100 * eta)}": empirical_percentile(samples, eta)
                for eta in (0.1, 0.5, 0.9, 0.99)}

    decomposed_p90 = empirical_percentile(result.decomposed_samples, 0.9)
    bound_90 = analytics_block["percentile_bound_90"]
    worst_case = analytics_block["worst_case_v"]
    payload["ensemble"] = {
        "runs": runs,
        "base_seed": seed,
        "seeds": [int(s) for s in result.seeds],
        "engine": result.engine,
        "mean_v": float(result.samples.mean()),
        "std_v": float(result.samples.std(ddof=1)) if runs > 1 else 0.0,
        "max_v": float(result.samples.max()),
        "mean_decomposed_v": float(result.decomposed_samples.mean()),
        "std_decomposed_v": float(result.decomposed_samples.std(ddof=1))
                            if runs > 1 else 0.0,
        "max_decomposed_v": float(result.decomposed_samples.max()),
        "percentiles": percentiles(result.samples),
        "decomposed_percentiles": percentiles(result.decomposed_samples),
        "bound_checks": {
            "decomposed_p90": decomposed_p90,
            "percentile_bound_90": bound_90,
            "p90_within_bound": bool(decomposed_p90 <= bound_90),
            "max_decomposed_v": float(result.decomposed_samples.max()),
            "worst_case_v": worst_case,
            "dominated_by_worst_case": bool(
                result.decomposed_samples.max() <= worst_case + 1e-9),
        },
    }
    table = empirical_cdf(result)
    rows = [(float(v), float(p)) for v, p in
            zip(table.values, table.probabilities)]
    return payload, rows


def run_worst_case(config: ExperimentConfig,
                   include_trajectory: bool = False) -> dict:
    """Adversarial run compared against the closed-form worst case."""
    _require_resolved(config)
    run_config = build_run_config(config)
    T = run_config.horizon
    scenario = adversarial_scenario(run_config.baseload, run_config.arrivals, T)
    trajectory = run_valley_mpc(scenario, run_config.baseload,
                                run_config.arrivals)
    payload = _base_payload(config, "worst-case", "valley")
    closed_form = payload["analytics"]["worst_case_v"]
    v1, v2 = v_decomposition(scenario, run_config.baseload.filter,
                             run_config.arrivals.mean_energy, T)
    decomposed = v1 + v2
    gap = abs(decomposed - closed_form) / closed_form if closed_form > 0 else 0.0
    block = {
        "closed_form": closed_form,
        "adversarial_decomposed_v": decomposed,
        "adversarial_realized_v": trajectory.variance,
        "adversarial_interaction": interaction_term(
            scenario, run_config.baseload.filter,
            run_config.arrivals.mean_energy, T),
        "relative_gap": gap,
        "matches_closed_form": bool(gap <= WORST_CASE_RTOL),
    }
    if include_trajectory:
        block["trajectory"] = [float(v) for v in trajectory.d]
    payload["worst_case"] = block
    return payload
