"""Stochastic environment for deferrable load control.

Baseload deviates from its mean profile by white noise passed through a
causal FIR filter; deferrable energy arrives as an i.i.d. sequence with
known mean. Both noise sources are mean-centered, have a configurable
standard deviation, and are almost surely bounded, which is what the
closed-form worst-case and concentration results in :mod:`odlc.analytics`
require.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HorizonConfig",
    "CausalFilter",
    "BaseloadModel",
    "ArrivalModel",
    "ScenarioDraw",
    "cumulative_filter",
    "realized_baseload",
    "predict_baseload",
    "expected_future_arrivals",
    "sample_scenario",
    "adversarial_scenario",
    "derive_seed",
]

#: Marker seed for scenarios built deterministically rather than sampled.
ADVERSARIAL_SEED = -1


def _readonly(values, name: str, length: int | None = None) -> np.ndarray:
    arr = np.asarray(values, dtype=float).copy()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[0]}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HorizonConfig:
    """Discrete control horizon: number of slots and slot length (metadata)."""

    slots: int
    slot_minutes: float = 60.0

    def __post_init__(self) -> None:
        if self.slots < 1:
            raise ValueError("horizon must have at least one slot")
        if self.slot_minutes <= 0:
            raise ValueError("slot_minutes must be positive")


@dataclass(frozen=True)
class CausalFilter:
    """Finite impulse response acting on baseload prediction errors.

    Coefficients are the response at lags 0, 1, ..., L-1; lags outside that
    range read as zero, so causality is a property of the indexing and
    never needs explicit masking.
    """

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("filter needs at least one coefficient")
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("filter coefficients must be finite")
        if coeffs[0] == 0.0:
            # A zero instantaneous response makes the current slot's
            # prediction differ from the realized value; legal but unusual.
            warnings.warn("filter has zero lag-0 coefficient; current-slot "
                          "baseload will not be observed exactly", stacklevel=2)
        object.__setattr__(self, "coefficients", coeffs)

    def __len__(self) -> int:
        return len(self.coefficients)

    def cumulative(self, t: int) -> float:
        """Running coefficient sum F(t), reading zeros past the last lag."""
        if t < 0:
            raise ValueError("cumulative filter index must be non-negative")
        return float(sum(self.coefficients[: t + 1]))

    def cumulative_profile(self, n: int) -> np.ndarray:
        """Vector of F(0), ..., F(n-1)."""
        if n < 1:
            raise ValueError("profile length must be positive")
        padded = np.zeros(n)
        take = min(n, len(self.coefficients))
        padded[:take] = self.coefficients[:take]
        return np.cumsum(padded)


def cumulative_filter(filt: CausalFilter, t: int) -> float:
    """Cumulative impulse response F(t) = sum of coefficients at lags 0..t."""
    return filt.cumulative(t)


@dataclass(frozen=True)
class BaseloadModel:
    """Non-controllable load: mean profile plus filtered bounded noise.

    ``std`` is the standard deviation of each underlying noise innovation
    and ``bound`` its almost-sure magnitude limit; std <= bound because a
    mean-zero variable confined to [-bound, bound] cannot have a larger
    standard deviation.
    """

    mean_profile: np.ndarray
    filter: CausalFilter = field(default_factory=lambda: CausalFilter((1.0,)))
    std: float = 0.0
    bound: float = 0.0

    def __post_init__(self) -> None:
        profile = _readonly(self.mean_profile, "mean_profile")
        object.__setattr__(self, "mean_profile", profile)
        if self.std < 0 or self.bound < 0:
            raise ValueError("noise std and bound must be non-negative")
        if self.std > self.bound:
            raise ValueError("noise std cannot exceed the noise bound")
        if len(self.filter) > profile.shape[0]:
            raise ValueError("filter is longer than the horizon")

    @property
    def horizon(self) -> int:
        return int(self.mean_profile.shape[0])


@dataclass(frozen=True)
class ArrivalModel:
    """Per-slot deferrable energy requests: i.i.d., mean ``mean_energy`` (kWh),
    std ``std``, and |a(t) - mean| <= ``bound`` almost surely.

    Negative arrival energy is unphysical, so ``bound > mean_energy`` is
    rejected unless ``allow_negative`` is set explicitly.
    """

    mean_energy: float
    std: float = 0.0
    bound: float = 0.0
    allow_negative: bool = False

    def __post_init__(self) -> None:
        if self.mean_energy < 0:
            raise ValueError("mean arrival energy must be non-negative")
        if self.std < 0 or self.bound < 0:
            raise ValueError("arrival std and bound must be non-negative")
        if self.std > self.bound:
            raise ValueError("arrival std cannot exceed the arrival bound")
        if self.bound > self.mean_energy and not self.allow_negative:
            raise ValueError(
                "arrival bound exceeds the mean, so sampled energy could go "
                "negative; set allow_negative=True to permit this")


@dataclass(frozen=True)
class ScenarioDraw:
    """One realized sample path: innovations, arrivals, and the baseload
    they induce. Immutable; safe to share across threads."""

    e: np.ndarray
    a: np.ndarray
    realized_baseload: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        T = np.asarray(self.e).shape[0]
        object.__setattr__(self, "e", _readonly(self.e, "e"))
        object.__setattr__(self, "a", _readonly(self.a, "a", T))
        object.__setattr__(self, "realized_baseload",
                           _readonly(self.realized_baseload, "realized_baseload", T))

    @property
    def horizon(self) -> int:
        return int(self.e.shape[0])


def realized_baseload(model: BaseloadModel, e) -> np.ndarray:
    """Baseload produced by a full innovation path: mean profile plus the
    causal convolution of ``e`` with the filter."""
    e = np.asarray(e, dtype=float)
    T = model.horizon
    if e.shape != (T,):
        raise ValueError(f"innovation path must have length {T}")
    deviation = np.convolve(e, model.filter.coefficients)[:T]
    return model.mean_profile + deviation


def predict_baseload(model: BaseloadModel, e, t: int) -> np.ndarray:
    """Baseload prediction using only the first ``t`` innovations.

    ``t = 0`` returns the mean profile; ``t = T`` reproduces the realized
    baseload. Because the filter is causal, the prediction agrees with the
    realized baseload on every slot up to and including ``t``.
    """
    e = np.asarray(e, dtype=float)
    T = model.horizon
    if e.shape != (T,):
        raise ValueError(f"innovation path must have length {T}")
    if not 0 <= t <= T:
        raise ValueError(f"observation count must lie in [0, {T}], got {t}")
    out = model.mean_profile.copy()
    if t > 0:
        partial = np.convolve(e[:t], model.filter.coefficients)[:T]
        out[: partial.shape[0]] += partial
    return out


def expected_future_arrivals(model: ArrivalModel, t: int, T: int) -> float:
    """Expected energy arriving strictly after slot ``t``.

    Equals (T - t) * mean_energy; this follows from the i.i.d.-mean arrival
    model by linearity of expectation.
    """
    if not 1 <= t <= T:
        raise ValueError(f"slot must lie in [1, {T}], got {t}")
    return (T - t) * model.mean_energy


def _bounded_symmetric(rng: np.random.Generator, std: float, bound: float,
                       size: int) -> np.ndarray:
    """Mean-zero draws with the requested std, supported on [-bound, bound].

    Uses a symmetric Beta rescaled to the interval; its shape parameter is
    chosen to hit the target standard deviation, covering every feasible
    std in [0, bound]. std == bound/sqrt(3) reduces to the uniform law and
    std == bound to a two-point (+/- bound) law.
    """
    if std == 0.0 or bound == 0.0:
        if std > 0.0:
            raise ValueError("cannot achieve positive std with zero bound")
        return np.zeros(size)
    if std > bound:
        raise ValueError(f"std {std} unachievable under bound {bound}")
    if std == bound:
        return bound * (2.0 * rng.integers(0, 2, size) - 1.0)
    if std < bound * 1e-6:
        # Beta shape parameter would overflow double precision; the uniform
        # member of the family on a sub-interval hits the std exactly and
        # stays well inside the bound.
        return rng.uniform(-std * math.sqrt(3.0), std * math.sqrt(3.0), size)
    alpha = 0.5 * ((bound / std) ** 2 - 1.0)
    return bound * (2.0 * rng.beta(alpha, alpha, size) - 1.0)


def _generator(seed: int) -> np.random.Generator:
    # Philox: counter-based, 64-bit, keyed directly by the scenario seed.
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def derive_seed(base_seed: int, index: int) -> int:
    """Deterministic, collision-resistant per-run seed from (base, index)."""
    seq = np.random.SeedSequence((int(base_seed), int(index)))
    return int(seq.generate_state(1, np.uint64)[0])


def sample_scenario(baseload: BaseloadModel, arrivals: ArrivalModel, T: int,
                    seed: int) -> ScenarioDraw:
    """Draw one scenario. Deterministic for a fixed seed.

    Innovations and arrival deviations are sampled independently from the
    bounded symmetric family matching each model's (std, bound) pair.
    """
    if T != baseload.horizon:
        raise ValueError(
            f"requested horizon {T} does not match the baseload profile "
            f"({baseload.horizon} slots)")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    rng = _generator(seed)
    e = _bounded_symmetric(rng, baseload.std, baseload.bound, T)
    a = arrivals.mean_energy + _bounded_symmetric(rng, arrivals.std,
                                                  arrivals.bound, T)
    return ScenarioDraw(e=e, a=a, realized_baseload=realized_baseload(baseload, e),
                        seed=int(seed))


def adversarial_scenario(baseload: BaseloadModel, arrivals: ArrivalModel,
                         T: int) -> ScenarioDraw:
    """Worst-case sample path: every error at maximum magnitude.

    Arrival deviations sit at +bound on every slot; baseload innovations
    take magnitude ``bound`` with the sign of the cumulative filter weight
    that multiplies them in the load-variance decomposition, which is the
    configuration attaining the closed-form worst case.
    """
    if T != baseload.horizon:
        raise ValueError(
            f"requested horizon {T} does not match the baseload profile "
            f"({baseload.horizon} slots)")
    F = baseload.filter.cumulative_profile(T)
    # Slot t multiplies F(T - t); index t-1 of e pairs with F[T - t].
    signs = np.where(F[::-1] >= 0.0, 1.0, -1.0)
    e = baseload.bound * signs
    a = np.full(T, arrivals.mean_energy + arrivals.bound)
    return ScenarioDraw(e=e, a=a, realized_baseload=realized_baseload(baseload, e),
                        seed=ADVERSARIAL_SEED)
