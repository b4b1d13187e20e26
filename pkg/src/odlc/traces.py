"""Load/renewable trace ingestion.

Traces are CSVs with header ``slot,baseload_kw,renewable_kw``. Renewable
generation acts as negative non-controllable load, so the ingested mean
profile is baseload minus renewable per slot. Traces finer than the
control horizon are block-averaged; the row count must be an exact
multiple of the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import TraceError

__all__ = ["TraceFile", "parse_trace", "load_trace", "scale_renewable",
           "resample_profile", "ingest_trace"]

HEADER = "slot,baseload_kw,renewable_kw"


@dataclass(frozen=True)
class TraceFile:
    """Parsed trace: slot indices plus baseload and renewable power."""

    slots: np.ndarray
    baseload_kw: np.ndarray
    renewable_kw: np.ndarray

    def __post_init__(self) -> None:
        for name in ("slots", "baseload_kw", "renewable_kw"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.slots.shape == self.baseload_kw.shape
                == self.renewable_kw.shape) or self.slots.ndim != 1:
            raise TraceError("trace columns must have equal length")
        if self.slots.shape[0] == 0:
            raise TraceError("trace is empty")
        if np.any(np.diff(self.slots) <= 0):
            raise TraceError("slot indices must be strictly increasing")
        if np.any(self.baseload_kw < 0) or np.any(self.renewable_kw < 0):
            raise TraceError("power values must be non-negative")

    @property
    def rows(self) -> int:
        return int(self.slots.shape[0])

    def net_load(self) -> np.ndarray:
        return self.baseload_kw - self.renewable_kw


def parse_trace(text: str) -> TraceFile:
    """Parse CSV content; malformed rows are reported with line numbers."""
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise TraceError("trace is empty")
    if lines[0].replace(" ", "") != HEADER:
        raise TraceError(f"trace header must be '{HEADER}', got '{lines[0]}'")
    slots, base, renew = [], [], []
    for number, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise TraceError(f"line {number}: expected 3 columns, got {len(parts)}")
        try:
            slots.append(float(parts[0]))
            base.append(float(parts[1]))
            renew.append(float(parts[2]))
        except ValueError as err:
            raise TraceError(f"line {number}: {err}") from err
    return TraceFile(slots=np.asarray(slots), baseload_kw=np.asarray(base),
                     renewable_kw=np.asarray(renew))


def load_trace(path) -> TraceFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise TraceError(f"cannot read trace {path}: {err}") from err
    return parse_trace(text)


def scale_renewable(trace: TraceFile, penetration: float) -> TraceFile:
    """Rescale renewable output so its mean is ``penetration`` times the
    mean baseload."""
    if not 0.0 <= penetration <= 1.0:
        raise TraceError("penetration must lie in [0, 1]")
    mean_base = float(trace.baseload_kw.mean())
    if mean_base <= 0:
        raise TraceError("mean baseload must be positive to set penetration")
    if penetration == 0.0:
        return TraceFile(slots=trace.slots, baseload_kw=trace.baseload_kw,
                         renewable_kw=np.zeros(trace.rows))
    mean_renew = float(trace.renewable_kw.mean())
    if mean_renew <= 0:
        raise TraceError("renewable output is identically zero; cannot reach "
                         f"penetration {penetration}")
    factor = penetration * mean_base / mean_renew
    return TraceFile(slots=trace.slots, baseload_kw=trace.baseload_kw,
                     renewable_kw=factor * trace.renewable_kw)


def resample_profile(trace: TraceFile, T: int) -> np.ndarray:
    """Net load per control slot, block-averaging finer traces."""
    if T < 1:
        raise TraceError("horizon must be positive")
    if trace.rows < T:
        raise TraceError(f"trace has {trace.rows} rows, fewer than the "
                         f"{T} control slots")
    if trace.rows % T != 0:
        raise TraceError(f"trace length {trace.rows} is not a multiple of "
                         f"the horizon {T}; cannot block-average")
    block = trace.rows // T
    return trace.net_load().reshape(T, block).mean(axis=1)


def ingest_trace(path, T: int, penetration: float | None = None) -> np.ndarray:
    """Read a trace file and produce the mean net-load profile.

    Optionally rescales the renewable column to a target penetration before
    subtracting it from the baseload.
    """
    trace = load_trace(path)
    if penetration is not None:
        trace = scale_renewable(trace, penetration)
    # Net load may legitimately go negative in slots where renewable output
    # exceeds demand; only the raw columns are sign-constrained.
    return resample_profile(trace, T)
