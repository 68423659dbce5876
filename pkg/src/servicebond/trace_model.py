"""Coded and decoded service representations.

An :class:`SloTuple` is the coded form of a service (e.g. DS=25 Mbps,
US=3 Mbps). A :class:`Signal` is the piecewise-constant ground truth of what
was delivered over time, and a :class:`Trace` is a finite list of timestamped
samples drawn from a signal or synthesised from an SLO.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import InvalidInput, NonConvergence, OutOfHorizon

HIGHER = "higher-is-better"
LOWER = "lower-is-better"
_ORIENTATIONS = (HIGHER, LOWER)


def _frozen(a, dtype=np.float64, ndim=None):
    arr = np.array(a, dtype=dtype, copy=True)
    if ndim is not None and arr.ndim != ndim:
        raise InvalidInput(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Metric:
    name: str
    value: float
    unit: str = ""
    orientation: str = HIGHER

    def __post_init__(self):
        if self.orientation not in _ORIENTATIONS:
            raise InvalidInput(f"unknown orientation {self.orientation!r}")
        if not (self.value >= 0) or math.isinf(self.value):
            raise InvalidInput(f"metric {self.name!r} must be a finite value >= 0")


@dataclass(frozen=True)
class SloTuple:
    """Named, oriented service-level objectives."""

    metrics: tuple

    def __post_init__(self):
        metrics = tuple(self.metrics)
        object.__setattr__(self, "metrics", metrics)
        if not metrics:
            raise InvalidInput("an SLO needs at least one metric")
        names = [m.name for m in metrics]
        if len(set(names)) != len(names):
            raise InvalidInput(f"duplicate metric names in {names}")

    @classmethod
    def of(cls, *pairs, **kw):
        """Build from ``(name, value[, unit[, orientation]])`` tuples or kwargs.

        >>> SloTuple.of(ds=25, us=3).values.tolist()
        [25.0, 3.0]
        """
        metrics = [Metric(*p) for p in pairs]
        metrics += [Metric(k, v) for k, v in kw.items()]
        return cls(tuple(metrics))

    @property
    def names(self):
        return tuple(m.name for m in self.metrics)

    @property
    def values(self):
        return np.array([m.value for m in self.metrics], dtype=np.float64)

    @property
    def signs(self):
        """+1 for higher-is-better, -1 for lower-is-better metrics."""
        return np.array([1.0 if m.orientation == HIGHER else -1.0 for m in self.metrics])

    def __len__(self):
        return len(self.metrics)


@dataclass(frozen=True, eq=False)
class Signal:
    """Piecewise-constant delivered service over ``[starts[0], end)``.

    Segment ``i`` covers ``[starts[i], starts[i+1])`` (the last one ends at
    ``end``). ``locations``, when given, is an (n, 2) array of per-segment
    positions.
    """

    starts: np.ndarray
    end: float
    values: np.ndarray
    names: tuple
    locations: Optional[np.ndarray] = None

    def __post_init__(self):
        starts = _frozen(self.starts, ndim=1)
        values = _frozen(self.values, ndim=2)
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "end", float(self.end))
        n = starts.shape[0]
        if n == 0:
            raise InvalidInput("a signal needs at least one segment")
        if values.shape != (n, len(self.names)):
            raise InvalidInput(f"values shape {values.shape} does not match {n} segments x {len(self.names)} metrics")
        if not np.all(np.isfinite(starts)) or not math.isfinite(self.end):
            raise InvalidInput("segment bounds must be finite")
        if np.any(np.diff(starts) <= 0) or self.end <= starts[-1]:
            raise InvalidInput("segments must be sorted, non-empty and contiguous")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidInput("signal values must be finite and >= 0")
        if self.locations is not None:
            locs = _frozen(self.locations, ndim=2)
            if locs.shape != (n, 2):
                raise InvalidInput(f"locations must have shape ({n}, 2)")
            object.__setattr__(self, "locations", locs)

    @classmethod
    def from_segments(cls, segments, names):
        """Build from ``(t_start, t_end, values[, location])`` tuples.

        Consecutive segments must touch exactly.
        """
        segments = list(segments)
        if not segments:
            raise InvalidInput("a signal needs at least one segment")
        starts, values, locs = [], [], []
        prev_end = None
        for seg in segments:
            t0, t1, vals = seg[0], seg[1], seg[2]
            loc = seg[3] if len(seg) > 3 else None
            if prev_end is not None and t0 != prev_end:
                raise InvalidInput(f"segment starting at {t0} does not continue from {prev_end}")
            if t1 <= t0:
                raise InvalidInput(f"empty segment [{t0}, {t1})")
            starts.append(t0)
            values.append(list(vals))
            locs.append(loc)
            prev_end = t1
        has_loc = [loc is not None for loc in locs]
        if any(has_loc) and not all(has_loc):
            raise InvalidInput("either all segments carry a location or none does")
        return cls(starts, prev_end, values, names, locs if all(has_loc) else None)

    @classmethod
    def constant(cls, values, names, start=0.0, end=1.0, location=None):
        locs = None if location is None else [location]
        return cls([start], end, [list(values)], names, locs)

    @property
    def start(self):
        return float(self.starts[0])

    @property
    def horizon(self):
        return (self.start, self.end)

    @property
    def duration(self):
        return self.end - self.start

    def __len__(self):
        return self.starts.shape[0]

    def segments(self):
        ends = np.append(self.starts[1:], self.end)
        for i in range(len(self)):
            loc = None if self.locations is None else tuple(self.locations[i])
            yield float(self.starts[i]), float(ends[i]), tuple(self.values[i]), loc

    def index_at(self, t):
        if not (self.start <= t < self.end):
            raise OutOfHorizon(f"t={t} outside horizon [{self.start}, {self.end})")
        return int(np.searchsorted(self.starts, t, side="right") - 1)

    def value_at(self, t):
        return tuple(self.values[self.index_at(t)])


@dataclass(frozen=True, eq=False)
class Trace:
    """Timestamped samples; timestamps strictly increasing."""

    timestamps: np.ndarray
    values: np.ndarray
    names: tuple
    locations: Optional[np.ndarray] = None
    slo: Optional[SloTuple] = None

    def __post_init__(self):
        ts = _frozen(self.timestamps, ndim=1)
        values = _frozen(self.values, ndim=2)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))
        if ts.shape[0] == 0:
            raise InvalidInput("a trace needs at least one sample")
        if np.any(np.diff(ts) <= 0):
            raise InvalidInput("trace timestamps must be strictly increasing")
        if values.shape != (ts.shape[0], len(self.names)):
            raise InvalidInput(f"values shape {values.shape} does not match {ts.shape[0]} samples x {len(self.names)} metrics")
        if self.slo is not None and self.slo.names != self.names:
            raise InvalidInput(f"trace metrics {self.names} do not match SLO metrics {self.slo.names}")
        if self.locations is not None:
            locs = _frozen(self.locations, ndim=2)
            if locs.shape != (ts.shape[0], 2):
                raise InvalidInput("locations must have one (x, y) pair per sample")
            object.__setattr__(self, "locations", locs)

    def __len__(self):
        return self.timestamps.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        if (self.locations is None) != (other.locations is None):
            return False
        return (
            self.names == other.names
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values)
            and (self.locations is None or np.array_equal(self.locations, other.locations))
        )

    __hash__ = None

    def samples(self):
        for i in range(len(self)):
            loc = None if self.locations is None else tuple(self.locations[i])
            yield float(self.timestamps[i]), loc, tuple(self.values[i])

    def to_signal(self, end=None):
        """Sample-and-hold reconstruction; the last sample lasts one more step."""
        ts = self.timestamps
        if end is None:
            end = ts[-1] + (ts[-1] - ts[-2] if len(ts) > 1 else 1.0)
        return Signal(ts, end, self.values, self.names, self.locations)


def uniform_grid(origin, end, period):
    """All ``origin + i * period`` (i >= 0) strictly below ``end``."""
    if not period > 0:
        raise InvalidInput(f"period must be > 0, got {period}")
    if origin >= end:
        return np.empty(0)
    n = int(math.ceil((end - origin) / period)) + 1
    ts = origin + np.arange(n, dtype=np.float64) * period
    return ts[ts < end]


@dataclass(frozen=True)
class Uniform:
    period: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise InvalidInput(f"period must be > 0, got {self.period}")
        if self.phase < 0:
            raise InvalidInput("phase must be >= 0")

    def timestamps(self, start, end):
        return uniform_grid(start + self.phase, end, self.period)


@dataclass(frozen=True)
class Piecewise:
    """Uniform grids restricted to disjoint intervals: ``(start, end, period)``."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple(sorted(tuple(map(float, iv)) for iv in self.intervals))
        object.__setattr__(self, "intervals", ivs)
        for a, b, p in ivs:
            if not b > a:
                raise InvalidInput(f"empty interval [{a}, {b})")
            if not p > 0:
                raise InvalidInput(f"period must be > 0, got {p}")
        for (_, b, _), (a, _, _) in zip(ivs, ivs[1:]):
            if a < b:
                raise InvalidInput("piecewise intervals overlap")

    def timestamps(self, start=None, end=None):
        parts = [uniform_grid(a, b, p) for a, b, p in self.intervals]
        return np.concatenate(parts) if parts else np.empty(0)


@dataclass(frozen=True, eq=False)
class Explicit:
    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points, ndim=1)
        if np.any(np.diff(pts) <= 0):
            raise InvalidInput("explicit timestamps must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def timestamps(self, start=None, end=None):
        return self.points


def make_reference_trace(slo: SloTuple, timestamps: Sequence[float]) -> Trace:
    """Constant trace of the advertised values at the given timestamps."""
    ts = np.asarray(timestamps, dtype=np.float64)
    if ts.ndim != 1 or ts.size == 0:
        raise InvalidInput("reference trace needs at least one timestamp")
    if np.any(np.diff(ts) <= 0):
        raise InvalidInput("timestamps must be strictly increasing")
    values = np.broadcast_to(slo.values, (ts.size, len(slo)))
    return Trace(ts, values, slo.names, slo=slo)


def sample_signal(signal: Signal, scheme) -> Trace:
    ts = scheme.timestamps(signal.start, signal.end)
    if ts.size == 0:
        raise InvalidInput("sampling scheme produced no timestamps")
    if ts[0] < signal.start or ts[-1] >= signal.end:
        bad = ts[0] if ts[0] < signal.start else ts[-1]
        raise OutOfHorizon(f"timestamp {bad} outside horizon [{signal.start}, {signal.end})")
    idx = kernels.segment_index(signal.starts, ts)
    locs = None if signal.locations is None else signal.locations[idx]
    return Trace(ts, signal.values[idx], signal.names, locs)


def _blind_fraction(signal, slo, period):
    ts = uniform_grid(signal.start, signal.end, period)
    counts = kernels.under_counts(signal.starts, signal.values, ts, slo.values, slo.signs)
    return counts / ts.size


def converged_period(signal: Signal, slo: SloTuple, start_period: float, tol: float,
                     lookahead: int = 3, max_halvings: int = 40,
                     max_samples: int = 20_000_000) -> float:
    """Largest period in the halving chain at which the blind distance is stable.

    A period ``p`` is accepted when the distances at ``p, p/2, ..., p/2**lookahead``
    all differ pairwise-consecutively by less than ``tol``. A single
    comparison is fooled by grids that alias away a short failure window.
    """
    if not start_period > 0 or not tol > 0:
        raise InvalidInput("start_period and tol must be > 0")
    if lookahead < 1:
        raise InvalidInput("lookahead must be >= 1")
    if signal.names != slo.names:
        raise InvalidInput("signal and SLO metrics differ")
    cache = {}

    def dist(j):
        if j not in cache:
            p = start_period / 2 ** j
            if signal.duration / p > max_samples:
                raise NonConvergence(f"period {p} needs more than {max_samples} samples")
            cache[j] = _blind_fraction(signal, slo, p)
        return cache[j]

    for j in range(max_halvings + 1):
        if all(np.all(np.abs(dist(j + i) - dist(j + i + 1)) < tol) for i in range(lookahead)):
            return start_period / 2 ** j
    raise NonConvergence(f"no stable period within {max_halvings} halvings of {start_period}")
