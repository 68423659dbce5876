"""One-sided audit distances between delivered and advertised service.

Every distance is the per-metric fraction of samples that fall short of the
advertised value; the kinds differ only in where the samples are taken.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import IncompatibleTraces, InvalidInput
from .trace_model import (
    Piecewise,
    Signal,
    SloTuple,
    Trace,
    Uniform,
    make_reference_trace,
    sample_signal,
    uniform_grid,
)

DAY = 86400.0
HOUR = 3600.0


@dataclass(frozen=True)
class DistanceTuple:
    names: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.names) != len(self.values):
            raise InvalidInput("names and values differ in length")
        for v in self.values:
            if not 0.0 <= v <= 1.0:
                raise InvalidInput(f"distance component {v} outside [0, 1]")

    @classmethod
    def zeros(cls, names):
        return cls(names, (0.0,) * len(names))

    @classmethod
    def uniform(cls, names, value):
        return cls(names, (value,) * len(tuple(names)))

    def __getitem__(self, name):
        return self.values[self.names.index(name)]

    def __iter__(self):
        return iter(self.values)

    def as_dict(self):
        return dict(zip(self.names, self.values))

    def is_zero(self):
        return all(v == 0.0 for v in self.values)

    def le(self, other: "DistanceTuple") -> bool:
        """Component-wise ``<=``; names must match."""
        if self.names != other.names:
            raise IncompatibleTraces(f"cannot compare {self.names} with {other.names}")
        return all(a <= b for a, b in zip(self.values, other.values))


def _check_period(period, phase=0.0):
    if not period > 0:
        raise InvalidInput(f"period must be > 0, got {period}")
    if phase < 0:
        raise InvalidInput(f"phase must be >= 0, got {phase}")


def _check_intervals(intervals):
    ivs = tuple(sorted((float(a), float(b)) for a, b in intervals))
    if not ivs:
        raise InvalidInput("interest intervals are empty")
    for a, b in ivs:
        if not b > a:
            raise InvalidInput(f"empty interest interval [{a}, {b})")
    for (_, b), (a, _) in zip(ivs, ivs[1:]):
        if a < b:
            raise InvalidInput("interest intervals overlap")
    return ivs


@dataclass(frozen=True)
class RBd:
    """Requester-blind: uniform grid over the whole horizon."""

    period: float
    phase: float = 0.0

    def __post_init__(self):
        _check_period(self.period, self.phase)

    def timestamps(self, signal):
        return Uniform(self.period, self.phase).timestamps(signal.start, signal.end)


@dataclass(frozen=True)
class PBd(RBd):
    """Provider-blind; sampled exactly like :class:`RBd`."""


@dataclass(frozen=True)
class PId:
    """Provider-illusion: sparse grid of the given period and phase."""

    period: float
    phase: float = 0.0

    def __post_init__(self):
        _check_period(self.period, self.phase)

    def timestamps(self, signal):
        return Uniform(self.period, self.phase).timestamps(signal.start, signal.end)


@dataclass(frozen=True)
class RXd:
    """Requester-experience: uniform grid inside the interest intervals only."""

    interest: tuple
    period: float

    def __post_init__(self):
        object.__setattr__(self, "interest", _check_intervals(self.interest))
        _check_period(self.period)

    def timestamps(self, signal):
        for a, b in self.interest:
            if a < signal.start or b > signal.end:
                raise InvalidInput(f"interest interval [{a}, {b}) outside signal horizon {signal.horizon}")
        return Piecewise(tuple((a, b, self.period) for a, b in self.interest)).timestamps()


@dataclass(frozen=True)
class RXdSpatial(RXd):
    """:class:`RXd` that also keeps only samples located in a region.

    Regions are axis-aligned rectangles ``(x0, y0, x1, y1)``, half-open like
    time intervals.
    """

    regions: tuple = ()

    def __post_init__(self):
        super().__post_init__()
        regions = tuple(tuple(map(float, r)) for r in self.regions)
        if not regions:
            raise InvalidInput("spatial distance needs at least one region")
        for x0, y0, x1, y1 in regions:
            if not (x1 > x0 and y1 > y0):
                raise InvalidInput(f"degenerate region {(x0, y0, x1, y1)}")
        object.__setattr__(self, "regions", regions)

    def mask(self, locations):
        keep = np.zeros(locations.shape[0], dtype=bool)
        x, y = locations[:, 0], locations[:, 1]
        for x0, y0, x1, y1 in self.regions:
            keep |= (x >= x0) & (x < x1) & (y >= y0) & (y < y1)
        return keep


class Perspective(enum.Enum):
    REQUESTER = "requester"
    PROVIDER = "provider"


def default_kind(perspective: Perspective, period: float, interest=None):
    """Settlement default: requesters audit with rXd, providers with pBd."""
    if perspective is Perspective.REQUESTER:
        if interest is None:
            raise InvalidInput("requester perspective needs interest intervals")
        return RXd(interest, period)
    return PBd(period)


def step_distance(delivered: Trace, reference: Trace) -> DistanceTuple:
    """Fraction of samples, per metric, where delivery falls short of the reference."""
    if len(delivered.names) != len(reference.names):
        raise IncompatibleTraces(f"metric arity {len(delivered.names)} != {len(reference.names)}")
    if delivered.timestamps.shape != reference.timestamps.shape or not np.array_equal(
        delivered.timestamps, reference.timestamps
    ):
        raise IncompatibleTraces("delivered and reference timestamps differ")
    slo = reference.slo or delivered.slo
    signs = slo.signs if slo is not None else np.ones(len(reference.names))
    ref = reference.values
    if not np.all(ref == ref[0]):
        under = signs * (ref - delivered.values) > 0.0
        counts = under.sum(axis=0)
    else:
        counts = kernels.step_counts(delivered.values, ref[0], signs)
    return DistanceTuple(reference.names, counts / len(reference))


def rbd_norm(delta: Trace) -> DistanceTuple:
    """Fraction of positive entries per metric of a signed difference trace."""
    if len(delta) == 0:
        raise InvalidInput("empty trace")
    counts = (delta.values > 0.0).sum(axis=0)
    return DistanceTuple(delta.names, counts / len(delta))


def _check_signal(signal, slo):
    if signal.names != slo.names:
        raise IncompatibleTraces(f"signal metrics {signal.names} do not match SLO metrics {slo.names}")


def distance(signal: Signal, slo: SloTuple, kind) -> DistanceTuple:
    """Audit ``signal`` against ``slo`` with the sampling rule of ``kind``."""
    _check_signal(signal, slo)
    if isinstance(kind, RXdSpatial):
        if signal.locations is None:
            raise InvalidInput("spatial distance needs a located signal")
        ts = kind.timestamps(signal)
        if ts.size == 0:
            raise InvalidInput("interest intervals produced no samples")
        trace = sample_signal(signal, _Fixed(ts))
        keep = kind.mask(trace.locations)
        if not keep.any():
            raise InvalidInput("no sample falls inside the interest regions")
        delivered = Trace(trace.timestamps[keep], trace.values[keep], trace.names, trace.locations[keep])
        return step_distance(delivered, make_reference_trace(slo, delivered.timestamps))
    if not isinstance(kind, (RBd, PId, RXd)):
        raise InvalidInput(f"unknown distance kind {kind!r}")
    ts = kind.timestamps(signal)
    if ts.size == 0:
        raise InvalidInput(f"{type(kind).__name__} produced no samples on horizon {signal.horizon}")
    counts = kernels.under_counts(signal.starts, signal.values, ts, slo.values, slo.signs)
    return DistanceTuple(slo.names, counts / ts.size)


class _Fixed:
    def __init__(self, ts):
        self.ts = ts

    def timestamps(self, start=None, end=None):
        return self.ts


def find_illusion_period(signal: Signal, slo: SloTuple, max_period: float,
                         period_step: float = HOUR,
                         phase_step: Optional[float] = None) -> Optional[tuple]:
    """First ``(period, phase)`` with a zero pId distance, largest period first.

    Periods run ``max_period, max_period - period_step, ...``; phases run
    ``0, phase_step, ...`` below each period. Pairs that place no sample in
    the horizon are skipped.
    """
    if not max_period > 0 or not period_step > 0:
        raise InvalidInput("max_period and period_step must be > 0")
    _check_signal(signal, slo)
    phase_step = period_step if phase_step is None else phase_step
    if not phase_step > 0:
        raise InvalidInput("phase_step must be > 0")
    n_periods = int(np.floor(max_period / period_step + 1e-9))
    periods = [max_period - i * period_step for i in range(n_periods)] or [max_period]
    for period in periods:
        for phase in uniform_grid(0.0, period, phase_step):
            if signal.start + phase >= signal.end:
                break
            d = distance(signal, slo, PId(period, float(phase)))
            if d.is_zero():
                return float(period), float(phase)
    return None


def _integral(signal: Signal, col: int, a, b):
    """Integral of one metric over ``[a, b]`` (vectorised over a, b)."""
    starts = signal.starts
    vals = signal.values[:, col]
    widths = np.diff(np.append(starts, signal.end))
    cum = np.concatenate(([0.0], np.cumsum(vals * widths)))

    def F(t):
        t = np.asarray(t, dtype=np.float64)
        i = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(starts) - 1)
        return cum[i] + vals[i] * (t - starts[i])

    return F(b) - F(a)


def prime_time_mean(signal: Signal, usage_weight: Signal, days: int,
                    window: float = 3 * HOUR) -> dict:
    """Mean over days of the delivered mean inside each day's busiest window.

    For every day the contiguous ``window`` maximising the integrated usage
    weight is chosen (earliest on ties); the delivered metrics are averaged
    over it, then the daily means are averaged.
    """
    if days < 1 or not window > 0 or window > DAY:
        raise InvalidInput("need days >= 1 and 0 < window <= 1 day")
    if len(usage_weight.names) != 1:
        raise InvalidInput("usage weight must be a single-metric signal")
    t0 = signal.start
    span_end = t0 + days * DAY
    for s in (signal, usage_weight):
        if s.start > t0 or s.end < span_end:
            raise InvalidInput(f"horizon {s.horizon} does not cover {days} days from {t0}")
    daily = np.zeros((days, len(signal.names)))
    for d in range(days):
        lo, hi = t0 + d * DAY, t0 + (d + 1) * DAY - window
        bps = usage_weight.starts[(usage_weight.starts >= lo) & (usage_weight.starts <= hi + window)]
        cand = np.unique(np.clip(np.concatenate(([lo], bps, bps - window)), lo, hi))
        score = _integral(usage_weight, 0, cand, cand + window)
        best = cand[int(np.argmax(score))]
        for c in range(len(signal.names)):
            daily[d, c] = _integral(signal, c, best, best + window) / window
    means = daily.mean(axis=0)
    return dict(zip(signal.names, map(float, means)))
