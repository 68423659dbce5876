"""Bilateral service bonds with time-modulated schedules.

A bond alternates between bonded and disbonded intervals while the service
itself keeps running. The share of bonded time is the bond's grade; reviews
move the grade down on failed audits and eventually dissolve the bond.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import networkx as nx

from .errors import InvalidInput, OutOfHorizon


@dataclass(frozen=True)
class BondSchedule:
    """Bonded sub-intervals of the horizon ``[0, horizon)``, sorted and disjoint."""

    horizon: float
    bonded: tuple = ()

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.bonded)
        object.__setattr__(self, "bonded", ivs)
        object.__setattr__(self, "horizon", float(self.horizon))
        if not self.horizon > 0 or math.isinf(self.horizon):
            raise InvalidInput(f"horizon must be finite and > 0, got {self.horizon}")
        prev = 0.0
        for a, b in ivs:
            if not (0.0 <= a < b <= self.horizon):
                raise InvalidInput(f"bonded interval [{a}, {b}) not inside [0, {self.horizon})")
            if a < prev:
                raise InvalidInput(f"bonded interval [{a}, {b}) overlaps or is out of order")
            prev = b

    @classmethod
    def full(cls, horizon):
        return cls(horizon, ((0.0, horizon),))

    @property
    def bonded_length(self):
        return math.fsum(b - a for a, b in self.bonded)

    @property
    def onset_frequency(self):
        return len(self.bonded) / self.horizon

    def union(self, other: "BondSchedule") -> "BondSchedule":
        if other.horizon != self.horizon:
            raise InvalidInput("schedules have different horizons")
        merged = sorted(self.bonded + other.bonded)
        return BondSchedule(self.horizon, _merge_touching(merged))


def _merge_touching(ivs):
    out = []
    for a, b in ivs:
        if out and a == out[-1][1]:
            out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return tuple(out)


def bond_grade(schedule: BondSchedule) -> float:
    """Bonded share of the horizon."""
    if not schedule.horizon > 0:
        raise InvalidInput("zero-length horizon")
    return min(1.0, schedule.bonded_length / schedule.horizon)


def modulate(schedule: BondSchedule, target_grade: float, max_interval: float) -> BondSchedule:
    """Evenly spread bonded intervals reaching ``target_grade``.

    The horizon is cut into ``n = ceil(H / max_interval)`` equal slots and the
    leading ``target_grade`` share of each slot is bonded, so every interval
    is at most ``max_interval`` long. Intervals are clipped to their own slot
    and never merged, so rounding near grade 1 cannot lengthen them.
    """
    if not 0.0 <= target_grade <= 1.0:
        raise InvalidInput(f"target grade {target_grade} outside [0, 1]")
    if not max_interval > 0:
        raise InvalidInput("max_interval must be > 0")
    H = schedule.horizon
    if target_grade == 0.0:
        return BondSchedule(H)
    if target_grade == 1.0:
        return BondSchedule.full(H)
    n = math.ceil(H / max_interval)
    slot = H / n
    on = target_grade * slot
    ivs = []
    for i in range(n):
        a = i * slot
        b = min(a + on, (i + 1) * slot, H)
        if b > a:
            ivs.append((a, b))
    return BondSchedule(H, tuple(ivs))


def grade_tolerance(horizon: float, max_interval: float) -> float:
    return 1.0 / (2 * math.ceil(horizon / max_interval))


def is_bonded_at(schedule: BondSchedule, t: float) -> bool:
    if not 0.0 <= t < schedule.horizon:
        raise OutOfHorizon(f"t={t} outside [0, {schedule.horizon})")
    lo, hi = 0, len(schedule.bonded)
    while lo < hi:
        mid = (lo + hi) // 2
        if schedule.bonded[mid][1] <= t:
            lo = mid + 1
        else:
            hi = mid
    return lo < len(schedule.bonded) and schedule.bonded[lo][0] <= t


def privacy_ok(schedule: BondSchedule, entity_change_frequency: float) -> bool:
    """True when bond onsets happen less often than the entity changes."""
    if not entity_change_frequency > 0:
        raise InvalidInput("change frequency must be > 0")
    return schedule.onset_frequency < entity_change_frequency


@dataclass(frozen=True)
class Bond:
    a: str
    b: str
    agreement: object
    schedule: BondSchedule
    upkeep_rate: float = 0.0
    failures: int = 0

    def __post_init__(self):
        if self.a == self.b:
            raise InvalidInput("a bond needs two distinct entities")
        if self.upkeep_rate < 0:
            raise InvalidInput("upkeep_rate must be >= 0")

    @property
    def key(self):
        return frozenset((self.a, self.b))

    @property
    def grade(self):
        return bond_grade(self.schedule)

    def counterpart(self, entity):
        if entity == self.a:
            return self.b
        if entity == self.b:
            return self.a
        raise InvalidInput(f"{entity!r} is not part of bond {self.a}-{self.b}")

    def upkeep_cost(self):
        """Resources consumed while bonded over the whole horizon."""
        return self.upkeep_rate * self.schedule.bonded_length


@dataclass(frozen=True)
class ReviewPolicy:
    damping: float = 0.5
    min_grade: float = 0.05
    dissolve_after: int = 3

    def __post_init__(self):
        if not 0.0 <= self.damping <= 1.0 or not 0.0 <= self.min_grade <= 1.0:
            raise InvalidInput("damping and min_grade must lie in [0, 1]")
        if self.dissolve_after < 1:
            raise InvalidInput("dissolve_after must be >= 1")


@dataclass(frozen=True)
class Renew:
    pass


@dataclass(frozen=True)
class Adjust:
    new_grade: float


@dataclass(frozen=True)
class Dissolve:
    pass


Decision = Union[Renew, Adjust, Dissolve]


def review_bond(bond: Bond, report, policy: ReviewPolicy = ReviewPolicy()) -> Decision:
    if report.passed:
        return Renew()
    if bond.failures + 1 >= policy.dissolve_after:
        return Dissolve()
    g = bond.grade
    # the floor never lifts a grade that is already below it
    return Adjust(min(g, max(g * policy.damping, policy.min_grade)))


def apply_review(bond: Bond, decision: Decision,
                 max_interval: Optional[float] = None) -> Optional[Bond]:
    """The bond after a review; ``None`` when dissolved."""
    if isinstance(decision, Renew):
        return replace(bond, failures=0)
    if isinstance(decision, Dissolve):
        return None
    if max_interval is None:
        longest = max((b - a for a, b in bond.schedule.bonded), default=bond.schedule.horizon)
        max_interval = longest
    schedule = modulate(bond.schedule, decision.new_grade, max_interval)
    return replace(bond, schedule=schedule, failures=bond.failures + 1)


@dataclass(frozen=True)
class Molecule:
    entities: frozenset
    bonds: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "entities", frozenset(self.entities))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        seen = set()
        for bond in self.bonds:
            a, b = _ends(bond)
            if a not in self.entities or b not in self.entities:
                raise InvalidInput(f"bond {a}-{b} has an endpoint outside the molecule")
            key = frozenset((a, b))
            if key in seen:
                raise InvalidInput(f"more than one bond between {a} and {b}")
            seen.add(key)

    def graph(self):
        g = nx.Graph()
        g.add_nodes_from(self.entities)
        g.add_edges_from(_ends(b) for b in self.bonds)
        return g


def _ends(bond):
    if isinstance(bond, Bond):
        return bond.a, bond.b
    a, b = bond
    if a == b:
        raise InvalidInput(f"self-bond on {a!r}")
    return a, b


def communities(molecule: Molecule) -> list:
    """Connected components of the bond graph, ordered by smallest member."""
    comps = [set(c) for c in nx.connected_components(molecule.graph())]
    return sorted(comps, key=lambda c: min(map(str, c)))
