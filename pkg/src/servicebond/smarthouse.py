"""Household-side regulator for WECFA device flows.

The regulator owns one bond per vendor or utility, shares the upstream link
among bonded sensors with max-min fairness, and gates every sensor outflow
and actuator command inflow on an active bond at that instant. Utilities
that tap household sensors must in turn answer the household's data
queries; refusing flags their bond for review.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .bond_fabric import (
    Bond,
    BondSchedule,
    ReviewPolicy,
    apply_review,
    is_bonded_at,
    modulate,
    review_bond,
)
from .distances import DistanceTuple, RBd
from .ecosystem_sim import SimReport, Streams, digest_events
from .errors import InfeasibleQuota, InvalidInput, OutOfHorizon, UnknownDevice
from .service_cycle import Agreement, AuditReport, Verdict
from .trace_model import SloTuple

# broadband fixed-access figures, kbps
DEFAULT_UP_KBPS = 3000.0
DEFAULT_DOWN_KBPS = 25000.0


class FlowKind(enum.Enum):
    WATER = "Water"
    ELECTRICITY = "Electricity"
    CONNECTIVITY = "Connectivity"
    FOOD = "Food"
    AIR = "Air"


class Mode(enum.Enum):
    PULL_SENSOR = "pull-sensor"
    PUSH_ACTUATOR = "push-actuator"


@dataclass(frozen=True)
class Device:
    id: str
    flow: FlowKind
    mode: Mode
    demand: float
    min_quota: float = 0.0
    vendor: str = ""

    def __post_init__(self):
        object.__setattr__(self, "flow", FlowKind(self.flow))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.demand < 0 or self.min_quota < 0:
            raise InvalidInput(f"{self.id}: demand and min_quota must be >= 0")

    @property
    def direction(self):
        return "outflow" if self.mode is Mode.PULL_SENSOR else "inflow"


def _floor_float(x: Fraction) -> float:
    f = float(x)
    if Fraction(f) > x:
        f = math.nextafter(f, -math.inf)
    return f


def _floors(devices):
    return [Fraction(d.min_quota) if d.demand >= d.min_quota else Fraction(0) for d in devices]


def water_level(devices, capacity):
    """Exact fill level ``s`` with ``sum(clamp(s, floor_i, demand_i)) == capacity``.

    Returns ``None`` when every demand fits.
    """
    lo = _floors(devices)
    hi = [Fraction(d.demand) for d in devices]
    C = Fraction(capacity)
    if sum(hi) <= C:
        return None

    def filled(s):
        return sum(min(max(s, l), h) for l, h in zip(lo, hi))

    points = sorted({Fraction(0), *lo, *hi})
    for a, b in zip(points, points[1:]):
        if filled(b) >= C:
            slope = sum(1 for l, h in zip(lo, hi) if l <= a and h >= b)
            return a + (C - filled(a)) / slope
    raise AssertionError("fill level not bracketed")


def allocate_bandwidth(devices, capacity: float) -> dict:
    """Max-min fair shares of ``capacity`` honouring per-device quota floors.

    Each device receives ``clamp(s, floor, demand)`` for the common level
    ``s``, where the floor is its min quota when its demand reaches the quota
    and 0 otherwise. Shares are computed exactly and rounded down, so they
    never sum above ``capacity``.
    """
    devices = list(devices)
    ids = [d.id for d in devices]
    if len(set(ids)) != len(ids):
        raise InvalidInput("duplicate device ids")
    if capacity < 0:
        raise InvalidInput("capacity must be >= 0")
    lo = _floors(devices)
    deficit = sum(lo) - Fraction(capacity)
    if deficit > 0:
        raise InfeasibleQuota(float(deficit))
    s = water_level(devices, capacity)
    out = {}
    for d, l in zip(devices, lo):
        exact = Fraction(d.demand) if s is None else min(max(s, l), Fraction(d.demand))
        out[d.id] = _floor_float(exact)
    return out


@dataclass
class RegulatorState:
    capacity_up: float = DEFAULT_UP_KBPS
    capacity_down: float = DEFAULT_DOWN_KBPS
    devices: dict = field(default_factory=dict)
    bonds: dict = field(default_factory=dict)
    allocations: dict = field(default_factory=dict)
    inflow_allocations: dict = field(default_factory=dict)
    regulator_id: str = "regulator"

    def register(self, device: Device):
        self.devices[device.id] = device

    def bonded_at(self, vendor, t):
        bond = self.bonds.get(vendor)
        if bond is None:
            return False
        try:
            return is_bonded_at(bond.schedule, t)
        except OutOfHorizon:
            return False


@dataclass(frozen=True)
class Allow:
    pass


@dataclass(frozen=True)
class Deny:
    reason: str


def gate_flow(regulator: RegulatorState, device, direction: str, t: float):
    """Allow a flow only over an active bond with a non-zero allocation."""
    dev_id = device.id if isinstance(device, Device) else device
    if dev_id not in regulator.devices:
        raise UnknownDevice(dev_id)
    dev = regulator.devices[dev_id]
    if direction not in ("outflow", "inflow"):
        raise InvalidInput(f"unknown direction {direction!r}")
    bond = regulator.bonds.get(dev.vendor)
    if bond is None:
        return Deny("no-bond")
    if not regulator.bonded_at(dev.vendor, t):
        return Deny("disbonded-interval")
    allocs = regulator.allocations if direction == "outflow" else regulator.inflow_allocations
    if not allocs.get(dev_id, 0.0) > 0:
        return Deny("no-allocation")
    return Allow()


@dataclass(frozen=True)
class DataQuery:
    topic: str
    since: float = 0.0


@dataclass(frozen=True)
class TapOutcome:
    granted: bool
    flagged: bool = False
    report: Optional[AuditReport] = None


def reciprocal_tap(utility_bond: Bond, household_request: DataQuery,
                   tapping: bool, willing: bool = True) -> TapOutcome:
    """Household query for a utility's data over their bond.

    A willing utility grants. A utility that taps household sensors but
    refuses gets its bond flagged with a failing audit report; one that is
    not tapping owes nothing, so its refusal carries no flag.
    """
    if not utility_bond.grade > 0:
        raise InvalidInput("reciprocal tap needs an active bond")
    if willing:
        return TapOutcome(True)
    if not tapping:
        return TapOutcome(False)
    names = utility_bond.agreement.slo.names
    view = DistanceTuple.uniform(names, 1.0)
    return TapOutcome(False, True, AuditReport(view, view, Verdict.FAIL))


def passing_report(bond: Bond) -> AuditReport:
    view = DistanceTuple.zeros(bond.agreement.slo.names)
    return AuditReport(view, view, Verdict.PASS)


# -- scenario -------------------------------------------------------------

SMARTHOUSE_COLUMNS = (
    "tick", "t", "allowed_out", "denied_out", "allowed_in", "denied_in",
    "allocated_up", "allocated_down", "bonds_active", "bond_grade_mean",
    "taps_granted", "taps_refused", "bond_upkeep",
)


@dataclass(frozen=True)
class UtilityAgent:
    id: str
    flow: FlowKind
    refusal_prob: float = 0.0


@dataclass(frozen=True)
class BondSpec:
    counterpart: str
    grade: float = 1.0
    max_interval: float = 900.0
    upkeep_rate: float = 0.0


@dataclass(frozen=True)
class SmartHouseConfig:
    devices: tuple
    bonds: tuple
    utilities: tuple = ()
    isp: str = "isp"
    regulator: str = "regulator"
    name: str = "smarthouse"
    seed: int = 0
    tick_seconds: float = 60.0
    horizon_seconds: float = 86400.0
    capacity_up_kbps: float = DEFAULT_UP_KBPS
    capacity_down_kbps: float = DEFAULT_DOWN_KBPS
    tap_every_seconds: float = 3600.0
    demand_jitter: float = 0.0
    review_policy: ReviewPolicy = ReviewPolicy()

    def __post_init__(self):
        if not self.tick_seconds > 0 or not self.horizon_seconds > 0:
            raise InvalidInput("tick_seconds and horizon_seconds must be > 0")
        if not 0 <= self.demand_jitter <= 1:
            raise InvalidInput("demand_jitter must lie in [0, 1]")


def smarthouse_from_dict(cfg: dict, seed: Optional[int] = None) -> SmartHouseConfig:
    kw = {k: cfg[k] for k in (
        "isp", "regulator", "name", "tick_seconds", "horizon_seconds", "capacity_up_kbps",
        "capacity_down_kbps", "tap_every_seconds", "demand_jitter",
    ) if k in cfg}
    if "review_policy" in cfg:
        kw["review_policy"] = ReviewPolicy(**cfg["review_policy"])
    return SmartHouseConfig(
        devices=tuple(Device(**d) for d in cfg["devices"]),
        bonds=tuple(BondSpec(**b) for b in cfg.get("bonds", [])),
        utilities=tuple(UtilityAgent(u["id"], FlowKind(u["flow"]), u.get("refusal_prob", 0.0))
                        for u in cfg.get("utilities", [])),
        seed=int(cfg.get("seed", 0) if seed is None else seed),
        **kw,
    )


def _make_bond(cfg: SmartHouseConfig, spec: BondSpec) -> Bond:
    slo = SloTuple.of(("us", cfg.capacity_up_kbps, "kbps"))
    agreement = Agreement(slo, RBd(cfg.tick_seconds), DistanceTuple(("us",), (0.0,)),
                          cfg.tap_every_seconds, cfg.regulator, spec.counterpart)
    schedule = modulate(BondSchedule(cfg.horizon_seconds), spec.grade, spec.max_interval)
    return Bond(cfg.regulator, spec.counterpart, agreement, schedule, spec.upkeep_rate)


def run_smarthouse(cfg: SmartHouseConfig) -> SimReport:
    """Tick through the household horizon; see :class:`SimReport`.

    The report's ``extras`` carry the outflow log ``(t, device, vendor)`` and
    the bond timeline ``(t, vendor, schedule or None)`` so that bilaterality
    can be re-checked independently.
    """
    reg = RegulatorState(cfg.capacity_up_kbps, cfg.capacity_down_kbps, regulator_id=cfg.regulator)
    for d in cfg.devices:
        reg.register(d)
    streams = Streams(cfg.seed)
    events, rows, outflows, timeline = [], [], [], []
    max_intervals = {}

    def log(t, *parts):
        events.append("|".join([repr(t)] + [p if isinstance(p, str) else repr(p) for p in parts]))

    for spec in cfg.bonds:
        reg.bonds[spec.counterpart] = _make_bond(cfg, spec)
        max_intervals[spec.counterpart] = spec.max_interval
        timeline.append((0.0, spec.counterpart, reg.bonds[spec.counterpart].schedule))
        log(0.0, "bond", spec.counterpart, reg.bonds[spec.counterpart].grade)

    sensors = sorted((d for d in cfg.devices if d.mode is Mode.PULL_SENSOR), key=lambda d: d.id)
    actuators = sorted((d for d in cfg.devices if d.mode is Mode.PUSH_ACTUATOR), key=lambda d: d.id)
    utilities = sorted(cfg.utilities, key=lambda u: u.id)
    n_ticks = int(math.ceil(cfg.horizon_seconds / cfg.tick_seconds))
    tap_every = max(1, int(round(cfg.tap_every_seconds / cfg.tick_seconds)))
    tapped_since = set()
    counts = dict(allowed_out=0, denied_out=0, allowed_in=0, denied_in=0,
                  taps_granted=0, taps_refused=0, capacity_violations=0, flagged=0)
    denials = {}

    for tick in range(n_ticks):
        t = tick * cfg.tick_seconds
        row = dict(tick=tick, t=t, allowed_out=0, denied_out=0, allowed_in=0, denied_in=0,
                   taps_granted=0, taps_refused=0)

        def jittered(dev):
            if cfg.demand_jitter == 0:
                return dev
            u = streams(dev.id, "demand").random()
            demand = max(dev.min_quota, dev.demand * (1 + cfg.demand_jitter * (2 * u - 1)))
            return Device(dev.id, dev.flow, dev.mode, demand, dev.min_quota, dev.vendor)

        up = [jittered(d) for d in sensors if reg.bonded_at(d.vendor, t)]
        down = [jittered(d) for d in actuators if reg.bonded_at(d.vendor, t)]
        reg.allocations = allocate_bandwidth(up, reg.capacity_up)
        reg.inflow_allocations = allocate_bandwidth(down, reg.capacity_down)
        if math.fsum(reg.allocations.values()) > reg.capacity_up:
            counts["capacity_violations"] += 1
        row["allocated_up"] = math.fsum(reg.allocations.values())
        row["allocated_down"] = math.fsum(reg.inflow_allocations.values())

        for dev in sensors + actuators:
            direction = dev.direction
            key = "out" if direction == "outflow" else "in"
            res = gate_flow(reg, dev, direction, t)
            if isinstance(res, Allow):
                row[f"allowed_{key}"] += 1
                log(t, key, "allow", dev.id, dev.vendor)
                if direction == "outflow":
                    outflows.append((t, dev.id, dev.vendor))
                    tapped_since.add(dev.vendor)
            else:
                row[f"denied_{key}"] += 1
                denials[res.reason] = denials.get(res.reason, 0) + 1
                log(t, key, "deny", dev.id, res.reason)

        if (tick + 1) % tap_every == 0:
            for ut in utilities:
                bond = reg.bonds.get(ut.id)
                if bond is None or not bond.grade > 0:
                    continue
                willing = streams(ut.id, "tap").random() >= ut.refusal_prob
                outcome = reciprocal_tap(bond, DataQuery(ut.flow.value, t), ut.id in tapped_since, willing)
                if outcome.granted:
                    row["taps_granted"] += 1
                    decision = review_bond(bond, passing_report(bond), cfg.review_policy)
                else:
                    row["taps_refused"] += 1
                    log(t, "tap", "refuse", ut.id)
                    if not outcome.flagged:
                        continue
                    counts["flagged"] += 1
                    decision = review_bond(bond, outcome.report, cfg.review_policy)
                updated = apply_review(bond, decision, max_intervals[ut.id])
                if updated is None:
                    del reg.bonds[ut.id]
                    timeline.append((t + cfg.tick_seconds, ut.id, None))
                    log(t, "dissolve", ut.id)
                else:
                    reg.bonds[ut.id] = updated
                    if updated.schedule != bond.schedule:
                        timeline.append((t + cfg.tick_seconds, ut.id, updated.schedule))
                        log(t, "adjust", ut.id, updated.grade)
            tapped_since = set()

        bonds = list(reg.bonds.values())
        row["bonds_active"] = len(bonds)
        row["bond_grade_mean"] = math.fsum(b.grade for b in bonds) / len(bonds) if bonds else 0.0
        row["bond_upkeep"] = math.fsum(b.upkeep_rate * cfg.tick_seconds for b in bonds if reg.bonded_at(b.b, t))
        for k in ("allowed_out", "denied_out", "allowed_in", "denied_in", "taps_granted", "taps_refused"):
            counts[k] += row[k]
        rows.append(row)

    violations = _bilaterality_violations(outflows, timeline)
    summary = {
        "name": cfg.name,
        "kind": "smarthouse",
        "seed": cfg.seed,
        "ticks_run": n_ticks,
        "saturated": False,
        "gate_events": counts["allowed_out"] + counts["denied_out"] + counts["allowed_in"] + counts["denied_in"],
        "outflow_events": len(outflows),
        "denials": dict(sorted(denials.items())),
        "bilaterality_violations": violations,
        "bonds_active": len(reg.bonds),
        "events": len(events),
        "digest": digest_events(events),
    }
    summary.update({k: counts[k] for k in (
        "allowed_out", "denied_out", "allowed_in", "denied_in", "taps_granted",
        "taps_refused", "capacity_violations", "flagged",
    )})
    report = SimReport(rows, summary, events, SMARTHOUSE_COLUMNS)
    report.extras["outflows"] = outflows
    report.extras["bond_timeline"] = timeline
    return report


def _bilaterality_violations(outflows, timeline) -> int:
    """Outflows with no bond of their vendor active at their timestamp."""
    by_vendor = {}
    for since, vendor, schedule in timeline:
        by_vendor.setdefault(vendor, []).append((since, schedule))
    bad = 0
    for t, _, vendor in outflows:
        current = None
        for since, schedule in by_vendor.get(vendor, ()):
            if since <= t:
                current = schedule
        if current is None or not (0 <= t < current.horizon) or not is_bonded_at(current, t):
            bad += 1
    return bad
