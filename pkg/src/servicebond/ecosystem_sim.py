"""Deterministic tick-based simulation of service ecosystems.

Entities sit on service-stack levels; requesters at level ``l`` are served by
providers at ``l - 1``, and providers pass (amplified) sub-requests further
down to a supplier. Requests spread among same-level peers (horizontal
avalanche), grow on the way down the stack (vertical avalanche) and are
inflated by requester uncertainty (self-driven avalanche). Providers stop
serving only after their inertia horizon of loss-making ticks.

Every random draw comes from a named stream keyed by ``(seed, entity,
purpose)``, so a run is a pure function of its scenario.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional


from .bond_fabric import (
    Bond,
    BondSchedule,
    ReviewPolicy,
    apply_review,
    is_bonded_at,
    review_bond,
)
from .distances import DistanceTuple, RBd, step_distance
from .errors import AmbiguousNaive, InvalidInput
from .service_cycle import Agreement, AuditReport, Verdict
from .trace_model import SloTuple, Trace, make_reference_trace


class InteractionForm(enum.Enum):
    NAIVE = "naive"
    DIRECTORY = "directory"
    BROKER = "broker"
    BRAND = "brand"
    BOND = "bond"


BROKER_MODES = (None, "continuous_degradation", "discrete_failure")


@dataclass(frozen=True)
class Entity:
    id: str
    level: int = 0
    capacity: float = math.inf
    inertia_horizon: int = 0
    roles: frozenset = frozenset({"provider"})
    quality: float = 1.0
    true_quality: Optional[float] = None
    brand: Optional[str] = None
    supplier: Optional[str] = None
    price: float = 1.0
    fixed_cost: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "roles", frozenset(self.roles))
        if self.level < 0:
            raise InvalidInput(f"{self.id}: level must be >= 0")
        if self.capacity < 0 or self.inertia_horizon < 0:
            raise InvalidInput(f"{self.id}: capacity and inertia_horizon must be >= 0")

    @property
    def is_requester(self):
        return "requester" in self.roles

    @property
    def is_provider(self):
        return "provider" in self.roles

    @property
    def real_quality(self):
        return self.quality if self.true_quality is None else self.true_quality


@dataclass(frozen=True)
class AvalancheParams:
    horizontal_adopt_prob: float = 0.0
    vertical_amplification: float = 1.0
    self_driven_uncertainty: float = 0.0
    damping_via_review: bool = False

    def __post_init__(self):
        if not 0.0 <= self.horizontal_adopt_prob <= 1.0:
            raise InvalidInput("horizontal_adopt_prob must lie in [0, 1]")
        if not self.vertical_amplification >= 1.0:
            raise InvalidInput("vertical_amplification must be >= 1")
        if not self.self_driven_uncertainty >= 0.0:
            raise InvalidInput("self_driven_uncertainty must be >= 0")


@dataclass(frozen=True)
class SeedRequest:
    tick: int
    entity: str
    demand: Optional[float] = None


@dataclass(frozen=True)
class Scenario:
    entities: tuple
    same_level_edges: tuple
    interaction_form: InteractionForm
    avalanche: AvalancheParams
    horizon_ticks: int
    seed: int
    request_cap: int
    seed_requests: tuple = ()
    name: str = "scenario"
    base_demand: float = 1.0
    review_period: int = 10
    directory_refresh: int = 5
    broker_failure: Optional[str] = None
    broker_trust_threshold: int = 10
    notify_threshold: float = 0.3
    audit_threshold: float = 0.2
    bond_upkeep_rate: float = 0.0
    review_policy: ReviewPolicy = ReviewPolicy()

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "same_level_edges", tuple(tuple(e) for e in self.same_level_edges))
        object.__setattr__(self, "seed_requests", tuple(self.seed_requests))
        object.__setattr__(self, "interaction_form", InteractionForm(self.interaction_form))
        if self.horizon_ticks <= 0:
            raise InvalidInput("horizon_ticks must be > 0")
        if self.request_cap < 0 or self.review_period <= 0 or self.directory_refresh <= 0:
            raise InvalidInput("request_cap must be >= 0; review_period and directory_refresh > 0")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidInput("seed must be an unsigned 64-bit integer")
        if self.broker_failure not in BROKER_MODES:
            raise InvalidInput(f"unknown broker failure mode {self.broker_failure!r}")
        by_id = {}
        for e in self.entities:
            if e.id in by_id:
                raise InvalidInput(f"duplicate entity id {e.id!r}")
            by_id[e.id] = e
        for a, b in self.same_level_edges:
            if a not in by_id or b not in by_id:
                raise InvalidInput(f"edge {a}-{b} names an unknown entity")
            if by_id[a].level != by_id[b].level:
                raise InvalidInput(f"edge {a}-{b} joins different levels")
        for s in self.seed_requests:
            if s.entity not in by_id:
                raise InvalidInput(f"seed request for unknown entity {s.entity!r}")
        for e in self.entities:
            if e.supplier is not None and e.supplier not in by_id:
                raise InvalidInput(f"{e.id}: unknown supplier {e.supplier!r}")

    def entity(self, eid):
        for e in self.entities:
            if e.id == eid:
                return e
        raise KeyError(eid)


# -- random streams -------------------------------------------------------

def stream_seed(seed: int, entity: str, purpose: str) -> int:
    """64-bit stream seed: BLAKE2b-64 of ``"seed|entity|purpose"``."""
    h = hashlib.blake2b(f"{seed}|{entity}|{purpose}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


class Streams:
    def __init__(self, seed):
        self.seed = seed
        self._cache = {}

    def __call__(self, entity, purpose) -> random.Random:
        key = (entity, purpose)
        if key not in self._cache:
            self._cache[key] = random.Random(stream_seed(self.seed, entity, purpose))
        return self._cache[key]


# -- avalanche laws -------------------------------------------------------

def horizontal_round(adjacency, triggered, frontier, adopt_prob, streams,
                     prob_of=None, eligible=None):
    """One round of peer adoption.

    Each frontier node, in id order, offers the trigger to each untriggered
    neighbour, which adopts with probability ``prob_of(node)`` (default
    ``adopt_prob``) drawn from the node's ``horizontal`` stream.
    """
    new = set()
    for u in sorted(frontier):
        p = adopt_prob if prob_of is None else prob_of(u)
        rng = streams(u, "horizontal")
        for v in sorted(adjacency.get(u, ())):
            if v in triggered or v in new or (eligible is not None and v not in eligible):
                continue
            if rng.random() < p:
                new.add(v)
    return new


def saturate(adjacency, seeds, adopt_prob, streams, rounds):
    """Triggered set after ``rounds`` horizontal rounds from ``seeds``."""
    triggered, frontier = set(seeds), set(seeds)
    for _ in range(rounds):
        frontier = horizontal_round(adjacency, triggered, frontier, adopt_prob, streams)
        triggered |= frontier
    return triggered


def vertical_chain(demand: float, level: int, amplification: float):
    """``[(level, demand), ...]`` from ``level`` down to 0.

    The request arriving at ``level`` carries ``demand``; each hop down
    multiplies it by the amplification, so depth k carries ``demand * a**k``.
    """
    if level < 0:
        raise InvalidInput("level must be >= 0")
    return [(level - k, demand * amplification ** k) for k in range(level + 1)]


def abandoned_by_level(chain):
    """Delivered minus requested-from-above for every level of a chain."""
    out = {chain[0][0]: 0.0}
    for (_, above), (lvl, delivered) in zip(chain, chain[1:]):
        out[lvl] = delivered - above
    return out


def self_driven(demand: float, uncertainty: float) -> float:
    return demand * (1.0 + uncertainty)


def trigger_avalanche(kind, state, params: AvalancheParams, streams=None):
    """Dispatch to one avalanche law.

    ``horizontal``: ``state = (adjacency, triggered, frontier)`` -> new set.
    ``vertical``: ``state = (demand, level)`` -> chain.
    ``self_driven``: ``state = demand`` -> inflated demand.
    """
    if kind == "horizontal":
        adjacency, triggered, frontier = state
        return horizontal_round(adjacency, triggered, frontier, params.horizontal_adopt_prob, streams)
    if kind == "vertical":
        demand, level = state
        return vertical_chain(demand, level, params.vertical_amplification)
    if kind == "self_driven":
        return self_driven(state, params.self_driven_uncertainty)
    raise InvalidInput(f"unknown avalanche kind {kind!r}")


# -- inertia and notifications -------------------------------------------

def step_inertia(entity: Entity, profit_series, t: int) -> str:
    """``"serving"`` or ``"stopped"`` at tick ``t``.

    An entity stops once its run of consecutive loss-making ticks exceeds its
    inertia horizon; stopping is permanent.
    """
    streak = 0
    for tick in range(t + 1):
        streak = streak + 1 if profit_series[tick] < 0 else 0
        if streak > entity.inertia_horizon:
            return "stopped"
    return "serving"


def no_profit_ticks(entity: Entity, profit_series, t: int) -> int:
    """Loss-making ticks up to ``t`` during which the entity still served."""
    return sum(
        1 for tick in range(t + 1)
        if profit_series[tick] < 0 and step_inertia(entity, profit_series, tick) == "serving"
    )


@dataclass(frozen=True)
class Notification:
    provider: str
    utilization: float
    recipients: tuple


def northwise_notify(provider, utilization: float, threshold: float,
                     form=InteractionForm.BOND, bonded_requesters=()):
    """Discount offer to bonded requesters of an under-used provider."""
    if InteractionForm(form) is not InteractionForm.BOND:
        return None
    if utilization < threshold:
        pid = provider.id if isinstance(provider, Entity) else provider
        return Notification(pid, utilization, tuple(sorted(bonded_requesters)))
    return None


# -- interaction forms ----------------------------------------------------

@dataclass(frozen=True)
class Request:
    requester: str
    level: int
    demand: float
    tick: int = 0


@dataclass(frozen=True)
class Binding:
    provider: str
    harmful: bool = False
    proposed_bond: bool = False


@dataclass(frozen=True)
class Failure:
    reason: str


@dataclass
class BrokerState:
    mode: Optional[str] = None
    trust_threshold: int = 10
    successes: dict = field(default_factory=lambda: defaultdict(int))
    betrayed: set = field(default_factory=set)


@dataclass
class Registry:
    providers: dict
    serving: set
    directory: dict = field(default_factory=dict)
    bonds: dict = field(default_factory=dict)
    excluded: dict = field(default_factory=dict)
    broker: BrokerState = field(default_factory=BrokerState)

    @classmethod
    def from_entities(cls, entities, **kw):
        providers = defaultdict(list)
        for e in sorted(entities, key=lambda e: e.id):
            if e.is_provider:
                providers[e.level].append(e)
        reg = cls(dict(providers), {e.id for es in providers.values() for e in es}, **kw)
        reg.refresh_directory()
        return reg

    def refresh_directory(self):
        self.directory = {
            lvl: [e.id for e in sorted(es, key=lambda e: (-e.quality, e.id)) if e.id in self.serving]
            for lvl, es in self.providers.items()
        }

    def live(self, level):
        return [e for e in self.providers.get(level, ()) if e.id in self.serving]


def _directory_pick(request, registry, exclude=()):
    ranked = [p for p in registry.directory.get(request.level - 1, ()) if p not in exclude]
    if not ranked:
        return Failure("no-provider")
    top = ranked[0]
    if top not in registry.serving:
        return Failure("stale-directory")
    return Binding(top)


def resolve_interaction(form, request: Request, registry: Registry, rng: random.Random):
    """Bind a request to a provider under one interaction form."""
    form = InteractionForm(form)
    level = request.level - 1
    if form is InteractionForm.NAIVE:
        cands = registry.providers.get(level, [])
        if not cands:
            return Failure("no-provider")
        if len(cands) != 1:
            raise AmbiguousNaive(f"naive interaction needs exactly one provider, found {len(cands)}")
        if cands[0].id not in registry.serving:
            return Failure("provider-stopped")
        return Binding(cands[0].id)
    if form is InteractionForm.DIRECTORY:
        return _directory_pick(request, registry)
    if form is InteractionForm.BROKER:
        cands = sorted(registry.live(level), key=lambda e: (-e.real_quality, e.id))
        if not cands:
            return Failure("no-provider")
        broker = registry.broker
        pick, harmful = cands[0], False
        if broker.mode == "continuous_degradation" and len(cands) > 1:
            pick, harmful = cands[1], True
        elif (broker.mode == "discrete_failure" and request.requester not in broker.betrayed
              and broker.successes[request.requester] >= broker.trust_threshold):
            pick, harmful = cands[-1], True
            broker.betrayed.add(request.requester)
        if not harmful:
            broker.successes[request.requester] += 1
        return Binding(pick.id, harmful=harmful)
    if form is InteractionForm.BRAND:
        cloud = [e.id for e in registry.live(level) if e.brand is not None]
        if not cloud:
            return Failure("no-provider")
        return Binding(cloud[rng.randrange(len(cloud))])
    # bond form
    bond = registry.bonds.get(request.requester)
    if bond is not None and bond.grade > 0:
        other = bond.counterpart(request.requester)
        if other in registry.serving:
            return Binding(other)
    picked = _directory_pick(request, registry, registry.excluded.get(request.requester, ()))
    if isinstance(picked, Binding):
        return Binding(picked.provider, proposed_bond=True)
    return picked


# -- report ---------------------------------------------------------------

METRIC_COLUMNS = (
    "tick", "new_requests", "total_requests", "active_requesters", "triggered",
    "demand", "abandoned", "no_profit_serving", "serving_providers", "failures",
    "bond_grade_mean", "bond_upkeep", "notifications", "broker_harm",
)


def digest_events(events) -> str:
    h = hashlib.blake2b(digest_size=8)
    for line in events:
        h.update(line.encode())
        h.update(b"\n")
    return h.hexdigest()


@dataclass
class SimReport:
    rows: list
    summary: dict
    events: list
    columns: tuple = METRIC_COLUMNS
    extras: dict = field(default_factory=dict)

    @property
    def digest(self):
        return self.summary["digest"]

    def metrics_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(self.columns), lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({k: _fmt(row[k]) for k in self.columns})
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True) + "\n"

    def write(self, outdir):
        import pathlib

        out = pathlib.Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(self.metrics_csv())
        (out / "summary.json").write_text(self.summary_json())


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


# -- event loop -----------------------------------------------------------

class _Simulation:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.form = sc.interaction_form
        self.av = sc.avalanche
        self.by_id = {e.id: e for e in sc.entities}
        self.requesters = {e.id for e in sc.entities if e.is_requester}
        self.adj = defaultdict(set)
        for a, b in sc.same_level_edges:
            self.adj[a].add(b)
            self.adj[b].add(a)
        self.streams = Streams(sc.seed)
        self.registry = Registry.from_entities(
            sc.entities, broker=BrokerState(sc.broker_failure, sc.broker_trust_threshold)
        )
        if self.form is InteractionForm.NAIVE:
            for lvl, es in self.registry.providers.items():
                if len(es) > 1:
                    raise AmbiguousNaive(f"naive scenario has {len(es)} providers at level {lvl}")
        self.seeds = defaultdict(list)
        for s in sc.seed_requests:
            self.seeds[s.tick].append(s)
        self.triggered = set()
        self.frontier = set()
        self.active = {}
        self.binding = {}
        self.history = defaultdict(list)
        self.streak = defaultdict(int)
        self.events = []
        self.rows = []
        self.total_requests = 0
        self.total_request_demand = 0.0
        self.max_request_demand = 0.0
        self.abandoned_total = 0.0
        self.no_profit_total = 0
        self.failures_total = 0
        self.notifications_total = 0
        self.harm_total = 0
        self.saturated = False
        self.ticks_run = 0

    def log(self, t, *parts):
        self.events.append("|".join([str(t)] + [p if isinstance(p, str) else repr(p) for p in parts]))

    def damped(self, r):
        return (self.form is InteractionForm.BOND and self.av.damping_via_review
                and r in self.registry.bonds)

    def supplier_of(self, e: Entity):
        if e.supplier is not None:
            return self.by_id[e.supplier]
        below = self.registry.providers.get(e.level - 1, [])
        return below[0] if below else None

    def run(self) -> SimReport:
        for t in range(self.sc.horizon_ticks):
            self.tick(t)
            self.ticks_run = t + 1
            if self.saturated:
                break
        return self.report()

    def tick(self, t):
        sc = self.sc
        new = set()
        seed_demand = {}
        for s in self.seeds.get(t, ()):
            if s.entity in self.requesters and s.entity not in self.triggered:
                new.add(s.entity)
                if s.demand is not None:
                    seed_demand[s.entity] = s.demand

        def prob_of(u):
            p = self.av.horizontal_adopt_prob
            if self.damped(u):
                p *= 1.0 - self.registry.bonds[u].grade
            return p

        spread = horizontal_round(self.adj, self.triggered | new, self.frontier,
                                  self.av.horizontal_adopt_prob, self.streams,
                                  prob_of=prob_of, eligible=self.requesters)
        for v in sorted(spread):
            self.log(t, "adopt", v)
        new |= spread
        new_requests = 0
        for r in sorted(new):
            if self.total_requests + 1 > sc.request_cap:
                self.saturated = True
                self.log(t, "saturated", self.total_requests)
                break
            self.triggered.add(r)
            d = seed_demand.get(r, sc.base_demand)
            if self.av.self_driven_uncertainty > 0 and not self.damped(r):
                d = self_driven(d, self.av.self_driven_uncertainty)
            self.active[r] = d
            self.total_requests += 1
            new_requests += 1
            self.total_request_demand += d
            self.max_request_demand = max(self.max_request_demand, d)
            self.log(t, "request", r, d)
        self.frontier = new & self.triggered

        if t % sc.directory_refresh == 0:
            self.registry.refresh_directory()

        failures, harm = self.resolve(t)
        load, abandoned = self.loads()
        no_profit = self.inertia(t, load)
        self.record_service(t, load)
        if self.form is InteractionForm.BOND and (t + 1) % sc.review_period == 0:
            self.review(t)
        notes = self.notify(t, load) if self.form is InteractionForm.BOND else 0

        bonds = list(self.registry.bonds.values())
        phase_t = t % sc.review_period
        upkeep = math.fsum(b.upkeep_rate for b in bonds if is_bonded_at(b.schedule, phase_t))
        self.abandoned_total += abandoned
        self.no_profit_total += no_profit
        self.failures_total += failures
        self.notifications_total += notes
        self.harm_total += harm
        self.rows.append({
            "tick": t,
            "new_requests": new_requests,
            "total_requests": self.total_requests,
            "active_requesters": len(self.active),
            "triggered": len(self.triggered),
            "demand": math.fsum(self.active[r] for r in self.binding),
            "abandoned": abandoned,
            "no_profit_serving": no_profit,
            "serving_providers": len(self.registry.serving),
            "failures": failures,
            "bond_grade_mean": (math.fsum(b.grade for b in bonds) / len(bonds)) if bonds else 0.0,
            "bond_upkeep": upkeep,
            "notifications": notes,
            "broker_harm": harm,
        })

    def resolve(self, t):
        failures = harm = 0
        sticky = self.form in (InteractionForm.NAIVE, InteractionForm.DIRECTORY, InteractionForm.BOND)
        for r in sorted(self.active):
            cur = self.binding.get(r)
            if sticky and cur is not None and cur in self.registry.serving:
                continue
            req = Request(r, self.by_id[r].level, self.active[r], t)
            res = resolve_interaction(self.form, req, self.registry, self.streams(r, "interaction"))
            if isinstance(res, Failure):
                self.binding.pop(r, None)
                failures += 1
                self.log(t, "fail", r, res.reason)
                continue
            if res.harmful:
                harm += 1
            if res.provider != cur or res.harmful:
                self.log(t, "bind", r, res.provider, "harmful" if res.harmful else "ok")
            self.binding[r] = res.provider
            if res.proposed_bond:
                self.propose_bond(t, r, res.provider)
        return failures, harm

    def propose_bond(self, t, r, p):
        sc = self.sc
        slo = SloTuple.of(("service", self.active[r]))
        agreement = Agreement(slo, RBd(1.0), DistanceTuple(("service",), (sc.audit_threshold,)),
                              float(sc.review_period), r, p)
        self.registry.bonds[r] = Bond(r, p, agreement, BondSchedule.full(sc.review_period),
                                      sc.bond_upkeep_rate)
        self.history[r] = []
        self.log(t, "bond", r, p)

    def loads(self):
        load = defaultdict(float)
        delivered = defaultdict(float)
        from_above = defaultdict(float)
        a = self.av.vertical_amplification
        for r in sorted(self.binding):
            e = self.by_id[self.binding[r]]
            chain = vertical_chain(self.active[r], e.level, a)
            prev = chain[0][1]
            for k, (lvl, dem) in enumerate(chain):
                if e is None or e.id not in self.registry.serving:
                    break
                load[e.id] += dem
                delivered[lvl] += dem
                from_above[lvl] += dem if k == 0 else prev
                prev = dem
                e = self.supplier_of(e) if k + 1 < len(chain) else None
        abandoned = math.fsum(max(0.0, delivered[l] - from_above[l]) for l in delivered)
        return load, abandoned

    def inertia(self, t, load):
        no_profit = 0
        for lvl in sorted(self.registry.providers):
            for e in self.registry.providers[lvl]:
                if e.id not in self.registry.serving:
                    continue
                profit = e.price * min(load.get(e.id, 0.0), e.capacity) - e.fixed_cost
                if profit < 0:
                    self.streak[e.id] += 1
                else:
                    self.streak[e.id] = 0
                if self.streak[e.id] > e.inertia_horizon:
                    self.registry.serving.discard(e.id)
                    self.log(t, "stop", e.id)
                elif profit < 0:
                    no_profit += 1
        return no_profit

    def record_service(self, t, load):
        for r, p in self.binding.items():
            if r not in self.registry.bonds:
                continue
            e = self.by_id[p]
            d = self.active[r]
            if p not in self.registry.serving:
                got = 0.0
            else:
                got = d * min(1.0, e.capacity / load[p]) if load[p] > 0 else d
            self.history[r].append((float(t), got, d))

    def review(self, t):
        sc = self.sc
        for r in sorted(self.registry.bonds):
            bond = self.registry.bonds[r]
            hist = self.history[r]
            if not hist:
                continue
            ts = [h[0] for h in hist]
            delivered = Trace(ts, [[h[1]] for h in hist], ("service",))
            reference = Trace(ts, [[h[2]] for h in hist], ("service",), slo=bond.agreement.slo)
            view = step_distance(delivered, reference)
            ok = view.le(bond.agreement.thresholds)
            report = AuditReport(view, view, Verdict.PASS if ok else Verdict.FAIL)
            decision = review_bond(bond, report, sc.review_policy)
            updated = apply_review(bond, decision, max_interval=max(1.0, sc.review_period / 4))
            self.log(t, "review", r, type(decision).__name__, view.values[0])
            self.history[r] = []
            if updated is None:
                del self.registry.bonds[r]
                self.registry.excluded.setdefault(r, set()).add(bond.b)
                self.binding.pop(r, None)
                self.log(t, "dissolve", r, bond.b)
            else:
                self.registry.bonds[r] = updated

    def notify(self, t, load):
        by_provider = defaultdict(list)
        for r, bond in self.registry.bonds.items():
            by_provider[bond.b].append(r)
        sent = 0
        for p in sorted(by_provider):
            e = self.by_id[p]
            if p not in self.registry.serving or math.isinf(e.capacity) or e.capacity == 0:
                continue
            note = northwise_notify(e, load.get(p, 0.0) / e.capacity, self.sc.notify_threshold,
                                    self.form, by_provider[p])
            if note is not None:
                sent += len(note.recipients)
                self.log(t, "notify", p, len(note.recipients))
        return sent

    def report(self) -> SimReport:
        sc = self.sc
        summary = {
            "name": sc.name,
            "kind": "ecosystem",
            "interaction_form": self.form.value,
            "seed": sc.seed,
            "horizon_ticks": sc.horizon_ticks,
            "ticks_run": self.ticks_run,
            "saturated": self.saturated,
            "request_cap": sc.request_cap,
            "total_requests": self.total_requests,
            "triggered": len(self.triggered),
            "total_request_demand": self.total_request_demand,
            "max_request_demand": self.max_request_demand,
            "demand_bound": sc.request_cap * self.max_request_demand,
            "abandoned_total": self.abandoned_total,
            "no_profit_serving_ticks": self.no_profit_total,
            "failures": self.failures_total,
            "notifications": self.notifications_total,
            "broker_harm": self.harm_total,
            "bonds_active": len(self.registry.bonds),
            "serving_providers": len(self.registry.serving),
            "events": len(self.events),
            "digest": digest_events(self.events),
        }
        return SimReport(self.rows, summary, self.events)


def run(scenario: Scenario) -> SimReport:
    """Execute a scenario; identical scenarios give identical digests."""
    return _Simulation(scenario).run()


# -- config ---------------------------------------------------------------

def scenario_from_dict(cfg: dict, seed: Optional[int] = None) -> Scenario:
    ents = []
    for raw in cfg["entities"]:
        raw = dict(raw)
        if raw.get("capacity") is None:
            raw["capacity"] = math.inf
        raw["roles"] = frozenset(raw.get("roles", ["provider"]))
        ents.append(Entity(**raw))
    edges = [tuple(e) for e in cfg.get("edges", [])]
    for group in cfg.get("complete_groups", []):
        group = sorted(group)
        edges += [(a, b) for i, a in enumerate(group) for b in group[i + 1:]]
    known = {
        "name", "base_demand", "review_period", "directory_refresh", "broker_failure",
        "broker_trust_threshold", "notify_threshold", "audit_threshold", "bond_upkeep_rate",
    }
    extra = {k: cfg[k] for k in known if k in cfg}
    if "review_policy" in cfg:
        extra["review_policy"] = ReviewPolicy(**cfg["review_policy"])
    return Scenario(
        entities=ents,
        same_level_edges=edges,
        interaction_form=InteractionForm(cfg["interaction_form"]),
        avalanche=AvalancheParams(**cfg.get("avalanche", {})),
        horizon_ticks=int(cfg["horizon_ticks"]),
        seed=int(cfg["seed"] if seed is None else seed),
        request_cap=int(cfg.get("request_cap", 10 ** 6)),
        seed_requests=[SeedRequest(**s) for s in cfg.get("seed_requests", [])],
        **extra,
    )
