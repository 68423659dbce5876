"""Seven-phase service cycle with distance-based audition.

Phases advance strictly in order Request -> Advertisement -> Negotiation ->
Provide -> Audition -> Acceptance -> Termination. Audition may send the cycle
back to Provide at a milestone (bounded by a retry cap) or end it as
disputed.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .distances import PBd, PId, DistanceTuple, distance
from .errors import (
    IncompatibleTraces,
    InsufficientData,
    InvalidInput,
    InvalidTransition,
    NegotiationRejected,
    RetryCapExceeded,
)
from .trace_model import Signal, SloTuple


class Phase(enum.Enum):
    REQUEST = "Request"
    ADVERTISEMENT = "Advertisement"
    NEGOTIATION = "Negotiation"
    PROVIDE = "Provide"
    AUDITION = "Audition"
    ACCEPTANCE = "Acceptance"
    TERMINATION = "Termination"

    def __str__(self):
        return self.value


class Event(enum.Enum):
    REQUEST = "request"
    ADVERTISE = "advertise"
    AGREE = "agree"
    DELIVER = "deliver"
    AUDIT = "audit"
    ACCEPT = "accept"
    DISPUTE = "dispute"
    TERMINATE = "terminate"

    def __str__(self):
        return self.value


# (phase, event) -> next phase; every other pair is illegal.
TRANSITIONS = {
    (Phase.REQUEST, Event.ADVERTISE): Phase.ADVERTISEMENT,
    (Phase.ADVERTISEMENT, Event.REQUEST): Phase.NEGOTIATION,
    (Phase.NEGOTIATION, Event.AGREE): Phase.PROVIDE,
    (Phase.PROVIDE, Event.AUDIT): Phase.AUDITION,
    (Phase.AUDITION, Event.ACCEPT): Phase.ACCEPTANCE,
    (Phase.AUDITION, Event.DELIVER): Phase.PROVIDE,
    (Phase.AUDITION, Event.DISPUTE): Phase.TERMINATION,
    (Phase.ACCEPTANCE, Event.TERMINATE): Phase.TERMINATION,
}


def advance(phase: Phase, event: Event) -> Phase:
    phase, event = Phase(phase), Event(event)
    try:
        return TRANSITIONS[phase, event]
    except KeyError:
        raise InvalidTransition(phase, event) from None


@dataclass(frozen=True)
class CycleState:
    """A cycle's phase plus the bookkeeping the bare transition table lacks."""

    phase: Phase = Phase.REQUEST
    milestones: int = 0
    retry_cap: int = 3
    disputed: bool = False

    def advance(self, event) -> "CycleState":
        event = Event(event)
        nxt = advance(self.phase, event)
        if self.phase is Phase.AUDITION and event is Event.DELIVER:
            if self.milestones >= self.retry_cap:
                raise RetryCapExceeded(self.phase, event, f"retry cap {self.retry_cap} reached")
            return replace(self, phase=nxt, milestones=self.milestones + 1)
        return replace(self, phase=nxt, disputed=self.disputed or event is Event.DISPUTE)

    @property
    def done(self):
        return self.phase is Phase.TERMINATION


@dataclass(frozen=True)
class CycleRecord:
    cycle_id: str
    t: float
    phase_from: Phase
    event: Event
    phase_to: Phase

    def to_line(self):
        return f"{self.cycle_id},{self.t!r},{self.phase_from},{self.event},{self.phase_to}"

    @classmethod
    def from_line(cls, line):
        cid, t, a, e, b = line.strip().split(",")
        return cls(cid, float(t), Phase(a), Event(e), Phase(b))


@dataclass
class CycleLog:
    records: list = field(default_factory=list)

    def step(self, cycle_id, t, state: CycleState, event) -> CycleState:
        new = state.advance(event)
        self.records.append(CycleRecord(cycle_id, t, state.phase, Event(event), new.phase))
        return new

    def lines(self):
        return [r.to_line() for r in self.records]

    def write(self, fh):
        for line in self.lines():
            fh.write(line + "\n")


@dataclass(frozen=True)
class Advertisement:
    base: SloTuple
    advertised: SloTuple
    provider: str

    def __post_init__(self):
        if len(self.base) != len(self.advertised):
            raise InvalidInput("advertised and base SLOs differ in arity")

    def epsilon(self):
        """Advertised minus base, per metric."""
        return dict(zip(self.base.names, self.advertised.values - self.base.values))


def _check_thresholds(thresholds, names):
    if tuple(thresholds.names) != tuple(names):
        raise InvalidInput(f"threshold metrics {thresholds.names} do not match {names}")


@dataclass(frozen=True)
class Agreement:
    slo: SloTuple
    audit_kind: object
    thresholds: DistanceTuple
    review_period: float
    requester: str = "R"
    provider: str = "P"

    def __post_init__(self):
        if isinstance(self.audit_kind, PId):
            raise NegotiationRejected("pId cannot be the audit distance of an agreement")
        if not self.review_period > 0:
            raise InvalidInput("review_period must be > 0")
        _check_thresholds(self.thresholds, self.slo.names)


class Verdict(enum.Enum):
    PASS = "pass"
    FAIL = "fail"


@dataclass(frozen=True)
class AuditReport:
    requester_view: DistanceTuple
    provider_view: DistanceTuple
    verdict: Verdict

    @property
    def passed(self):
        return self.verdict is Verdict.PASS


def negotiate(request: SloTuple, ad: Advertisement, requested_kind, thresholds,
              review_period: float = 86400.0, requester: str = "R") -> Agreement:
    if ad.base.names != request.names:
        raise IncompatibleTraces(f"advertised metrics {ad.base.names} do not match request {request.names}")
    if isinstance(requested_kind, PId):
        raise NegotiationRejected("pId is not a negotiable audit distance")
    if not isinstance(thresholds, DistanceTuple):
        vals = tuple(thresholds)
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise InvalidInput(f"thresholds {vals} outside [0, 1]")
        thresholds = DistanceTuple(request.names, vals)
    return Agreement(ad.advertised, requested_kind, thresholds, review_period, requester, ad.provider)


def audit(agreement: Agreement, delivered: Signal) -> AuditReport:
    if delivered.duration < agreement.review_period:
        raise InsufficientData(
            f"delivered horizon {delivered.duration}s shorter than review period {agreement.review_period}s"
        )
    requester_view = distance(delivered, agreement.slo, agreement.audit_kind)
    provider_view = distance(delivered, agreement.slo, PBd(agreement.audit_kind.period))
    ok = requester_view.le(agreement.thresholds)
    return AuditReport(requester_view, provider_view, Verdict.PASS if ok else Verdict.FAIL)


def run_cycle(cycle_id: str, request: SloTuple, ad: Advertisement, kind, thresholds,
              deliveries: Iterable[Signal], review_period: float = 86400.0,
              retry_cap: int = 3, log: Optional[CycleLog] = None):
    """Drive one cycle end to end, auditing each delivery as a milestone.

    A passing audit is accepted; a failing one goes back to Provide until the
    retry cap or the deliveries run out, then ends disputed. Returns the
    final state, the agreement, the audit reports and the log.
    """
    log = log if log is not None else CycleLog()
    state = CycleState(retry_cap=retry_cap)
    t = 0.0
    state = log.step(cycle_id, t, state, Event.ADVERTISE)
    state = log.step(cycle_id, t, state, Event.REQUEST)
    agreement = negotiate(request, ad, kind, thresholds, review_period)
    state = log.step(cycle_id, t, state, Event.AGREE)
    reports = []
    deliveries = list(deliveries)
    if not deliveries:
        raise InvalidInput("need at least one delivery to audit")
    for i, signal in enumerate(deliveries):
        t = signal.end
        state = log.step(cycle_id, t, state, Event.AUDIT)
        report = audit(agreement, signal)
        reports.append(report)
        if report.passed:
            state = log.step(cycle_id, t, state, Event.ACCEPT)
            state = log.step(cycle_id, t, state, Event.TERMINATE)
            break
        if i + 1 < len(deliveries) and state.milestones < retry_cap:
            state = log.step(cycle_id, t, state, Event.DELIVER)
        else:
            state = log.step(cycle_id, t, state, Event.DISPUTE)
            break
    return state, agreement, reports, log
