"""Exception hierarchy shared by every module."""


class ServiceBondError(Exception):
    """Base class for all library errors."""


class InvalidInput(ServiceBondError, ValueError):
    pass


class OutOfHorizon(ServiceBondError, ValueError):
    pass


class IncompatibleTraces(ServiceBondError, ValueError):
    pass


class NonConvergence(ServiceBondError, RuntimeError):
    pass


class InvalidTransition(ServiceBondError):
    def __init__(self, phase, event, detail=""):
        self.phase = phase
        self.event = event
        msg = f"invalid transition: event {event!s} in phase {phase!s}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class RetryCapExceeded(InvalidTransition):
    pass


class NegotiationRejected(ServiceBondError):
    pass


class InsufficientData(ServiceBondError, ValueError):
    pass


class AmbiguousNaive(ServiceBondError):
    pass


class InfeasibleQuota(ServiceBondError, ValueError):
    def __init__(self, deficit):
        self.deficit = deficit
        super().__init__(f"minimum quotas exceed capacity by {deficit:g} kbps")


class UnknownDevice(ServiceBondError, KeyError):
    pass


class ParseError(ServiceBondError, ValueError):
    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        if line is not None:
            where = f"{source}:{line}: " if source is not None else f"line {line}: "
        else:
            where = f"{source}: " if source is not None else ""
        super().__init__(where + message)
