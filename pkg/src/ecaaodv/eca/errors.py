"""Exception hierarchy for the rule engine."""

from __future__ import annotations


class EcaError(Exception):
    """Base class for every rule-engine failure."""

    rule_id: str | None = None

    def __str__(self) -> str:
        msg = super().__str__()
        if self.rule_id is not None:
            return f"[rule {self.rule_id}] {msg}"
        return msg


class DuplicateRuleId(EcaError):
    pass


class RegistryFrozen(EcaError):
    pass


class RegistryNotFrozen(EcaError):
    pass


class UnresolvedDecisionName(EcaError):
    pass


class UnresolvedProbe(EcaError):
    pass


class UnknownOccurrenceKind(EcaError):
    pass


class TypeMismatch(EcaError):
    pass


class UnresolvedReference(EcaError):
    pass


class IncomparableTypes(EcaError):
    pass


class UndefinedTransition(EcaError):
    pass


class StateNotInMachine(EcaError, ValueError):
    """Raised when a state outside S is handed to the state machine."""


class DuplicateEventId(EcaError):
    pass
