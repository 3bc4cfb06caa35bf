"""Event-condition-action rule engine."""

from .conditions import (
    And,
    Attr,
    Compare,
    Condition,
    ConditionResult,
    EvalContext,
    EventDetails,
    Literal,
    Not,
    Op,
    Or,
    Probe,
    evaluate_condition,
    test,
)
from .errors import (
    DuplicateRuleId,
    EcaError,
    IncomparableTypes,
    RegistryFrozen,
    RegistryNotFrozen,
    StateNotInMachine,
    TypeMismatch,
    UndefinedTransition,
    UnknownOccurrenceKind,
    UnresolvedDecisionName,
    UnresolvedProbe,
    UnresolvedReference,
)
from .rules import (
    ActionSpec,
    Decision,
    DecisionTemplate,
    EventPattern,
    PrepStep,
    Rule,
    RuleRegistry,
    make_rule,
    process_event,
    register_rule,
)
from .state_machine import EcaStateMachine, default_aodv_machine, step_state_machine
from .types import (
    COMPOSITE,
    EXTERNAL,
    FAULT,
    INTERNAL,
    NOTIFICATION,
    REQUEST,
    SERVICE,
    SPATIAL,
    TIME,
    AttributeValue,
    Classifier,
    DataType,
    Event,
    EventAttribute,
    EventKind,
    EventLog,
    EventType,
    Occurrence,
    classify_event,
    event_fields,
)
