"""Events and their typed attributes.

An event is a pair of an event type and an ordered attribute list; every
attribute is a (data type, parameter, value) triple.  Host code hands the
engine raw occurrences (a kind name plus a plain field map) and
:func:`classify_event` turns them into typed :class:`Event` objects.
"""

from __future__ import annotations

import enum
import functools
import ipaddress
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Any, Iterable, Mapping

from .errors import DuplicateEventId, TypeMismatch, UnknownOccurrenceKind

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class DataType(enum.Enum):
    GUID = "GUID"
    DATETIME = "datetime"
    INT = "int"
    BOOL = "bool"
    IP = "string*ip_address"
    DURATION = "time_t"
    TEXT = "string"

    @property
    def label(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class AttributeValue:
    """Tagged attribute value.

    Canonical Python payloads: GUID -> uuid.UUID, DATETIME -> datetime,
    INT -> int, BOOL -> bool, IP -> ipaddress.IPv4Address,
    DURATION -> int milliseconds, TEXT -> str.
    """

    type: DataType
    value: Any

    @classmethod
    def coerce(cls, dtype: DataType, raw: Any) -> "AttributeValue":
        return cls(dtype, _coerce(dtype, raw))

    @classmethod
    def infer(cls, raw: Any) -> "AttributeValue":
        if isinstance(raw, AttributeValue):
            return raw
        return cls(infer_type(raw), _coerce(infer_type(raw), raw))

    def to_python(self) -> Any:
        """Plain-field form used when re-serializing an event."""
        if self.type is DataType.IP:
            return _ip_text(self.value)
        return self.value

    def __str__(self) -> str:
        if self.type is DataType.BOOL:
            return "1" if self.value else "0"
        if self.type is DataType.DURATION:
            return f"{self.value}ms"
        if self.type is DataType.DATETIME:
            return self.value.isoformat()
        return str(self.value)


@functools.lru_cache(maxsize=4096)
def _ip_text(addr: ipaddress.IPv4Address) -> str:
    return str(addr)


def infer_type(raw: Any) -> DataType:
    if isinstance(raw, AttributeValue):
        return raw.type
    if isinstance(raw, bool):
        return DataType.BOOL
    if isinstance(raw, int):
        return DataType.INT
    if isinstance(raw, uuid.UUID):
        return DataType.GUID
    if isinstance(raw, datetime):
        return DataType.DATETIME
    if isinstance(raw, timedelta):
        return DataType.DURATION
    if isinstance(raw, ipaddress.IPv4Address):
        return DataType.IP
    if isinstance(raw, str):
        return DataType.TEXT
    raise TypeMismatch(f"no attribute data type for {type(raw).__name__} value {raw!r}")


def _coerce(dtype: DataType, raw: Any) -> Any:
    if isinstance(raw, AttributeValue):
        if raw.type is not dtype:
            raise TypeMismatch(f"expected {dtype.label}, got {raw.type.label}")
        return raw.value
    if dtype is DataType.INT:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise TypeMismatch(f"expected int, got {raw!r}")
        if not INT64_MIN <= raw <= INT64_MAX:
            raise TypeMismatch(f"int {raw} outside signed 64-bit range")
        return raw
    if dtype is DataType.BOOL:
        # flags are written "Set J=1 or 0"
        if isinstance(raw, bool):
            return raw
        if isinstance(raw, int) and raw in (0, 1):
            return bool(raw)
        raise TypeMismatch(f"expected bool, got {raw!r}")
    if dtype is DataType.IP:
        if isinstance(raw, ipaddress.IPv4Address):
            return raw
        if isinstance(raw, str):
            try:
                return ipaddress.IPv4Address(raw)
            except ValueError as exc:
                raise TypeMismatch(f"bad IPv4 address {raw!r}") from exc
        raise TypeMismatch(f"expected dotted-quad address, got {raw!r}")
    if dtype is DataType.GUID:
        if isinstance(raw, uuid.UUID):
            return raw
        if isinstance(raw, int) and not isinstance(raw, bool) and 0 <= raw < 2**128:
            return uuid.UUID(int=raw)
        if isinstance(raw, str):
            try:
                return uuid.UUID(raw)
            except ValueError as exc:
                raise TypeMismatch(f"bad GUID {raw!r}") from exc
        raise TypeMismatch(f"expected GUID, got {raw!r}")
    if dtype is DataType.DATETIME:
        if isinstance(raw, datetime):
            return raw
        raise TypeMismatch(f"expected datetime, got {raw!r}")
    if dtype is DataType.DURATION:
        if isinstance(raw, timedelta):
            return raw // timedelta(milliseconds=1)
        if isinstance(raw, int) and not isinstance(raw, bool) and raw >= 0:
            return raw
        raise TypeMismatch(f"expected non-negative duration in ms, got {raw!r}")
    if dtype is DataType.TEXT:
        if isinstance(raw, str):
            return raw
        raise TypeMismatch(f"expected string, got {raw!r}")
    raise AssertionError(dtype)


class EventKind(enum.Enum):
    TIME = "Time"
    SPATIAL = "Spatial"
    COMPOSITE = "Composite"
    REQUEST = "Request"
    NOTIFICATION = "Notification"
    INTERNAL = "Internal"
    EXTERNAL = "External"
    FAULT = "Fault"
    SERVICE = "Service"
    CUSTOM = "Custom"


@dataclass(frozen=True, slots=True)
class EventType:
    kind: EventKind
    name: str | None = None

    def __post_init__(self) -> None:
        if self.kind is EventKind.CUSTOM:
            if not self.name:
                raise ValueError("Custom event type needs a non-empty name")
        elif self.name is not None:
            raise ValueError(f"{self.kind.value} event type takes no name")

    @classmethod
    def parse(cls, text: str) -> "EventType":
        """``Request`` or ``Custom:<name>``."""
        head, sep, tail = text.partition(":")
        try:
            kind = EventKind(head)
        except ValueError:
            raise ValueError(f"unknown event type {text!r}") from None
        if kind is EventKind.CUSTOM:
            return cls(kind, tail)
        if sep:
            raise ValueError(f"event type {head} takes no name")
        return cls(kind)

    def __str__(self) -> str:
        if self.kind is EventKind.CUSTOM:
            return f"Custom:{self.name}"
        return self.kind.value


TIME = EventType(EventKind.TIME)
SPATIAL = EventType(EventKind.SPATIAL)
COMPOSITE = EventType(EventKind.COMPOSITE)
REQUEST = EventType(EventKind.REQUEST)
NOTIFICATION = EventType(EventKind.NOTIFICATION)
INTERNAL = EventType(EventKind.INTERNAL)
EXTERNAL = EventType(EventKind.EXTERNAL)
FAULT = EventType(EventKind.FAULT)
SERVICE = EventType(EventKind.SERVICE)


@dataclass(frozen=True, slots=True)
class EventAttribute:
    data_type: DataType
    parameter: str
    value: AttributeValue

    def __post_init__(self) -> None:
        if self.value.type is not self.data_type:
            raise TypeMismatch(
                f"{self.parameter}: value tagged {self.value.type.label}, declared {self.data_type.label}"
            )


@dataclass(frozen=True)
class Event:
    event_id: uuid.UUID
    event_type: EventType
    attributes: tuple[EventAttribute, ...] = ()
    occurred_at: int = 0
    source_node: str = ""
    _index: dict[str, AttributeValue] = field(default=None, init=False, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.occurred_at < 0:
            raise ValueError("occurred_at must be >= 0")
        index: dict[str, AttributeValue] = {}
        for attr in self.attributes:
            if attr.parameter in index:
                raise ValueError(f"duplicate attribute {attr.parameter!r}")
            index[attr.parameter] = attr.value
        object.__setattr__(self, "_index", index)

    def get(self, name: str) -> AttributeValue | None:
        return self._index.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.parameter for a in self.attributes)


@dataclass(frozen=True)
class Occurrence:
    """A raw host-side happening before classification."""

    kind: str
    fields: Mapping[str, Any] = field(default_factory=dict)
    at: int = 0
    source: str = ""
    event_id: Any = None


class Classifier:
    """Maps occurrence kinds to event types and field names to data types.

    Fields absent from ``field_types`` get a type inferred from their
    Python value.
    """

    def __init__(
        self,
        kinds: Mapping[str, EventType],
        field_types: Mapping[str, DataType] | None = None,
    ) -> None:
        self.kinds = dict(kinds)
        self.field_types = dict(field_types or {})
        self._next_id = 1

    def classify(self, raw: Occurrence) -> Event:
        try:
            etype = self.kinds[raw.kind]
        except KeyError:
            raise UnknownOccurrenceKind(f"unknown occurrence kind {raw.kind!r}") from None
        attrs = []
        for name, value in raw.fields.items():
            dtype = self.field_types.get(name)
            if dtype is None:
                av = AttributeValue.infer(value)
            else:
                try:
                    av = AttributeValue.coerce(dtype, value)
                except TypeMismatch as exc:
                    raise TypeMismatch(f"field {name!r}: {exc}") from None
            attrs.append(EventAttribute(av.type, name, av))
        if raw.event_id is None:
            event_id = uuid.UUID(int=self._next_id)
            self._next_id += 1
        else:
            event_id = _coerce(DataType.GUID, raw.event_id)
        return Event(event_id, etype, tuple(attrs), raw.at, raw.source)


def classify_event(raw: Occurrence, classifier: Classifier) -> Event:
    """Split an occurrence into event type and typed event attributes."""
    return classifier.classify(raw)


def event_fields(event: Event) -> dict[str, Any]:
    """Inverse of classification: the plain field map of an event."""
    return {a.parameter: a.value.to_python() for a in event.attributes}


class EventLog:
    """Append-only log with the occurrence indicator E_i(t)."""

    def __init__(self) -> None:
        self._by_id: dict[uuid.UUID, Event] = {}

    def append(self, event: Event) -> None:
        if event.event_id in self._by_id:
            raise DuplicateEventId(f"event {event.event_id} already logged")
        self._by_id[event.event_id] = event

    def extend(self, events: Iterable[Event]) -> None:
        for e in events:
            self.append(e)

    def occurred(self, event_id: Any, t: int) -> int:
        """1 if the event is logged and happened at or before ``t``, else 0."""
        event = self._by_id.get(_coerce(DataType.GUID, event_id))
        return int(event is not None and event.occurred_at <= t)

    def __len__(self) -> int:
        return len(self._by_id)

    def __iter__(self):
        return iter(self._by_id.values())
