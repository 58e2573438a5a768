"""Side effects requested by the pure state machines.

Handlers return lists of these; the simulator executes them in order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

from dirnet.protocol import Message


@dataclass(frozen=True)
class Send:
    dest: int
    mbox: int
    message: Message
    payload: Any = None  # bulk data carried alongside (db records, snapshots)


@dataclass(frozen=True)
class InsertTimeout:
    kind: int
    subid: int
    deadline: int
    cyclic: bool


@dataclass(frozen=True)
class RenewTimeout:
    kind: int
    subid: int


@dataclass(frozen=True)
class DeleteTimeout:
    kind: int
    subid: int


@dataclass(frozen=True)
class ClearIaFlag:
    pass


@dataclass(frozen=True)
class CloseTom:
    pass


@dataclass(frozen=True)
class RequestNodeReboot:
    target: int


@dataclass(frozen=True)
class BecomeManagerAndRestart:
    pass


@dataclass(frozen=True)
class PersistDb:
    pass


@dataclass(frozen=True)
class PersistState:
    role: int


@dataclass(frozen=True)
class EmitTrace:
    note: str


@dataclass(frozen=True)
class ArmWait:
    """Wake the component with ``token`` after ``ticks`` unless superseded."""

    ticks: int
    token: int


Action = Union[
    Send,
    InsertTimeout,
    RenewTimeout,
    DeleteTimeout,
    ClearIaFlag,
    CloseTom,
    RequestNodeReboot,
    BecomeManagerAndRestart,
    PersistDb,
    PersistState,
    EmitTrace,
    ArmWait,
]
