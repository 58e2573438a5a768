"""Message vocabulary of the DIR net.

Type codes, mailbox ids, the fixed-shape datagram, the alarm-to-message
translation used by every timeout list, and human-readable labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

MAXARG = 5

DIR_MBOX_OFFSET = 20
DIR_ALIAS_OFFSET = 20


class Mailbox(IntEnum):
    MBOX = DIR_MBOX_OFFSET
    IAT_MBOX = DIR_MBOX_OFFSET + 1
    RINT_MBOX = DIR_MBOX_OFFSET + 2
    DB_MBOX = DIR_MBOX_OFFSET + 3
    TOM_MBOX = DIR_MBOX_OFFSET + 4


class TimeoutKind(IntEnum):
    INJECT_FAULT_TIMEOUT = 6
    IA_FLAG_TIMEOUT = 10
    MIA_TIMEOUT = 15
    TAIA_TIMEOUT = 20
    TEIF_TIMEOUT = 30
    IAT_TIMEOUT = 40
    IA_FLAG_TIMEOUT_B = 50
    MIA_TIMEOUT_B = 55
    TAIA_TIMEOUT_B = 60
    TEIF_TIMEOUT_B = 70


class MessageType(IntEnum):
    # timeout-derived messages share their timeout code
    INJECT_FAULT_TIMEOUT = 6
    IA_FLAG_TIMEOUT = 10
    MIA_TIMEOUT = 15
    TAIA_TIMEOUT = 20
    TEIF_TIMEOUT = 30
    IAT_TIMEOUT = 40
    IA_FLAG_TIMEOUT_B = 50
    MIA_TIMEOUT_B = 55
    TAIA_TIMEOUT_B = 60
    TEIF_TIMEOUT_B = 70
    # protocol messages
    MIA = 100
    TAIA = 101
    TEIF = 102
    ENIA = 103
    WITM = 104
    NMI = 105
    NIUA = 106
    ANID = 107
    SPAN = 108
    ROUSE = 109
    DB = 110
    REQUEST_DB = 111


class DbSubcode(IntEnum):
    DB_NEW_STATUS = 200
    DB_NEW_ROLE = 201
    DB_INC_REBOOT = 202
    DB_NEW_TASK_STATUS = 203
    DB_NEW_TASK_ERROR = 204


TIMEOUT_CODES = frozenset(int(k) for k in TimeoutKind)

# tom.h stand-ins
TOM_CYCLIC = True
TOM_NON_CYCLIC = False

# cyclicity bindings; TEIF timeouts are one-shot
CYCLIC = {
    TimeoutKind.IA_FLAG_TIMEOUT: TOM_CYCLIC,
    TimeoutKind.MIA_TIMEOUT: TOM_CYCLIC,
    TimeoutKind.TAIA_TIMEOUT: TOM_CYCLIC,
    TimeoutKind.TEIF_TIMEOUT: TOM_NON_CYCLIC,
    TimeoutKind.IA_FLAG_TIMEOUT_B: TOM_CYCLIC,
    TimeoutKind.MIA_TIMEOUT_B: TOM_CYCLIC,
    TimeoutKind.TAIA_TIMEOUT_B: TOM_CYCLIC,
    TimeoutKind.TEIF_TIMEOUT_B: TOM_NON_CYCLIC,
    TimeoutKind.IAT_TIMEOUT: TOM_CYCLIC,
    TimeoutKind.INJECT_FAULT_TIMEOUT: TOM_NON_CYCLIC,
}

INJECT_FAULT_DEADLINE = 6000000

_TIMEOUT_LABELS = {
    TimeoutKind.IA_FLAG_TIMEOUT: "IA flag timeout",
    TimeoutKind.MIA_TIMEOUT: "MIA timeout",
    TimeoutKind.TAIA_TIMEOUT: "TAIA timeout",
    TimeoutKind.TEIF_TIMEOUT: "TEIF timeout",
    TimeoutKind.IA_FLAG_TIMEOUT_B: "IA flag `B' timeout",
    TimeoutKind.MIA_TIMEOUT_B: "MIA `B' timeout",
    TimeoutKind.TAIA_TIMEOUT_B: "TAIA `B' timeout",
    TimeoutKind.TEIF_TIMEOUT_B: "TEIF `B' timeout",
    TimeoutKind.IAT_TIMEOUT: "IA Task timeout",
    TimeoutKind.INJECT_FAULT_TIMEOUT: "F. Injecting timeout",
}

UNKNOWN = "<unknown>"


def pretty(code: int) -> str:
    """Label for a message or timeout code; ``"<unknown>"`` otherwise."""
    if code in _TIMEOUT_LABELS:
        return _TIMEOUT_LABELS[TimeoutKind(code)]
    try:
        return MessageType(code).name
    except ValueError:
        return UNKNOWN


def _zero_args() -> tuple[int, ...]:
    return (0,) * MAXARG


@dataclass(frozen=True)
class Message:
    type: int
    subid: int = 0
    arg: tuple[int, ...] = field(default_factory=_zero_args)
    local: bool = False

    def __post_init__(self) -> None:
        if len(self.arg) > MAXARG:
            raise ValueError(f"at most {MAXARG} args, got {len(self.arg)}")
        # plain ints so enum members never leak into traces
        args = tuple(int(a) for a in self.arg) + (0,) * (MAXARG - len(self.arg))
        object.__setattr__(self, "arg", args)
        object.__setattr__(self, "type", int(self.type))
        object.__setattr__(self, "subid", int(self.subid))
        object.__setattr__(self, "local", bool(self.local))

    @property
    def label(self) -> str:
        return pretty(self.type)


def make_timeout_message(kind: int, subid: int) -> Message:
    """Turn an expired timeout into the message its owner consumes."""
    if kind not in TIMEOUT_CODES:
        raise ValueError(f"not a timeout kind: {kind}")
    return Message(type=int(kind), subid=subid, local=True)


class TraceDecodeError(ValueError):
    pass


def encode_trace(m: Message) -> str:
    return " ".join(str(v) for v in (m.type, m.subid, *m.arg, int(m.local)))


def decode_trace(line: str) -> Message:
    fields = line.split()
    if len(fields) != MAXARG + 3:
        raise TraceDecodeError(f"expected {MAXARG + 3} fields, got {len(fields)}: {line!r}")
    try:
        values = [int(f) for f in fields]
    except ValueError as exc:
        raise TraceDecodeError(f"non-integer field in {line!r}") from exc
    if values[-1] not in (0, 1):
        raise TraceDecodeError(f"local flag must be 0 or 1: {line!r}")
    return Message(
        type=values[0],
        subid=values[1],
        arg=tuple(values[2 : 2 + MAXARG]),
        local=bool(values[-1]),
    )
