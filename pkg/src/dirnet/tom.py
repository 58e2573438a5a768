"""Time-outs management engine.

A list of keyed timeouts advanced by a virtual clock. Expirations are
returned from :meth:`TimeoutList.advance` as ``(kind, subid)`` pairs; the
owner turns them into messages with
:func:`dirnet.protocol.make_timeout_message`.

The list core is compiled (``dirnet._tom_fast``) when the extension is
built and falls back to ``dirnet._tom_py`` otherwise. Set
``DIRNET_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from dirnet import _tom_py
from dirnet._tom_py import TomClosedError
from dirnet.protocol import TIMEOUT_CODES, pretty

__all__ = [
    "BACKEND",
    "Timeout",
    "TimeoutList",
    "TomClosedError",
    "available_backends",
    "declare",
]

MAX_SUBID = 255  # unsigned char in the original record


@dataclass
class Timeout:
    kind: int
    subid: int
    deadline: int
    cyclic: bool = True
    remaining: int = 0
    suspended: bool = False
    running: bool = False  # carried, never read

    @property
    def key(self) -> tuple[int, int]:
        return (self.kind, self.subid)


def declare(kind: int, subid: int, cyclic: bool, deadline: int) -> Timeout:
    if deadline <= 0:
        raise ValueError(f"deadline must be positive, got {deadline}")
    if kind not in TIMEOUT_CODES:
        raise ValueError(f"unknown timeout kind {kind}")
    if not 0 <= subid <= MAX_SUBID:
        raise ValueError(f"subid out of range: {subid}")
    return Timeout(kind=int(kind), subid=subid, deadline=deadline, cyclic=bool(cyclic), remaining=deadline)


def _make_list_class(core: type, backend: str) -> type:
    class TimeoutList(core):
        """Keyed timeouts; at most one entry per ``(kind, subid)``."""

        def insert(self, t: Timeout) -> bool:
            """Add ``t`` with a full deadline. Duplicate keys are a no-op returning False."""
            return self._insert(t.kind, t.subid, t.deadline, t.cyclic)

        def entries(self) -> list[Timeout]:
            now = self.now
            return [
                Timeout(kind=k, subid=s, deadline=d, cyclic=c, remaining=exp - now, suspended=susp)
                for k, s, d, exp, c, susp in self._entries()
            ]

        def get(self, kind: int, subid: int) -> Timeout | None:
            for t in self.entries():
                if t.kind == kind and t.subid == subid:
                    return t
            return None

        def dump(self) -> str:
            return "\n".join(
                f"{pretty(t.kind)} subid={t.subid} remaining={t.remaining} cyclic={int(t.cyclic)}"
                for t in self.entries()
            )

        def __repr__(self) -> str:
            state = "closed" if self.closed else "open"
            return f"<TimeoutList[{backend}] now={self.now} entries={len(self)} {state}>"

    TimeoutList.backend = backend
    return TimeoutList


PyTimeoutList = _make_list_class(_tom_py.TimeoutCore, "python")

try:
    from dirnet import _tom_fast
except ImportError:  # extension not built
    _tom_fast = None
    FastTimeoutList = None
else:
    FastTimeoutList = _make_list_class(_tom_fast.TimeoutCore, "cython")

if FastTimeoutList is not None and os.environ.get("DIRNET_PURE_PYTHON", "") in ("", "0"):
    TimeoutList = FastTimeoutList
else:
    TimeoutList = PyTimeoutList

BACKEND: str = TimeoutList.backend


def available_backends() -> dict[str, type]:
    found = {"python": PyTimeoutList}
    if FastTimeoutList is not None:
        found["cython"] = FastTimeoutList
    return found
