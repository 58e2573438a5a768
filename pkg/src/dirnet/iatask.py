"""The per-node I'm Alive Task.

A watchdog that sets a shared flag every period. The guarded component
clears it on every message it handles; finding the flag still set means
the component has stopped, and the task tells every other node with a
TEIF broadcast before going dormant until the next ROUSE.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from dirnet.actions import Action, DeleteTimeout, InsertTimeout, Send
from dirnet.protocol import CYCLIC, Mailbox, Message, MessageType, TimeoutKind


class IatPhase(Enum):
    DORMANT = "dormant"
    ACTIVE = "active"


@dataclass(frozen=True)
class IatState:
    self_id: int
    n: int
    period: int = 1000
    phase: IatPhase = IatPhase.DORMANT
    guarded: int = -1


def clear_flag(flag: int) -> int:
    return 0


def iat_handle(state: IatState, m: Message, flag: int) -> tuple[IatState, list[Action], int]:
    if m.type == MessageType.ROUSE:
        if state.phase is IatPhase.ACTIVE:
            return state, [], flag
        ins = InsertTimeout(TimeoutKind.IAT_TIMEOUT, m.subid, state.period, CYCLIC[TimeoutKind.IAT_TIMEOUT])
        return replace(state, phase=IatPhase.ACTIVE, guarded=m.subid), [ins], flag

    if m.type == MessageType.IAT_TIMEOUT and state.phase is IatPhase.ACTIVE:
        if flag == 0:
            return state, [], 1
        teif = Message(MessageType.TEIF, subid=state.self_id)
        actions: list[Action] = [
            Send(i, Mailbox.MBOX, teif)
            for i in range(state.n)
            if i != state.guarded and i != state.self_id
        ]
        actions.append(DeleteTimeout(TimeoutKind.IAT_TIMEOUT, state.guarded))
        return replace(state, phase=IatPhase.DORMANT), actions, flag

    # dormant, or anything else: nothing happens
    return state, [], flag
