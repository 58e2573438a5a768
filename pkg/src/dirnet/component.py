"""The generic DIR-net component.

One per node. After startup resolves its role it runs either the manager
loop, watching every backup, or the backup loop, watching the manager.
Everything here is a pure transition ``(state, message) -> (state, actions)``;
the timeout list in the state is only queried, never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Sequence

from dirnet.actions import (
    Action,
    ArmWait,
    BecomeManagerAndRestart,
    ClearIaFlag,
    CloseTom,
    DeleteTimeout,
    EmitTrace,
    InsertTimeout,
    PersistDb,
    PersistState,
    RenewTimeout,
    RequestNodeReboot,
    Send,
)
from dirnet.db import (
    DbError,
    DbUpdate,
    DirDatabase,
    NodeRecord,
    Role,
    TaskStatus,
    apply_update,
    build_local,
    load,
    receive_record,
    reset_dynamic,
    snapshot,
)
from dirnet.protocol import (
    CYCLIC,
    DbSubcode,
    INJECT_FAULT_DEADLINE,
    Mailbox,
    Message,
    MessageType as MT,
    TimeoutKind as TK,
)

# IA-flag timeout key; both roles use the same one
IA_FLAG_SUBID = 1
# a backup has a single TAIA send schedule
TAIA_B_SUBID = 0

# arg[0] of a DB message on DB_MBOX; update subcodes travel on MBOX
DB_PART_RECORD = 1
DB_PART_SNAPSHOT = 2


class Phase(Enum):
    AWAIT_DB_PARTS = "await_db_parts"
    AWAIT_NMI = "await_nmi"
    AWAIT_DB_COPY = "await_db_copy"
    RUNNING = "running"


@dataclass(frozen=True)
class Timeouts:
    clear: int = 300
    set: int = 1000
    mia_send: int = 500
    mia_recv: int = 1500
    taia_send: int = 500
    taia_recv: int = 1500
    reply_db: int = 2000

    def __post_init__(self) -> None:
        for name, value in self.__dict__.items():
            if value <= 0:
                raise ValueError(f"timeout {name} must be positive, got {value}")

    def problems(self, max_latency: int) -> list[str]:
        """Parameter combinations under which the detector can misfire."""
        found = []
        if self.mia_send + 2 * max_latency >= self.mia_recv:
            found.append("mia_send + 2*latency should be below mia_recv")
        if self.taia_send + 2 * max_latency >= self.taia_recv:
            found.append("taia_send + 2*latency should be below taia_recv")
        if self.clear >= self.set:
            found.append("clear should be below set")
        return found


@dataclass(frozen=True)
class RoleConfig:
    roles: tuple[Role, ...]

    def __post_init__(self) -> None:
        roles = tuple(Role(r) for r in self.roles)
        object.__setattr__(self, "roles", roles)
        if any(r not in (Role.MANAGER, Role.BACKUP) for r in roles):
            raise ValueError("roles must be MANAGER or BACKUP")
        managers = [i for i, r in enumerate(roles) if r == Role.MANAGER]
        if len(managers) != 1:
            raise ValueError(f"role table needs exactly one MANAGER, found {len(managers)}")

    @classmethod
    def default(cls, n: int, manager: int = 0) -> "RoleConfig":
        return cls(tuple(Role.MANAGER if i == manager else Role.BACKUP for i in range(n)))

    @property
    def manager(self) -> int:
        return self.roles.index(Role.MANAGER)

    def __len__(self) -> int:
        return len(self.roles)

    def __getitem__(self, node: int) -> Role:
        return self.roles[node]


@dataclass(frozen=True)
class ComponentState:
    self_id: int
    n: int
    role: Role | None
    managerid: int
    suspicion: tuple[bool, ...]
    db: DirDatabase
    phase: Phase
    timeouts: Timeouts = field(default_factory=Timeouts)
    first_activation: bool = True
    primary: bool = True
    inject: bool = False
    tom: Any = field(default=None, compare=False, repr=False)
    # startup bookkeeping
    parts_from: frozenset[int] = frozenset()
    fallback_db: DirDatabase | None = None
    db_target: int = -1
    db_tries: int = 0
    wait_seq: int = 0

    @property
    def alive(self) -> bool:
        return self.phase is Phase.RUNNING

    def readable_mailboxes(self) -> tuple[int, ...]:
        if self.phase in (Phase.AWAIT_DB_PARTS, Phase.AWAIT_DB_COPY):
            return (Mailbox.DB_MBOX,)
        return (Mailbox.MBOX, Mailbox.DB_MBOX) if self.phase is Phase.RUNNING else (Mailbox.MBOX,)


Result = tuple[ComponentState, list[Action]]


class _Step:
    """Collects actions and tracks timeout presence as they are queued."""

    def __init__(self, state: ComponentState) -> None:
        self.tom = state.tom
        self.actions: list[Action] = []
        self._added: set[tuple[int, int]] = set()
        self._gone: set[tuple[int, int]] = set()

    def present(self, kind: int, subid: int) -> bool:
        key = (kind, subid)
        if key in self._added:
            return True
        if key in self._gone or self.tom is None:
            return False
        return self.tom.is_present(kind, subid)

    def insert(self, kind: int, subid: int, deadline: int) -> None:
        if self.present(kind, subid):
            return
        self._added.add((kind, subid))
        self._gone.discard((kind, subid))
        self.actions.append(InsertTimeout(int(kind), subid, deadline, CYCLIC[kind]))

    def renew(self, kind: int, subid: int) -> None:
        self.actions.append(RenewTimeout(int(kind), subid))

    def delete(self, kind: int, subid: int) -> None:
        self._added.discard((kind, subid))
        self._gone.add((kind, subid))
        self.actions.append(DeleteTimeout(int(kind), subid))

    def send(self, dest: int, mbox: int, m: Message, payload: Any = None) -> None:
        self.actions.append(Send(dest, mbox, m, payload))

    def note(self, text: str) -> None:
        self.actions.append(EmitTrace(text))

    def add(self, *actions: Action) -> None:
        self.actions.extend(actions)


def choose_next_manager(managerid: int, n: int) -> int:
    return (managerid + 1) % n


def _others(state: ComponentState) -> list[int]:
    return [i for i in range(state.n) if i != state.self_id]


def _rouse(state: ComponentState) -> Send:
    return Send(state.self_id, Mailbox.IAT_MBOX, Message(MT.ROUSE, subid=state.self_id, local=True))


def _set_suspicion(state: ComponentState, node: int, value: bool) -> tuple[bool, ...]:
    flags = list(state.suspicion)
    flags[node] = value
    return tuple(flags)


def _timeout_setup(state: ComponentState) -> list[Action]:
    t = state.timeouts
    out: list[Action] = [InsertTimeout(TK.IA_FLAG_TIMEOUT, IA_FLAG_SUBID, t.clear, CYCLIC[TK.IA_FLAG_TIMEOUT])]
    if state.role == Role.MANAGER:
        others = _others(state)
        out += [InsertTimeout(TK.MIA_TIMEOUT, i, t.mia_send, CYCLIC[TK.MIA_TIMEOUT]) for i in others]
        out += [InsertTimeout(TK.TAIA_TIMEOUT, i, t.taia_recv, CYCLIC[TK.TAIA_TIMEOUT]) for i in others]
        if state.inject:
            out.append(
                InsertTimeout(TK.INJECT_FAULT_TIMEOUT, state.self_id, INJECT_FAULT_DEADLINE, CYCLIC[TK.INJECT_FAULT_TIMEOUT])
            )
    else:
        out.append(InsertTimeout(TK.MIA_TIMEOUT_B, state.managerid, t.mia_recv, CYCLIC[TK.MIA_TIMEOUT_B]))
        out.append(InsertTimeout(TK.TAIA_TIMEOUT_B, TAIA_B_SUBID, t.taia_send, CYCLIC[TK.TAIA_TIMEOUT_B]))
    return out


def _enter_running(state: ComponentState, actions: list[Action]) -> Result:
    state = replace(
        state,
        phase=Phase.RUNNING,
        suspicion=(False,) * state.n,
        parts_from=frozenset(),
        fallback_db=None,
        db_target=-1,
        db_tries=0,
    )
    actions = actions + _timeout_setup(state) + [ClearIaFlag(), _rouse(state)]
    return state, actions


# --- startup ----------------------------------------------------------------


def startup(
    self_id: int,
    first_activation: bool,
    primary: bool,
    cfg: RoleConfig,
    persisted_db: DirDatabase | None = None,
    *,
    timeouts: Timeouts | None = None,
    inject: bool = False,
    tasks: Sequence[int] | None = None,
    tom: Any = None,
) -> Result:
    n = len(cfg)
    if not 0 <= self_id < n:
        raise ValueError(f"node {self_id} not in role table of {n}")
    if n < 2:
        raise ValueError("a DIR net needs at least two nodes")
    timeouts = timeouts or Timeouts()
    statuses = list(tasks) if tasks is not None else [TaskStatus.RUNNING] * 2
    base = ComponentState(
        self_id=self_id,
        n=n,
        role=None,
        managerid=-1,
        suspicion=(False,) * n,
        db=DirDatabase.empty(n),
        phase=Phase.AWAIT_NMI,
        timeouts=timeouts,
        first_activation=first_activation,
        primary=primary,
        inject=inject,
        tom=tom,
    )

    if first_activation and primary:
        db = base.db
        for i in range(n):
            db = apply_update(db, DbUpdate(202 - 1, i, int(cfg[i])))  # DB_NEW_ROLE
        db = build_local(db, self_id, statuses)
        state = replace(base, role=cfg[self_id], managerid=cfg.manager, db=db, phase=Phase.AWAIT_DB_PARTS)
        part = Message(MT.DB, subid=self_id, arg=(DB_PART_RECORD,))
        record = db.nodes[self_id]
        actions: list[Action] = [Send(j, Mailbox.DB_MBOX, part, record) for j in _others(state)]
        return state, actions

    state = replace(
        base,
        db=persisted_db if persisted_db is not None else base.db,
        fallback_db=persisted_db,
        wait_seq=1,
    )
    return state, _witm_burst(state) + [ArmWait(timeouts.reply_db, 1)]


def _witm_burst(state: ComponentState) -> list[Action]:
    m = Message(MT.WITM, subid=state.self_id)
    return [Send(j, Mailbox.MBOX, m) for j in _others(state)]


def _request_db(state: ComponentState, target: int) -> Result:
    seq = state.wait_seq + 1
    state = replace(
        state, phase=Phase.AWAIT_DB_COPY, db_target=target, db_tries=state.db_tries + 1, wait_seq=seq
    )
    return state, [
        Send(target, Mailbox.MBOX, Message(MT.REQUEST_DB, subid=state.self_id)),
        ArmWait(state.timeouts.reply_db, seq),
    ]


def _next_target(state: ComponentState, after: int) -> int:
    t = (after + 1) % state.n
    if t == state.self_id:
        t = (t + 1) % state.n
    return t


def _finish_db(state: ComponentState, db: DirDatabase, extra: list[Action]) -> Result:
    state = replace(state, db=db)
    return _enter_running(state, extra + [PersistDb(), PersistState(int(state.role))])


def on_wait_expired(state: ComponentState, token: int) -> Result:
    if token != state.wait_seq:
        return state, []
    if state.phase is Phase.AWAIT_NMI:
        seq = state.wait_seq + 1
        state = replace(state, wait_seq=seq)
        return state, [EmitTrace("no NMI, repeating WITM")] + _witm_burst(state) + [
            ArmWait(state.timeouts.reply_db, seq)
        ]
    if state.phase is Phase.AWAIT_DB_COPY:
        if state.db_tries >= state.n - 1:
            note = EmitTrace("REQUEST_DB cycle exhausted, using persisted db")
            db = state.fallback_db if state.fallback_db is not None else state.db
            return _finish_db(state, db, [note])
        state, actions = _request_db(state, _next_target(state, state.db_target))
        return state, [EmitTrace(f"no db reply, asking node {state.db_target}")] + actions
    return state, []


def _startup_handle(state: ComponentState, mbox: int, m: Message, payload: Any) -> Result:
    if state.phase is Phase.AWAIT_DB_PARTS:
        if not (m.type == MT.DB and m.arg[0] == DB_PART_RECORD and isinstance(payload, NodeRecord)):
            return state, [EmitTrace(f"unexpected {m.label} while assembling db")]
        db = receive_record(state.db, m.subid, payload)
        parts = state.parts_from | {m.subid}
        state = replace(state, db=db, parts_from=parts)
        if len(parts) < state.n - 1:
            return state, []
        return _finish_db(state, reset_dynamic(db), [])

    if state.phase is Phase.AWAIT_NMI:
        if m.type != MT.NMI:
            return state, [EmitTrace(f"discarding {m.label} while waiting for NMI")]
        mid = m.arg[0]
        state = replace(
            state,
            managerid=mid,
            role=Role.MANAGER if mid == state.self_id else Role.BACKUP,
        )
        return _request_db(state, _next_target(state, state.self_id))

    if state.phase is Phase.AWAIT_DB_COPY:
        if not (m.type == MT.DB and m.arg[0] == DB_PART_SNAPSHOT):
            return state, [EmitTrace(f"unexpected {m.label} while waiting for db copy")]
        try:
            db = load(payload)
        except (DbError, TypeError) as exc:
            return state, [EmitTrace(f"bad db copy from {m.subid}: {exc}")]
        return _finish_db(replace(state, wait_seq=state.wait_seq + 1), db, [])

    return state, []


# --- running ----------------------------------------------------------------


def _epilogue(step: _Step) -> None:
    step.add(ClearIaFlag(), RenewTimeout(TK.IA_FLAG_TIMEOUT, IA_FLAG_SUBID))


def _send_db(step: _Step, state: ComponentState, dest: int) -> None:
    reply = Message(MT.DB, subid=state.self_id, arg=(DB_PART_SNAPSHOT,))
    step.send(dest, Mailbox.DB_MBOX, reply, snapshot(state.db))


def _apply_db(step: _Step, state: ComponentState, m: Message) -> ComponentState | None:
    try:
        return replace(state, db=apply_update(state.db, DbUpdate.from_args(m.subid, m.arg)))
    except DbError as exc:
        step.note(f"rejected db update: {exc}")
        return None


def _broadcast_db(step: _Step, state: ComponentState, m: Message) -> None:
    out = Message(MT.DB, subid=m.subid, arg=m.arg)
    for i in _others(state):
        step.send(i, Mailbox.MBOX, out)


def manager_handle(state: ComponentState, m: Message) -> Result:
    step = _Step(state)
    me, t = state.self_id, state.timeouts
    typ, s = m.type, m.subid

    if typ == MT.IA_FLAG_TIMEOUT:
        step.add(ClearIaFlag())
    elif typ == MT.MIA_TIMEOUT:
        step.send(s, Mailbox.MBOX, Message(MT.MIA, subid=me, arg=(me,)))
        step.renew(TK.MIA_TIMEOUT, s)
    elif typ == MT.DB and m.local:
        for i in _others(state):
            step.renew(TK.MIA_TIMEOUT, i)
        updated = _apply_db(step, state, m)
        if updated is not None:
            state = updated
            _broadcast_db(step, state, m)
    elif typ in (MT.DB, MT.TAIA):
        if typ == MT.DB:
            state = _apply_db(step, state, m) or state
        if not step.present(TK.TAIA_TIMEOUT, s):
            step.insert(TK.TAIA_TIMEOUT, s, t.taia_recv)
            niua = Message(MT.NIUA, subid=s)
            for i in range(state.n):
                if i != me and i != s:
                    step.send(i, Mailbox.MBOX, niua)
        if state.suspicion[s]:
            state = replace(state, suspicion=_set_suspicion(state, s, False))
        else:
            step.renew(TK.TAIA_TIMEOUT, s)
    elif typ == MT.TAIA_TIMEOUT:
        state = replace(state, suspicion=_set_suspicion(state, s, True))
        step.insert(TK.TEIF_TIMEOUT, s, t.set)
        step.delete(TK.TAIA_TIMEOUT, s)
    elif typ == MT.TEIF:
        if state.suspicion[s]:
            step.delete(TK.TEIF_TIMEOUT, s)
            state = replace(state, suspicion=_set_suspicion(state, s, False))
            step.send(s, Mailbox.IAT_MBOX, Message(MT.SPAN, subid=s, arg=(me,)))
        elif s == me:
            step.add(ClearIaFlag(), _rouse(state))
        else:
            step.send(s, Mailbox.MBOX, Message(MT.ENIA, subid=me))
    elif typ == MT.TEIF_TIMEOUT:
        if state.suspicion[s]:
            step.delete(TK.TAIA_TIMEOUT, s)
            state = replace(state, suspicion=_set_suspicion(state, s, False))
            step.add(RequestNodeReboot(s))
    elif typ == MT.ENIA:
        step.add(ClearIaFlag(), _rouse(state))
    elif typ == MT.WITM:
        step.send(s, Mailbox.MBOX, Message(MT.NMI, subid=me, arg=(me,)))
    elif typ == MT.NIUA:
        step.insert(TK.TAIA_TIMEOUT, s, t.taia_recv)
    elif typ == MT.REQUEST_DB:
        _send_db(step, state, s)
    elif typ == MT.INJECT_FAULT_TIMEOUT:
        step.add(CloseTom())
    else:
        step.note(f"manager ignores {m.label} from {s}")

    _epilogue(step)
    return state, step.actions


def backup_handle(state: ComponentState, m: Message) -> Result:
    step = _Step(state)
    me, t = state.self_id, state.timeouts
    typ, s = m.type, m.subid
    mid = state.managerid

    if typ == MT.IA_FLAG_TIMEOUT:
        step.add(ClearIaFlag())
    elif typ == MT.TAIA_TIMEOUT_B:
        step.send(mid, Mailbox.MBOX, Message(MT.TAIA, subid=me))
    elif typ == MT.DB and m.local:
        updated = _apply_db(step, state, m)
        if updated is not None:
            state = updated
            _broadcast_db(step, state, m)
            step.renew(TK.TAIA_TIMEOUT_B, TAIA_B_SUBID)
    elif typ == MT.DB:
        state = _apply_db(step, state, m) or state
        if s == mid:
            step.renew(TK.MIA_TIMEOUT_B, mid)
    elif typ == MT.MIA:
        new = m.arg[0]
        if not step.present(TK.MIA_TIMEOUT_B, new):
            step.delete(TK.MIA_TIMEOUT_B, mid)
            state = replace(state, managerid=new)
            # a renew here would find nothing to renew
            step.insert(TK.MIA_TIMEOUT_B, new, t.mia_recv)
        else:
            step.renew(TK.MIA_TIMEOUT_B, new)
        if any(state.suspicion):
            state = replace(state, suspicion=(False,) * state.n)
    elif typ == MT.MIA_TIMEOUT_B:
        state = replace(state, suspicion=_set_suspicion(state, mid, True))
        step.insert(TK.TEIF_TIMEOUT_B, mid, t.set)
        step.delete(TK.MIA_TIMEOUT_B, mid)
    elif typ == MT.TEIF:
        if state.suspicion[mid] and s == mid:
            step.delete(TK.TEIF_TIMEOUT_B, mid)
            state = replace(state, suspicion=_set_suspicion(state, mid, False))
            step.send(mid, Mailbox.IAT_MBOX, Message(MT.SPAN, subid=mid, arg=(me,)))
        else:
            step.send(s, Mailbox.MBOX, Message(MT.ENIA, subid=me))
            step.renew(TK.MIA_TIMEOUT_B, mid)
    elif typ == MT.TEIF_TIMEOUT_B:
        if state.suspicion[s]:
            step.delete(TK.MIA_TIMEOUT_B, s)
            state = replace(state, suspicion=_set_suspicion(state, s, False))
            step.add(RequestNodeReboot(s))
            anid = Message(MT.ANID, subid=me, arg=(s,))
            for i in range(state.n):
                if i != mid and i != me:
                    step.send(i, Mailbox.MBOX, anid)
            new = choose_next_manager(mid, state.n)
            state = replace(state, managerid=new)
            step.note(f"election {mid} -> {new}")
            if new == me:
                step.add(BecomeManagerAndRestart())
            else:
                step.send(new, Mailbox.MBOX, Message(MT.ENIA, subid=me))
                step.insert(TK.MIA_TIMEOUT_B, new, t.mia_recv)
    elif typ == MT.WITM:
        step.send(s, Mailbox.MBOX, Message(MT.NMI, subid=me, arg=(mid,)))
    elif typ == MT.ENIA:
        step.add(ClearIaFlag(), _rouse(state))
    elif typ == MT.NMI:
        if m.arg[0] != mid:
            step.note(f"NMI from {s} names {m.arg[0]}, expected {mid}")
    elif typ == MT.REQUEST_DB:
        _send_db(step, state, s)
    else:
        step.note(f"backup ignores {m.label} from {s}")

    _epilogue(step)
    return state, step.actions


def handle(state: ComponentState, mbox: int, m: Message, payload: Any = None) -> Result:
    """Dispatch one message read from ``mbox``."""
    if state.phase is not Phase.RUNNING:
        return _startup_handle(state, mbox, m, payload)
    if mbox == Mailbox.DB_MBOX:
        return state, [EmitTrace(f"stray {m.label} on db mailbox from {m.subid}")]
    if state.role == Role.MANAGER:
        return manager_handle(state, m)
    return backup_handle(state, m)


def restart_as(state: ComponentState, role: Role, tom: Any = None) -> Result:
    """Restart the component in ``role`` keeping its database."""
    role = Role(role)
    managerid = state.self_id if role == Role.MANAGER else state.managerid
    fresh = replace(state, role=role, managerid=managerid, first_activation=False, tom=tom, wait_seq=state.wait_seq + 1)
    return _enter_running(fresh, [PersistState(int(role))])
