"""The replicated DIR database.

Every component keeps a full replica: per-node role, status, task table
and error records. Replicas are built by an all-to-all pipelined exchange
at first activation, kept in step by ``DB`` update messages, and copied
whole to components that restart.

All operations return new objects; the component state machine relies on
that to stay side-effect free.
"""

from __future__ import annotations

import copy
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

from dirnet.protocol import DbSubcode, Mailbox

MAX_PROCS = 4
MAX_TASKS = 16
MAX_ERRORS = 16
ERROR_RECORD_SIZE = 16


class Role(IntEnum):
    MANAGER = 1
    BACKUP = 2
    AGENT = 3


class TaskStatus(IntEnum):
    RUNNING = 0
    WAITING = 1
    ISOLATED = 2
    FAULTY = 3


class DbError(ValueError):
    pass


@dataclass
class TaskRecord:
    status: int = TaskStatus.RUNNING
    error_nr: int = 0


@dataclass
class NodeRecord:
    status: int = 0
    role: int = 0
    reboot_nr: int = 0
    tasks: list[TaskRecord] = field(default_factory=list)
    errors: list[bytes] = field(default_factory=list)
    update_nr: int = 0

    @property
    def task_nr(self) -> int:
        return len(self.tasks)

    @property
    def error_nr(self) -> int:
        return len(self.errors)


@dataclass
class DirDatabase:
    nodes: list[NodeRecord]
    primary: bool = True
    role: int = 0
    # configuration/runlevel are declared by the original record but never used
    configuration: int = 0
    runlevel: int = 0

    @classmethod
    def empty(cls, n_nodes: int = MAX_PROCS) -> "DirDatabase":
        return cls(nodes=[NodeRecord() for _ in range(n_nodes)])

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def copy(self) -> "DirDatabase":
        return copy.deepcopy(self)


@dataclass(frozen=True)
class DbUpdate:
    subcode: int
    subject: int
    op1: int = 0
    op2: int = 0

    @classmethod
    def from_args(cls, subject: int, arg: Sequence[int]) -> "DbUpdate":
        """Decode the ``arg`` slots of a DB message sent by ``subject``."""
        return cls(subcode=arg[0], subject=subject, op1=arg[1], op2=arg[2])

    def to_args(self) -> tuple[int, int, int, int, int]:
        return (self.subcode, self.op1, self.op2, 0, 0)


def build_local(db: DirDatabase, self_id: int, statuses: Iterable[int]) -> DirDatabase:
    if not 0 <= self_id < db.n_nodes:
        raise DbError(f"node {self_id} outside database of {db.n_nodes}")
    statuses = list(statuses)
    if len(statuses) > MAX_TASKS:
        raise DbError(f"at most {MAX_TASKS} tasks per node")
    out = db.copy()
    out.nodes[self_id].tasks = [TaskRecord(status=int(s), error_nr=0) for s in statuses]
    return out


def apply_update(db: DirDatabase, u: DbUpdate) -> DirDatabase:
    if not 0 <= u.subject < db.n_nodes:
        raise DbError(f"update subject {u.subject} out of range")
    out = db.copy()
    node = out.nodes[u.subject]
    if u.subcode == DbSubcode.DB_NEW_STATUS:
        node.status = u.op1
    elif u.subcode == DbSubcode.DB_NEW_ROLE:
        node.role = u.op1
    elif u.subcode == DbSubcode.DB_INC_REBOOT:
        node.reboot_nr += 1
    elif u.subcode in (DbSubcode.DB_NEW_TASK_STATUS, DbSubcode.DB_NEW_TASK_ERROR):
        if not 0 <= u.op1 < node.task_nr:
            raise DbError(f"task {u.op1} out of range on node {u.subject} ({node.task_nr} tasks)")
        task = node.tasks[u.op1]
        task.status = u.op2
        if u.subcode == DbSubcode.DB_NEW_TASK_ERROR:
            task.error_nr += 1
    else:
        raise DbError(f"unknown DB subcode {u.subcode}")
    return out


def reset_dynamic(db: DirDatabase) -> DirDatabase:
    """Zero the error, update and reboot counters of every node."""
    out = db.copy()
    for node in out.nodes:
        node.errors = []
        node.update_nr = 0
        node.reboot_nr = 0
    return out


# --- pipelined startup exchange -------------------------------------------


@dataclass(frozen=True)
class TransferPart:
    name: str
    mailbox: int
    # bulk parts are only sent when this counter is non-zero
    only_if: str | None = None


TRANSFER_PARTS = (
    TransferPart("sender_id", Mailbox.MBOX),
    TransferPart("task_nr", Mailbox.MBOX),
    TransferPart("tasks", Mailbox.DB_MBOX, only_if="task_nr"),
    TransferPart("error_nr", Mailbox.MBOX),
    TransferPart("errors", Mailbox.DB_MBOX, only_if="error_nr"),
)


@dataclass(frozen=True)
class Round:
    index: int
    action: str  # "send" or "receive"
    peers: tuple[int, ...]
    parts: tuple[TransferPart, ...] = TRANSFER_PARTS


def broadcast_plan(self_id: int, n: int) -> list[Round]:
    """Round ``i``: node ``i`` sends its record to everyone, the rest receive from it."""
    if n < 2:
        raise DbError("pipelined broadcast needs at least two nodes")
    if not 0 <= self_id < n:
        raise DbError(f"node {self_id} not in [0, {n})")
    plan = []
    for i in range(n):
        if i == self_id:
            plan.append(Round(i, "send", tuple(j for j in range(n) if j != self_id)))
        else:
            plan.append(Round(i, "receive", (i,)))
    return plan


def transfer_parts(record: NodeRecord) -> list[TransferPart]:
    """The parts actually sent for ``record`` (empty bulk parts are skipped)."""
    counters = {"task_nr": record.task_nr, "error_nr": record.error_nr}
    return [p for p in TRANSFER_PARTS if p.only_if is None or counters[p.only_if] > 0]


def receive_record(db: DirDatabase, sender: int, record: NodeRecord) -> DirDatabase:
    """Store a peer's local part (tasks and errors) into its slot."""
    if not 0 <= sender < db.n_nodes:
        raise DbError(f"sender {sender} out of range")
    out = db.copy()
    slot = out.nodes[sender]
    slot.tasks = copy.deepcopy(record.tasks)
    slot.errors = list(record.errors)
    return out


# --- full copies ------------------------------------------------------------

_MAGIC = b"DIRDB"
_VERSION = 1
_HEADER = struct.Struct("<5sBHHHH")
_STATUS = struct.Struct("<BBbi")
_NODE = struct.Struct("<iBIHHI")
_TASK = struct.Struct("<BI")


def snapshot_size(n_nodes: int) -> int:
    per_node = _NODE.size + MAX_TASKS * _TASK.size + MAX_ERRORS * ERROR_RECORD_SIZE
    return _HEADER.size + _STATUS.size + n_nodes * per_node


def snapshot(db: DirDatabase) -> bytes:
    """Fixed-shape binary copy; the size depends only on the node count."""
    chunks = [
        _HEADER.pack(_MAGIC, _VERSION, db.n_nodes, MAX_TASKS, MAX_ERRORS, ERROR_RECORD_SIZE),
        _STATUS.pack(int(db.primary), db.role, db.configuration, db.runlevel),
    ]
    empty_task = _TASK.pack(0, 0)
    empty_error = bytes(ERROR_RECORD_SIZE)
    for node in db.nodes:
        if node.task_nr > MAX_TASKS or node.error_nr > MAX_ERRORS:
            raise DbError("node record exceeds fixed table sizes")
        chunks.append(
            _NODE.pack(node.status, node.role, node.reboot_nr, node.task_nr, node.error_nr, node.update_nr)
        )
        chunks.extend(_TASK.pack(t.status, t.error_nr) for t in node.tasks)
        chunks.append(empty_task * (MAX_TASKS - node.task_nr))
        chunks.extend(e.ljust(ERROR_RECORD_SIZE, b"\0")[:ERROR_RECORD_SIZE] for e in node.errors)
        chunks.append(empty_error * (MAX_ERRORS - node.error_nr))
    return b"".join(chunks)


def load(data: bytes) -> DirDatabase:
    if len(data) < _HEADER.size:
        raise DbError("truncated snapshot header")
    magic, version, n_nodes, max_tasks, max_errors, err_size = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC or version != _VERSION:
        raise DbError("not a DIR database snapshot")
    if (max_tasks, max_errors, err_size) != (MAX_TASKS, MAX_ERRORS, ERROR_RECORD_SIZE):
        raise DbError("snapshot table sizes do not match this build")
    if len(data) != snapshot_size(n_nodes):
        raise DbError(f"snapshot is {len(data)} bytes, expected {snapshot_size(n_nodes)}")
    offset = _HEADER.size
    primary, role, configuration, runlevel = _STATUS.unpack_from(data, offset)
    offset += _STATUS.size
    nodes = []
    for _ in range(n_nodes):
        status, nrole, reboot_nr, task_nr, error_nr, update_nr = _NODE.unpack_from(data, offset)
        offset += _NODE.size
        if task_nr > MAX_TASKS or error_nr > MAX_ERRORS:
            raise DbError("corrupt counters in snapshot")
        tasks = []
        for i in range(MAX_TASKS):
            t_status, t_err = _TASK.unpack_from(data, offset)
            offset += _TASK.size
            if i < task_nr:
                tasks.append(TaskRecord(status=t_status, error_nr=t_err))
        errors = []
        for i in range(MAX_ERRORS):
            if i < error_nr:
                errors.append(data[offset : offset + ERROR_RECORD_SIZE])
            offset += ERROR_RECORD_SIZE
        nodes.append(
            NodeRecord(status=status, role=nrole, reboot_nr=reboot_nr, tasks=tasks, errors=errors, update_nr=update_nr)
        )
    return DirDatabase(
        nodes=nodes, primary=bool(primary), role=role, configuration=configuration, runlevel=runlevel
    )


# --- snapshot files ---------------------------------------------------------


def format_snapshot_file(db: DirDatabase) -> str:
    lines = [
        f"dirdb v1 {db.n_nodes}",
        f"status {int(db.primary)} {db.role} {db.configuration} {db.runlevel}",
    ]
    for i, node in enumerate(db.nodes):
        lines.append(
            f"node {i} {node.status} {node.role} {node.reboot_nr} {node.task_nr} {node.error_nr} {node.update_nr}"
        )
        for j, t in enumerate(node.tasks):
            lines.append(f"task {i} {j} {t.status} {t.error_nr}")
        for j, e in enumerate(node.errors):
            lines.append(f"error {i} {j} {e.hex()}")
    return "\n".join(lines) + "\n"


def parse_snapshot_file(text: str) -> DirDatabase:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DbError("empty snapshot file")
    head = lines[0].split()
    if len(head) != 3 or head[:2] != ["dirdb", "v1"]:
        raise DbError(f"bad snapshot header: {lines[0]!r}")
    db = DirDatabase.empty(int(head[2]))
    expected: dict[int, tuple[int, int]] = {}
    try:
        for lineno, line in enumerate(lines[1:], start=2):
            f = line.split()
            tag, vals = f[0], f[1:]
            if tag == "status":
                db.primary, db.role = bool(int(vals[0])), int(vals[1])
                db.configuration, db.runlevel = int(vals[2]), int(vals[3])
            elif tag == "node":
                i, status, role, reboot_nr, task_nr, error_nr, update_nr = map(int, vals)
                node = db.nodes[i]
                node.status, node.role, node.reboot_nr, node.update_nr = status, role, reboot_nr, update_nr
                expected[i] = (task_nr, error_nr)
            elif tag == "task":
                i, j, status, err = map(int, vals)
                if j != len(db.nodes[i].tasks):
                    raise DbError(f"line {lineno}: task index out of order")
                db.nodes[i].tasks.append(TaskRecord(status=status, error_nr=err))
            elif tag == "error":
                i, j = int(vals[0]), int(vals[1])
                if j != len(db.nodes[i].errors):
                    raise DbError(f"line {lineno}: error index out of order")
                db.nodes[i].errors.append(bytes.fromhex(vals[2]))
            else:
                raise DbError(f"line {lineno}: unknown record {tag!r}")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, DbError):
            raise
        raise DbError(f"malformed snapshot file: {exc}") from exc
    for i, (task_nr, error_nr) in expected.items():
        if db.nodes[i].task_nr != task_nr or db.nodes[i].error_nr != error_nr:
            raise DbError(f"node {i}: counters disagree with records")
    return db


class PersistenceSlot:
    """Reboot-resistant storage for one node's replica and role state.

    In-memory by default; with ``path`` set each write also lands on disk
    as a snapshot file.
    """

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._data: bytes | None = None
        self.role: int | None = None

    def mark_persistent(self, db: DirDatabase) -> None:
        self._data = snapshot(db)
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(format_snapshot_file(db))

    def restore(self) -> DirDatabase | None:
        if self._data is None:
            if self.path is not None and self.path.exists():
                return parse_snapshot_file(self.path.read_text())
            return None
        return load(self._data)

    @property
    def empty(self) -> bool:
        return self._data is None
