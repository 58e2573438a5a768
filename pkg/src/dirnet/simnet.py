"""Deterministic discrete-event harness for a DIR net.

Hosts one component, one I'm Alive Task and one IA-flag cell per node,
drives their timeout lists from a shared virtual clock, delivers messages
with latency, injects scripted faults and executes recovery requests.

Within a tick, timeout firings are handled first, then scheduled events in
``(node, kind, insertion)`` order: deliveries, wake-ups, db updates,
faults, recoveries.
"""

from __future__ import annotations

import heapq
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Any

from dirnet import component as comp
from dirnet.actions import (
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
from dirnet.component import ComponentState, Phase, RoleConfig, Timeouts
from dirnet.db import MAX_PROCS, PersistenceSlot, Role, TaskStatus, snapshot
from dirnet.iatask import IatPhase, IatState, iat_handle
from dirnet.protocol import (
    INJECT_FAULT_DEADLINE,
    Mailbox,
    Message,
    MessageType as MT,
    encode_trace,
    make_timeout_message,
    pretty,
)
from dirnet.tom import TimeoutList, TomClosedError, declare

FAULT_KINDS = ("CRASH_COMPONENT", "CRASH_NODE", "FREEZE_COMPONENT", "REBOOT_NODE")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FaultEvent:
    at: int
    kind: str
    node: int
    duration: int = 0


@dataclass(frozen=True)
class UpdateEvent:
    """A local DB update raised on ``node`` about itself."""

    at: int
    node: int
    subcode: int
    op1: int = 0
    op2: int = 0


@dataclass(frozen=True)
class SimConfig:
    n_nodes: int = 4
    roles: tuple[Role, ...] | None = None
    timeouts: Timeouts = field(default_factory=Timeouts)
    latency: int = 10
    jitter: int = 0
    run_length: int = 60000
    seed: int = 0
    faults: tuple[FaultEvent, ...] = ()
    updates: tuple[UpdateEvent, ...] = ()
    inject: bool = False
    inject_deadline: int = INJECT_FAULT_DEADLINE
    respawn_delay: int = 100
    reboot_delay: int = 500
    reboot_enabled: bool = True
    max_procs: int = MAX_PROCS
    tasks_per_node: int = 2
    persist_dir: str | None = None

    def role_config(self) -> RoleConfig:
        if self.roles is None:
            return RoleConfig.default(self.n_nodes)
        return RoleConfig(tuple(self.roles))

    @property
    def max_latency(self) -> int:
        return self.latency + self.jitter

    def validate(self) -> list[str]:
        """Raise ConfigError on invalid settings; return soft warnings."""
        if not 2 <= self.n_nodes <= self.max_procs:
            raise ConfigError(f"n_nodes must be in [2, {self.max_procs}], got {self.n_nodes}")
        if self.roles is not None and len(self.roles) != self.n_nodes:
            raise ConfigError("role table must cover every node")
        try:
            self.role_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.latency < 1 or self.jitter < 0:
            raise ConfigError("latency must be >= 1 and jitter >= 0")
        if self.run_length < 0:
            raise ConfigError("run_length must be >= 0")
        for name in ("respawn_delay", "reboot_delay", "inject_deadline"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not 0 <= self.tasks_per_node <= 16:
            raise ConfigError("tasks_per_node must be in [0, 16]")
        for f in self.faults:
            if f.kind not in FAULT_KINDS:
                raise ConfigError(f"unknown fault kind {f.kind}")
            if not 0 <= f.node < self.n_nodes:
                raise ConfigError(f"fault targets unknown node {f.node}")
            if not 0 <= f.at < self.run_length:
                raise ConfigError(f"fault at {f.at} outside run of {self.run_length}")
            if f.kind == "FREEZE_COMPONENT" and f.duration <= 0:
                raise ConfigError("FREEZE_COMPONENT needs a positive duration")
        for u in self.updates:
            if not 0 <= u.node < self.n_nodes:
                raise ConfigError(f"update targets unknown node {u.node}")
            if not 0 <= u.at < self.run_length:
                raise ConfigError(f"update at {u.at} outside run")
        return self.timeouts.problems(self.max_latency)


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    node: int
    record: str
    text: str

    @property
    def line(self) -> str:
        return f"{self.tick} {self.node} {self.record} {self.text}".rstrip()


def format_trace(trace: list[TraceEvent]) -> str:
    return "".join(ev.line + "\n" for ev in trace)


@dataclass
class Report:
    suspicions: list[tuple[int, int, int]] = field(default_factory=list)
    suspicions_active: int = 0
    teif_broadcasts: list[tuple[int, int]] = field(default_factory=list)
    spans: list[tuple[int, int, int, int | None]] = field(default_factory=list)
    reboot_requests: list[tuple[int, int, int, int | None]] = field(default_factory=list)
    reboots: list[tuple[int, int]] = field(default_factory=list)
    respawns: list[tuple[int, int]] = field(default_factory=list)
    elections: list[tuple[int, int, int, int]] = field(default_factory=list)
    niua: list[tuple[int, int, int]] = field(default_factory=list)
    messages: Counter = field(default_factory=Counter)
    replicas_equal: bool = False
    final_managerid: int = -1
    managerids: dict[int, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def metrics(self) -> dict[str, int]:
        return {
            "suspicions": len(self.suspicions),
            "suspicions_active": self.suspicions_active,
            "teif_broadcasts": len(self.teif_broadcasts),
            "spans": len(self.spans),
            "reboots": len(self.reboots),
            "reboot_requests": len(self.reboot_requests),
            "respawns": len(self.respawns),
            "elections": len(self.elections),
            "niua": len(self.niua),
            "final_managerid": self.final_managerid,
            "replicas_equal": int(self.replicas_equal),
        }

    def first_suspicion(self) -> dict[int, int]:
        """Earliest suspicion tick per suspected node."""
        first: dict[int, int] = {}
        for tick, _, suspect in self.suspicions:
            first.setdefault(suspect, tick)
        return first

    def to_kv(self) -> str:
        lines = [f"{k}={v}" for k, v in self.metrics().items()]
        for i, (t, w, s) in enumerate(self.suspicions):
            lines.append(f"suspicion.{i}={t} {w} {s}")
        for i, (t, n) in enumerate(self.teif_broadcasts):
            lines.append(f"teif.{i}={t} {n}")
        for i, (t, src, dst, lat) in enumerate(self.spans):
            lines.append(f"span.{i}={t} {src} {dst} {_lat(lat)}")
        for i, (t, src, dst, lat) in enumerate(self.reboot_requests):
            lines.append(f"reboot_request.{i}={t} {src} {dst} {_lat(lat)}")
        for i, (t, n) in enumerate(self.reboots):
            lines.append(f"reboot.{i}={t} {n}")
        for i, (t, n) in enumerate(self.respawns):
            lines.append(f"respawn.{i}={t} {n}")
        for i, (t, n, old, new) in enumerate(self.elections):
            lines.append(f"election.{i}={t} {n} {old} {new}")
        for i, (t, n, s) in enumerate(self.niua):
            lines.append(f"niua.{i}={t} {n} {s}")
        for node, mid in sorted(self.managerids.items()):
            lines.append(f"managerid.{node}={mid}")
        for label, count in sorted(self.messages.items()):
            lines.append(f"messages.{label.replace(' ', '_')}={count}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        m = self.metrics()
        out = [
            "DIR net run report",
            f"  suspicions        {m['suspicions']} (active at end: {m['suspicions_active']})",
            f"  TEIF broadcasts   {m['teif_broadcasts']}",
            f"  SPANs             {m['spans']}",
            f"  reboot requests   {m['reboot_requests']}",
            f"  reboots           {m['reboots']}",
            f"  respawns          {m['respawns']}",
            f"  elections         {m['elections']}",
            f"  NIUA broadcasts   {m['niua']}",
            f"  final managerid   {m['final_managerid']}",
            f"  replicas equal    {'yes' if self.replicas_equal else 'no'}",
        ]
        for node, tick in sorted(self.first_suspicion().items()):
            out.append(f"  first suspicion of node {node} at {tick}")
        for t, src, dst, lat in self.spans:
            out.append(f"  SPAN {src} -> {dst} at {t} (fault latency {_lat(lat)})")
        for t, src, dst, lat in self.reboot_requests:
            out.append(f"  reboot of {dst} requested by {src} at {t} (fault latency {_lat(lat)})")
        for t, n, old, new in self.elections:
            out.append(f"  node {n} elected {new} (was {old}) at {t}")
        out.append("  messages:")
        out.extend(f"    {label}: {count}" for label, count in sorted(self.messages.items()))
        for w in self.warnings:
            out.append(f"  warning: {w}")
        return "\n".join(out) + "\n"


def _lat(lat: int | None) -> str:
    return "-" if lat is None else str(lat)


class Ev(IntEnum):
    DELIVER = 0
    WAKE = 1
    UPDATE = 2
    FAULT = 3
    RECOVERY = 4


class CompStatus(IntEnum):
    UP = 0
    CRASHED = 1
    FROZEN = 2
    NONE = 3


@dataclass
class Node:
    id: int
    slot: PersistenceSlot
    up: bool = True
    comp: ComponentState | None = None
    comp_status: CompStatus = CompStatus.NONE
    comp_tom: Any = None
    iat: IatState | None = None
    iat_tom: Any = None
    flag: int = 0
    mail: dict[int, deque] = field(default_factory=lambda: {int(m): deque() for m in Mailbox})
    saved_role: int | None = None
    generation: int = 0
    pending_respawn: bool = False
    pending_reboot: bool = False
    held_wakes: list[int] = field(default_factory=list)


class Simulation:
    def __init__(self, cfg: SimConfig) -> None:
        warnings = cfg.validate()
        self.cfg = cfg
        self.roles = cfg.role_config()
        self.now = 0
        self.trace: list[TraceEvent] = []
        self.report = Report(warnings=list(warnings))
        self._heap: list[tuple] = []
        self._seq = 0
        self._rng = random.Random(cfg.seed)
        self._channel_last: dict[tuple[int, int, int], int] = {}
        self._faults_log: list[tuple[int, str, int]] = []
        self.nodes = [Node(i, self._slot(i)) for i in range(cfg.n_nodes)]
        for f in cfg.faults:
            self._push(f.at, f.node, Ev.FAULT, f)
        for u in cfg.updates:
            self._push(u.at, u.node, Ev.UPDATE, u)
        for node in self.nodes:
            self._boot(node, first_activation=True)
        for node in self.nodes:
            self._pump(node)

    # --- plumbing -------------------------------------------------------

    def _slot(self, i: int) -> PersistenceSlot:
        if self.cfg.persist_dir is None:
            return PersistenceSlot()
        return PersistenceSlot(Path(self.cfg.persist_dir) / f"node{i}.dirdb")

    def _push(self, tick: int, node: int, kind: Ev, data: Any) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (tick, node, int(kind), self._seq, data))

    def _log(self, node: int, record: str, text: str = "") -> None:
        self.trace.append(TraceEvent(self.now, node, record, text))

    def _latency(self) -> int:
        if self.cfg.jitter:
            return self.cfg.latency + self._rng.randint(0, self.cfg.jitter)
        return self.cfg.latency

    def _fault_latency(self, target: int) -> int | None:
        for tick, _, node in reversed(self._faults_log):
            if node == target and tick <= self.now:
                return self.now - tick
        return None

    def _new_tom(self):
        return TimeoutList(self.now)

    # --- node lifecycle -------------------------------------------------

    def _boot(self, node: Node, first_activation: bool) -> None:
        node.up = True
        node.flag = 0
        node.iat = IatState(self_id=node.id, n=self.cfg.n_nodes, period=self.cfg.timeouts.set)
        node.iat_tom = self._new_tom()
        self._start_component(node, first_activation)

    def _start_component(self, node: Node, first_activation: bool) -> None:
        if node.comp_tom is not None:
            node.comp_tom.close()
        node.generation += 1
        node.held_wakes.clear()
        node.comp_tom = self._new_tom()
        state, actions = comp.startup(
            node.id,
            first_activation,
            True,
            self.roles,
            None if first_activation else node.slot.restore(),
            timeouts=self.cfg.timeouts,
            inject=self.cfg.inject,
            tasks=[TaskStatus.RUNNING] * self.cfg.tasks_per_node,
            tom=node.comp_tom,
        )
        node.comp = state
        node.comp_status = CompStatus.UP
        self._apply(node, actions)

    def _kill(self, node: Node) -> None:
        node.up = False
        for tom in (node.comp_tom, node.iat_tom):
            if tom is not None:
                tom.close()
        node.comp = None
        node.comp_status = CompStatus.NONE
        node.comp_tom = None
        node.iat = None
        node.iat_tom = None
        node.pending_respawn = False
        node.held_wakes.clear()
        node.generation += 1
        for q in node.mail.values():
            q.clear()

    # --- main loop ------------------------------------------------------

    def _active_toms(self):
        for node in self.nodes:
            if node.comp_tom is not None and not node.comp_tom.closed:
                yield node, node.comp_tom, Mailbox.MBOX
            if node.iat_tom is not None and not node.iat_tom.closed:
                yield node, node.iat_tom, Mailbox.IAT_MBOX

    def _next_tick(self) -> int | None:
        best = self._heap[0][0] if self._heap else None
        for _, tom, _ in self._active_toms():
            nxt = tom.next_expiry()
            if nxt is not None and (best is None or nxt < best):
                best = nxt
        return best

    def run_until(self, end: int) -> None:
        while True:
            t = self._next_tick()
            if t is None or t > end:
                break
            self.now = t
            touched = []
            for node, tom, mbox in list(self._active_toms()):
                fired = tom.advance(t - tom.now)
                for kind, subid in fired:
                    self._log(node.id, "FIRED", f"{kind} {subid} {pretty(kind)}")
                    node.mail[mbox].append((make_timeout_message(kind, subid), None))
                if fired:
                    touched.append(node)
            for node in touched:
                self._pump(node)
            while self._heap and self._heap[0][0] == t:
                _, nid, kind, _, data = heapq.heappop(self._heap)
                self._dispatch(self.nodes[nid], Ev(kind), data)
                self._pump(self.nodes[nid])
        self.now = max(self.now, end)

    def _dispatch(self, node: Node, kind: Ev, data: Any) -> None:
        if kind is Ev.DELIVER:
            self._deliver(node, *data)
        elif kind is Ev.WAKE:
            gen, token = data
            if gen != node.generation or node.comp is None:
                return
            if node.comp_status is CompStatus.FROZEN:
                node.held_wakes.append(token)
            elif node.comp_status is CompStatus.UP:
                self._wake(node, token)
        elif kind is Ev.UPDATE:
            self._update(node, data)
        elif kind is Ev.FAULT:
            self._fault(node, data)
        else:
            self._recover(node, *data)

    def _wake(self, node: Node, token: int) -> None:
        state, actions = comp.on_wait_expired(node.comp, token)
        node.comp = state
        self._apply(node, actions)

    def _pump(self, node: Node) -> None:
        busy = True
        while busy:
            busy = False
            if node.comp_status is CompStatus.UP and node.comp is not None:
                for mbox in node.comp.readable_mailboxes():
                    q = node.mail[mbox]
                    if q:
                        m, payload = q.popleft()
                        self._run_component(node, mbox, m, payload)
                        busy = True
                        break
            if node.iat is not None and node.mail[Mailbox.IAT_MBOX]:
                m, _ = node.mail[Mailbox.IAT_MBOX].popleft()
                self._run_iat(node, m)
                busy = True

    def _run_component(self, node: Node, mbox: int, m: Message, payload: Any) -> None:
        before = node.comp
        state, actions = comp.handle(before, mbox, m, payload)
        node.comp = state
        if state.phase is Phase.RUNNING and before.phase is Phase.RUNNING:
            for i, (old, new) in enumerate(zip(before.suspicion, state.suspicion)):
                if new and not old:
                    self.report.suspicions.append((self.now, node.id, i))
            if m.type == MT.TEIF_TIMEOUT_B and state.managerid != before.managerid:
                self.report.elections.append((self.now, node.id, before.managerid, state.managerid))
            if state.role == Role.MANAGER and m.type in (MT.TAIA, MT.DB):
                if any(isinstance(a, Send) and a.message.type == MT.NIUA for a in actions):
                    self.report.niua.append((self.now, node.id, m.subid))
        self._apply(node, actions)

    def _run_iat(self, node: Node, m: Message) -> None:
        state, actions, flag = iat_handle(node.iat, m, node.flag)
        node.iat, node.flag = state, flag
        if any(isinstance(a, Send) and a.message.type == MT.TEIF for a in actions):
            self.report.teif_broadcasts.append((self.now, node.id))
        for a in actions:
            if isinstance(a, Send):
                self._send(node.id, a)
            elif isinstance(a, InsertTimeout):
                node.iat_tom.insert(declare(a.kind, a.subid, a.cyclic, a.deadline))
            elif isinstance(a, DeleteTimeout):
                node.iat_tom.delete(a.kind, a.subid)

    def _apply(self, node: Node, actions: list) -> None:
        promote = False
        for a in actions:
            tom = node.comp_tom
            if isinstance(a, Send):
                self._send(node.id, a)
            elif isinstance(a, InsertTimeout):
                deadline = self.cfg.inject_deadline if a.kind == MT.INJECT_FAULT_TIMEOUT else a.deadline
                try:
                    tom.insert(declare(a.kind, a.subid, a.cyclic, deadline))
                except TomClosedError:
                    self._log(node.id, "NOTE", f"timeout list closed, {pretty(a.kind)} not inserted")
            elif isinstance(a, RenewTimeout):
                tom.renew(a.kind, a.subid)
            elif isinstance(a, DeleteTimeout):
                tom.delete(a.kind, a.subid)
            elif isinstance(a, ClearIaFlag):
                node.flag = 0
            elif isinstance(a, CloseTom):
                tom.close()
                self._log(node.id, "NOTE", "timeout list detached")
            elif isinstance(a, RequestNodeReboot):
                self._request_reboot(node.id, a.target)
            elif isinstance(a, BecomeManagerAndRestart):
                promote = True
            elif isinstance(a, PersistDb):
                node.slot.mark_persistent(node.comp.db)
            elif isinstance(a, PersistState):
                node.saved_role = a.role
            elif isinstance(a, EmitTrace):
                self._log(node.id, "NOTE", a.note)
            elif isinstance(a, ArmWait):
                self._push(self.now + a.ticks, node.id, Ev.WAKE, (node.generation, a.token))
            else:  # pragma: no cover
                raise TypeError(f"unknown action {a!r}")
        if promote:
            self._promote(node)

    def _promote(self, node: Node) -> None:
        node.comp_tom.close()
        node.comp_tom = self._new_tom()
        self._log(node.id, "RECOVERY", f"restart {node.id} as MANAGER")
        state, actions = comp.restart_as(node.comp, Role.MANAGER, tom=node.comp_tom)
        node.comp = state
        self._apply(node, actions)

    # --- messaging ------------------------------------------------------

    def _send(self, src: int, a: Send) -> None:
        m = a.message
        self.report.messages[pretty(m.type)] += 1
        if not 0 <= a.dest < len(self.nodes):
            self._log(src, "NOTE", f"dropped {m.label}: unknown destination {a.dest}")
            return
        self._log(src, "SENT", f"{a.dest} {int(a.mbox)} {encode_trace(m)}")
        if m.type == MT.SPAN:
            self.report.spans.append((self.now, src, a.dest, self._fault_latency(a.dest)))
        if a.dest == src:
            self._deliver(self.nodes[src], src, a.mbox, m, a.payload)
            return
        key = (src, a.dest, int(a.mbox))
        at = max(self.now + self._latency(), self._channel_last.get(key, 0))
        self._channel_last[key] = at
        self._push(at, a.dest, Ev.DELIVER, (src, a.mbox, m, a.payload))

    def _deliver(self, node: Node, src: int, mbox: int, m: Message, payload: Any) -> None:
        if not node.up:
            self._log(node.id, "NOTE", f"dropped {m.label} from {src}: node down")
            return
        self._log(node.id, "DELIVERED", f"{int(mbox)} {encode_trace(m)}")
        if m.type == MT.SPAN and mbox == Mailbox.IAT_MBOX:
            self._span(node)
            return
        node.mail[int(mbox)].append((m, payload))

    # --- faults and recovery --------------------------------------------

    def _span(self, node: Node) -> None:
        if node.iat is None:
            self._log(node.id, "NOTE", "SPAN ignored: I'm Alive Task is dead")
            return
        if node.pending_respawn:
            self._log(node.id, "NOTE", "SPAN ignored: respawn already pending")
            return
        node.pending_respawn = True
        self._push(self.now + self.cfg.respawn_delay, node.id, Ev.RECOVERY, ("respawn", node.generation))

    def _request_reboot(self, requester: int, target: int) -> None:
        self.report.reboot_requests.append((self.now, requester, target, self._fault_latency(target)))
        node = self.nodes[target]
        if not self.cfg.reboot_enabled:
            self._log(requester, "NOTE", f"reboot of {target} requested, reboots disabled")
            return
        if node.pending_reboot:
            self._log(requester, "NOTE", f"reboot of {target} already pending")
            return
        self._log(requester, "RECOVERY", f"reboot {target}")
        self._reboot(node)

    def _reboot(self, node: Node) -> None:
        node.pending_reboot = True
        self._kill(node)
        self._push(self.now + self.cfg.reboot_delay, node.id, Ev.RECOVERY, ("restart", node.generation))

    def _recover(self, node: Node, what: str, gen: int) -> None:
        if what == "respawn":
            node.pending_respawn = False
            if gen != node.generation or node.iat is None:
                self._log(node.id, "NOTE", "respawn abandoned")
                return
            self._log(node.id, "RECOVERY", f"respawn {node.id}")
            self.report.respawns.append((self.now, node.id))
            self._start_component(node, first_activation=False)
        elif what == "restart":
            node.pending_reboot = False
            self._log(node.id, "RECOVERY", f"restart {node.id}")
            self.report.reboots.append((self.now, node.id))
            self._boot(node, first_activation=False)
        elif what == "unfreeze":
            if gen != node.generation or node.comp_status is not CompStatus.FROZEN:
                self._log(node.id, "NOTE", "unfreeze has nothing to resume")
                return
            self._log(node.id, "RECOVERY", f"unfreeze {node.id}")
            node.comp_status = CompStatus.UP
            held, node.held_wakes = node.held_wakes, []
            for token in held:
                self._wake(node, token)

    def _fault(self, node: Node, f: FaultEvent) -> None:
        detail = f"{f.kind} {f.duration}" if f.kind == "FREEZE_COMPONENT" else f.kind
        self._log(node.id, "FAULT", detail)
        self._faults_log.append((self.now, f.kind, node.id))
        if f.kind == "CRASH_NODE":
            if not node.up:
                self._log(node.id, "NOTE", "node already down")
                return
            self._kill(node)
        elif f.kind == "REBOOT_NODE":
            if node.pending_reboot:
                self._log(node.id, "NOTE", "reboot already pending")
                return
            self._reboot(node)
        elif node.comp_status is not CompStatus.UP:
            self._log(node.id, "NOTE", "component not running")
        elif f.kind == "CRASH_COMPONENT":
            node.comp_status = CompStatus.CRASHED
            node.comp_tom.close()
        else:  # FREEZE_COMPONENT: clock keeps running, mail piles up
            node.comp_status = CompStatus.FROZEN
            self._push(self.now + f.duration, node.id, Ev.RECOVERY, ("unfreeze", node.generation))

    def _update(self, node: Node, u: UpdateEvent) -> None:
        if not node.up or node.comp is None:
            self._log(node.id, "NOTE", "db update dropped: node down")
            return
        m = Message(MT.DB, subid=node.id, arg=(u.subcode, u.op1, u.op2), local=True)
        self._log(node.id, "NOTE", f"db update {encode_trace(m)}")
        node.mail[Mailbox.MBOX].append((m, None))

    # --- results --------------------------------------------------------

    def running_components(self) -> list[Node]:
        return [
            n for n in self.nodes
            if n.up and n.comp is not None and n.comp_status is CompStatus.UP and n.comp.phase is Phase.RUNNING
        ]

    def finish(self) -> Report:
        live = self.running_components()
        r = self.report
        r.suspicions_active = sum(sum(n.comp.suspicion) for n in live)
        r.managerids = {n.id: n.comp.managerid for n in live}
        mids = set(r.managerids.values())
        r.final_managerid = mids.pop() if len(mids) == 1 else -1
        blobs = {snapshot(n.comp.db) for n in live}
        r.replicas_equal = len(live) > 0 and len(blobs) == 1
        return r


def run(cfg: SimConfig) -> tuple[list[TraceEvent], Report]:
    sim = Simulation(cfg)
    sim.run_until(cfg.run_length)
    return sim.trace, sim.finish()
