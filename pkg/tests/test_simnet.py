from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from dirnet.component import Timeouts
from dirnet.db import DirDatabase, Role, TaskStatus, build_local
from dirnet.protocol import Mailbox, Message, MessageType as MT
from dirnet.simnet import (
    ConfigError,
    FaultEvent,
    SimConfig,
    Simulation,
    UpdateEvent,
    format_trace,
    run,
)
from dirnet.actions import Send


def lines(trace, record=None, node=None):
    return [e for e in trace if (record is None or e.record == record) and (node is None or e.node == node)]


def test_quiescent_short_run():
    trace, rep = run(SimConfig(run_length=5000))
    assert rep.metrics()["suspicions"] == 0
    assert rep.replicas_equal and rep.final_managerid == 0


def test_startup_completes_at_first_latency():
    sim = Simulation(SimConfig(run_length=100))
    sim.run_until(10)
    assert all(n.comp.phase.value == "running" for n in sim.nodes)
    assert all(n.iat.phase.value == "active" for n in sim.nodes)


def test_determinism_with_jitter():
    cfg = SimConfig(run_length=20000, jitter=7, seed=3, faults=(FaultEvent(5000, "CRASH_COMPONENT", 1),))
    a, _ = run(cfg)
    b, _ = run(cfg)
    assert format_trace(a) == format_trace(b)
    c, _ = run(replace(cfg, seed=4))
    assert format_trace(a) != format_trace(c)


def test_trace_monotone_and_delivered_after_sent():
    trace, _ = run(SimConfig(run_length=20000, jitter=9, seed=1, faults=(FaultEvent(4000, "CRASH_NODE", 3),)))
    ticks = [e.tick for e in trace]
    assert ticks == sorted(ticks)
    sent = 0
    for e in trace:
        sent += e.record == "SENT"
        if e.record == "DELIVERED":
            assert sent > 0


def test_fifo_per_channel_under_jitter():
    sim = Simulation(SimConfig(run_length=1000, jitter=50, seed=9))
    sim.run_until(20)
    for k in range(5):
        sim._send(0, Send(1, Mailbox.RINT_MBOX, Message(MT.ROUSE, subid=0, arg=(k,))))
    sim.run_until(200)
    got = [m.arg[0] for m, _ in sim.nodes[1].mail[Mailbox.RINT_MBOX]]
    assert got == [0, 1, 2, 3, 4]


def test_local_send_has_zero_latency():
    trace, _ = run(SimConfig(run_length=50))
    rouse = [e for e in trace if e.record in ("SENT", "DELIVERED") and " 109 " in f" {e.text} "]
    assert rouse and all(e.tick == 10 for e in rouse)


def test_send_to_crashed_node_dropped():
    trace, _ = run(SimConfig(run_length=3000, faults=(FaultEvent(1000, "CRASH_NODE", 2),)))
    assert any(e.record == "NOTE" and "dropped" in e.text for e in lines(trace, node=2))


def test_unknown_destination_noted():
    sim = Simulation(SimConfig(run_length=10))
    sim._send(0, Send(9, Mailbox.MBOX, Message(MT.MIA)))
    assert "unknown destination" in sim.trace[-1].text


def test_crash_node_never_teifs():
    _, rep = run(SimConfig(run_length=30000, faults=(FaultEvent(10000, "CRASH_NODE", 2),), reboot_enabled=False))
    assert rep.teif_broadcasts == []
    assert len(rep.reboot_requests) == 1 and rep.reboots == []


def test_fault_on_dead_unit_noted():
    cfg = SimConfig(run_length=12000, faults=(FaultEvent(5000, "CRASH_COMPONENT", 2), FaultEvent(6000, "CRASH_COMPONENT", 2)))
    trace, _ = run(cfg)
    assert any(e.text == "component not running" for e in lines(trace, "NOTE", 2))


def test_span_to_dead_node_has_no_effect():
    sim = Simulation(SimConfig(run_length=5000, faults=(FaultEvent(1000, "CRASH_NODE", 2),), reboot_enabled=False))
    sim.run_until(1500)
    sim._send(0, Send(2, Mailbox.IAT_MBOX, Message(MT.SPAN, subid=2)))
    sim.run_until(5000)
    assert sim.report.respawns == []


def test_respawn_witm_after_delay():
    trace, rep = run(SimConfig(run_length=15000, respawn_delay=250, faults=(FaultEvent(10000, "CRASH_COMPONENT", 2),)))
    (t_respawn, node), = rep.respawns
    span_arrival = next(e.tick for e in lines(trace, "DELIVERED", 2) if e.text.startswith("21 108"))
    assert t_respawn == span_arrival + 250
    witm = [e for e in lines(trace, "SENT", 2) if e.text.split()[2] == "104"]
    assert witm[0].tick == t_respawn


def test_persist_then_reboot_restores_db():
    sim = Simulation(SimConfig(run_length=9000, faults=(FaultEvent(3000, "REBOOT_NODE", 1),)))
    sim.run_until(2000)
    persisted = sim.nodes[1].slot.restore()
    assert persisted == sim.nodes[1].comp.db
    sim.run_until(3000)
    assert sim.nodes[1].comp is None
    sim.run_until(3500)
    assert sim.nodes[1].comp.db == persisted  # initial value before the copy arrives
    sim.run_until(9000)
    assert sim.finish().replicas_equal


def test_persist_twice_last_wins():
    sim = Simulation(SimConfig(run_length=100))
    sim.run_until(50)
    node = sim.nodes[2]
    db = build_local(DirDatabase.empty(4), 2, [TaskStatus.FAULTY])
    node.comp = replace(node.comp, db=db)
    from dirnet.actions import PersistDb

    sim._apply(node, [PersistDb()])
    assert node.slot.restore() == db


def test_no_persist_forces_request_db():
    sim = Simulation(SimConfig(run_length=100))
    node = sim.nodes[1]
    node.slot = type(node.slot)()
    sim._kill(node)
    sim._boot(node, first_activation=False)
    assert node.comp.db == DirDatabase.empty(4)
    sim.run_until(100)
    assert node.comp.phase.value == "running"
    assert node.comp.db == sim.nodes[0].comp.db


def test_file_backed_persistence(tmp_path):
    run(SimConfig(run_length=100, persist_dir=str(tmp_path)))
    assert sorted(p.name for p in tmp_path.iterdir()) == [f"node{i}.dirdb" for i in range(4)]
    assert (tmp_path / "node0.dirdb").read_text().startswith("dirdb v1 4")


def test_role_persists_after_promotion_and_reboot():
    cfg = SimConfig(
        run_length=30000,
        faults=(FaultEvent(10000, "CRASH_NODE", 0), FaultEvent(20000, "REBOOT_NODE", 1)),
    )
    sim = Simulation(cfg)
    sim.run_until(15000)
    assert sim.nodes[1].saved_role == Role.MANAGER
    sim.run_until(30000)
    rep = sim.finish()
    assert sim.nodes[1].comp.role == Role.MANAGER
    assert rep.final_managerid == 1


def test_witm_retry_when_nobody_answers():
    cfg = SimConfig(run_length=8000, n_nodes=2, reboot_enabled=False,
                    faults=(FaultEvent(100, "CRASH_NODE", 0), FaultEvent(200, "REBOOT_NODE", 1)))
    trace, _ = run(cfg)
    assert sum(e.text == "no NMI, repeating WITM" for e in trace) >= 2


def test_inject_closes_manager_clock():
    cfg = SimConfig(run_length=20000, inject=True, inject_deadline=5000)
    trace, rep = run(cfg)
    assert any(e.text == "timeout list detached" for e in lines(trace, "NOTE", 0))
    # the manager stops sending MIAs; every backup suspects it
    assert {w for _, w, s in rep.suspicions if s == 0} == {1, 2, 3}


@pytest.mark.parametrize(
    "bad",
    [
        dict(n_nodes=1),
        dict(n_nodes=5),
        dict(latency=0),
        dict(roles=(Role.BACKUP,) * 4),
        dict(faults=(FaultEvent(70000, "CRASH_NODE", 1),)),
        dict(faults=(FaultEvent(10, "CRASH_NODE", 9),)),
        dict(faults=(FaultEvent(10, "FREEZE_COMPONENT", 1),)),
        dict(faults=(FaultEvent(10, "EXPLODE", 1),)),
    ],
)
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        SimConfig(**bad).validate()


def test_constraint_warnings():
    warnings = SimConfig(latency=600).validate()
    assert any("mia_recv" in w for w in warnings)


def test_report_formats():
    _, rep = run(SimConfig(run_length=15000, faults=(FaultEvent(10000, "CRASH_COMPONENT", 2),)))
    kv = dict(line.split("=", 1) for line in rep.to_kv().splitlines())
    assert kv["spans"] == "1" and kv["span.0"] == "11020 0 2 1020"
    assert "SPAN 0 -> 2 at 11020" in rep.to_text()


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000), st.integers(0, 20))
def test_fault_free_soundness(seed, jitter):
    _, rep = run(SimConfig(run_length=15000, seed=seed, jitter=jitter))
    m = rep.metrics()
    assert m["suspicions"] == m["teif_broadcasts"] == m["reboot_requests"] == m["spans"] == 0
    assert rep.replicas_equal


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 3), st.integers(2000, 20000), st.integers(0, 10))
def test_crash_completeness(target, at, jitter):
    cfg = SimConfig(run_length=at + 6000, jitter=jitter, seed=target, faults=(FaultEvent(at, "CRASH_NODE", target),))
    _, rep = run(cfg)
    t = cfg.timeouts
    bound = t.taia_recv + t.set + 2 * cfg.max_latency + 2
    reqs = [(tick, dst) for tick, _, dst, _ in rep.reboot_requests if dst == target]
    assert reqs and reqs[0][0] - at <= bound
