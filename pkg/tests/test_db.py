import pytest
from hypothesis import given, strategies as st

from dirnet.db import (
    ERROR_RECORD_SIZE,
    DbError,
    DbUpdate,
    DirDatabase,
    PersistenceSlot,
    Role,
    TaskStatus,
    apply_update,
    broadcast_plan,
    build_local,
    format_snapshot_file,
    load,
    parse_snapshot_file,
    receive_record,
    reset_dynamic,
    snapshot,
    transfer_parts,
)
from dirnet.protocol import DbSubcode, Mailbox


def sample_db():
    db = DirDatabase.empty(4)
    for i in range(4):
        db = build_local(db, i, [TaskStatus.RUNNING] * (i + 1))
    db = apply_update(db, DbUpdate(DbSubcode.DB_INC_REBOOT, 2))
    db.nodes[1].errors = [b"boom".ljust(ERROR_RECORD_SIZE, b"\0"), bytes(range(ERROR_RECORD_SIZE))]
    db.nodes[3].update_nr = 7
    return db


def test_build_local():
    db = build_local(DirDatabase.empty(4), 1, [TaskStatus.RUNNING, TaskStatus.RUNNING])
    assert db.nodes[1].task_nr == 2
    assert [t.error_nr for t in db.nodes[1].tasks] == [0, 0]
    assert build_local(db, 1, []).nodes[1].task_nr == 0
    with pytest.raises(DbError):
        build_local(db, 9, [])


def test_apply_update_cases():
    db = build_local(DirDatabase.empty(4), 2, [TaskStatus.RUNNING] * 3)
    db = apply_update(db, DbUpdate(DbSubcode.DB_INC_REBOOT, 2))
    assert db.nodes[2].reboot_nr == 1
    db = apply_update(db, DbUpdate(DbSubcode.DB_NEW_ROLE, 1, Role.MANAGER))
    assert db.nodes[1].role == Role.MANAGER
    once = apply_update(db, DbUpdate(DbSubcode.DB_NEW_STATUS, 0, 5))
    assert apply_update(once, DbUpdate(DbSubcode.DB_NEW_STATUS, 0, 5)) == once
    db = apply_update(db, DbUpdate(DbSubcode.DB_NEW_TASK_STATUS, 2, 1, TaskStatus.WAITING))
    assert db.nodes[2].tasks[1].status == TaskStatus.WAITING
    assert db.nodes[2].tasks[1].error_nr == 0
    db = apply_update(db, DbUpdate(DbSubcode.DB_NEW_TASK_ERROR, 2, 1, TaskStatus.FAULTY))
    assert db.nodes[2].tasks[1].status == TaskStatus.FAULTY
    assert db.nodes[2].tasks[1].error_nr == 1


def test_apply_update_rejects_bad_task_and_leaves_db():
    db = build_local(DirDatabase.empty(4), 2, [TaskStatus.RUNNING])
    before = db.copy()
    with pytest.raises(DbError):
        apply_update(db, DbUpdate(DbSubcode.DB_NEW_TASK_STATUS, 2, 4, 0))
    with pytest.raises(DbError):
        apply_update(db, DbUpdate(999, 2))
    with pytest.raises(DbError):
        apply_update(db, DbUpdate(DbSubcode.DB_INC_REBOOT, 7))
    assert db == before


def test_update_args_round_trip():
    u = DbUpdate(DbSubcode.DB_NEW_TASK_STATUS, 3, 1, 2)
    assert DbUpdate.from_args(3, u.to_args()) == u


def test_reset_dynamic():
    db = sample_db()
    out = reset_dynamic(db)
    for before, after in zip(db.nodes, out.nodes):
        assert (after.error_nr, after.update_nr, after.reboot_nr) == (0, 0, 0)
        assert after.tasks == before.tasks
    assert reset_dynamic(out) == out


def test_broadcast_plan_n3():
    plan = broadcast_plan(1, 3)
    assert [(r.index, r.action, r.peers) for r in plan] == [
        (0, "receive", (0,)),
        (1, "send", (0, 2)),
        (2, "receive", (2,)),
    ]


def test_broadcast_plan_n2():
    for me in (0, 1):
        actions = [r.action for r in broadcast_plan(me, 2)]
        assert sorted(actions) == ["receive", "send"]
    with pytest.raises(DbError):
        broadcast_plan(0, 1)


def test_transfer_parts_skip_empty_bulk():
    db = sample_db()
    names = [p.name for p in transfer_parts(db.nodes[1])]
    assert names == ["sender_id", "task_nr", "tasks", "error_nr", "errors"]
    empty = DirDatabase.empty(2).nodes[0]
    parts = transfer_parts(empty)
    assert [p.name for p in parts] == ["sender_id", "task_nr", "error_nr"]
    assert all(p.mailbox == Mailbox.MBOX for p in parts)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_executing_plan_converges(k):
    local = [build_local(DirDatabase.empty(k), i, [TaskStatus.RUNNING] * (i + 1)) for i in range(k)]
    replicas = [db.copy() for db in local]
    plans = [broadcast_plan(i, k) for i in range(k)]
    for rnd in range(k):
        sender = rnd
        for i in range(k):
            step = plans[i][rnd]
            if step.action == "receive":
                assert step.peers == (sender,)
                replicas[i] = receive_record(replicas[i], sender, local[sender].nodes[sender])
    assert all(snapshot(r) == snapshot(replicas[0]) for r in replicas)


def test_snapshot_round_trip_and_size():
    db = sample_db()
    blob = snapshot(db)
    assert load(blob) == db
    assert len(snapshot(DirDatabase.empty(4))) == len(blob)


def test_truncated_snapshot():
    blob = snapshot(sample_db())
    for cut in (0, 3, len(blob) - 1):
        with pytest.raises(DbError):
            load(blob[:cut])


def test_snapshot_file_round_trip():
    db = sample_db()
    text = format_snapshot_file(db)
    assert text.startswith("dirdb v1 4\n")
    assert parse_snapshot_file(text) == db
    with pytest.raises(DbError):
        parse_snapshot_file("dirdb v2 4\n")


def test_persistence_slot(tmp_path):
    slot = PersistenceSlot()
    assert slot.restore() is None
    a, b = sample_db(), DirDatabase.empty(4)
    slot.mark_persistent(a)
    slot.mark_persistent(b)
    assert slot.restore() == b
    on_disk = PersistenceSlot(tmp_path / "n0.db")
    on_disk.mark_persistent(a)
    assert PersistenceSlot(tmp_path / "n0.db").restore() == a


updates = st.builds(
    DbUpdate,
    st.sampled_from([DbSubcode.DB_NEW_STATUS, DbSubcode.DB_NEW_ROLE, DbSubcode.DB_INC_REBOOT]),
    st.integers(0, 3),
    st.integers(0, 3),
)


@given(updates, updates)
def test_distinct_targets_commute(u, v):
    db = sample_db()
    if (u.subject, u.subcode) == (v.subject, v.subcode):
        return
    assert apply_update(apply_update(db, u), v) == apply_update(apply_update(db, v), u)


@given(st.lists(st.builds(DbUpdate, st.sampled_from(list(DbSubcode)), st.integers(0, 3), st.integers(0, 4), st.integers(0, 3))))
def test_counters_monotone(seq):
    db = sample_db()
    for u in seq:
        try:
            nxt = apply_update(db, u)
        except DbError:
            continue
        for a, b in zip(db.nodes, nxt.nodes):
            assert b.reboot_nr >= a.reboot_nr
            assert all(tb.error_nr >= ta.error_nr for ta, tb in zip(a.tasks, b.tasks))
        db = nxt
