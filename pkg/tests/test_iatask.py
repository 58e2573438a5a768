from hypothesis import given, strategies as st

from dirnet.actions import DeleteTimeout, InsertTimeout, Send
from dirnet.iatask import IatPhase, IatState, clear_flag, iat_handle
from dirnet.protocol import Mailbox, Message, MessageType, make_timeout_message

ROUSE2 = Message(MessageType.ROUSE, subid=2, local=True)
TICK = make_timeout_message(40, 2)


def active(n=4, me=2):
    st_, _, _ = iat_handle(IatState(self_id=me, n=n), Message(MessageType.ROUSE, subid=me), 0)
    return st_


def test_rouse_activates():
    s, actions, flag = iat_handle(IatState(self_id=2, n=4), ROUSE2, 0)
    assert s.phase is IatPhase.ACTIVE and s.guarded == 2
    assert actions == [InsertTimeout(40, 2, 1000, True)]
    assert flag == 0


def test_rouse_while_active_is_ignored():
    s = active()
    assert iat_handle(s, ROUSE2, 1) == (s, [], 1)


def test_tick_with_clear_flag_sets_it():
    s = active()
    assert iat_handle(s, TICK, 0) == (s, [], 1)


def test_tick_with_set_flag_broadcasts_teif():
    s, actions, flag = iat_handle(active(), TICK, 1)
    sends = [a for a in actions if isinstance(a, Send)]
    assert sorted(a.dest for a in sends) == [0, 1, 3]
    assert all(a.mbox == Mailbox.MBOX and a.message == Message(MessageType.TEIF, subid=2) for a in sends)
    assert actions[-1] == DeleteTimeout(40, 2)
    assert s.phase is IatPhase.DORMANT


def test_guarded_and_self_both_excluded():
    s = IatState(self_id=1, n=4, phase=IatPhase.ACTIVE, guarded=3)
    _, actions, _ = iat_handle(s, make_timeout_message(40, 3), 1)
    assert sorted(a.dest for a in actions if isinstance(a, Send)) == [0, 2]


def test_clear_flag():
    assert clear_flag(1) == 0
    assert clear_flag(0) == 0


message_types = st.sampled_from([int(t) for t in MessageType if t != MessageType.ROUSE])


@given(message_types, st.integers(0, 3), st.integers(0, 1))
def test_dormant_emits_nothing(t, subid, flag):
    s = IatState(self_id=2, n=4)
    assert iat_handle(s, Message(t, subid), flag) == (s, [], flag)


@given(st.lists(st.booleans(), min_size=1, max_size=50))
def test_liveness_law(clears):
    """Clearing between every pair of ticks keeps the task quiet."""
    s, flag = active(), 0
    for _ in clears:
        s, actions, flag = iat_handle(s, TICK, flag)
        assert actions == []
        flag = clear_flag(flag)


def test_crash_law_two_periods():
    s, flag = active(), 0
    s, a1, flag = iat_handle(s, TICK, flag)
    s, a2, flag = iat_handle(s, TICK, flag)
    assert a1 == [] and any(isinstance(a, Send) for a in a2)
    s, a3, flag = iat_handle(s, TICK, flag)
    assert a3 == []
