import csv

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmv2x.control import (
    Announcement,
    AnnouncementEntry,
    Cam,
    ProtocolError,
    ReservationTable,
    RxRole,
    TxRole,
    apply_announcement,
    cam_schedule,
    deliver_broadcast,
    write_event_log,
)
from mmv2x.scenario import Vehicle


def veh(vid, x, y=1.5, offset=0.0):
    return Vehicle(vid, 0, x, y, 0.0, True, offset)


def ann(tx, *entries, period=1):
    return Announcement(
        tx, period, tuple(AnnouncementEntry(i, tuple(r), 0, 6) for i, r in entries), 100.0, 20.0
    )


def test_cam_schedule_order():
    vs = [veh(7, 0, offset=5), veh(3, 10, offset=40), veh(9, 20, offset=12)]
    assert cam_schedule(vs) == [(5, 7), (12, 9), (40, 3)]


def test_cam_schedule_two_periods():
    vs = [veh(1, 0, offset=5), veh(2, 10, offset=40)]
    sched = cam_schedule(vs, periods=2)
    assert [vid for _, vid in sched].count(1) == 2
    assert [vid for _, vid in sched].count(2) == 2
    assert sched == sorted(sched)
    assert (105, 1) in sched


def test_cam_schedule_empty_and_ties():
    assert cam_schedule([]) == []
    vs = [veh(5, 0, offset=10), veh(2, 10, offset=10)]
    assert cam_schedule(vs) == [(10, 2), (10, 5)]


def test_deliver_broadcast_range():
    vs = [veh(0, 0), veh(1, 100), veh(2, 400), veh(3, 45)]
    cam = Cam(0, 0.0, vs[0].position)
    got = deliver_broadcast(cam, vs, 300.0, road_length=2000)
    assert got == {1, 3}


def test_deliver_broadcast_wraps():
    vs = [veh(0, 10), veh(1, 1900)]
    assert deliver_broadcast(Cam(0, 0.0, vs[0].position), vs, 300.0, 2000) == {1}
    assert deliver_broadcast(Cam(0, 0.0, vs[0].position), vs, 300.0, None) == set()


def test_free_interval_becomes_rx():
    t = ReservationTable(5, 5)
    apply_announcement(t, ann(1, (2, [5])), 10.0)
    assert t.role(2) == RxRole(1)
    assert [e.event for e in t.events] == ["reservation"]


def test_first_heard_wins():
    t = ReservationTable(5, 5)
    apply_announcement(t, ann(1, (2, [5])), 10.0)
    apply_announcement(t, ann(2, (2, [5])), 20.0)
    assert t.role(2) == RxRole(1)
    assert t.conflicts == 1
    assert t.events[-1].sender == 2 and t.events[-1].interval == 2


def test_own_tx_wins_over_later_reservation():
    t = ReservationTable(5, 5)
    own = ann(5, (2, [8, 9]))
    apply_announcement(t, own, 5.0)
    assert isinstance(t.role(2), TxRole)
    apply_announcement(t, ann(1, (2, [5])), 10.0)
    assert t.role(2) == TxRole((8, 9), 0, 6)
    assert t.forfeits == 1


def test_entries_not_naming_owner_are_ignored():
    t = ReservationTable(5, 5)
    apply_announcement(t, ann(1, (0, [6]), (1, [5])), 1.0)
    assert t.is_free(0)
    assert t.role(1) == RxRole(1)


def test_interval_out_of_range():
    t = ReservationTable(5, 5)
    with pytest.raises(ProtocolError):
        apply_announcement(t, ann(1, (5, [5])), 1.0)
    with pytest.raises(ProtocolError):
        apply_announcement(t, ann(1, (-1, [5])), 1.0)
    # nothing half-applied
    assert all(t.is_free(i) for i in range(5))


def test_malformed_announcements():
    with pytest.raises(ProtocolError):
        ann(1, (0, [2]), (1, [2]))
    with pytest.raises(ProtocolError):
        ann(1, (0, [2]), (0, [3]))


def test_announcing_over_own_rx_is_rejected():
    t = ReservationTable(5, 5)
    apply_announcement(t, ann(1, (2, [5])), 1.0)
    with pytest.raises(ProtocolError):
        apply_announcement(t, ann(5, (2, [7])), 2.0)


announcements = st.lists(
    st.tuples(
        st.integers(0, 6),  # sender
        st.lists(st.tuples(st.integers(0, 4), st.booleans()), max_size=5, unique_by=lambda e: e[0]),
    ),
    max_size=12,
)


@given(announcements)
def test_one_role_per_interval_and_traceable(sequence):
    owner = 0
    t = ReservationTable(owner, 5)
    applied = []
    for k, (sender, entries) in enumerate(sequence):
        if sender == owner:
            # the owner only announces intervals it still has free
            entries = [(i, x) for i, x in entries if t.is_free(i)]
            a = ann(owner, *[(i, [100 + i]) for i, _ in entries])
        else:
            # receiver sets are disjoint, so the owner is named at most once
            named_at = next((i for i, named in entries if named), None)
            a = ann(sender, *[(i, [owner] if i == named_at else [100 + i]) for i, _ in entries])
        apply_announcement(t, a, float(k))
        applied.append(a)
    for i in range(5):
        role = t.role(i)
        assert role is None or isinstance(role, (TxRole, RxRole))
        if isinstance(role, RxRole):
            src = t.sources[i]
            assert src in applied and src.tx_id == role.peer
            assert any(e.interval == i and owner in e.receivers for e in src.entries)
    reservations = sum(e.event == "reservation" for e in t.events)
    assert reservations == sum(isinstance(t.role(i), RxRole) for i in range(5))


def test_event_log(tmp_path):
    t = ReservationTable(5, 5)
    apply_announcement(t, ann(1, (2, [5])), 10.0)
    apply_announcement(t, ann(2, (2, [5])), 20.0)
    path = tmp_path / "events.csv"
    write_event_log(t.events, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["time_ms", "event", "sender", "receiver", "interval"]
    assert [r[1] for r in rows[1:]] == ["reservation", "conflict"]
