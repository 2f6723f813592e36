import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmv2x.control import ReservationTable, RxRole, TxRole
from mmv2x.geometry import DEFAULT_ANTENNA, DEFAULT_LADDER, AntennaModel, BeamwidthLadder
from mmv2x.scenario import Neighbor, NeighborTable
from mmv2x.scheduler import (
    BASELINE_BEAMWIDTH,
    CapacityError,
    IntervalAvailability,
    SchedulingPeriod,
    adaptive_schedule,
    baseline_schedule,
    beams_needed,
    check_sched_tx,
    contacted_ratio,
    min_beamwidth,
    schedule_tx,
)


def table(*bearings):
    ordered = sorted(enumerate(bearings), key=lambda p: (p[1], p[0]))
    return NeighborTable(0, tuple(Neighbor(100 + i, b, 10.0) for i, b in ordered))


def avail(*idx):
    return IntervalAvailability(tuple(idx))


def occupied_sectors(bearings, bw):
    """Exhaustive oracle: sweep every sector and ask whether a bearing lies in it."""
    return sum(
        any(s * bw <= b < (s + 1) * bw for b in bearings) for s in range(360 // bw)
    )


def brute_min_beamwidth(bearings, f, ladder):
    fits = [bw for bw in ladder if occupied_sectors(bearings, bw) <= f]
    return min(fits) if fits else None


def test_scheduling_period_defaults_and_constraint():
    p = SchedulingPeriod()
    assert (p.period_ms, p.interval_count, p.interval_ms) == (100, 5, 20)
    with pytest.raises(ValueError):
        SchedulingPeriod(100, 5, 25)
    with pytest.raises(ValueError):
        SchedulingPeriod(100, 0, 20)
    assert p.interval_start_ms(3, 2) == 340


def test_check_sched_tx_examples():
    p = SchedulingPeriod()
    t = ReservationTable(1, 5)
    assert check_sched_tx(t, p) == avail(0, 1, 2, 3, 4)
    t.roles[1] = RxRole(9)
    a = check_sched_tx(t, p)
    assert a.available == (0, 2, 3, 4) and a.count == 4
    t.roles = [RxRole(9)] * 5
    assert check_sched_tx(t, p).count == 0


def test_tx_intervals_remain_available():
    t = ReservationTable(1, 5)
    t.roles[0] = TxRole((3,), 0, 6)
    assert check_sched_tx(t, SchedulingPeriod()).count == 5


def test_beams_needed_examples():
    nt = table(10, 14, 100)
    assert beams_needed(nt, 6) == 3
    assert beams_needed(nt, 18) == 2
    assert beams_needed(nt, 360) == 1
    assert beams_needed(table(), 6) == 0


def test_non_monotone_witness():
    nt = table(17, 19)
    assert beams_needed(nt, 12) == 1
    assert beams_needed(nt, 18) == 2


def test_min_beamwidth_examples():
    assert min_beamwidth(table(10, 14, 100), avail(0, 1)) == 18
    assert min_beamwidth(table(200), avail(3)) == 6
    assert min_beamwidth(table(10, 20), avail()) is None


def test_min_beamwidth_takes_first_fit_not_a_later_one():
    # 12 fits with one interval while 18 would not
    assert min_beamwidth(table(17, 19), avail(0)) == 12


def test_schedule_tx_clockwise_assignment():
    nt = table(2, 31, 97)  # sectors 0, 5, 16 at 6 deg
    plan = schedule_tx(nt, 6, avail(0, 2, 3))
    assert [(g.sector, g.interval) for g in plan.groups] == [(0, 0), (5, 2), (16, 3)]


def test_schedule_tx_single_group():
    plan = schedule_tx(table(40, 41), 6, avail(4))
    assert [(g.sector, g.interval, len(g.receivers)) for g in plan.groups] == [(6, 4, 2)]


def test_schedule_tx_pigeonhole():
    nt = table(0, 90, 180)
    plan = schedule_tx(nt, 90, avail(1, 2, 4))
    assert sorted(g.interval for g in plan.groups) == [1, 2, 4]


def test_schedule_tx_capacity_error():
    with pytest.raises(CapacityError):
        schedule_tx(table(0, 90, 180), 6, avail(0, 1))


def test_baseline_examples():
    nt = table(*[i * 40 for i in range(7)])
    plan = baseline_schedule(nt, avail(0, 1, 2, 3, 4))
    assert plan.beamwidth == BASELINE_BEAMWIDTH
    assert len(plan.receivers) == 5
    assert contacted_ratio(plan, nt) == pytest.approx(5 / 7)
    assert plan.receivers == nt.ids[:5]

    nt3 = table(10, 50, 300)
    plan3 = baseline_schedule(nt3, avail(1, 2, 3, 4))
    assert [g.interval for g in plan3.groups] == [1, 2, 3]

    empty = baseline_schedule(nt3, avail())
    assert empty.groups == () and contacted_ratio(empty, nt3) == 0


def test_contacted_ratio_vacuous():
    assert contacted_ratio(adaptive_schedule(table(), avail(0)), table()) == 1.0


bearing_sets = st.lists(
    st.floats(min_value=0, max_value=360, exclude_max=True, allow_nan=False), min_size=0, max_size=10
)
free = st.lists(st.integers(0, 4), unique=True).map(lambda xs: IntervalAvailability(tuple(sorted(xs))))


@settings(max_examples=500)
@given(bearing_sets, free)
def test_adaptive_plan_invariants(bearings, av):
    nt = table(*bearings)
    plan = adaptive_schedule(nt, av)
    if nt.count and av.count:
        assert sorted(plan.receivers) == sorted(nt.ids)
        assert contacted_ratio(plan, nt) == 1.0
    elif nt.count:
        assert plan.groups == ()
    assert len(plan.groups) <= av.count
    sectors = [g.sector for g in plan.groups]
    assert sectors == sorted(set(sectors))
    assert [g.interval for g in plan.groups] == list(av.available[: len(plan.groups)])
    bearing_of = {n.id: n.bearing for n in nt.neighbors}
    flat = [r for g in plan.groups for r in g.receivers]
    assert len(flat) == len(set(flat))
    for g in plan.groups:
        for r in g.receivers:
            assert DEFAULT_ANTENNA.beam_covers(g.sector, plan.beamwidth, bearing_of[r])
    if plan.beamwidth is not None and nt.count:
        for smaller in DEFAULT_LADDER:
            if smaller >= plan.beamwidth:
                break
            assert beams_needed(nt, smaller) > av.count


@settings(max_examples=500)
@given(bearing_sets, free)
def test_baseline_capacity(bearings, av):
    nt = table(*bearings)
    plan = baseline_schedule(nt, av)
    assert all(len(g.receivers) == 1 for g in plan.groups)
    assert len(plan.receivers) == min(nt.count, av.count)
    assert len({g.interval for g in plan.groups}) == len(plan.groups)


@given(bearing_sets.filter(bool), st.integers(1, 5))
def test_existence_with_free_interval(bearings, f):
    assert min_beamwidth(table(*bearings), IntervalAvailability(tuple(range(f)))) is not None


REDUCED = BeamwidthLadder((6, 12, 18, 36))
REDUCED_ANTENNA = AntennaModel(REDUCED)


@settings(max_examples=1000)
@given(st.lists(st.integers(0, 359), min_size=1, max_size=6), st.integers(0, 5))
def test_min_beamwidth_matches_exhaustive_search_on_grid(bearings, f):
    nt = table(*[float(b) for b in bearings])
    av = IntervalAvailability(tuple(range(f)))
    assert min_beamwidth(nt, av, REDUCED_ANTENNA) == brute_min_beamwidth(bearings, f, REDUCED)


def test_sector_edge_belongs_to_higher_sector():
    assert schedule_tx(table(12.0), 6, avail(0)).groups[0].sector == 2
