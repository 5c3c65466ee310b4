import math

import numpy as np
import pytest

from dcaim import channel
from dcaim.assignment import (
    IncompleteMatrixError,
    InfeasibleScheduleError,
    InterferenceList,
    PowerMatrix,
    assign_channels,
    assign_channels_probabilistic,
    baseline_schedules,
    build_interference_list,
    measurement_round,
    merge_interference_sets,
    pinned_nodes,
)
from dcaim.scenario import load_packaged
from dcaim.topology import NodeId, NodeKind, RadioParams, build_topology

from conftest import make_scenario

GOLDEN_LISTS = {
    0: {(1, 3), (2, 3)},
    1: {(0, 1), (0, 3), (2, 3)},
    2: {(1, 2)},
}
GOLDEN_SETS = {
    0: {(0, 1), (0, 3), (1, 3), (2, 3)},
    1: {(0, 1), (0, 3), (1, 2), (1, 3), (2, 3)},
    2: {(1, 2), (2, 3)},
}


@pytest.fixture(scope="module")
def golden_matrix():
    return PowerMatrix.from_rows(load_packaged("golden").power_matrix)


def radio(delta_thr_db=10.0, **kwargs):
    return RadioParams(delta_thr_db=delta_thr_db, **kwargs)


class TestPowerMatrix:
    def test_minima_over_own_sources(self, golden_matrix):
        assert golden_matrix.delta_min == {0: -56.0, 1: -57.0, 2: -59.0}

    def test_missing_entry_raises(self, golden_matrix):
        with pytest.raises(IncompleteMatrixError):
            golden_matrix.power(0, 5, 0)

    def test_measurement_round_reference_shape(self):
        scn = load_packaged("reference")
        topology = build_topology(scn)
        matrix = measurement_round(topology, np.random.default_rng(0))
        assert len(matrix.entries) == 3 * 12
        assert len(matrix.delta_min) == 3

    def test_measurement_round_single_region(self):
        scn = make_scenario([{"relays": [(0.5, 0.5)], "sources": [(0.4, 0.5), (0.6, 0.5)]}])
        topology = build_topology(scn)
        matrix = measurement_round(topology)
        assert set(matrix.entries) == {(0, 0, 0), (0, 0, 1)}
        assert 0 in matrix.delta_min

    def test_measurement_round_sigma_zero_matches_channel(self):
        scn = make_scenario(
            [
                {"relays": [(0.3, 1.0)], "sources": [(0.2, 1.0), (0.35, 1.1)]},
                {"relays": [(0.7, 1.0)], "sources": [(0.8, 1.0)]},
            ]
        )
        topology = build_topology(scn)
        matrix = measurement_round(topology)
        for region in topology.regions:
            for src in topology.sources():
                want = channel.received_power_dbm(src, region.observer, topology)
                assert matrix.power(region.id, src.region, src.node) == pytest.approx(want)


class TestInterferenceLists:
    def test_golden_lists_match(self, golden_matrix):
        for i, want in GOLDEN_LISTS.items():
            il = build_interference_list(golden_matrix, i, radio())
            assert il.members == frozenset(want), f"region {i}"

    def test_zero_margin_excludes_everything_below_min(self, golden_matrix):
        il = build_interference_list(golden_matrix, 0, radio(delta_thr_db=0.0))
        # all foreign powers (-60, -63, -80..) are below the -56 dBm floor
        assert il.members == frozenset()

    def test_huge_margin_includes_all_foreign(self, golden_matrix):
        il = build_interference_list(golden_matrix, 0, radio(delta_thr_db=math.inf))
        foreign = {(j, k) for (j, k) in golden_matrix.sources if j != 0}
        assert il.members == foreign

    def test_membership_is_exactly_the_threshold_predicate(self):
        rng = np.random.default_rng(21)
        for trial in range(50):
            rows = []
            regions = rng.integers(2, 5)
            nodes = rng.integers(1, 5)
            for i in range(regions):
                for j in range(regions):
                    for k in range(nodes):
                        rows.append((i, j, k, float(rng.uniform(-95, -40))))
            matrix = PowerMatrix.from_rows(rows)
            r = radio(delta_thr_db=float(rng.uniform(0, 25)))
            for i in range(regions):
                il = build_interference_list(matrix, i, r)
                floor = matrix.delta_min[i] - r.delta_thr_db
                for j, k in matrix.sources:
                    if j == i:
                        assert (j, k) not in il.members
                    else:
                        assert ((j, k) in il.members) == (matrix.power(i, j, k) > floor)

    def test_incomplete_matrix_rejected(self):
        rows = [(0, 0, 0, -50.0), (0, 1, 0, -60.0), (1, 1, 0, -50.0)]
        # observer 1 never measured source (0, 0)
        matrix = PowerMatrix.from_rows(rows)
        with pytest.raises(IncompleteMatrixError):
            build_interference_list(matrix, 1, radio())


class TestMergeInterferenceSets:
    def test_golden_union(self, golden_matrix):
        lists = [build_interference_list(golden_matrix, i, radio()) for i in range(3)]
        sets = merge_interference_sets(lists)
        for i, want in GOLDEN_SETS.items():
            assert sets[i].members == frozenset(want), f"region {i}"

    def test_empty_lists_give_empty_sets(self):
        lists = [InterferenceList(i, frozenset()) for i in range(3)]
        sets = merge_interference_sets(lists)
        assert all(s.members == frozenset() for s in sets.values())

    def test_two_region_union_example(self):
        lists = [
            InterferenceList(0, frozenset({(1, 0)})),
            InterferenceList(1, frozenset()),
        ]
        sets = merge_interference_sets(lists)
        assert sets[0].members == {(1, 0)}
        assert sets[1].members == {(1, 0)}

    def test_duplicate_owner_rejected(self):
        lists = [InterferenceList(0, frozenset()), InterferenceList(0, frozenset())]
        with pytest.raises(ValueError):
            merge_interference_sets(lists)

    def test_symmetry_consequence(self):
        rng = np.random.default_rng(4)
        for trial in range(30):
            regions = int(rng.integers(2, 5))
            lists = []
            for i in range(regions):
                members = set()
                for j in range(regions):
                    if j == i:
                        continue
                    for k in range(3):
                        if rng.random() < 0.3:
                            members.add((j, k))
                lists.append(InterferenceList(i, frozenset(members)))
            sets = merge_interference_sets(lists)
            for il in lists:
                for (i, k) in il.members:
                    assert (i, k) in sets[i].members
                    assert (i, k) in sets[il.owner].members


class TestAssignChannels:
    def test_golden_reuse_and_pins(self, golden_matrix):
        scn = load_packaged("golden")
        topology = build_topology(scn)
        lists = [build_interference_list(golden_matrix, i, radio()) for i in range(3)]
        sets = merge_interference_sets(lists)
        schedules = assign_channels(sets, topology)
        node = NodeId(0, 0, NodeKind.SOURCE)
        assert len(schedules[0].slots_of(node)) == 4
        total = sum(len(s.entries) for s in schedules.values())
        assert total == 26 > 12
        # pinned nodes keep their original superframe slots, exclusively
        for region_id, schedule in schedules.items():
            for entry in schedule.entries:
                if entry.pinned:
                    offsets = {0: 0, 1: 4, 2: 8}
                    assert entry.slot == offsets[region_id] + entry.node.node
                    assert entry.subchannel == 0

    def test_schedule_safety_no_same_set_slot_sharing(self, golden_matrix):
        scn = load_packaged("golden")
        topology = build_topology(scn)
        lists = [build_interference_list(golden_matrix, i, radio()) for i in range(3)]
        sets = merge_interference_sets(lists)
        schedules = assign_channels(sets, topology)
        by_slot: dict[int, set[tuple[int, int]]] = {}
        for region_id, schedule in schedules.items():
            for entry in schedule.entries:
                by_slot.setdefault(entry.slot, set()).add((region_id, entry.node.node))
        for slot, members in by_slot.items():
            for s in sets.values():
                assert len(members & s.members) <= 1, f"slot {slot}"

    def test_every_source_covered(self, golden_matrix):
        scn = load_packaged("golden")
        topology = build_topology(scn)
        lists = [build_interference_list(golden_matrix, i, radio()) for i in range(3)]
        schedules = assign_channels(merge_interference_sets(lists), topology)
        for region in topology.regions:
            for src in region.source_ids:
                assert schedules[region.id].slots_of(src), f"{src} has no slot"

    def test_all_pinned_reduces_to_baseline_tdma(self):
        scn = load_packaged("golden")
        topology = build_topology(scn)
        all_members = frozenset(
            (r.id, s.node) for r in topology.regions for s in r.source_ids
        )
        from dcaim.assignment import InterferenceSet

        sets = {r.id: InterferenceSet(r.id, all_members) for r in topology.regions}
        schedules = assign_channels(sets, topology)
        baseline = baseline_schedules(topology)
        for region_id in schedules:
            got = {(e.slot, e.subchannel, e.node) for e in schedules[region_id].entries}
            want = {(e.slot, e.subchannel, e.node) for e in baseline[region_id].entries}
            assert got == want

    def test_single_free_node_takes_all_slots(self):
        scn = make_scenario([{"relays": [(0.5, 0.5)], "sources": [(0.45, 0.5)]}])
        topology = build_topology(scn)
        from dcaim.assignment import InterferenceSet

        sets = {0: InterferenceSet(0, frozenset())}
        schedules = assign_channels(sets, topology, frame_len=4)
        node = NodeId(0, 0, NodeKind.SOURCE)
        assert schedules[0].slots_of(node) == [(0, 0), (1, 0), (2, 0), (3, 0)]

    def test_reuse_never_below_baseline(self, golden_matrix):
        scn = load_packaged("golden")
        topology = build_topology(scn)
        rng = np.random.default_rng(2)
        for margin in (0.0, 5.0, 10.0, 20.0, math.inf):
            r = radio(delta_thr_db=margin)
            lists = [build_interference_list(golden_matrix, i, r) for i in range(3)]
            sets = merge_interference_sets(lists)
            schedules = assign_channels(sets, topology)
            total = sum(len(s.entries) for s in schedules.values())
            baseline = len(topology.sources())
            assert total >= baseline
            all_pinned = len(pinned_nodes(sets)) == baseline
            assert (total == baseline) == all_pinned

    def test_pins_beyond_channel_budget_rejected(self):
        scn = make_scenario(
            [
                {"relays": [(0.3, 1.0)], "sources": [(0.25, 1.0), (0.35, 1.0)]},
                {"relays": [(0.7, 1.0)], "sources": [(0.65, 1.0), (0.75, 1.0)]},
            ],
            radio_overrides={"num_subchannels": 2},
        )
        topology = build_topology(scn)
        from dcaim.assignment import InterferenceSet

        all_members = frozenset({(0, 0), (0, 1), (1, 0), (1, 1)})
        sets = {0: InterferenceSet(0, all_members), 1: InterferenceSet(1, all_members)}
        with pytest.raises(InfeasibleScheduleError):
            assign_channels(sets, topology, frame_len=1)

    def test_unpinned_node_without_pool_rejected(self):
        scn = make_scenario(
            [
                {"relays": [(0.3, 1.0)], "sources": [(0.25, 1.0)]},
                {"relays": [(0.7, 1.0)], "sources": [(0.75, 1.0)]},
            ]
        )
        topology = build_topology(scn)
        from dcaim.assignment import InterferenceSet

        sets = {0: InterferenceSet(0, frozenset({(0, 0)})), 1: InterferenceSet(1, frozenset())}
        with pytest.raises(InfeasibleScheduleError):
            assign_channels(sets, topology, frame_len=1)

    def test_missing_region_set_rejected(self):
        scn = load_packaged("golden")
        topology = build_topology(scn)
        from dcaim.assignment import InterferenceSet

        with pytest.raises(ValueError):
            assign_channels({0: InterferenceSet(0, frozenset())}, topology)

    def test_displaced_pin_spills_to_subchannel(self):
        # Two pins per slot index with frame_len=1 forces the second pin
        # onto a higher sub-channel.
        scn = make_scenario(
            [
                {"relays": [(0.3, 1.0)], "sources": [(0.25, 1.0)]},
                {"relays": [(0.7, 1.0)], "sources": [(0.75, 1.0)]},
            ]
        )
        topology = build_topology(scn)
        from dcaim.assignment import InterferenceSet

        members = frozenset({(0, 0), (1, 0)})
        sets = {0: InterferenceSet(0, members), 1: InterferenceSet(1, members)}
        schedules = assign_channels(sets, topology, frame_len=1)
        channels = sorted(
            (e.slot, e.subchannel)
            for s in schedules.values()
            for e in s.entries
        )
        assert channels == [(0, 0), (0, 1)]


class TestProbabilisticAssignment:
    def _matrix(self, foreign_dbm: float) -> PowerMatrix:
        rows = [
            (0, 0, 0, -50.0),
            (0, 1, 0, foreign_dbm),
            (1, 0, 0, -80.0),
            (1, 1, 0, -50.0),
        ]
        return PowerMatrix.from_rows(rows)

    def test_ratio_one_always_pins(self):
        # foreign power exactly at the floor: ratio clamps to 1
        matrix = self._matrix(-60.0)
        r = radio(delta_thr_db=10.0)
        for seed in range(20):
            schedules = assign_channels_probabilistic(matrix, r, np.random.default_rng(seed))
            assert NodeId(1, 0, NodeKind.SOURCE) in schedules[1].orthogonal_nodes

    def test_vanishing_power_never_pins(self):
        matrix = self._matrix(-200.0)
        r = radio(delta_thr_db=10.0)
        for seed in range(20):
            schedules = assign_channels_probabilistic(matrix, r, np.random.default_rng(seed))
            assert not schedules[1].orthogonal_nodes

    def test_pin_frequency_matches_ratio(self):
        # ratio 0.3 in linear power: delta = floor + 10*log10(0.3)
        ratio = 0.3
        floor_dbm = -60.0
        matrix = self._matrix(floor_dbm + 10.0 * math.log10(ratio))
        r = radio(delta_thr_db=10.0)
        n = 10_000
        rng = np.random.default_rng(77)
        pins = 0
        for _ in range(n):
            schedules = assign_channels_probabilistic(matrix, r, rng)
            if NodeId(1, 0, NodeKind.SOURCE) in schedules[1].orthogonal_nodes:
                pins += 1
        assert abs(pins / n - ratio) < 0.015  # 3 sigma of Binomial(1e4, 0.3)

    def test_degenerates_to_deterministic_pin_set(self, golden_matrix):
        # every list member exceeds its floor, so each is pinned surely
        r = radio(delta_thr_db=10.0)
        lists = [build_interference_list(golden_matrix, i, r) for i in range(3)]
        deterministic = pinned_nodes(merge_interference_sets(lists))
        for seed in range(10):
            schedules = assign_channels_probabilistic(
                golden_matrix, r, np.random.default_rng(seed)
            )
            pinned = {
                (region_id, n.node)
                for region_id, s in schedules.items()
                for n in s.orthogonal_nodes
            }
            assert pinned >= deterministic
