"""Dynamic channel allocation for interference mitigation.

The scheme runs in five steps: an orthogonal measurement round in which one
designated relay per region records the received power of every source, the
construction of a per-region interference list against the region's weakest
own source, a broadcast of these lists, their merge into per-region
interference sets, and finally a slot assignment over a global superframe.

The superframe concatenates the per-region TDMA frames: region ``i`` with
``S_i`` sources owns a contiguous block of ``S_i`` slots, and source ``k``
of that region originally owns slot ``offset_i + k``. Interference-set
members keep their original slot as an exclusive orthogonal channel; every
slot whose original owner is not in any interference set is pooled and
dealt round-robin, per region, to that region's remaining sources, so each
of them may transmit several times per superframe while regions reuse the
pooled slots concurrently.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from dcaim import channel
from dcaim.topology import NetworkTopology, NodeId, NodeKind, RadioParams


class IncompleteMatrixError(ValueError):
    """A required received-power entry is missing."""


class InfeasibleScheduleError(RuntimeError):
    """Pinned nodes exceed the orthogonal channel budget, or a source would
    end up with no slot at all."""


@dataclass(frozen=True)
class PowerMatrix:
    """Received powers recorded during the measurement round.

    ``entries[(i, j, k)]`` is the power in dBm measured by region ``i``'s
    observer relay for source ``k`` of region ``j``. ``delta_min[i]`` is the
    minimum over region ``i``'s own sources.
    """

    entries: dict[tuple[int, int, int], float]
    sources: tuple[tuple[int, int], ...]
    observers: tuple[int, ...]
    delta_min: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.delta_min:
            computed: dict[int, float] = {}
            for i in self.observers:
                own = [
                    self.entries[(i, j, k)]
                    for (j, k) in self.sources
                    if j == i and (i, j, k) in self.entries
                ]
                if not own:
                    raise IncompleteMatrixError(
                        f"region {i} has no own-source measurements"
                    )
                computed[i] = min(own)
            object.__setattr__(self, "delta_min", computed)

    def power(self, observer: int, region: int, node: int) -> float:
        try:
            return self.entries[(observer, region, node)]
        except KeyError:
            raise IncompleteMatrixError(
                f"no measurement for source ({region},{node}) at region {observer}"
            ) from None

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[int, int, int, float]]) -> "PowerMatrix":
        """Build from ``(observer, source_region, source_node, dbm)`` rows."""
        entries = {(int(i), int(j), int(k)): float(p) for i, j, k, p in rows}
        sources = sorted({(j, k) for (_, j, k) in entries})
        observers = sorted({i for (i, _, _) in entries})
        return cls(entries=entries, sources=tuple(sources), observers=tuple(observers))


@dataclass(frozen=True)
class InterferenceList:
    """Foreign sources heard at region ``owner`` above its tolerance."""

    owner: int
    members: frozenset[tuple[int, int]]


@dataclass(frozen=True)
class InterferenceSet:
    """List members plus the owner's own sources flagged by other regions."""

    owner: int
    members: frozenset[tuple[int, int]]


@dataclass(frozen=True)
class SlotAssignment:
    slot: int
    subchannel: int
    node: NodeId
    pinned: bool


@dataclass(frozen=True)
class SlotSchedule:
    """One region's transmissions over the global superframe."""

    region: int
    frame_len: int
    entries: tuple[SlotAssignment, ...]

    @property
    def assignment(self) -> dict[int, frozenset[NodeId]]:
        out: dict[int, set[NodeId]] = {}
        for entry in self.entries:
            out.setdefault(entry.slot, set()).add(entry.node)
        return {slot: frozenset(nodes) for slot, nodes in out.items()}

    @property
    def orthogonal_nodes(self) -> frozenset[NodeId]:
        return frozenset(e.node for e in self.entries if e.pinned)

    def slots_of(self, node: NodeId) -> list[tuple[int, int]]:
        """Sorted (slot, subchannel) pairs owned by ``node``."""
        return sorted((e.slot, e.subchannel) for e in self.entries if e.node == node)


def measurement_round(
    topology: NetworkTopology, rng: np.random.Generator | None = None
) -> PowerMatrix:
    """Run the orthogonal measurement round over the whole network.

    Every source transmits once in a globally exclusive slot while each
    region's observer relay records the received power, including from the
    region's own sources.
    """
    entries: dict[tuple[int, int, int], float] = {}
    sources = sorted(topology.sources(), key=NodeId.sort_key)
    for region in topology.regions:
        observer = region.observer
        for src in sources:
            entries[(region.id, src.region, src.node)] = channel.received_power_dbm(
                src, observer, topology, rng
            )
    return PowerMatrix(
        entries=entries,
        sources=tuple((s.region, s.node) for s in sources),
        observers=tuple(r.id for r in topology.regions),
    )


def build_interference_list(
    matrix: PowerMatrix, region: int, radio: RadioParams
) -> InterferenceList:
    """Foreign sources whose measured power at ``region`` exceeds the
    region's weakest own source minus the configured margin."""
    floor = matrix.delta_min[region] - radio.delta_thr_db
    members = {
        (j, k)
        for (j, k) in matrix.sources
        if j != region and matrix.power(region, j, k) > floor
    }
    return InterferenceList(owner=region, members=frozenset(members))


def merge_interference_sets(
    lists: Iterable[InterferenceList],
) -> dict[int, InterferenceSet]:
    """Broadcast and merge: every region unions its own list with its own
    sources that appear in any other region's list."""
    by_owner: dict[int, InterferenceList] = {}
    for il in lists:
        if il.owner in by_owner:
            raise ValueError(f"duplicate interference list for region {il.owner}")
        by_owner[il.owner] = il
    sets: dict[int, InterferenceSet] = {}
    for i, il in by_owner.items():
        flagged = {
            (r, k)
            for j, other in by_owner.items()
            if j != i
            for (r, k) in other.members
            if r == i
        }
        sets[i] = InterferenceSet(owner=i, members=il.members | flagged)
    return sets


def pinned_nodes(sets: Mapping[int, InterferenceSet]) -> set[tuple[int, int]]:
    """Every (region, node) pair that appears in any interference set."""
    pinned: set[tuple[int, int]] = set()
    for interference_set in sets.values():
        pinned |= interference_set.members
    return pinned


def _region_block_offsets(region_sizes: dict[int, int]) -> dict[int, int]:
    offsets: dict[int, int] = {}
    cursor = 0
    for region in sorted(region_sizes):
        offsets[region] = cursor
        cursor += region_sizes[region]
    return offsets


def _assemble_schedules(
    region_sizes: dict[int, int],
    pinned: set[tuple[int, int]],
    num_subchannels: int,
    frame_len: int | None,
) -> dict[int, SlotSchedule]:
    offsets = _region_block_offsets(region_sizes)
    total = sum(region_sizes.values())
    length = frame_len if frame_len is not None else total
    if length < 1:
        raise ValueError("frame_len must be at least 1")

    capacity = length * num_subchannels
    if len(pinned) > capacity:
        raise InfeasibleScheduleError(
            f"{len(pinned)} pinned nodes exceed the {length} slots x "
            f"{num_subchannels} sub-channels orthogonal budget"
        )

    # Pinned nodes get globally exclusive channels: the original slot when
    # free, otherwise the first free slot, spilling onto higher sub-channels
    # only once every slot index is taken.
    used: set[tuple[int, int]] = set()
    pin_channel: dict[tuple[int, int], tuple[int, int]] = {}
    for region, node in sorted(pinned):
        original = (offsets[region] + node) % length
        chan = (original, 0)
        if chan in used:
            chan = next(
                (s, c)
                for c in range(num_subchannels)
                for s in range(length)
                if (s, c) not in used
            )
        used.add(chan)
        pin_channel[(region, node)] = chan

    pinned_slots = {slot for slot, _ in used}
    pool = [slot for slot in range(length) if slot not in pinned_slots]

    schedules: dict[int, SlotSchedule] = {}
    for region in sorted(region_sizes):
        entries: list[SlotAssignment] = []
        free_nodes = [
            k for k in range(region_sizes[region]) if (region, k) not in pinned
        ]
        for k in range(region_sizes[region]):
            if (region, k) in pinned:
                slot, sub = pin_channel[(region, k)]
                entries.append(
                    SlotAssignment(slot, sub, NodeId(region, k, NodeKind.SOURCE), True)
                )
        if free_nodes:
            if len(pool) < len(free_nodes):
                raise InfeasibleScheduleError(
                    f"region {region} has {len(free_nodes)} unpinned sources but only "
                    f"{len(pool)} shared slots remain in a {length}-slot frame"
                )
            for idx, slot in enumerate(pool):
                node = free_nodes[idx % len(free_nodes)]
                entries.append(
                    SlotAssignment(slot, 0, NodeId(region, node, NodeKind.SOURCE), False)
                )
        entries.sort(key=lambda e: (e.slot, e.subchannel, e.node.sort_key()))
        schedules[region] = SlotSchedule(
            region=region, frame_len=length, entries=tuple(entries)
        )
    return schedules


def assign_channels(
    sets: Mapping[int, InterferenceSet],
    topology: NetworkTopology,
    frame_len: int | None = None,
) -> dict[int, SlotSchedule]:
    """Turn interference sets into per-region slot schedules.

    Raises :class:`InfeasibleScheduleError` if the pinned nodes cannot all
    receive exclusive channels, or if slot sharing would leave some source
    without any transmission opportunity.
    """
    region_sizes = {r.id: len(r.source_ids) for r in topology.regions}
    missing = set(region_sizes) - set(sets)
    if missing:
        raise ValueError(f"no interference set for regions {sorted(missing)}")
    return _assemble_schedules(
        region_sizes,
        pinned_nodes(sets),
        topology.radio.num_subchannels,
        frame_len,
    )


def assign_channels_probabilistic(
    matrix: PowerMatrix,
    radio: RadioParams,
    rng: np.random.Generator,
    frame_len: int | None = None,
) -> dict[int, SlotSchedule]:
    """Probabilistic variant: pin each foreign sensor with probability equal
    to its measured power over the region's linear interference tolerance.

    The ratio is formed in linear milliwatts and clamped to [0, 1], so a
    sensor above the tolerance is always pinned and a silent sensor never
    is. One independent draw is taken per (observer, sensor) pair; a sensor
    requested by any observer is pinned.
    """
    region_sizes: dict[int, int] = {}
    for j, k in matrix.sources:
        region_sizes[j] = max(region_sizes.get(j, 0), k + 1)
    for i in matrix.observers:
        region_sizes.setdefault(i, 0)

    pinned: set[tuple[int, int]] = set()
    for i in matrix.observers:
        thr_mw = channel.dbm_to_mw(matrix.delta_min[i] - radio.delta_thr_db)
        for j, k in matrix.sources:
            if j == i:
                continue
            ratio = min(1.0, channel.dbm_to_mw(matrix.power(i, j, k)) / thr_mw)
            if rng.random() < ratio:
                pinned.add((j, k))
    return _assemble_schedules(region_sizes, pinned, radio.num_subchannels, frame_len)


def format_schedule_grid(
    schedules: Mapping[int, SlotSchedule], topology: NetworkTopology
) -> str:
    """Plain-text grid: one row per region, one column per superframe slot.

    Pinned transmissions are marked with ``*``; an entry on a sub-channel
    above 0 carries a ``/c<n>`` suffix.
    """
    if not schedules:
        return "(empty schedule)\n"
    length = next(iter(schedules.values())).frame_len
    header = ["slot".ljust(10)] + [str(s).center(6) for s in range(length)]
    lines = ["".join(header)]
    for region_id in sorted(schedules):
        schedule = schedules[region_id]
        name = topology.region(region_id).name if region_id < topology.num_regions else f"RG{region_id + 1}"
        cells = {s: [] for s in range(length)}
        for entry in schedule.entries:
            text = topology.label_of(entry.node)
            if entry.pinned:
                text += "*"
            if entry.subchannel:
                text += f"/c{entry.subchannel}"
            cells[entry.slot].append(text)
        row = [name.ljust(10)] + [
            ",".join(cells[s]).center(6) if cells[s] else ".".center(6)
            for s in range(length)
        ]
        lines.append("".join(row))
    return "\n".join(lines) + "\n"


def schedule_csv_rows(
    schedules: Mapping[int, SlotSchedule], topology: NetworkTopology
) -> list[tuple]:
    """Rows (region, slot, subchannel, node, label, pinned) for CSV export."""
    rows = []
    for region_id in sorted(schedules):
        for entry in schedules[region_id].entries:
            rows.append(
                (
                    region_id,
                    entry.slot,
                    entry.subchannel,
                    entry.node.node,
                    topology.label_of(entry.node),
                    int(entry.pinned),
                )
            )
    return rows


def baseline_schedules(topology: NetworkTopology) -> dict[int, SlotSchedule]:
    """The plain one-slot-per-node TDMA superframe (no interference sets)."""
    region_sizes = {r.id: len(r.source_ids) for r in topology.regions}
    offsets = _region_block_offsets(region_sizes)
    total = sum(region_sizes.values())
    schedules = {}
    for region_id, size in region_sizes.items():
        entries = tuple(
            SlotAssignment(offsets[region_id] + k, 0, NodeId(region_id, k, NodeKind.SOURCE), False)
            for k in range(size)
        )
        schedules[region_id] = SlotSchedule(region=region_id, frame_len=total, entries=entries)
    return schedules
