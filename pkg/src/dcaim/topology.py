"""WBAN layout: coordinator, relay regions, node identities, radio parameters.

A network is a set of relay regions placed on a 2-D body area. Each region
holds relay nodes and source sensors; every source must sit within the
communication radius of at least one relay of its region. Topologies are
immutable after construction and safe to share across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from dcaim.scenario import Scenario


class TopologyError(ValueError):
    """Structural violation in a network description."""


class NodeKind(Enum):
    SOURCE = "source"
    RELAY = "relay"
    COORDINATOR = "coordinator"


@dataclass(frozen=True)
class NodeId:
    """(region, index-within-region, kind) triple identifying one node."""

    region: int
    node: int
    kind: NodeKind = NodeKind.SOURCE

    def sort_key(self) -> tuple[int, int, str]:
        return (self.region, self.node, self.kind.value)

    def __str__(self) -> str:
        if self.kind is NodeKind.COORDINATOR:
            return "C"
        prefix = "S" if self.kind is NodeKind.SOURCE else "R"
        return f"{prefix}{self.region}.{self.node}"


#: The single sink node every relay forwards to.
COORDINATOR = NodeId(region=-1, node=0, kind=NodeKind.COORDINATOR)


@dataclass(frozen=True)
class RadioParams:
    """Radio-level constants shared by every node except the coordinator.

    ``delta_thr_db`` is the margin subtracted from a region's weakest own
    received power when deciding which foreign sensors count as interferers.
    """

    tx_power_dbm: float = -10.0
    sensitivity_dbm: float = -84.7
    noise_floor_dbm: float = -102.0
    data_rate_bps: float = 250_000.0
    base_frequency_hz: float = 2.4e9
    path_loss_exponent: float = 4.22
    num_subchannels: int = 8
    ref_distance_m: float = 0.1
    pl_ref_db: float = 35.2
    shadowing_sigma_db: float = 6.0
    delta_thr_db: float = 10.0

    def __post_init__(self) -> None:
        if not self.sensitivity_dbm > self.noise_floor_dbm:
            raise ValueError("sensitivity_dbm must exceed noise_floor_dbm")
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be positive")
        if self.num_subchannels < 1:
            raise ValueError("num_subchannels must be at least 1")
        if self.data_rate_bps <= 0:
            raise ValueError("data_rate_bps must be positive")
        if self.ref_distance_m <= 0:
            raise ValueError("ref_distance_m must be positive")
        if self.shadowing_sigma_db < 0:
            raise ValueError("shadowing_sigma_db must be non-negative")
        if self.delta_thr_db < 0:
            raise ValueError("delta_thr_db must be non-negative")


def default_radio_params() -> RadioParams:
    """Radio defaults for the reference simulation setup."""
    return RadioParams()


@dataclass(frozen=True)
class RelayRegion:
    """One relay region: its relays, sources, positions and display labels."""

    id: int
    relay_ids: tuple[NodeId, ...]
    source_ids: tuple[NodeId, ...]
    positions: dict[NodeId, tuple[float, float]]
    labels: dict[NodeId, str] = field(default_factory=dict)
    name: str = ""

    @property
    def observer(self) -> NodeId:
        """The relay that performs interference measurements for the region."""
        return self.relay_ids[0]


@dataclass(frozen=True)
class NetworkTopology:
    regions: tuple[RelayRegion, ...]
    coordinator_pos: tuple[float, float]
    area: tuple[float, float]
    radio: RadioParams
    relay_range_m: float = 0.5

    def __post_init__(self) -> None:
        ids = [COORDINATOR] + [
            node
            for region in self.regions
            for node in (*region.relay_ids, *region.source_ids)
        ]
        if len(ids) != len(set(ids)):
            seen: set[NodeId] = set()
            dup = next(n for n in ids if n in seen or seen.add(n))
            raise TopologyError(f"duplicate node {dup}")
        for idx, region in enumerate(self.regions):
            if region.id != idx:
                raise TopologyError(
                    f"region ids must be contiguous from 0, got {region.id} at position {idx}"
                )
        positions: dict[NodeId, tuple[float, float]] = {COORDINATOR: self.coordinator_pos}
        labels: dict[NodeId, str] = {COORDINATOR: "C"}
        for region in self.regions:
            positions.update(region.positions)
            labels.update(region.labels)
        object.__setattr__(self, "_positions", positions)
        object.__setattr__(self, "_labels", labels)
        order = self.sources() + self.relays() + [COORDINATOR]
        object.__setattr__(self, "_index", {node: i for i, node in enumerate(order)})
        object.__setattr__(self, "_node_order", order)

    @property
    def num_regions(self) -> int:
        return len(self.regions)

    def region(self, region_id: int) -> RelayRegion:
        return self.regions[region_id]

    def sources(self) -> list[NodeId]:
        return [s for region in self.regions for s in region.source_ids]

    def relays(self) -> list[NodeId]:
        return [r for region in self.regions for r in region.relay_ids]

    def all_nodes(self) -> list[NodeId]:
        return list(self._node_order)

    def global_index(self, node: NodeId) -> int:
        """Stable dense index over sources, then relays, then coordinator."""
        return self._index[node]

    def resolve(self, node: NodeId) -> NodeId:
        if node not in self._positions:
            raise TopologyError(f"unknown node {node}")
        return node

    def position_of(self, node: NodeId) -> tuple[float, float]:
        try:
            return self._positions[node]
        except KeyError:
            raise TopologyError(f"unknown node {node}") from None

    def label_of(self, node: NodeId) -> str:
        return self._labels.get(node, str(node))

    def distance(self, a: NodeId, b: NodeId) -> float:
        xa, ya = self.position_of(a)
        xb, yb = self.position_of(b)
        return math.hypot(xa - xb, ya - yb)


def build_topology(scenario: Scenario) -> NetworkTopology:
    """Construct and validate a :class:`NetworkTopology` from a scenario.

    Raises :class:`TopologyError` naming the offending node whenever a
    structural assumption is violated: a source out of reach of every relay
    in its region, a duplicate node identity, or a position outside the
    declared body area.
    """
    radio = RadioParams(**scenario.radio)
    area = (scenario.area[0], scenario.area[1])

    def check_bounds(node: NodeId, pos: tuple[float, float]) -> None:
        x, y = pos
        if not (math.isfinite(x) and math.isfinite(y)):
            raise TopologyError(f"node {node} has a non-finite position {pos}")
        if not (0.0 <= x <= area[0] and 0.0 <= y <= area[1]):
            raise TopologyError(f"node {node} at {pos} lies outside the {area} area")

    regions: list[RelayRegion] = []
    for idx, spec in enumerate(scenario.regions):
        if spec.id != idx:
            raise TopologyError(f"region ids must be contiguous from 0, got {spec.id} at position {idx}")
        if not spec.relays:
            raise TopologyError(f"region {spec.id} declares no relays")
        if not spec.sources:
            raise TopologyError(f"region {spec.id} declares no sources")
        positions: dict[NodeId, tuple[float, float]] = {}
        labels: dict[NodeId, str] = {}
        relay_ids = []
        for k, (x, y) in enumerate(spec.relays):
            node = NodeId(spec.id, k, NodeKind.RELAY)
            check_bounds(node, (x, y))
            positions[node] = (x, y)
            labels[node] = f"R{spec.id}.{k}"
            relay_ids.append(node)
        source_ids = []
        for k, (x, y, label) in enumerate(spec.sources):
            node = NodeId(spec.id, k, NodeKind.SOURCE)
            check_bounds(node, (x, y))
            positions[node] = (x, y)
            labels[node] = label if label else str(k + 1)
            source_ids.append(node)
        regions.append(
            RelayRegion(
                id=spec.id,
                relay_ids=tuple(relay_ids),
                source_ids=tuple(source_ids),
                positions=positions,
                labels=labels,
                name=spec.name or f"RG{spec.id + 1}",
            )
        )

    check_bounds(COORDINATOR, scenario.coordinator)
    topology = NetworkTopology(
        regions=tuple(regions),
        coordinator_pos=scenario.coordinator,
        area=area,
        radio=radio,
        relay_range_m=scenario.relay_range_m,
    )

    # Every source must be reachable by at least one relay of its own region.
    for region in topology.regions:
        for source in region.source_ids:
            nearest = min(topology.distance(source, relay) for relay in region.relay_ids)
            if nearest > topology.relay_range_m:
                raise TopologyError(
                    f"source {source} is {nearest:.3f} m from the nearest relay of "
                    f"region {region.id}, beyond the {topology.relay_range_m} m relay range"
                )
    return topology
