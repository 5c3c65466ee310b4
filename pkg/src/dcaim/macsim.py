"""Frame-by-frame MAC simulator for the three access schemes.

Each frame is a superframe of uplink slots followed by a forwarding phase.
Under the scheduled scheme sources transmit in their assigned slots; under
the opportunistic-relaying baseline sources contend with slotted CSMA/CA
toward the instantaneously best relay; under the single-hop baseline they
contend directly toward the coordinator across the whole frame. Relays that
hold delivered packets contend among themselves during the forwarding phase
to reach the coordinator (not used by the single-hop scheme).

Channel draws are keyed by (channel seed, frame index) independently of the
scheme's own random stream, so a comparison across schemes sees identical
shadowing realizations where the geometry overlaps. Shadowing is redrawn
per slot: block fading at slot granularity.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from dcaim import kernels
from dcaim.assignment import SlotSchedule
from dcaim.channel import SinrSample, dbm_to_mw, sinr_from_powers
from dcaim.topology import COORDINATOR, NetworkTopology, NodeId, NodeKind


class SchemeKind(Enum):
    DCAIM = "dcaim"
    OR_CSMA_TWO_HOP = "or_csma_two_hop"
    SINGLE_HOP_DIRECT = "single_hop_direct"


class Outcome(Enum):
    DELIVERED = "delivered"
    COLLIDED = "collided"
    BELOW_SENSITIVITY = "below_sensitivity"
    RETRANSMIT_SCHEDULED = "retransmit_scheduled"


@dataclass(frozen=True)
class SimParams:
    slot_duration_s: float = 0.005
    demod_threshold_db: float = 10.0
    max_retries: int = 3
    cw_min: int = 8
    cw_max: int = 64
    forwarding_slots_per_region: int = 4


@dataclass(frozen=True)
class Transmission:
    slot: int
    subchannel: int
    tx: NodeId
    rx: NodeId
    sample: SinrSample
    outcome: Outcome
    attempt: int


@dataclass(frozen=True)
class FrameTrace:
    frame_index: int
    n_slots: int
    transmissions: tuple[Transmission, ...]
    idle_slots: dict[NodeId, int] = field(default_factory=dict)

    def transmitters_by_slot(self) -> dict[tuple[int, int], frozenset[NodeId]]:
        out: dict[tuple[int, int], set[NodeId]] = {}
        for t in self.transmissions:
            out.setdefault((t.slot, t.subchannel), set()).add(t.tx)
        return {key: frozenset(nodes) for key, nodes in out.items()}


class _Packet:
    __slots__ = ("attempts",)

    def __init__(self) -> None:
        self.attempts = 0


def contention_access(
    contenders: Iterable[NodeId],
    slot_budget: int,
    rng: np.random.Generator,
    cw_min: int = 8,
    cw_max: int = 64,
) -> dict[int, tuple[NodeId, ...]]:
    """Slotted CSMA/CA backoff over a bounded slot budget.

    Every contender picks a backoff slot uniformly inside its contention
    window; contenders that pick the same slot collide and re-enter with a
    doubled window (capped at ``cw_max``) starting after the collision.
    Contenders whose pick falls beyond the budget stay silent. Returns the
    transmitter set per slot.
    """
    if slot_budget < 1:
        raise ValueError("slot_budget must be at least 1")
    pending: dict[NodeId, tuple[int, int]] = {}
    for node in sorted(set(contenders), key=NodeId.sort_key):
        pending[node] = (int(rng.integers(0, cw_min)), cw_min)
    if not pending:
        raise ValueError("contenders must be non-empty")
    out: dict[int, tuple[NodeId, ...]] = {}
    for slot in range(slot_budget):
        txs = sorted((n for n, (p, _) in pending.items() if p == slot), key=NodeId.sort_key)
        if not txs:
            continue
        out[slot] = tuple(txs)
        if len(txs) == 1:
            del pending[txs[0]]
        else:
            for node in txs:
                window = min(2 * pending[node][1], cw_max)
                pending[node] = (slot + 1 + int(rng.integers(0, window)), window)
    return out


def _frame_rx_dbm(
    topology: NetworkTopology,
    det_loss: np.ndarray,
    n_slots: int,
    channel_seed: int,
    frame: int,
) -> np.ndarray:
    """Received-power tensor [slot, tx, rx] in dBm for one frame."""
    sigma = topology.radio.shadowing_sigma_db
    n = det_loss.shape[0]
    base = topology.radio.tx_power_dbm - det_loss
    if sigma == 0:
        return np.broadcast_to(base, (n_slots, n, n)).copy()
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([channel_seed, frame])))
    shadow = gen.normal(0.0, sigma, size=(n_slots, n, n))
    return base[None, :, :] - shadow


def _deterministic_loss_matrix(topology: NetworkTopology) -> np.ndarray:
    nodes = topology.all_nodes()
    pos = np.array([topology.position_of(n) for n in nodes])
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    # Coincident nodes would blow up the log-distance model; clamp to 1 um.
    dist = np.maximum(dist, 1e-6)
    radio = topology.radio
    return kernels.path_loss_db(
        dist, radio.pl_ref_db, radio.path_loss_exponent, radio.ref_distance_m, 0.0
    )


def run_frames(
    topology: NetworkTopology,
    scheme: SchemeKind,
    schedule: Mapping[int, SlotSchedule] | None,
    n_frames: int,
    rng: np.random.Generator,
    params: SimParams | None = None,
    channel_seed: int | None = None,
) -> list[FrameTrace]:
    """Simulate ``n_frames`` superframes under one access scheme.

    The scheduled scheme requires ``schedule``; the baselines ignore it.
    Pass the same ``channel_seed`` to several runs to evaluate different
    schemes against identical shadowing realizations.
    """
    params = params or SimParams()
    if scheme is SchemeKind.DCAIM and schedule is None:
        raise ValueError("the scheduled scheme requires a slot schedule")
    if n_frames <= 0:
        return []
    if channel_seed is None:
        channel_seed = int(rng.integers(0, 2**63))

    radio = topology.radio
    det_loss = _deterministic_loss_matrix(topology)
    index = {node: topology.global_index(node) for node in topology.all_nodes()}
    sources = sorted(topology.sources(), key=NodeId.sort_key)
    relay_rx = {r.id: r.observer for r in topology.regions}
    relay_indices = [index[r] for r in topology.relays()]
    relay_list = topology.relays()

    if scheme is SchemeKind.DCAIM:
        uplink_len = next(iter(schedule.values())).frame_len
        owned: dict[NodeId, list[tuple[int, int]]] = {s: [] for s in sources}
        for region_schedule in schedule.values():
            for entry in region_schedule.entries:
                owned[entry.node].append((entry.slot, entry.subchannel))
        for slots in owned.values():
            slots.sort()
        by_channel: dict[tuple[int, int], list[NodeId]] = {}
        for node, slots in owned.items():
            for chan in slots:
                by_channel.setdefault(chan, []).append(node)
    else:
        uplink_len = len(sources)

    fwd_len = params.forwarding_slots_per_region * topology.num_regions
    n_slots = uplink_len + fwd_len

    packets: dict[NodeId, _Packet | None] = {s: None for s in sources}
    held: dict[NodeId, int] = {r: 0 for r in relay_list}
    fwd_attempts: dict[NodeId, int] = {r: 0 for r in relay_list}

    def evaluate(
        slot: int,
        subchannel: int,
        groups: list[tuple[NodeId, NodeId]],
        rx_dbm: np.ndarray,
    ) -> list[tuple[NodeId, NodeId, SinrSample, bool]]:
        """PHY outcome for every (tx, rx) pair transmitting concurrently."""
        results = []
        for tx, rx in groups:
            signal = float(rx_dbm[slot, index[tx], index[rx]])
            interferers = [
                float(rx_dbm[slot, index[other], index[rx]])
                for other, _ in groups
                if other != tx
            ]
            sinr_db, interference_mw, noise_mw = sinr_from_powers(
                signal, interferers, radio.noise_floor_dbm
            )
            ok = signal >= radio.sensitivity_dbm and sinr_db >= params.demod_threshold_db
            sample = SinrSample(
                rx=rx,
                signal_dbm=signal,
                interference_mw=interference_mw,
                noise_mw=noise_mw,
                sinr_db=sinr_db,
            )
            results.append((tx, rx, sample, ok))
        return results

    traces: list[FrameTrace] = []
    for frame in range(n_frames):
        rx_dbm = _frame_rx_dbm(topology, det_loss, n_slots, channel_seed, frame)
        transmissions: list[Transmission] = []
        tx_counts: dict[NodeId, int] = {}

        for node in sources:
            if packets[node] is None:
                packets[node] = _Packet()

        def conclude(tx: NodeId, rx: NodeId, sample: SinrSample, ok: bool, slot: int, sub: int) -> None:
            packet = packets[tx]
            packet.attempts += 1
            tx_counts[tx] = tx_counts.get(tx, 0) + 1
            if ok:
                outcome = Outcome.DELIVERED
                packets[tx] = None
                receiver = rx if rx.kind is NodeKind.RELAY else None
                if receiver is not None:
                    held[receiver] += 1
            else:
                reason = (
                    Outcome.BELOW_SENSITIVITY
                    if sample.signal_dbm < radio.sensitivity_dbm
                    else Outcome.COLLIDED
                )
                if packet.attempts > params.max_retries:
                    outcome = reason
                    packets[tx] = None
                else:
                    outcome = Outcome.RETRANSMIT_SCHEDULED
            transmissions.append(
                Transmission(slot, sub, tx, rx, sample, outcome, packet.attempts)
            )

        if scheme is SchemeKind.DCAIM:
            for slot in range(uplink_len):
                for sub in range(radio.num_subchannels):
                    nodes = by_channel.get((slot, sub))
                    if not nodes:
                        continue
                    groups = [
                        (node, relay_rx[node.region])
                        for node in nodes
                        if packets[node] is not None
                    ]
                    for tx, rx, sample, ok in evaluate(slot, sub, groups, rx_dbm):
                        conclude(tx, rx, sample, ok, slot, sub)
        else:
            # Slotted CSMA/CA with acknowledgment-driven retries: a failed
            # attempt (collision or missed delivery) re-enters backoff with
            # a doubled window until the packet is delivered or dropped.
            budget = n_slots if scheme is SchemeKind.SINGLE_HOP_DIRECT else uplink_len
            backoff: dict[NodeId, tuple[int, int]] = {}
            for node in sources:
                if packets[node] is not None:
                    backoff[node] = (int(rng.integers(0, params.cw_min)), params.cw_min)
            for slot in range(budget):
                active = sorted(
                    (n for n, (pick, _) in backoff.items() if pick == slot),
                    key=NodeId.sort_key,
                )
                if not active:
                    continue
                groups = []
                for node in active:
                    if scheme is SchemeKind.SINGLE_HOP_DIRECT:
                        rx = COORDINATOR
                    else:
                        row = rx_dbm[slot, index[node], relay_indices]
                        rx = relay_list[int(np.argmax(row))]
                    groups.append((node, rx))
                collided_slot = len(groups) > 1
                for tx, rx, sample, ok in evaluate(slot, 0, groups, rx_dbm):
                    conclude(tx, rx, sample, ok, slot, 0)
                    if packets[tx] is None:
                        del backoff[tx]
                    else:
                        # Collisions double the window; a solo miss is a
                        # plain retransmission and re-runs backoff fresh.
                        if collided_slot:
                            window = min(2 * backoff[tx][1], params.cw_max)
                        else:
                            window = params.cw_min
                        backoff[tx] = (slot + 1 + int(rng.integers(0, window)), window)

        if scheme is not SchemeKind.SINGLE_HOP_DIRECT:
            forwarders = [r for r in relay_list if held[r] > 0]
            if forwarders and fwd_len > 0:
                access = contention_access(
                    forwarders, fwd_len, rng, params.cw_min, params.cw_max
                )
                for local_slot in sorted(access):
                    slot = uplink_len + local_slot
                    active = [r for r in access[local_slot] if held[r] > 0]
                    groups = [(r, COORDINATOR) for r in active]
                    for tx, rx, sample, ok in evaluate(slot, 0, groups, rx_dbm):
                        fwd_attempts[tx] += 1
                        attempt = fwd_attempts[tx]
                        if ok:
                            outcome = Outcome.DELIVERED
                            held[tx] = 0
                            fwd_attempts[tx] = 0
                        else:
                            reason = (
                                Outcome.BELOW_SENSITIVITY
                                if sample.signal_dbm < radio.sensitivity_dbm
                                else Outcome.COLLIDED
                            )
                            if attempt > params.max_retries:
                                outcome = reason
                                held[tx] = 0
                                fwd_attempts[tx] = 0
                            else:
                                outcome = Outcome.RETRANSMIT_SCHEDULED
                        transmissions.append(
                            Transmission(slot, 0, tx, rx, sample, outcome, attempt)
                        )

        idle: dict[NodeId, int] = {}
        if scheme is SchemeKind.DCAIM:
            for node, slots in owned.items():
                unused = len(slots) - tx_counts.get(node, 0)
                if unused > 0:
                    idle[node] = unused
        traces.append(
            FrameTrace(
                frame_index=frame,
                n_slots=n_slots,
                transmissions=tuple(transmissions),
                idle_slots=idle,
            )
        )
    return traces


def mean_sinr_by_node(
    traces: Sequence[FrameTrace], kind: NodeKind = NodeKind.SOURCE
) -> dict[NodeId, tuple[float, int]]:
    """Per-node mean SINR in dB over all transmissions of the given kind."""
    sums: dict[NodeId, float] = {}
    counts: dict[NodeId, int] = {}
    for trace in traces:
        for t in trace.transmissions:
            if t.tx.kind is kind:
                sums[t.tx] = sums.get(t.tx, 0.0) + t.sample.sinr_db
                counts[t.tx] = counts.get(t.tx, 0) + 1
    return {node: (sums[node] / counts[node], counts[node]) for node in sums}


def write_trace_csv(traces: Sequence[FrameTrace], path: str | Path) -> None:
    """Stream traces to CSV with one row per transmission."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["frame", "slot", "tx_region", "tx_node", "rx_node", "sinr_db", "outcome"]
        )
        for trace in traces:
            for t in trace.transmissions:
                writer.writerow(
                    [
                        trace.frame_index,
                        t.slot,
                        t.tx.region,
                        t.tx.node,
                        str(t.rx),
                        repr(t.sample.sinr_db),
                        t.outcome.value,
                    ]
                )
