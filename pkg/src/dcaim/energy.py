"""Per-node energy accounting over executed frame traces.

Linear radio model: a transmission costs (radiated power + transmit circuit
power) times the packet airtime, a reception costs the receive circuit
power times the airtime, and an owned-but-unused slot costs the idle
listening power for the slot. The coordinator's consumption is tracked but
excluded from the WBAN total, since its budget is treated as unconstrained.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from dcaim.macsim import FrameTrace
from dcaim.topology import COORDINATOR, NodeId, RadioParams


class SequencingError(RuntimeError):
    """Frames must be charged in order, exactly once each."""


@dataclass(frozen=True)
class EnergyModel:
    """Cost parameters of the linear radio model.

    The receive charge assumes a duty-cycled receiver that wakes only for
    its expected reception windows; a receive circuit drawing as much as the
    transmit circuit would make any relaying scheme pay roughly twice per
    delivered packet and bury the retransmission effect the comparison is
    about.
    """

    radiated_mw: float
    circuit_tx_mw: float = 3.0
    circuit_rx_mw: float = 0.5
    idle_mw: float = 0.1
    slot_duration_s: float = 0.005

    @classmethod
    def from_radio(
        cls,
        radio: RadioParams,
        slot_duration_s: float = 0.005,
        circuit_tx_mw: float = 3.0,
        circuit_rx_mw: float = 0.5,
        idle_mw: float = 0.1,
    ) -> "EnergyModel":
        return cls(
            radiated_mw=10.0 ** (radio.tx_power_dbm / 10.0),
            circuit_tx_mw=circuit_tx_mw,
            circuit_rx_mw=circuit_rx_mw,
            idle_mw=idle_mw,
            slot_duration_s=slot_duration_s,
        )

    @property
    def tx_energy_j(self) -> float:
        """Joules for one transmitted packet (one slot of airtime)."""
        return (self.radiated_mw + self.circuit_tx_mw) * 1e-3 * self.slot_duration_s

    @property
    def rx_energy_j(self) -> float:
        return self.circuit_rx_mw * 1e-3 * self.slot_duration_s

    @property
    def idle_energy_j(self) -> float:
        return self.idle_mw * 1e-3 * self.slot_duration_s


@dataclass
class EnergyLedger:
    """Cumulative joules per node plus a per-frame WBAN time series."""

    node_j: dict[NodeId, float] = field(default_factory=dict)
    rows: list[tuple[int, float, dict[NodeId, float], float]] = field(default_factory=list)
    next_frame: int = 0
    time_s: float = 0.0

    def wban_total_j(self) -> float:
        return sum(j for node, j in self.node_j.items() if node != COORDINATOR)

    def node_total_j(self, node: NodeId) -> float:
        return self.node_j.get(node, 0.0)


def charge_frame(ledger: EnergyLedger, trace: FrameTrace, model: EnergyModel) -> EnergyLedger:
    """Charge one executed frame onto the ledger and append a snapshot row.

    Every transmission charges its transmitter and its intended receiver;
    retransmissions appear as further transmissions and charge again. Idle
    listening is charged per owned-but-unused slot as reported by the trace.
    """
    if trace.frame_index != ledger.next_frame:
        raise SequencingError(
            f"expected frame {ledger.next_frame}, got {trace.frame_index}"
        )
    for t in trace.transmissions:
        ledger.node_j[t.tx] = ledger.node_j.get(t.tx, 0.0) + model.tx_energy_j
        ledger.node_j[t.rx] = ledger.node_j.get(t.rx, 0.0) + model.rx_energy_j
    for node, count in trace.idle_slots.items():
        ledger.node_j[node] = ledger.node_j.get(node, 0.0) + count * model.idle_energy_j
    ledger.next_frame += 1
    ledger.time_s += trace.n_slots * model.slot_duration_s
    ledger.rows.append(
        (trace.frame_index, ledger.time_s, dict(ledger.node_j), ledger.wban_total_j())
    )
    return ledger


def ledger_csv_rows(ledger: EnergyLedger) -> list[tuple[int, float, str, float, float]]:
    """Rows (frame, time_s, node, cumulative_j, wban_cumulative_j), nodes sorted."""
    rows = []
    for frame, time_s, node_j, wban_j in ledger.rows:
        for node in sorted(node_j, key=NodeId.sort_key):
            rows.append((frame, time_s, str(node), node_j[node], wban_j))
    return rows
