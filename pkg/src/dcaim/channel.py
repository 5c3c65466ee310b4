"""Link-level channel model: log-normal shadowing path loss and SINR.

All functions are pure given an explicit topology and random stream, so
callers may parallelize across independent streams. Shadowing is drawn as a
zero-mean normal in the dB domain (log-normal in linear power); passing a
zero sigma makes every result deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from dcaim.topology import NetworkTopology, NodeId, RadioParams


@dataclass(frozen=True)
class LinkBudget:
    tx: NodeId
    rx: NodeId
    distance_m: float
    path_loss_db: float
    rx_power_dbm: float
    shadowing_draw_db: float


@dataclass(frozen=True)
class SinrSample:
    rx: NodeId
    signal_dbm: float
    interference_mw: float
    noise_mw: float
    sinr_db: float


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * math.log10(mw)


def path_loss_db(
    distance_m: float, radio: RadioParams, rng: np.random.Generator | None = None
) -> float:
    """Path loss in dB at ``distance_m``, shadowing drawn from ``rng``.

    With ``shadowing_sigma_db == 0`` the result is the deterministic
    log-distance value and no random stream is needed.
    """
    if distance_m <= 0:
        raise ValueError(f"distance_m must be positive, got {distance_m}")
    shadow = _draw_shadow(radio, rng)
    return (
        radio.pl_ref_db
        + 10.0 * radio.path_loss_exponent * math.log10(distance_m / radio.ref_distance_m)
        + shadow
    )


def _draw_shadow(radio: RadioParams, rng: np.random.Generator | None) -> float:
    if radio.shadowing_sigma_db == 0:
        return 0.0
    if rng is None:
        raise ValueError("shadowing sigma is non-zero but no random stream was given")
    return float(rng.normal(0.0, radio.shadowing_sigma_db))


def link_budget(
    tx: NodeId,
    rx: NodeId,
    topology: NetworkTopology,
    rng: np.random.Generator | None = None,
) -> LinkBudget:
    """Full link record between two distinct nodes of the topology."""
    if tx == rx:
        raise ValueError(f"tx and rx are the same node {tx}")
    topology.resolve(tx)
    topology.resolve(rx)
    radio = topology.radio
    distance = topology.distance(tx, rx)
    shadow = _draw_shadow(radio, rng)
    loss = (
        radio.pl_ref_db
        + 10.0 * radio.path_loss_exponent * math.log10(distance / radio.ref_distance_m)
        + shadow
    )
    return LinkBudget(
        tx=tx,
        rx=rx,
        distance_m=distance,
        path_loss_db=loss,
        rx_power_dbm=radio.tx_power_dbm - loss,
        shadowing_draw_db=shadow,
    )


def received_power_dbm(
    tx: NodeId,
    rx: NodeId,
    topology: NetworkTopology,
    rng: np.random.Generator | None = None,
) -> float:
    """Received power at ``rx`` from ``tx``: transmit power minus path loss."""
    return link_budget(tx, rx, topology, rng).rx_power_dbm


def sinr_from_powers(
    signal_dbm: float, interferer_dbms: Iterable[float], noise_floor_dbm: float
) -> tuple[float, float, float]:
    """(sinr_db, interference_mw, noise_mw) from powers in dBm.

    Interference is summed in linear milliwatts; the ratio is taken in the
    linear domain and reported back in dB.
    """
    noise_mw = dbm_to_mw(noise_floor_dbm)
    interference_mw = sum(dbm_to_mw(p) for p in interferer_dbms)
    sinr_db = 10.0 * math.log10(dbm_to_mw(signal_dbm) / (interference_mw + noise_mw))
    return sinr_db, interference_mw, noise_mw


def sinr_at(
    rx: NodeId,
    signal_tx: NodeId,
    concurrent_txs: Iterable[NodeId],
    topology: NetworkTopology,
    rng: np.random.Generator | None = None,
) -> SinrSample:
    """SINR at ``rx`` for the signal from ``signal_tx``.

    Every member of ``concurrent_txs`` contributes interference; draws are
    taken in a fixed node order so a seeded stream reproduces bit-identical
    samples.
    """
    concurrent = sorted(set(concurrent_txs), key=NodeId.sort_key)
    if signal_tx in concurrent:
        raise ValueError(f"signal transmitter {signal_tx} also listed as an interferer")
    signal_dbm = received_power_dbm(signal_tx, rx, topology, rng)
    interferer_dbms = [received_power_dbm(node, rx, topology, rng) for node in concurrent]
    sinr_db, interference_mw, noise_mw = sinr_from_powers(
        signal_dbm, interferer_dbms, topology.radio.noise_floor_dbm
    )
    return SinrSample(
        rx=rx,
        signal_dbm=signal_dbm,
        interference_mw=interference_mw,
        noise_mw=noise_mw,
        sinr_db=sinr_db,
    )
