"""Relay-assisted WBAN simulator with dynamic channel allocation.

The package models a single wireless body area network divided into relay
regions, measures cross-region interference over a log-normal shadowing
channel, assigns orthogonal slots to the sensors that interfere the most,
and compares the resulting scheme against opportunistic-relaying and
single-hop baselines for SINR and energy. A Monte Carlo module checks the
outage-probability and reuse-factor orderings of the probabilistic pinning
variant.
"""

from dcaim.analysis import (
    Lemma1Report,
    OutageEstimate,
    ReuseEstimate,
    estimate_outage,
    estimate_reuse,
    lemma1_check,
)
from dcaim.assignment import (
    IncompleteMatrixError,
    InfeasibleScheduleError,
    InterferenceList,
    InterferenceSet,
    PowerMatrix,
    SlotSchedule,
    assign_channels,
    assign_channels_probabilistic,
    build_interference_list,
    measurement_round,
    merge_interference_sets,
)
from dcaim.channel import LinkBudget, SinrSample, path_loss_db, received_power_dbm, sinr_at
from dcaim.energy import EnergyLedger, EnergyModel, charge_frame
from dcaim.harness import RunConfig, run_compare, run_golden, run_lemma1
from dcaim.macsim import (
    FrameTrace,
    Outcome,
    SchemeKind,
    SimParams,
    Transmission,
    contention_access,
    run_frames,
)
from dcaim.scenario import Scenario, ScenarioError, load_packaged, load_scenario
from dcaim.topology import (
    COORDINATOR,
    NetworkTopology,
    NodeId,
    NodeKind,
    RadioParams,
    RelayRegion,
    TopologyError,
    build_topology,
    default_radio_params,
)

__version__ = "0.1.0"

__all__ = [
    "COORDINATOR",
    "EnergyLedger",
    "EnergyModel",
    "FrameTrace",
    "IncompleteMatrixError",
    "InfeasibleScheduleError",
    "InterferenceList",
    "InterferenceSet",
    "Lemma1Report",
    "LinkBudget",
    "NetworkTopology",
    "NodeId",
    "NodeKind",
    "Outcome",
    "OutageEstimate",
    "PowerMatrix",
    "RadioParams",
    "RelayRegion",
    "ReuseEstimate",
    "RunConfig",
    "Scenario",
    "ScenarioError",
    "SchemeKind",
    "SimParams",
    "SinrSample",
    "SlotSchedule",
    "TopologyError",
    "Transmission",
    "assign_channels",
    "assign_channels_probabilistic",
    "build_interference_list",
    "build_topology",
    "charge_frame",
    "contention_access",
    "default_radio_params",
    "estimate_outage",
    "estimate_reuse",
    "lemma1_check",
    "load_packaged",
    "load_scenario",
    "measurement_round",
    "merge_interference_sets",
    "path_loss_db",
    "received_power_dbm",
    "run_compare",
    "run_frames",
    "run_golden",
    "run_lemma1",
    "sinr_at",
]
