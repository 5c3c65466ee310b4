"""Shared fixtures and scenario builders for the test suite."""
from __future__ import annotations

import pytest

from dcaim import scenario as scenario_mod
from dcaim.scenario import Scenario, scenario_from_dict
from dcaim.topology import NetworkTopology, build_topology


def make_scenario(
    regions: list[dict],
    sigma: float = 0.0,
    area: tuple[float, float] = (1.0, 2.0),
    coordinator: tuple[float, float] = (0.5, 1.0),
    relay_range_m: float = 0.5,
    radio_overrides: dict | None = None,
    sim_overrides: dict | None = None,
    seed: int = 1,
) -> Scenario:
    """Build a scenario from terse region dicts.

    Each region dict: {"relays": [(x, y), ...], "sources": [(x, y), ...]}.
    """
    radio = {
        "pl_ref_db": 35.2,
        "shadowing_sigma_db": sigma,
        "delta_thr_db": 10.0,
    }
    radio.update(radio_overrides or {})
    sim = dict(sim_overrides or {})
    raw = {
        "schema_version": 1,
        "name": "test",
        "seed": seed,
        "area": {"width_m": area[0], "height_m": area[1]},
        "coordinator": {"x_m": coordinator[0], "y_m": coordinator[1]},
        "relay_range_m": relay_range_m,
        "radio": radio,
        "sim": sim,
        "energy": {},
        "analysis": {},
        "regions": [
            {
                "id": i,
                "relays": [{"x_m": x, "y_m": y} for x, y in reg["relays"]],
                "sources": [{"x_m": x, "y_m": y} for x, y in reg["sources"]],
            }
            for i, reg in enumerate(regions)
        ],
    }
    return scenario_from_dict(raw)


def two_region_topology(sigma: float = 0.0, **kwargs) -> NetworkTopology:
    """Two single-source regions, symmetric about the coordinator."""
    scn = make_scenario(
        [
            {"relays": [(0.30, 1.0)], "sources": [(0.20, 1.0)]},
            {"relays": [(0.70, 1.0)], "sources": [(0.80, 1.0)]},
        ],
        sigma=sigma,
        **kwargs,
    )
    return build_topology(scn)


@pytest.fixture(scope="session")
def reference_scenario() -> Scenario:
    return scenario_mod.load_packaged("reference")


@pytest.fixture(scope="session")
def golden_scenario() -> Scenario:
    return scenario_mod.load_packaged("golden")


@pytest.fixture(scope="session")
def reference_topology(reference_scenario) -> NetworkTopology:
    return build_topology(reference_scenario)
