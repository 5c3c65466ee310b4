"""Scenario files: the declarative experiment description format.

A scenario is a YAML mapping with a ``schema_version`` field declaring the
body area, coordinator position, radio parameters, per-region node
placements and the simulation/energy/analysis knobs. Two scenarios ship
with the package: ``reference`` (the three-region comparison setup) and
``golden`` (a fixed measurement table reproducing the worked
interference-list example).
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario content."""


@dataclass(frozen=True)
class RegionSpec:
    id: int
    name: str
    relays: tuple[tuple[float, float], ...]
    sources: tuple[tuple[float, float, str], ...]


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    area: tuple[float, float]
    coordinator: tuple[float, float]
    relay_range_m: float
    radio: dict[str, Any]
    sim: dict[str, Any]
    energy: dict[str, Any]
    analysis: dict[str, Any]
    regions: tuple[RegionSpec, ...]
    power_matrix: tuple[tuple[int, int, int, float], ...] = ()
    expected: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        """Plain mapping form, used for override handling and config dumps."""
        out: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "seed": self.seed,
            "area": {"width_m": self.area[0], "height_m": self.area[1]},
            "coordinator": {"x_m": self.coordinator[0], "y_m": self.coordinator[1]},
            "relay_range_m": self.relay_range_m,
            "radio": dict(self.radio),
            "sim": dict(self.sim),
            "energy": dict(self.energy),
            "analysis": dict(self.analysis),
            "regions": [
                {
                    "id": r.id,
                    "name": r.name,
                    "relays": [{"x_m": x, "y_m": y} for x, y in r.relays],
                    "sources": [
                        {"x_m": x, "y_m": y, "label": label} for x, y, label in r.sources
                    ],
                }
                for r in self.regions
            ],
        }
        if self.power_matrix:
            out["power_matrix"] = [list(row) for row in self.power_matrix]
        if self.expected:
            out["expected"] = copy.deepcopy(self.expected)
        return out


def _require(mapping: dict, key: str, context: str) -> Any:
    if key not in mapping:
        raise ScenarioError(f"missing required key '{key}' in {context}")
    return mapping[key]


def scenario_from_dict(raw: dict[str, Any]) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError("scenario root must be a mapping")
    version = _require(raw, "schema_version", "scenario")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")
    area = _require(raw, "area", "scenario")
    coord = _require(raw, "coordinator", "scenario")
    regions_raw = _require(raw, "regions", "scenario")
    if not regions_raw:
        raise ScenarioError("scenario declares no regions")

    regions = []
    for i, reg in enumerate(regions_raw):
        relays = tuple(
            (float(r["x_m"]), float(r["y_m"])) for r in _require(reg, "relays", f"region {i}")
        )
        sources = tuple(
            (float(s["x_m"]), float(s["y_m"]), str(s.get("label", k + 1)))
            for k, s in enumerate(_require(reg, "sources", f"region {i}"))
        )
        regions.append(
            RegionSpec(
                id=int(reg.get("id", i)),
                name=str(reg.get("name", f"RG{i + 1}")),
                relays=relays,
                sources=sources,
            )
        )

    matrix = tuple(
        (int(row[0]), int(row[1]), int(row[2]), float(row[3]))
        for row in raw.get("power_matrix", [])
    )
    return Scenario(
        name=str(raw.get("name", "unnamed")),
        seed=int(raw.get("seed", 0)),
        area=(float(area["width_m"]), float(area["height_m"])),
        coordinator=(float(coord["x_m"]), float(coord["y_m"])),
        relay_range_m=float(raw.get("relay_range_m", 0.5)),
        radio=dict(raw.get("radio", {})),
        sim=dict(raw.get("sim", {})),
        energy=dict(raw.get("energy", {})),
        analysis=dict(raw.get("analysis", {})),
        regions=tuple(regions),
        power_matrix=matrix,
        expected=dict(raw.get("expected", {})),
    )


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    raw = yaml.safe_load(text)
    return scenario_from_dict(raw)


def packaged_scenario_path(name: str) -> Path:
    """Filesystem path of a scenario shipped with the package."""
    ref = resources.files("dcaim").joinpath("scenarios", f"{name}.yaml")
    path = Path(str(ref))
    if not path.exists():
        raise ScenarioError(f"no packaged scenario named '{name}'")
    return path


def load_packaged(name: str) -> Scenario:
    return load_scenario(packaged_scenario_path(name))


def apply_overrides(scenario: Scenario, overrides: dict[str, Any]) -> Scenario:
    """Apply dotted-path overrides, e.g. ``{"radio.delta_thr_db": 6.0}``.

    Every override path must already exist in the scenario mapping; unknown
    keys are rejected so typos never silently change nothing.
    """
    data = scenario.to_dict()
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        target: Any = data
        for part in parts[:-1]:
            if isinstance(target, list):
                try:
                    target = target[int(part)]
                except (ValueError, IndexError):
                    raise ScenarioError(f"override path '{dotted}' does not exist") from None
            elif isinstance(target, dict) and part in target:
                target = target[part]
            else:
                raise ScenarioError(f"override path '{dotted}' does not exist")
        leaf = parts[-1]
        if isinstance(target, dict) and leaf in target:
            target[leaf] = value
        else:
            raise ScenarioError(f"override path '{dotted}' does not exist")
    return scenario_from_dict(data)


def parse_override(text: str) -> tuple[str, Any]:
    """Parse one ``key=value`` override; the value is YAML-typed."""
    if "=" not in text:
        raise ScenarioError(f"override '{text}' is not of the form key=value")
    key, _, value = text.partition("=")
    key = key.strip()
    if not key:
        raise ScenarioError(f"override '{text}' has an empty key")
    return key, yaml.safe_load(value)


def dump_effective_config(scenario: Scenario, run_params: dict[str, Any]) -> str:
    """Deterministic YAML dump of the fully resolved configuration."""
    payload = {"run": dict(sorted(run_params.items())), "scenario": scenario.to_dict()}
    return yaml.safe_dump(payload, sort_keys=True)
