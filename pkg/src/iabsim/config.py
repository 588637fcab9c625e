"""Experiment configuration: YAML loading, defaults, validation, and
construction of simulator objects with physical units converted at the
boundary (dBm, dBi, GHz, MHz, Mbps, per-km2 densities, degrees)."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Any, Mapping

import yaml

from .channel import (
    FADING_KINDS,
    AntennaPattern,
    ChannelModel,
    FadingModel,
    PathLossParams,
)
from .geometry import DiskRegion, Point2D
from .network import DropModel, NodeParams, RadioConfig
from .optimizer import STOP_MODES, OptimizerConfig

SCENARIOS = (
    "symmetric-line",
    "symmetric-ring",
    "rate-cdf",
    "min-distance-sweep",
    "forbidden-area-sweep",
)


class ConfigError(Exception):
    """Invalid, unknown, or inconsistent configuration input."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def thermal_noise_density_w_per_hz(noise_figure_db: float) -> float:
    """Receiver noise density from thermal floor -174 dBm/Hz plus a figure."""
    return 10.0 ** ((-174.0 + noise_figure_db) / 10.0) / 1000.0


# All legal keys with global fallback values. A None means "no global
# default": either a scenario default below fills it in or the scenario
# does not use the field.
GLOBAL_DEFAULTS: dict[str, Any] = {
    "scenario": None,
    "seed": 1,
    "trials": 200,
    "out": "results",
    "parallelism": 1,
    # Manifest stamps; accepted on load so a manifest is itself a valid
    # config, but never interpreted.
    "artifact_version": None,
    "package": None,
    "area": {"radius_m": 707.1},
    "sweep": {"grid": None},
    "densities": {
        "blockage_per_km2": 500.0,
        "child_per_km2": None,
        "ue_per_km2": [100.0],
    },
    "geometry": {
        "n_donors": 1,
        "n_children": None,
        "wall_length_m": 10.0,
        "s_values_m": [100.0, 400.0],
        "gains_dbi": [24.0, 28.0],
    },
    "radio": {
        "bandwidth_mhz": 1000.0,
        "beta": 0.5,
        "noise_figure_db": 7.0,
        "rate_threshold_mbps": 75.0,
    },
    "channel": {
        "carrier_ghz": 28.0,
        "pathloss_exponent_los": 2.0,
        "pathloss_exponent_nlos": 3.0,
        "fading": "nakagami",
        "m_los": 3.0,
        "m_nlos": 2.0,
        "inverse_distance_factor": False,
    },
    "nodes": {
        "donor_power_dbm": 24.0,
        "child_power_dbm": 24.0,
        "donor_gain_dbi": 24.0,
        "child_gain_dbi": 24.0,
        "donor_side_gain_dbi": -2.0,
        "child_side_gain_dbi": -2.0,
        "station_beamwidth_deg": 30.0,
        "ue_gain_dbi": 6.0,
        "ue_side_gain_dbi": -6.0,
        "ue_beamwidth_deg": 60.0,
    },
    "optimizer": {
        "n_iterations": 20,
        "mc_trials_per_candidate": 50,
        "max_resample_attempts": 10000,
        "stop_mode": "fixed-iterations",
        "window": 10,
    },
    "forbidden": {"n_disks": 5, "ring_radius_fraction": 0.5},
}

SCENARIO_DEFAULTS: dict[str, dict[str, Any]] = {
    "symmetric-line": {
        "sweep": {"grid": [50.0, 140.0, 230.0, 320.0, 410.0, 500.0, 590.0, 680.0]},
        "densities": {"ue_per_km2": [40.0]},
        "geometry": {"n_donors": 1, "n_children": 2},
    },
    "symmetric-ring": {
        "sweep": {"grid": [50.0, 140.0, 230.0, 320.0, 410.0, 500.0, 590.0, 680.0]},
        "densities": {"ue_per_km2": [25.0]},
        "geometry": {"n_donors": 1, "n_children": 6},
    },
    "rate-cdf": {
        "sweep": {"grid": [25.0 * k for k in range(41)]},
        "densities": {"ue_per_km2": [20.0]},
        "geometry": {"n_donors": 1, "n_children": 3},
    },
    "min-distance-sweep": {
        "sweep": {"grid": [110.0, 128.0, 145.0, 163.0, 180.0]},
        "densities": {"child_per_km2": 20.0, "ue_per_km2": [150.0]},
        "geometry": {"n_donors": 4},
        "nodes": {"donor_gain_dbi": 24.0, "child_gain_dbi": 18.0},
        "optimizer": {"mc_trials_per_candidate": 100},
    },
    "forbidden-area-sweep": {
        "sweep": {"grid": [0.0, 100.0, 150.0, 200.0]},
        "densities": {"child_per_km2": 50.0, "ue_per_km2": [200.0, 400.0]},
        "geometry": {"n_donors": 4},
        "radio": {"bandwidth_mhz": 2000.0, "beta": 0.35},
        "nodes": {"donor_gain_dbi": 24.0, "child_gain_dbi": 18.0},
    },
}

# CLI-overridable scalars.
OVERRIDE_KEYS = ("seed", "trials", "out", "parallelism")


def _merge(base: dict, override: Mapping, path: str = "") -> dict:
    """Overlay override onto base, rejecting keys base does not know."""
    out = dict(base)
    for key, value in override.items():
        dotted = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key: {dotted}")
        if isinstance(base[key], dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"{dotted} must be a mapping")
            out[key] = _merge(base[key], value, dotted + ".")
        else:
            out[key] = value
    return out


def _require_number(tree: Mapping, dotted: str, lo=None, hi=None, integer=False):
    node: Any = tree
    for part in dotted.split("."):
        node = node[part]
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"{dotted} must be a number, got {node!r}")
    value = float(node)
    if not math.isfinite(value):
        raise ConfigError(f"{dotted} must be finite")
    if integer and value != int(value):
        raise ConfigError(f"{dotted} must be an integer, got {node!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"{dotted} must be >= {lo}, got {node!r}")
    if hi is not None and value > hi:
        raise ConfigError(f"{dotted} must be <= {hi}, got {node!r}")
    return int(value) if integer else value


def _number_list(raw: Any, dotted: str, lo=None) -> tuple[float, ...]:
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        raw = [raw]
    if not isinstance(raw, (list, tuple)) or not raw:
        raise ConfigError(f"{dotted} must be a non-empty list of numbers")
    values = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{dotted}[{i}] must be a finite number, got {v!r}")
        if lo is not None and v < lo:
            raise ConfigError(f"{dotted}[{i}] must be >= {lo}, got {v!r}")
        values.append(float(v))
    return tuple(values)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description.

    Everything is kept in the resolved tree (plain data, dumpable to a
    manifest); accessor methods build simulator objects on demand.
    """

    resolved: dict

    # -- plain fields -------------------------------------------------------
    @property
    def scenario(self) -> str:
        return self.resolved["scenario"]

    @property
    def seed(self) -> int:
        return self.resolved["seed"]

    @property
    def trials(self) -> int:
        return self.resolved["trials"]

    @property
    def out_dir(self) -> str:
        return self.resolved["out"]

    @property
    def parallelism(self) -> int:
        return self.resolved["parallelism"]

    @property
    def n_donors(self) -> int:
        return self.resolved["geometry"]["n_donors"]

    def sweep_grid(self) -> tuple[float, ...]:
        return tuple(float(v) for v in self.resolved["sweep"]["grid"])

    def ue_densities(self) -> tuple[float, ...]:
        return _number_list(
            self.resolved["densities"]["ue_per_km2"], "densities.ue_per_km2"
        )

    def s_values(self) -> tuple[float, ...]:
        return _number_list(self.resolved["geometry"]["s_values_m"], "geometry.s_values_m")

    def gain_values_dbi(self) -> tuple[float, ...]:
        return _number_list(self.resolved["geometry"]["gains_dbi"], "geometry.gains_dbi")

    # -- derived objects ----------------------------------------------------
    def area(self) -> DiskRegion:
        return DiskRegion(Point2D(0.0, 0.0), float(self.resolved["area"]["radius_m"]))

    def n_children(self) -> int:
        explicit = self.resolved["geometry"]["n_children"]
        if explicit is not None:
            return int(explicit)
        lam = self.resolved["densities"]["child_per_km2"]
        return int(round(float(lam) * self.area().area_km2))

    def drop_model(self, ue_per_km2: float | None = None) -> DropModel:
        dens = self.resolved["densities"]
        ue = float(ue_per_km2 if ue_per_km2 is not None else self.ue_densities()[0])
        return DropModel(
            ue_density=ue,
            blockage_density=float(dens["blockage_per_km2"]),
            wall_length_m=float(self.resolved["geometry"]["wall_length_m"]),
        )

    def radio(self) -> RadioConfig:
        r = self.resolved["radio"]
        return RadioConfig(
            bandwidth_hz=float(r["bandwidth_mhz"]) * 1e6,
            beta=float(r["beta"]),
            noise_density_w_per_hz=thermal_noise_density_w_per_hz(
                float(r["noise_figure_db"])
            ),
            rate_threshold_bps=float(r["rate_threshold_mbps"]) * 1e6,
        )

    def channel(self) -> ChannelModel:
        c = self.resolved["channel"]
        return ChannelModel(
            path_loss=PathLossParams(
                carrier_ghz=float(c["carrier_ghz"]),
                exponent_los=float(c["pathloss_exponent_los"]),
                exponent_nlos=float(c["pathloss_exponent_nlos"]),
            ),
            fading=FadingModel(
                kind=c["fading"], m_los=float(c["m_los"]), m_nlos=float(c["m_nlos"])
            ),
            inverse_distance_factor=bool(c["inverse_distance_factor"]),
        )

    def _station_params(self, role: str, gain_dbi: float | None) -> NodeParams:
        n = self.resolved["nodes"]
        main = float(n[f"{role}_gain_dbi"] if gain_dbi is None else gain_dbi)
        pattern = AntennaPattern(
            main_lobe_gain=db_to_linear(main),
            side_lobe_gain=db_to_linear(float(n[f"{role}_side_gain_dbi"])),
            half_power_beamwidth=math.radians(float(n["station_beamwidth_deg"])),
        )
        return NodeParams(dbm_to_watts(float(n[f"{role}_power_dbm"])), pattern)

    def donor_params(self, gain_dbi: float | None = None) -> NodeParams:
        return self._station_params("donor", gain_dbi)

    def child_params(self, gain_dbi: float | None = None) -> NodeParams:
        return self._station_params("child", gain_dbi)

    def ue_params(self) -> NodeParams:
        n = self.resolved["nodes"]
        pattern = AntennaPattern(
            main_lobe_gain=db_to_linear(float(n["ue_gain_dbi"])),
            side_lobe_gain=db_to_linear(float(n["ue_side_gain_dbi"])),
            half_power_beamwidth=math.radians(float(n["ue_beamwidth_deg"])),
        )
        return NodeParams(0.0, pattern)

    def optimizer(self) -> OptimizerConfig:
        o = self.resolved["optimizer"]
        return OptimizerConfig(
            n_iterations=int(o["n_iterations"]),
            mc_trials_per_candidate=int(o["mc_trials_per_candidate"]),
            max_resample_attempts=int(o["max_resample_attempts"]),
            stop_mode=o["stop_mode"],
            window=int(o["window"]),
        )

    def forbidden_disks(self, radius_m: float) -> tuple[DiskRegion, ...]:
        """Keep-out disks of a given radius, evenly spaced on an inner ring."""
        if radius_m == 0.0:
            return ()
        f = self.resolved["forbidden"]
        n = int(f["n_disks"])
        ring = float(f["ring_radius_fraction"]) * self.area().radius
        return tuple(
            DiskRegion(
                Point2D(ring * math.cos(2 * math.pi * k / n),
                        ring * math.sin(2 * math.pi * k / n)),
                float(radius_m),
            )
            for k in range(n)
        )

    def to_manifest(self, artifact_version: str, package: str) -> dict:
        tree = copy.deepcopy(self.resolved)
        tree["artifact_version"] = artifact_version
        tree["package"] = package
        return tree


def _validate(tree: dict) -> None:
    scenario = tree["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {scenario!r}; known: {', '.join(SCENARIOS)}"
        )
    tree["seed"] = _require_number(tree, "seed", lo=0, hi=2 ** 64 - 1, integer=True)
    tree["trials"] = _require_number(tree, "trials", lo=1, integer=True)
    tree["parallelism"] = _require_number(tree, "parallelism", lo=1, integer=True)
    if not isinstance(tree["out"], str) or not tree["out"]:
        raise ConfigError("out must be a non-empty path string")

    radius = _require_number(tree, "area.radius_m", lo=1.0)
    grid = _number_list(tree["sweep"]["grid"], "sweep.grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("sweep.grid must be strictly increasing")
    tree["sweep"]["grid"] = list(grid)

    _require_number(tree, "densities.blockage_per_km2", lo=0.0)
    ue = _number_list(tree["densities"]["ue_per_km2"], "densities.ue_per_km2", lo=0.0)
    if any(v <= 0 for v in ue):
        raise ConfigError("densities.ue_per_km2 entries must be > 0")
    tree["densities"]["ue_per_km2"] = list(ue)

    geo = tree["geometry"]
    _require_number(tree, "geometry.n_donors", lo=1, integer=True)
    _require_number(tree, "geometry.wall_length_m", lo=1e-9)
    if geo["n_children"] is not None:
        geo["n_children"] = _require_number(tree, "geometry.n_children", lo=0, integer=True)

    _require_number(tree, "radio.bandwidth_mhz", lo=1e-9)
    _require_number(tree, "radio.beta", lo=0.0, hi=1.0)
    _require_number(tree, "radio.noise_figure_db")
    _require_number(tree, "radio.rate_threshold_mbps", lo=0.0)

    chan = tree["channel"]
    _require_number(tree, "channel.carrier_ghz", lo=1e-9)
    _require_number(tree, "channel.pathloss_exponent_los", lo=0.0)
    _require_number(tree, "channel.pathloss_exponent_nlos", lo=0.0)
    if chan["fading"] not in FADING_KINDS:
        raise ConfigError(
            f"channel.fading must be one of {FADING_KINDS}, got {chan['fading']!r}"
        )
    _require_number(tree, "channel.m_los", lo=0.5)
    _require_number(tree, "channel.m_nlos", lo=0.5)
    if not isinstance(chan["inverse_distance_factor"], bool):
        raise ConfigError("channel.inverse_distance_factor must be a boolean")

    nodes = tree["nodes"]
    for role in ("donor", "child"):
        _require_number(tree, f"nodes.{role}_power_dbm")
        main = _require_number(tree, f"nodes.{role}_gain_dbi")
        side = _require_number(tree, f"nodes.{role}_side_gain_dbi")
        if side > main:
            raise ConfigError(f"nodes.{role}_side_gain_dbi exceeds the main lobe gain")
    if _require_number(tree, "nodes.ue_side_gain_dbi") > _require_number(
        tree, "nodes.ue_gain_dbi"
    ):
        raise ConfigError("nodes.ue_side_gain_dbi exceeds the main lobe gain")
    _require_number(tree, "nodes.station_beamwidth_deg", lo=1e-9, hi=360.0)
    _require_number(tree, "nodes.ue_beamwidth_deg", lo=1e-9, hi=360.0)

    opt = tree["optimizer"]
    _require_number(tree, "optimizer.n_iterations", lo=1, integer=True)
    _require_number(tree, "optimizer.mc_trials_per_candidate", lo=1, integer=True)
    _require_number(tree, "optimizer.max_resample_attempts", lo=1, integer=True)
    _require_number(tree, "optimizer.window", lo=1, integer=True)
    if opt["stop_mode"] not in STOP_MODES:
        raise ConfigError(
            f"optimizer.stop_mode must be one of {STOP_MODES}, got {opt['stop_mode']!r}"
        )

    _require_number(tree, "forbidden.n_disks", lo=1, integer=True)
    _require_number(tree, "forbidden.ring_radius_fraction", lo=0.0, hi=1.0)

    # Scenario-specific shape requirements.
    if scenario in ("symmetric-line", "symmetric-ring", "rate-cdf"):
        if geo["n_donors"] != 1:
            raise ConfigError(f"{scenario} places a single donor at the center")
        if geo["n_children"] is None:
            raise ConfigError(f"{scenario} needs geometry.n_children")
        if scenario == "symmetric-line" and geo["n_children"] != 2:
            raise ConfigError(
                "symmetric-line places exactly two children at +s and -s"
            )
        if scenario == "rate-cdf":
            s_values = _number_list(geo["s_values_m"], "geometry.s_values_m")
            if any(not 0 < s < radius for s in s_values):
                raise ConfigError(
                    f"geometry.s_values_m must lie inside (0, {radius})"
                )
            _number_list(geo["gains_dbi"], "geometry.gains_dbi")
            if grid[0] < 0:
                raise ConfigError("rate-cdf sweep.grid holds rates in Mbps, >= 0")
        else:
            if any(not 0 < s < radius for s in grid):
                raise ConfigError(
                    f"sweep.grid holds child distances s, each inside (0, {radius})"
                )
    else:
        if geo["n_children"] is None and tree["densities"]["child_per_km2"] is None:
            raise ConfigError(
                f"{scenario} needs densities.child_per_km2 or geometry.n_children"
            )
        if tree["densities"]["child_per_km2"] is not None:
            _require_number(tree, "densities.child_per_km2", lo=0.0)
        if grid[0] < 0:
            raise ConfigError("sweep.grid values must be >= 0")


def resolve_config(data: Mapping, overrides: Mapping | None = None) -> ExperimentConfig:
    """Merge user data over defaults, apply CLI overrides, and validate."""
    if not isinstance(data, Mapping):
        raise ConfigError("config root must be a mapping")
    scenario = data.get("scenario")
    if scenario is None:
        raise ConfigError("config must name a scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {scenario!r}; known: {', '.join(SCENARIOS)}"
        )
    base = _merge(GLOBAL_DEFAULTS, SCENARIO_DEFAULTS[scenario])
    tree = _merge(base, data)
    for key, value in (overrides or {}).items():
        if key not in OVERRIDE_KEYS:
            raise ConfigError(f"{key} cannot be overridden on the command line")
        if value is not None:
            tree[key] = value
    if tree["sweep"]["grid"] is None:
        raise ConfigError("sweep.grid is required for this scenario")
    _validate(tree)
    return ExperimentConfig(resolved=tree)


def load_config(path: str, overrides: Mapping | None = None) -> ExperimentConfig:
    """Read a YAML experiment file and resolve it against the defaults."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if data is None:
        raise ConfigError(f"config {path} is empty")
    return resolve_config(data, overrides)
