"""Link-level radio models.

Covers the pieces a link budget multiplies together: sectored antenna gain,
close-in log-distance path loss, small-scale fading with per-state Nakagami
shape, and the received-power composition. Gains and powers are linear
(watts); angles are radians; distances are meters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2 * math.pi

# Below this range the log-distance law is held flat at its 1 m value.
MIN_PATHLOSS_DISTANCE_M = 1.0

FADING_KINDS = ("nakagami", "deterministic-unit")


@dataclass(frozen=True)
class AntennaPattern:
    """Two-level sectored pattern: main lobe inside the half-power
    beamwidth, constant side lobe elsewhere."""

    main_lobe_gain: float  # linear
    side_lobe_gain: float  # linear
    half_power_beamwidth: float  # radians, full width of the main lobe

    def __post_init__(self):
        if self.main_lobe_gain <= 0 or self.side_lobe_gain <= 0:
            raise ValueError("antenna gains must be positive linear values")
        if self.side_lobe_gain > self.main_lobe_gain:
            raise ValueError("side lobe gain cannot exceed main lobe gain")
        if not 0 < self.half_power_beamwidth <= TWO_PI:
            raise ValueError(
                f"half_power_beamwidth must lie in (0, 2*pi], got {self.half_power_beamwidth}"
            )


def antenna_gain(pattern: AntennaPattern, angle_off_boresight: float) -> float:
    """Gain toward a direction given its angle from boresight.

    The main lobe applies when the wrapped angle satisfies
    |angle| <= beamwidth / 2, boundary included.
    """
    alpha = math.remainder(angle_off_boresight, TWO_PI)  # wraps to [-pi, pi]
    if abs(alpha) <= 0.5 * pattern.half_power_beamwidth:
        return pattern.main_lobe_gain
    return pattern.side_lobe_gain


def _gain_array(pattern: AntennaPattern, angles: np.ndarray) -> np.ndarray:
    alpha = np.remainder(angles + math.pi, TWO_PI) - math.pi
    return np.where(
        np.abs(alpha) <= 0.5 * pattern.half_power_beamwidth,
        pattern.main_lobe_gain,
        pattern.side_lobe_gain,
    )


@dataclass(frozen=True)
class PathLossParams:
    """Close-in log-distance path loss with visibility-dependent exponent.

    The 1 m intercept defaults to the free-space value at the carrier,
    32.4 + 20*log10(f_GHz) dB; pass reference_db to override it.
    """

    carrier_ghz: float
    exponent_los: float = 2.0
    exponent_nlos: float = 3.0
    reference_db: float | None = None

    def __post_init__(self):
        if self.carrier_ghz <= 0:
            raise ValueError(f"carrier must be positive, got {self.carrier_ghz} GHz")
        if self.exponent_los <= 0 or self.exponent_nlos <= 0:
            raise ValueError("path loss exponents must be positive")
        if self.exponent_nlos < self.exponent_los:
            raise ValueError("NLOS exponent must be at least the LOS exponent")

    @property
    def intercept_db(self) -> float:
        if self.reference_db is not None:
            return self.reference_db
        return 32.4 + 20.0 * math.log10(self.carrier_ghz)


def path_loss(params: PathLossParams, distance_m: float, los: bool) -> float:
    """Linear path gain (<= 1 in practice) at the given distance."""
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    d = max(distance_m, MIN_PATHLOSS_DISTANCE_M)
    n = params.exponent_los if los else params.exponent_nlos
    pl_db = params.intercept_db + 10.0 * n * math.log10(d)
    return 10.0 ** (-pl_db / 10.0)


def _path_gain_array(
    params: PathLossParams, distances: np.ndarray, los_mask: np.ndarray
) -> np.ndarray:
    """Vectorized path gain; distances (any shape) with matching LOS mask."""
    d = np.asarray(distances, float)
    if np.any(d <= 0):
        raise ValueError("distances must be positive")
    d = np.maximum(d, MIN_PATHLOSS_DISTANCE_M)
    n = np.where(los_mask, params.exponent_los, params.exponent_nlos)
    pl_db = params.intercept_db + 10.0 * n * np.log10(d)
    return 10.0 ** (-pl_db / 10.0)


@dataclass(frozen=True)
class FadingModel:
    """Unit-mean small-scale power fading.

    kind "nakagami" draws Gamma(m, 1/m) power coefficients with a
    visibility-dependent shape; "deterministic-unit" pins every draw to 1,
    which makes link budgets exactly reproducible for reference tests.
    """

    kind: str = "nakagami"
    m_los: float = 3.0
    m_nlos: float = 2.0

    def __post_init__(self):
        if self.kind not in FADING_KINDS:
            raise ValueError(f"kind must be one of {FADING_KINDS}, got {self.kind!r}")
        if self.m_los < 0.5 or self.m_nlos < 0.5:
            raise ValueError("Nakagami shape parameters must be >= 0.5")


def sample_fading(model: FadingModel, los: bool, rng: np.random.Generator) -> float:
    """One unit-mean power fading draw for a link in the given state."""
    if model.kind == "deterministic-unit":
        return 1.0
    m = model.m_los if los else model.m_nlos
    return float(rng.gamma(m, 1.0 / m))


def _fading_array(
    model: FadingModel, los_mask: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    los_mask = np.asarray(los_mask, bool)
    if model.kind == "deterministic-unit":
        return np.ones(los_mask.shape)
    m = np.where(los_mask, model.m_los, model.m_nlos)
    return rng.gamma(m, 1.0 / m)


@dataclass(frozen=True)
class ChannelModel:
    """Everything between a transmit and receive antenna port.

    inverse_distance_factor adds an extra 1/d roll-off on top of the
    log-distance law (clamped like the path loss below 1 m). It is off by
    default so distance is not double counted.
    """

    path_loss: PathLossParams
    fading: FadingModel
    inverse_distance_factor: bool = False


def link_path_gain(chan: ChannelModel, distance_m: float, los: bool) -> float:
    """Long-term (fading-free) channel gain of one link."""
    g = path_loss(chan.path_loss, distance_m, los)
    if chan.inverse_distance_factor:
        g /= max(distance_m, MIN_PATHLOSS_DISTANCE_M)
    return g


def _link_gain_array(
    chan: ChannelModel, distances: np.ndarray, los_mask: np.ndarray
) -> np.ndarray:
    g = _path_gain_array(chan.path_loss, distances, los_mask)
    if chan.inverse_distance_factor:
        g = g / np.maximum(np.asarray(distances, float), MIN_PATHLOSS_DISTANCE_M)
    return g


def received_power(
    tx_power_w: float,
    tx_gain: float,
    rx_gain: float,
    path_gain: float,
    fading: float = 1.0,
) -> float:
    """Compose a link budget: P_r = P_t * G_tx * G_rx * L * h."""
    for name, v in (
        ("tx_power_w", tx_power_w),
        ("tx_gain", tx_gain),
        ("rx_gain", rx_gain),
        ("path_gain", path_gain),
        ("fading", fading),
    ):
        if v < 0:
            raise ValueError(f"{name} must be non-negative, got {v}")
    return tx_power_w * tx_gain * rx_gain * path_gain * fading
