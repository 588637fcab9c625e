"""Topology assembly, association, interference, rates and coverage.

A network is one wired donor tier plus a wirelessly backhauled child tier
serving user equipment (UE) on a shared band: a fraction beta of the
bandwidth carries donor-to-child backhaul, the rest carries access links.
Rates follow an equal-share schedule: each station splits its access band
across its UEs, each donor splits the backhaul band across its children,
and a child-served UE gets the minimum of its access and backhaul shares.

Two implementations coexist on purpose. The per-link operations
(ue_interference, backhaul_interference, ue_signal_power, ...) are scalar
and readable; the Monte-Carlo path (ue_rates, coverage_estimate) is an
equivalent vectorized pipeline. Tests hold them to the same numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .channel import (
    AntennaPattern,
    ChannelModel,
    MIN_PATHLOSS_DISTANCE_M,
    _fading_array,
    _link_gain_array,
    antenna_gain,
    link_path_gain,
    received_power,
)
from .geometry import (
    BlockageField,
    DiskRegion,
    Point2D,
    WallIndex,
    generate_blockages,
    is_los,
    points_to_array,
    sample_fhppp,
)

NODE_KINDS = ("donor", "child", "ue")


@dataclass(frozen=True)
class Node:
    """One radio: a donor or child station, or a UE (zero downlink power)."""

    position: Point2D
    kind: str
    tx_power_w: float
    pattern: AntennaPattern

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValueError(f"kind must be one of {NODE_KINDS}, got {self.kind!r}")
        if self.tx_power_w < 0:
            raise ValueError(f"tx_power_w must be non-negative, got {self.tx_power_w}")


@dataclass(frozen=True)
class Topology:
    """A concrete network instance: stations, UEs, walls and the area."""

    donors: tuple[Node, ...]
    children: tuple[Node, ...]
    ues: tuple[Node, ...]
    blockage: BlockageField
    area: DiskRegion

    def __post_init__(self):
        object.__setattr__(self, "donors", tuple(self.donors))
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "ues", tuple(self.ues))
        if len(self.donors) < 1:
            raise ValueError("topology needs at least one donor")
        for group, kind in ((self.donors, "donor"), (self.children, "child"), (self.ues, "ue")):
            for node in group:
                if node.kind != kind:
                    raise ValueError(f"node of kind {node.kind!r} in the {kind} list")
                if not self.area.contains(node.position):
                    raise ValueError(f"{kind} at {node.position} lies outside the area")

    @property
    def transmitters(self) -> tuple[Node, ...]:
        """Donors followed by children; this fixes the global tx indexing."""
        return self.donors + self.children

    @cached_property
    def _arrays(self):
        return (
            points_to_array([n.position for n in self.transmitters]),
            points_to_array([n.position for n in self.ues]),
            points_to_array([n.position for n in self.children]),
        )


@dataclass(frozen=True)
class Association:
    """Serving relations: UE -> transmitter (global index, donors first)
    and child -> parent donor index."""

    ue_serving: tuple[int, ...]
    child_parent: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ue_serving", tuple(int(i) for i in self.ue_serving))
        object.__setattr__(self, "child_parent", tuple(int(i) for i in self.child_parent))


@dataclass(frozen=True)
class RadioConfig:
    """System-level radio numbers shared by every link."""

    bandwidth_hz: float
    beta: float  # backhaul share of the band
    noise_density_w_per_hz: float
    rate_threshold_bps: float

    def __post_init__(self):
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.noise_density_w_per_hz <= 0:
            raise ValueError("noise_density_w_per_hz must be positive")
        if self.rate_threshold_bps < 0:
            raise ValueError("rate_threshold_bps must be non-negative")


@dataclass(frozen=True)
class NodeParams:
    """Per-kind radio hardware: transmit power and antenna pattern."""

    tx_power_w: float
    pattern: AntennaPattern

    def __post_init__(self):
        if self.tx_power_w < 0:
            raise ValueError("tx_power_w must be non-negative")


@dataclass(frozen=True)
class DropModel:
    """Densities for the random parts of a trial (per km^2) and wall size."""

    ue_density: float
    blockage_density: float
    wall_length_m: float = 10.0

    def __post_init__(self):
        if self.ue_density < 0 or self.blockage_density < 0:
            raise ValueError("densities must be non-negative")
        if self.wall_length_m <= 0:
            raise ValueError("wall_length_m must be positive")


def _canonical_points(points) -> tuple[Point2D, ...]:
    """Sort by x then y, so list order carries no information."""
    return tuple(sorted(points, key=lambda p: (p.x, p.y)))


@dataclass(frozen=True)
class TopologyTemplate:
    """Fixed station layout plus the recipe for the random per-trial parts.

    Each realize() draws fresh UEs and walls unless fixed sets are supplied.
    UE lists are kept in canonical (x, y) order so that permuting an input
    list cannot change any downstream number.
    """

    donors: tuple[Point2D, ...]
    children: tuple[Point2D, ...]
    area: DiskRegion
    drop: DropModel
    donor_params: NodeParams
    child_params: NodeParams
    ue_params: NodeParams
    fixed_ues: tuple[Point2D, ...] | None = None
    fixed_blockage: BlockageField | None = None

    def __post_init__(self):
        object.__setattr__(self, "donors", tuple(self.donors))
        object.__setattr__(self, "children", tuple(self.children))
        if self.fixed_ues is not None:
            object.__setattr__(self, "fixed_ues", _canonical_points(self.fixed_ues))
        if len(self.donors) < 1:
            raise ValueError("template needs at least one donor position")
        for p in (*self.donors, *self.children, *(self.fixed_ues or ())):
            if not self.area.contains(p):
                raise ValueError(f"position {p} lies outside the area")

    def realize(self, rng: np.random.Generator) -> Topology:
        """One trial instance. Consumes the stream in a fixed order:
        UE positions first, then the blockage field."""
        if self.fixed_ues is not None:
            ue_pts = self.fixed_ues
        else:
            ue_pts = _canonical_points(sample_fhppp(self.area, self.drop.ue_density, rng))
        if self.fixed_blockage is not None:
            blockage = self.fixed_blockage
        else:
            blockage = generate_blockages(
                self.area, self.drop.blockage_density, self.drop.wall_length_m, rng
            )
        mk = lambda pts, kind, par: tuple(
            Node(p, kind, par.tx_power_w, par.pattern) for p in pts
        )
        return Topology(
            donors=mk(self.donors, "donor", self.donor_params),
            children=mk(self.children, "child", self.child_params),
            ues=mk(ue_pts, "ue", self.ue_params),
            blockage=blockage,
            area=self.area,
        )


# ---------------------------------------------------------------------------
# Link geometry shared by association and rate computation
# ---------------------------------------------------------------------------

class _LinkGeometry:
    """Distance, visibility and bearing matrices for one topology draw.

    Coincident node pairs get the 1 m clamp distance and count as visible;
    they only arise in degenerate hand-built layouts.
    """

    def __init__(self, topology: Topology):
        tx_xy, ue_xy, ch_xy = topology._arrays
        self.n_tx = tx_xy.shape[0]
        self.n_donor = len(topology.donors)
        self.n_child = ch_xy.shape[0]
        self.n_ue = ue_xy.shape[0]
        walls = WallIndex.for_region(topology.blockage, topology.area)
        self.d_access, self.los_access = self._pair_fields(tx_xy, ue_xy, walls)
        self.d_backhaul, self.los_backhaul = self._pair_fields(tx_xy, ch_xy, walls)
        self.ang_tx_to_ue = self._bearings(tx_xy, ue_xy)  # (n_tx, n_ue)
        self.ang_ue_to_tx = self._bearings(ue_xy, tx_xy)  # (n_ue, n_tx)
        self.ang_tx_to_child = self._bearings(tx_xy, ch_xy)
        self.ang_child_to_tx = self._bearings(ch_xy, tx_xy)

    @staticmethod
    def _pair_fields(src, dst, walls: WallIndex):
        n_src, n_dst = src.shape[0], dst.shape[0]
        if n_src == 0 or n_dst == 0:
            shape = (n_src, n_dst)
            return np.ones(shape), np.ones(shape, bool)
        diff = dst[None, :, :] - src[:, None, :]
        d = np.maximum(np.hypot(diff[..., 0], diff[..., 1]), MIN_PATHLOSS_DISTANCE_M)
        a = np.repeat(src, n_dst, axis=0)
        b = np.tile(dst, (n_src, 1))
        blocked = walls.blocked(a, b).reshape(n_src, n_dst)
        return d, ~blocked

    @staticmethod
    def _bearings(src, dst):
        if src.shape[0] == 0 or dst.shape[0] == 0:
            return np.zeros((src.shape[0], dst.shape[0]))
        diff = dst[None, :, :] - src[:, None, :]
        return np.arctan2(diff[..., 1], diff[..., 0])


def _wrap_angle(x: np.ndarray) -> np.ndarray:
    return np.remainder(x + math.pi, 2 * math.pi) - math.pi


def _tx_param_arrays(topology: Topology):
    tx = topology.transmitters
    power = np.array([n.tx_power_w for n in tx])
    gm = np.array([n.pattern.main_lobe_gain for n in tx])
    gs = np.array([n.pattern.side_lobe_gain for n in tx])
    hp = np.array([n.pattern.half_power_beamwidth for n in tx])
    return power, gm, gs, hp


def _rx_param_arrays(nodes):
    gm = np.array([n.pattern.main_lobe_gain for n in nodes])
    gs = np.array([n.pattern.side_lobe_gain for n in nodes])
    hp = np.array([n.pattern.half_power_beamwidth for n in nodes])
    return gm, gs, hp


# ---------------------------------------------------------------------------
# Association
# ---------------------------------------------------------------------------

def _associate_from(geom: _LinkGeometry, topology: Topology, chan: ChannelModel) -> Association:
    power, gm, _, _ = _tx_param_arrays(topology)
    n_d = geom.n_donor
    parents: tuple[int, ...] = ()
    if geom.n_child:
        ch_gm, _, _ = _rx_param_arrays(topology.children)
        gain_b = _link_gain_array(chan, geom.d_backhaul[:n_d], geom.los_backhaul[:n_d])
        p_long = power[:n_d, None] * gm[:n_d, None] * ch_gm[None, :] * gain_b
        parents = tuple(int(i) for i in np.argmax(p_long, axis=0))
    serving: tuple[int, ...] = ()
    if geom.n_ue:
        ue_gm, _, _ = _rx_param_arrays(topology.ues)
        gain_a = _link_gain_array(chan, geom.d_access, geom.los_access)
        p_long = power[:, None] * gm[:, None] * ue_gm[None, :] * gain_a
        serving = tuple(int(i) for i in np.argmax(p_long, axis=0))
    return Association(ue_serving=serving, child_parent=parents)


def associate(topology: Topology, chan: ChannelModel, rng=None) -> Association:
    """Attach every UE to its strongest transmitter and every child to its
    strongest donor, by long-term received power: transmit power, boresight
    main-lobe gains at both ends, and blockage-aware path gain. Fading is
    excluded, so the result is deterministic; argmax ties go to the lowest
    global index (donors come before children). rng is accepted for
    signature compatibility and never used.
    """
    return _associate_from(_LinkGeometry(topology), topology, chan)


def transmit_beam_angles(topology: Topology, assoc: Association) -> list[np.ndarray]:
    """Per transmitter, the bearings of the beams it steers: a donor points
    one beam at each of its children and each of its served UEs, a child
    one at each of its served UEs."""
    n_d = len(topology.donors)
    tx = topology.transmitters
    beams: list[list[float]] = [[] for _ in tx]
    for j, parent in enumerate(assoc.child_parent):
        src = tx[parent].position
        dst = topology.children[j].position
        beams[parent].append(math.atan2(dst.y - src.y, dst.x - src.x))
    for u, server in enumerate(assoc.ue_serving):
        src = tx[server].position
        dst = topology.ues[u].position
        beams[server].append(math.atan2(dst.y - src.y, dst.x - src.x))
    return [np.array(b) for b in beams]


def _steered_gain(pattern: AntennaPattern, beam_angles, bearing: float) -> float:
    """Transmit gain toward a bearing given the beams the node steers."""
    for beam in np.atleast_1d(beam_angles):
        if antenna_gain(pattern, bearing - float(beam)) == pattern.main_lobe_gain:
            return pattern.main_lobe_gain
    return pattern.side_lobe_gain


# ---------------------------------------------------------------------------
# Scalar per-link operations (readable reference path)
# ---------------------------------------------------------------------------

def _scalar_link_power(tx_node, rx_node, tx_gain, rx_gain, chan, blockage, fading):
    d = tx_node.position.distance_to(rx_node.position)
    d = max(d, MIN_PATHLOSS_DISTANCE_M)
    if tx_node.position == rx_node.position:
        los = True
    else:
        los = is_los(tx_node.position, rx_node.position, blockage)
    return received_power(tx_node.tx_power_w, tx_gain, rx_gain, link_path_gain(chan, d, los), fading)


def ue_signal_power(
    ue_index: int,
    assoc: Association,
    topology: Topology,
    chan: ChannelModel,
    access_fading: np.ndarray,
) -> float:
    """Received power of the serving link of one UE; both ends boresight.

    access_fading is indexed [transmitter, ue].
    """
    server = assoc.ue_serving[ue_index]
    tx = topology.transmitters[server]
    ue = topology.ues[ue_index]
    g = (tx.pattern.main_lobe_gain, ue.pattern.main_lobe_gain)
    return _scalar_link_power(
        tx, ue, g[0], g[1], chan, topology.blockage, access_fading[server, ue_index]
    )


def ue_interference(
    ue_index: int,
    assoc: Association,
    topology: Topology,
    chan: ChannelModel,
    access_fading: np.ndarray,
) -> float:
    """Aggregate access-band interference at one UE.

    Sums received power from every transmitter except the serving one.
    Each interferer radiates toward the UE with its main lobe only if the
    UE falls inside a beam the interferer steers at its own served nodes;
    the UE listens with its main lobe only toward directions within its
    serving beam. access_fading is indexed [transmitter, ue].
    """
    server = assoc.ue_serving[ue_index]
    ue = topology.ues[ue_index]
    beams = transmit_beam_angles(topology, assoc)
    srv_pos = topology.transmitters[server].position
    steer = math.atan2(srv_pos.y - ue.position.y, srv_pos.x - ue.position.x)
    total = 0.0
    for t, tx in enumerate(topology.transmitters):
        if t == server:
            continue
        bearing_out = math.atan2(ue.position.y - tx.position.y, ue.position.x - tx.position.x)
        bearing_in = math.atan2(tx.position.y - ue.position.y, tx.position.x - ue.position.x)
        g_tx = _steered_gain(tx.pattern, beams[t], bearing_out)
        g_rx = antenna_gain(ue.pattern, bearing_in - steer)
        total += _scalar_link_power(
            tx, ue, g_tx, g_rx, chan, topology.blockage, access_fading[t, ue_index]
        )
    return total


def backhaul_signal_power(
    child_index: int,
    assoc: Association,
    topology: Topology,
    chan: ChannelModel,
    backhaul_fading: np.ndarray,
) -> float:
    """Received power of one child's parent link; both ends boresight.

    backhaul_fading is indexed [transmitter, child].
    """
    parent = assoc.child_parent[child_index]
    donor = topology.donors[parent]
    child = topology.children[child_index]
    return _scalar_link_power(
        donor,
        child,
        donor.pattern.main_lobe_gain,
        child.pattern.main_lobe_gain,
        chan,
        topology.blockage,
        backhaul_fading[parent, child_index],
    )


def backhaul_interference(
    child_index: int,
    assoc: Association,
    topology: Topology,
    chan: ChannelModel,
    backhaul_fading: np.ndarray,
) -> float:
    """Aggregate interference on one child's parent link.

    Same composition as ue_interference with the child receiving toward its
    parent; the sum skips the parent and the child itself (a node cannot
    interfere with its own reception). backhaul_fading is indexed
    [transmitter, child].
    """
    parent = assoc.child_parent[child_index]
    child = topology.children[child_index]
    self_tx = len(topology.donors) + child_index
    beams = transmit_beam_angles(topology, assoc)
    par_pos = topology.donors[parent].position
    steer = math.atan2(par_pos.y - child.position.y, par_pos.x - child.position.x)
    total = 0.0
    for t, tx in enumerate(topology.transmitters):
        if t == parent or t == self_tx:
            continue
        bearing_out = math.atan2(
            child.position.y - tx.position.y, child.position.x - tx.position.x
        )
        bearing_in = math.atan2(
            tx.position.y - child.position.y, tx.position.x - child.position.x
        )
        g_tx = _steered_gain(tx.pattern, beams[t], bearing_out)
        g_rx = antenna_gain(child.pattern, bearing_in - steer)
        total += _scalar_link_power(
            tx, child, g_tx, g_rx, chan, topology.blockage, backhaul_fading[t, child_index]
        )
    return total


def sinr(signal_w: float, interference_w: float, noise_w: float):
    """signal / (interference + noise); noise must be strictly positive."""
    if np.any(np.asarray(noise_w) <= 0):
        raise ValueError("noise power must be positive")
    if np.any(np.asarray(signal_w) < 0) or np.any(np.asarray(interference_w) < 0):
        raise ValueError("signal and interference must be non-negative")
    return signal_w / (interference_w + noise_w)


# ---------------------------------------------------------------------------
# Vectorized rate pipeline
# ---------------------------------------------------------------------------

def _beam_gain_matrix(beams, bearings, gm, gs, hp):
    """Gain of each transmitter toward each victim given its beam set.

    bearings has shape (n_tx, n_victims); the result matches it.
    """
    n_tx, n_victims = bearings.shape
    out = np.empty((n_tx, n_victims))
    for t in range(n_tx):
        if beams[t].size == 0:
            out[t] = gs[t]
            continue
        diff = np.abs(_wrap_angle(bearings[t][:, None] - beams[t][None, :]))
        out[t] = np.where(diff.min(axis=1) <= 0.5 * hp[t], gm[t], gs[t])
    return out


def _rx_gain_matrix(bearings, steer, gm, gs, hp):
    """Gain of each receiver toward each transmitter given its steering.

    bearings has shape (n_rx, n_tx); steer, gm, gs, hp have shape (n_rx,).
    """
    diff = np.abs(_wrap_angle(bearings - steer[:, None]))
    return np.where(diff <= 0.5 * hp[:, None], gm[:, None], gs[:, None])


def _draw_fading(chan: ChannelModel, geom: _LinkGeometry, rng: np.random.Generator):
    """Canonical per-trial fading order: the access matrix, then backhaul."""
    f_access = _fading_array(chan.fading, geom.los_access, rng)
    f_backhaul = _fading_array(chan.fading, geom.los_backhaul, rng)
    return f_access, f_backhaul


def _rates_given_fading(
    geom: _LinkGeometry,
    topology: Topology,
    assoc: Association,
    radio: RadioConfig,
    chan: ChannelModel,
    f_access: np.ndarray,
    f_backhaul: np.ndarray,
) -> np.ndarray:
    n_tx, n_d, n_ue = geom.n_tx, geom.n_donor, geom.n_ue
    if n_ue == 0:
        return np.zeros(0)
    serving = np.asarray(assoc.ue_serving, int)
    parent = np.asarray(assoc.child_parent, int)
    power, gm, gs, hp = _tx_param_arrays(topology)
    beams = transmit_beam_angles(topology, assoc)

    ue_gm, ue_gs, ue_hp = _rx_param_arrays(topology.ues)
    g_tx_a = _beam_gain_matrix(beams, geom.ang_tx_to_ue, gm, gs, hp)
    steer_ue = geom.ang_ue_to_tx[np.arange(n_ue), serving]
    g_rx_a = _rx_gain_matrix(geom.ang_ue_to_tx, steer_ue, ue_gm, ue_gs, ue_hp)
    p_access = (
        power[:, None]
        * g_tx_a
        * g_rx_a.T
        * _link_gain_array(chan, geom.d_access, geom.los_access)
        * f_access
    )
    cols = np.arange(n_ue)
    signal_u = p_access[serving, cols]
    keep = np.ones_like(p_access, bool)
    keep[serving, cols] = False
    interf_u = np.where(keep, p_access, 0.0).sum(axis=0)

    w, beta = radio.bandwidth_hz, radio.beta
    n0 = radio.noise_density_w_per_hz
    serve_counts = np.bincount(serving, minlength=n_tx)
    share_tx = np.divide(
        (1.0 - beta) * w,
        serve_counts,
        out=np.zeros(n_tx),
        where=serve_counts > 0,
    )
    share_u = share_tx[serving]
    active = share_u > 0
    sinr_u = np.zeros(n_ue)
    sinr_u[active] = signal_u[active] / (interf_u[active] + n0 * share_u[active])
    rate = share_u * np.log2(1.0 + sinr_u)

    child_served = np.nonzero(serving >= n_d)[0]
    if child_served.size:
        ch_gm, ch_gs, ch_hp = _rx_param_arrays(topology.children)
        g_tx_b = _beam_gain_matrix(beams, geom.ang_tx_to_child, gm, gs, hp)
        steer_ch = geom.ang_child_to_tx[np.arange(geom.n_child), parent]
        g_rx_b = _rx_gain_matrix(geom.ang_child_to_tx, steer_ch, ch_gm, ch_gs, ch_hp)
        p_backhaul = (
            power[:, None]
            * g_tx_b
            * g_rx_b.T
            * _link_gain_array(chan, geom.d_backhaul, geom.los_backhaul)
            * f_backhaul
        )
        ccols = np.arange(geom.n_child)
        signal_b = p_backhaul[parent, ccols]
        keep_b = np.ones_like(p_backhaul, bool)
        keep_b[parent, ccols] = False
        keep_b[n_d + ccols, ccols] = False  # a child never interferes with itself
        interf_b = np.where(keep_b, p_backhaul, 0.0).sum(axis=0)

        child_counts = np.bincount(parent, minlength=n_d)
        pipe = np.divide(
            beta * w,
            child_counts[parent].astype(float),
            out=np.zeros(geom.n_child),
            where=child_counts[parent] > 0,
        )
        sinr_b = np.zeros(geom.n_child)
        bh_active = pipe > 0
        sinr_b[bh_active] = signal_b[bh_active] / (interf_b[bh_active] + n0 * pipe[bh_active])
        backhaul_capacity = pipe * np.log2(1.0 + sinr_b)

        srv = serving[child_served]
        bh_share = backhaul_capacity[srv - n_d] / serve_counts[srv]
        rate[child_served] = np.minimum(rate[child_served], bh_share)
    return rate


def ue_rates(
    topology: Topology,
    assoc: Association,
    radio: RadioConfig,
    chan: ChannelModel,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-UE downlink rates (bits/s) for one fading draw.

    A station's access band (1-beta)*W is split evenly over its N served
    UEs; a donor's backhaul band beta*W is split evenly over its children.
    Donor-served UE: rate = share * log2(1 + SINR). Child-served UE: the
    minimum of that access term and the UE's slice of the child's backhaul
    capacity. Noise is the density times the bandwidth actually allocated
    to the link, and each link gets an independent fading draw.
    """
    geom = _LinkGeometry(topology)
    f_access, f_backhaul = _draw_fading(chan, geom, rng)
    return _rates_given_fading(geom, topology, assoc, radio, chan, f_access, f_backhaul)


def service_coverage(rates, threshold: float) -> float:
    """Fraction of rate samples at or above the threshold.

    Accepts one flat array of rates or a sequence of per-trial arrays,
    which are pooled sample-wise.
    """
    if isinstance(rates, (list, tuple)) and len(rates) and np.ndim(rates[0]) > 0:
        flat = np.concatenate([np.asarray(r, float).ravel() for r in rates])
    else:
        flat = np.asarray(rates, float).ravel()
    if flat.size == 0:
        raise ValueError("need at least one rate sample")
    return float(np.count_nonzero(flat >= threshold) / flat.size)


# ---------------------------------------------------------------------------
# Monte-Carlo coverage estimation
# ---------------------------------------------------------------------------

def fresh_seed_sequence(seed) -> np.random.SeedSequence:
    """SeedSequence whose spawn stream starts at zero.

    An existing SeedSequence is copied so repeat calls stay bit-identical
    (spawn advances a counter on the original); anything else is treated
    as entropy.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(entropy=seed.entropy, spawn_key=seed.spawn_key)
    return np.random.SeedSequence(seed)


@dataclass(frozen=True)
class CoverageEstimate:
    """Monte-Carlo coverage with its sampling error."""

    coverage: float
    stderr: float
    per_trial: tuple[float, ...] = field(repr=False, default=())
    trials: int = 0


def trial_rates(
    template: TopologyTemplate,
    radio: RadioConfig,
    chan: ChannelModel,
    trials: int,
    seed,
) -> list[np.ndarray]:
    """Per-trial achievable-rate arrays over independent draws.

    Each trial derives its own streams (UE/blockage draw, then fading) from
    the master seed (an integer or a prebuilt SeedSequence), so results are
    bit-exact reproducible and trials could be evaluated in any order.
    Trials that draw zero UEs yield an empty array, keeping trial indices
    aligned with the seed stream.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    seed = fresh_seed_sequence(seed)
    out: list[np.ndarray] = []
    for trial_ss in seed.spawn(trials):
        realize_ss, fading_ss = trial_ss.spawn(2)
        topo = template.realize(np.random.default_rng(realize_ss))
        if len(topo.ues) == 0:
            out.append(np.empty(0))
            continue
        geom = _LinkGeometry(topo)
        assoc = _associate_from(geom, topo, chan)
        f_access, f_backhaul = _draw_fading(chan, geom, np.random.default_rng(fading_ss))
        out.append(_rates_given_fading(geom, topo, assoc, radio, chan, f_access, f_backhaul))
    return out


def coverage_estimate(
    template: TopologyTemplate,
    radio: RadioConfig,
    chan: ChannelModel,
    trials: int,
    seed,
) -> CoverageEstimate:
    """Average per-trial service coverage over independent draws.

    Sampling follows trial_rates; trials that draw zero UEs contribute no
    coverage sample and are skipped.
    """
    per_trial = [
        service_coverage(rates, radio.rate_threshold_bps)
        for rates in trial_rates(template, radio, chan, trials, seed)
        if rates.size
    ]
    if not per_trial:
        raise ValueError("every trial drew zero UEs; raise ue_density or fix the UE set")
    values = np.array(per_trial)
    stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
    return CoverageEstimate(
        coverage=float(values.mean()),
        stderr=stderr,
        per_trial=tuple(float(v) for v in values),
        trials=len(values),
    )


def evaluate_topology(
    template: TopologyTemplate,
    radio: RadioConfig,
    chan: ChannelModel,
    trials: int,
    seed: int,
) -> float:
    """Coverage probability of a station layout (see coverage_estimate)."""
    return coverage_estimate(template, radio, chan, trials, seed).coverage
