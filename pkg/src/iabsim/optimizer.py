"""Constrained station placement by rejection sampling.

Candidate layouts are drawn uniformly subject to a spacing or keep-out
constraint, scored with the Monte-Carlo coverage estimator, and the best
scorer wins. Baselines: a centered hexagonal lattice and unoptimized
random placement.

Every candidate is evaluated with the same evaluation seed (common random
numbers), so the argmax compares layouts on identical UE, wall and fading
draws instead of on sampling noise. Candidate sampling seeds are spawned
per iteration from the master seed, which makes the candidate sequence a
prefix: raising n_iterations keeps the earlier candidates identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel
from .geometry import DiskRegion, Point2D, hexagonal_layout, uniform_in_disk
from .network import (
    DropModel,
    NodeParams,
    RadioConfig,
    TopologyTemplate,
    evaluate_topology,
    fresh_seed_sequence,
)

CONSTRAINT_KINDS = ("min-distance", "forbidden-areas")
STOP_MODES = ("fixed-iterations", "no-improvement-window")

DEFAULT_MAX_RESAMPLE_ATTEMPTS = 10_000


class InfeasiblePlacementError(RuntimeError):
    """Raised when rejection sampling cannot place a node within the
    attempt budget; carries the index of the node that failed."""

    def __init__(self, message: str, node_index: int | None = None):
        super().__init__(message)
        self.node_index = node_index


@dataclass(frozen=True)
class PlacementConstraint:
    """Either a minimum spacing between stations or keep-out disks."""

    kind: str
    r_th: float | None = None
    forbidden: tuple[DiskRegion, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "forbidden", tuple(self.forbidden))
        if self.kind not in CONSTRAINT_KINDS:
            raise ValueError(f"kind must be one of {CONSTRAINT_KINDS}, got {self.kind!r}")
        if self.kind == "min-distance":
            if self.r_th is None or self.r_th <= 0:
                raise ValueError("min-distance constraint needs r_th > 0")
            if self.forbidden:
                raise ValueError("min-distance constraint takes no forbidden disks")
        else:
            if self.r_th is not None:
                raise ValueError("forbidden-areas constraint takes no r_th")

    @classmethod
    def min_distance(cls, r_th: float) -> "PlacementConstraint":
        return cls(kind="min-distance", r_th=r_th)

    @classmethod
    def forbidden_areas(cls, disks) -> "PlacementConstraint":
        return cls(kind="forbidden-areas", forbidden=tuple(disks))

    @classmethod
    def none(cls) -> "PlacementConstraint":
        """No restriction: a forbidden-areas constraint with no disks."""
        return cls(kind="forbidden-areas", forbidden=())

    def validate_for(self, area: DiskRegion) -> None:
        for disk in self.forbidden:
            gap = disk.center.distance_to(area.center) - disk.radius - area.radius
            if gap >= 0:
                raise ValueError(
                    f"forbidden disk at {disk.center} does not intersect the area"
                )


@dataclass(frozen=True)
class OptimizerConfig:
    """Search knobs for optimize_placement."""

    n_iterations: int
    mc_trials_per_candidate: int
    max_resample_attempts: int = DEFAULT_MAX_RESAMPLE_ATTEMPTS
    donors_fixed: tuple[Point2D, ...] | None = None
    stop_mode: str = "fixed-iterations"
    window: int = 10

    def __post_init__(self):
        if self.donors_fixed is not None:
            object.__setattr__(self, "donors_fixed", tuple(self.donors_fixed))
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.mc_trials_per_candidate < 1:
            raise ValueError("mc_trials_per_candidate must be >= 1")
        if self.max_resample_attempts < 1:
            raise ValueError("max_resample_attempts must be >= 1")
        if self.stop_mode not in STOP_MODES:
            raise ValueError(f"stop_mode must be one of {STOP_MODES}, got {self.stop_mode!r}")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class DeploymentSpec:
    """What gets deployed: station counts, the area, per-trial randomness
    and per-kind radio hardware."""

    n_donors: int
    n_children: int
    area: DiskRegion
    drop: DropModel
    donor_params: NodeParams
    child_params: NodeParams
    ue_params: NodeParams

    def __post_init__(self):
        if self.n_donors < 1:
            raise ValueError("need at least one donor")
        if self.n_children < 0:
            raise ValueError("n_children must be non-negative")

    def template(self, donor_pts, child_pts) -> TopologyTemplate:
        return TopologyTemplate(
            donors=tuple(donor_pts),
            children=tuple(child_pts),
            area=self.area,
            drop=self.drop,
            donor_params=self.donor_params,
            child_params=self.child_params,
            ue_params=self.ue_params,
        )


@dataclass(frozen=True)
class PlacementResult:
    """The winning layout (donors first), its score, and the full search
    trace as (iteration, coverage) pairs."""

    locations: tuple[Point2D, ...]
    n_donors: int
    coverage: float
    candidate_history: tuple[tuple[int, float], ...] = field(repr=False)

    @property
    def donors(self) -> tuple[Point2D, ...]:
        return self.locations[: self.n_donors]

    @property
    def children(self) -> tuple[Point2D, ...]:
        return self.locations[self.n_donors:]

    @property
    def best_iteration(self) -> int:
        best = max(c for _, c in self.candidate_history)
        return next(i for i, c in self.candidate_history if c == best)


def _draw_point(area: DiskRegion, rng: np.random.Generator) -> Point2D:
    xy = uniform_in_disk(1, area, rng)[0]
    return Point2D(float(xy[0]), float(xy[1]))


def sample_min_distance_layout(
    n_donors: int,
    n_children: int,
    area: DiskRegion,
    r_th: float,
    max_attempts: int,
    rng: np.random.Generator,
    preplaced: tuple[Point2D, ...] = (),
) -> list[Point2D]:
    """Place stations one by one, each uniform on the area and redrawn
    until it clears every already-placed station by strictly more than
    r_th. preplaced points (e.g. wired donors) constrain the new ones but
    are not returned. Raises InfeasiblePlacementError, naming the node,
    when a draw exceeds max_attempts."""
    total = n_donors + n_children
    if total < 1:
        raise ValueError("need at least one node to place")
    if r_th <= 0:
        raise ValueError("r_th must be positive")
    anchors = list(preplaced)
    for i in range(len(anchors)):
        for j in range(i + 1, len(anchors)):
            if anchors[i].distance_to(anchors[j]) <= r_th:
                raise InfeasiblePlacementError(
                    f"preplaced nodes {i} and {j} are within r_th = {r_th} m already"
                )
    out: list[Point2D] = []
    for i in range(total):
        for _ in range(max_attempts):
            p = _draw_point(area, rng)
            if all(p.distance_to(q) > r_th for q in anchors):
                anchors.append(p)
                out.append(p)
                break
        else:
            raise InfeasiblePlacementError(
                f"could not place node {i} after {max_attempts} attempts "
                f"with r_th = {r_th} m",
                node_index=i,
            )
    return out


def sample_forbidden_area_layout(
    n_donors: int,
    n_children: int,
    area: DiskRegion,
    forbidden,
    max_attempts: int,
    rng: np.random.Generator,
) -> list[Point2D]:
    """Uniform placement with keep-out disks: any draw strictly inside a
    forbidden disk is redrawn. Disk boundaries count as outside."""
    total = n_donors + n_children
    if total < 1:
        raise ValueError("need at least one node to place")
    forbidden = tuple(forbidden)
    out: list[Point2D] = []
    for i in range(total):
        for _ in range(max_attempts):
            p = _draw_point(area, rng)
            if not any(disk.strictly_contains(p) for disk in forbidden):
                out.append(p)
                break
        else:
            raise InfeasiblePlacementError(
                f"could not place node {i} outside the forbidden areas "
                f"after {max_attempts} attempts",
                node_index=i,
            )
    return out


def _sample_layout(
    constraint: PlacementConstraint,
    deployment: DeploymentSpec,
    config: OptimizerConfig,
    rng: np.random.Generator,
) -> tuple[tuple[Point2D, ...], tuple[Point2D, ...]]:
    """One candidate: (donors, children), honoring fixed donors."""
    fixed = config.donors_fixed
    if fixed is not None and len(fixed) != deployment.n_donors:
        raise ValueError(
            f"donors_fixed has {len(fixed)} positions, deployment wants "
            f"{deployment.n_donors}"
        )
    if constraint.kind == "min-distance":
        if fixed is not None:
            children = sample_min_distance_layout(
                0,
                deployment.n_children,
                deployment.area,
                constraint.r_th,
                config.max_resample_attempts,
                rng,
                preplaced=fixed,
            )
            return tuple(fixed), tuple(children)
        pts = sample_min_distance_layout(
            deployment.n_donors,
            deployment.n_children,
            deployment.area,
            constraint.r_th,
            config.max_resample_attempts,
            rng,
        )
    else:
        if fixed is not None:
            children = sample_forbidden_area_layout(
                0,
                deployment.n_children,
                deployment.area,
                constraint.forbidden,
                config.max_resample_attempts,
                rng,
            )
            return tuple(fixed), tuple(children)
        pts = sample_forbidden_area_layout(
            deployment.n_donors,
            deployment.n_children,
            deployment.area,
            constraint.forbidden,
            config.max_resample_attempts,
            rng,
        )
    return tuple(pts[: deployment.n_donors]), tuple(pts[deployment.n_donors:])


def optimize_placement(
    constraint: PlacementConstraint,
    deployment: DeploymentSpec,
    radio: RadioConfig,
    chan: ChannelModel,
    config: OptimizerConfig,
    master_seed: int,
    eval_seed=None,
) -> PlacementResult:
    """Best-of-N search: draw independent feasible layouts, score each with
    the coverage estimator, keep the argmax (ties to the earliest
    iteration).

    All candidates share one evaluation seed: derived from master_seed by
    default, or passed explicitly to score candidates on a chosen
    environment draw. Candidate seeds are a prefix-stable sequence, so a
    run with larger n_iterations reproduces the smaller run's candidates
    and its result can only improve.

    Under stop_mode "no-improvement-window" the search ends early once
    `window` consecutive candidates fail to improve the best coverage;
    n_iterations stays the hard cap.
    """
    constraint.validate_for(deployment.area)
    root = fresh_seed_sequence(master_seed)
    eval_ss, candidate_root = root.spawn(2)
    if eval_seed is None:
        eval_seed = eval_ss
    candidate_seeds = candidate_root.spawn(config.n_iterations)

    best_donors: tuple[Point2D, ...] | None = None
    best_children: tuple[Point2D, ...] = ()
    best_cov = -1.0
    history: list[tuple[int, float]] = []
    since_improvement = 0
    for it, cand_ss in enumerate(candidate_seeds):
        rng = np.random.default_rng(cand_ss)
        donors, children = _sample_layout(constraint, deployment, config, rng)
        template = deployment.template(donors, children)
        cov = evaluate_topology(
            template, radio, chan, config.mc_trials_per_candidate, eval_seed
        )
        history.append((it, cov))
        if cov > best_cov:
            best_cov = cov
            best_donors, best_children = donors, children
            since_improvement = 0
        else:
            since_improvement += 1
        if (
            config.stop_mode == "no-improvement-window"
            and since_improvement >= config.window
        ):
            break
    return PlacementResult(
        locations=best_donors + best_children,
        n_donors=deployment.n_donors,
        coverage=best_cov,
        candidate_history=tuple(history),
    )


def baseline_hexagonal(n_donors: int, n_children: int, area: DiskRegion) -> list[Point2D]:
    """Deterministic lattice baseline; the first n_donors points, starting
    at the area center, are the donors."""
    if n_donors < 1:
        raise ValueError("need at least one donor")
    return hexagonal_layout(n_donors + n_children, area)


def baseline_random(
    n_donors: int,
    n_children: int,
    area: DiskRegion,
    rng: np.random.Generator,
    forbidden=(),
    max_attempts: int = DEFAULT_MAX_RESAMPLE_ATTEMPTS,
) -> list[Point2D]:
    """Unoptimized placement: uniform draws, rejected out of any forbidden
    disks, with no coverage evaluation."""
    return sample_forbidden_area_layout(
        n_donors, n_children, area, forbidden, max_attempts, rng
    )
