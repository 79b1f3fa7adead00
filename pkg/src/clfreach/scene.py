"""Tabletop world model: object categories, scene sampling, perturbations.

Objects are box footprints standing on the table plane (object frame origin
at the bottom center, box spanning +-hx, +-hy, [0, 2*hz]).  Scene sampling
rejects overlapping placements; initial end-effector configurations come from
joint-space rejection against a quarter-sphere shell and a downward tool cone.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .controller import (
    AxialGoals,
    DiscreteGoals,
    GoalSet,
    UnionGoals,
    transform_goalset,
)
from .errors import (
    ConfigError,
    OverlapViolationError,
    PlacementFailureError,
    SamplingExhaustedError,
    UnknownInstanceError,
)
from .geometry import Pose, rot_axis_angle

_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ObjectCategory:
    """Category template: grasp family in the object frame plus geometry.

    tolerance is the positional success radius for a grasp attempt; the
    half_extents define the box footprint used for overlap tests and labels.
    """

    name: str
    goals: GoalSet
    tolerance: float
    half_extents: np.ndarray

    def __post_init__(self):
        ext = np.asarray(self.half_extents, dtype=float).reshape(3).copy()
        if self.tolerance < 0 or np.any(ext <= 0):
            raise ConfigError("tolerance must be >= 0 and extents positive")
        ext.setflags(write=False)
        object.__setattr__(self, "half_extents", ext)


@dataclass(frozen=True)
class SceneInstance:
    id: int
    category: ObjectCategory
    pose: Pose
    is_distractor: bool = False

    def world_goals(self) -> GoalSet:
        return transform_goalset(self.pose, self.category.goals)

    def center(self) -> np.ndarray:
        """Box center in the world (origin sits at the bottom face)."""
        return self.pose.apply(np.array([0.0, 0.0, self.category.half_extents[2]]))

    def corners(self) -> np.ndarray:
        """The 8 box corners in the world, (8, 3)."""
        hx, hy, hz = self.category.half_extents
        pts = np.array([[sx * hx, sy * hy, z]
                        for sx in (-1, 1) for sy in (-1, 1) for z in (0.0, 2 * hz)])
        return self.pose.apply(pts)


@dataclass(frozen=True)
class Workspace:
    """Sampling region for initial end-effector placement.

    The translation must land in the quarter-sphere shell around ``center``
    (radius inside ``radius_band``, x > 0 toward the table, z above ``min_z``)
    and the tool z-axis inside the downward cone of half-angle
    ``cone_half_angle``.  Radii are drawn uniform over the band; a candidate
    is accepted only within ``radius_window`` of the drawn radius, which keeps
    the accepted radii uniform rather than joint-space weighted.
    """

    radius_band: tuple = (0.35, 0.75)
    cone_half_angle: float = np.deg2rad(60.0)
    table_bounds: tuple = ((0.30, 0.70), (-0.25, 0.25))
    center: tuple = (0.0, 0.0, 0.0)
    min_z: float = 0.10
    radius_window: float = 0.005


@dataclass(frozen=True)
class Scene:
    instances: tuple
    table_height: float
    workspace: Workspace

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        ids = [i.id for i in self.instances]
        if len(ids) != len(set(ids)):
            raise ConfigError(f"duplicate instance ids: {sorted(ids)}")

    def targets(self) -> tuple:
        return tuple(i for i in self.instances if not i.is_distractor)

    def get(self, instance_id: int) -> SceneInstance:
        for inst in self.instances:
            if inst.id == instance_id:
                return inst
        raise UnknownInstanceError(instance_id)


@dataclass(frozen=True)
class AddInstance:
    instance: SceneInstance


@dataclass(frozen=True)
class RemoveInstance:
    instance_id: int


@dataclass(frozen=True)
class MoveInstance:
    instance_id: int
    pose: Pose


@dataclass(frozen=True)
class PerturbationEvent:
    time: float
    action: AddInstance | RemoveInstance | MoveInstance

    def __post_init__(self):
        if self.time < 0:
            raise ConfigError("event time must be >= 0")


def footprints_overlap(a: SceneInstance, b: SceneInstance) -> bool:
    """Axis-aligned xy footprint test (yaw-conservative by design)."""
    da = np.abs(a.pose.translation[:2] - b.pose.translation[:2])
    ea = a.category.half_extents[:2] + b.category.half_extents[:2]
    return bool(da[0] < ea[0] and da[1] < ea[1])


def _check_disjoint(instances) -> None:
    items = list(instances)
    for i, a in enumerate(items):
        for b in items[i + 1:]:
            if footprints_overlap(a, b):
                raise OverlapViolationError(f"instances {a.id} and {b.id} overlap")


@dataclass(frozen=True)
class SceneSampleConfig:
    target_category: ObjectCategory
    max_instances: int = 3
    instance_count: int | None = None  # None -> uniform over {1..max_instances}
    distractor_category: ObjectCategory | None = None
    distractor_range: tuple = (1, 3)
    table_height: float = 0.0
    workspace: Workspace = Workspace()
    camera: Any = None  # optional CameraModel; targets must project into its frame
    max_attempts: int = 1000

    def __post_init__(self):
        if self.max_instances < 1:
            raise ConfigError("max_instances must be >= 1")
        if self.instance_count is not None and self.instance_count < 1:
            raise ConfigError("instance_count must be >= 1")


def _in_frustum(camera, inst: SceneInstance) -> bool:
    from .perception import project_point  # local import avoids a cycle

    px = project_point(camera, inst.center())
    return px is not None and 0 <= px[0] < camera.width and 0 <= px[1] < camera.height


def _place(cfg: SceneSampleConfig, rng, category, placed, inst_id, distractor,
           require_visible) -> SceneInstance:
    (xlo, xhi), (ylo, yhi) = cfg.workspace.table_bounds
    for _ in range(cfg.max_attempts):
        x = rng.uniform(xlo, xhi)
        y = rng.uniform(ylo, yhi)
        yaw = rng.uniform(-np.pi, np.pi)
        pose = Pose(rot_axis_angle(_Z, yaw), np.array([x, y, cfg.table_height]))
        cand = SceneInstance(inst_id, category, pose, is_distractor=distractor)
        if any(footprints_overlap(cand, other) for other in placed):
            continue
        if require_visible and cfg.camera is not None and not _in_frustum(cfg.camera, cand):
            continue
        return cand
    raise PlacementFailureError(
        f"no non-overlapping placement for {category.name} in {cfg.max_attempts} attempts")


def sample_scene(cfg: SceneSampleConfig, rng: np.random.Generator) -> Scene:
    """Randomized scene: uniform target count, uniform poses, no overlaps."""
    if cfg.instance_count is not None:
        count = cfg.instance_count
    else:
        count = int(rng.integers(1, cfg.max_instances + 1))
    placed: list[SceneInstance] = []
    for i in range(count):
        placed.append(_place(cfg, rng, cfg.target_category, placed, i,
                             distractor=False, require_visible=True))
    if cfg.distractor_category is not None:
        lo, hi = cfg.distractor_range
        n_dis = int(rng.integers(lo, hi + 1)) if hi > lo else lo
        for j in range(n_dis):
            placed.append(_place(cfg, rng, cfg.distractor_category, placed,
                                 count + j, distractor=True, require_visible=False))
    return Scene(tuple(placed), cfg.table_height, cfg.workspace)


def sample_initial_joints(chain, workspace: Workspace, rng: np.random.Generator,
                          batch: int = 2048, max_attempts: int = 100000) -> np.ndarray:
    """Joint-space rejection sampling of the initial configuration.

    Draws q uniform within joint limits together with a target radius uniform
    over the band; accepts the first q whose tool translation lies in the
    quarter-sphere shell near that radius and whose tool axis is inside the
    downward cone.
    """
    lo, hi = chain.limit_lo, chain.limit_hi
    r_lo, r_hi = workspace.radius_band
    center = np.asarray(workspace.center, dtype=float)
    cos_cone = np.cos(workspace.cone_half_angle)
    attempts = 0
    while attempts < max_attempts:
        n = min(batch, max_attempts - attempts)
        qs = rng.uniform(lo, hi, size=(n, 6))
        r_target = rng.uniform(r_lo, r_hi, size=n)
        attempts += n
        mats = chain.forward_batch(qs)
        t = mats[:, :3, 3] - center
        r = np.linalg.norm(t, axis=1)
        tool_down = -mats[:, 2, 2]  # dot(tool z-axis, -z)
        ok = (
            (np.abs(r - r_target) <= workspace.radius_window)
            & (r >= r_lo) & (r <= r_hi)
            & (t[:, 0] > 0.0)
            & (t[:, 2] > workspace.min_z)
            & (tool_down >= cos_cone - 1e-12)
        )
        idx = np.flatnonzero(ok)
        if idx.size:
            return qs[idx[0]].copy()
    raise SamplingExhaustedError(f"no acceptable start in {max_attempts} draws")


def apply_event(scene: Scene, event: PerturbationEvent) -> Scene:
    """Pure scene update; re-checks footprint disjointness."""
    action = event.action
    if isinstance(action, AddInstance):
        if any(i.id == action.instance.id for i in scene.instances):
            raise ConfigError(f"instance id {action.instance.id} already present")
        new = scene.instances + (action.instance,)
        _check_disjoint(new)
        return replace(scene, instances=new)
    if isinstance(action, RemoveInstance):
        if not any(i.id == action.instance_id for i in scene.instances):
            raise UnknownInstanceError(action.instance_id)
        new = tuple(i for i in scene.instances if i.id != action.instance_id)
        return replace(scene, instances=new)
    if isinstance(action, MoveInstance):
        if not any(i.id == action.instance_id for i in scene.instances):
            raise UnknownInstanceError(action.instance_id)
        new = tuple(
            replace(i, pose=action.pose) if i.id == action.instance_id else i
            for i in scene.instances
        )
        _check_disjoint(new)
        return replace(scene, instances=new)
    raise ConfigError(f"unknown event action {type(action).__name__}")


def builtin_categories() -> dict:
    """Default category set: mug, spam can, table leg, and a distractor block.

    Mug and can grasps are axial about the object's vertical axis (the mug is
    entered from above, tool point inside the cavity).  The table leg lies
    along its object x-axis; the grasp family is the union of two axial
    families about that long axis, one per gripper flip.
    """
    rx_pi = rot_axis_angle(np.array([1.0, 0.0, 0.0]), np.pi)
    down = Pose(rx_pi, np.zeros(3))

    def at_height(base: Pose, z: float) -> Pose:
        return Pose(base.rotation, np.array([0.0, 0.0, z]))

    mug = ObjectCategory(
        name="mug",
        goals=AxialGoals(at_height(down, 0.06), rx_pi.T @ _Z),
        tolerance=0.01,
        half_extents=np.array([0.045, 0.045, 0.04]),
    )
    spam = ObjectCategory(
        name="spam_can",
        goals=AxialGoals(at_height(down, 0.05), rx_pi.T @ _Z),
        tolerance=0.01,
        half_extents=np.array([0.05, 0.035, 0.04]),
    )
    leg_x = np.array([1.0, 0.0, 0.0])
    flip = down.rotation @ rot_axis_angle(_Z, np.pi)
    leg = ObjectCategory(
        name="table_leg",
        goals=UnionGoals((
            AxialGoals(at_height(down, 0.05), down.rotation.T @ leg_x),
            AxialGoals(Pose(flip, np.array([0.0, 0.0, 0.05])), flip.T @ leg_x),
        )),
        tolerance=0.03,
        half_extents=np.array([0.20, 0.025, 0.025]),
    )
    block = ObjectCategory(
        name="block",
        goals=DiscreteGoals((Pose.identity(),)),
        tolerance=0.01,
        half_extents=np.array([0.03, 0.03, 0.03]),
    )
    return {c.name: c for c in (mug, spam, leg, block)}
