"""Reaching controller: goal resolution, Lyapunov value/gradient, velocity law.

The scalar objective is half the weighted squared pose distance to the goal
nearest the end-effector within its symmetry family.  Its metric gradient is
the se(3) projection of H^T (H - G); the control solves the body Jacobian
against the negated gradient, so the closed loop descends the objective.

Directional derivatives pair a gradient twist g with a body twist xi as

    <g, xi> = 2 * g_omega . xi_omega + g_v . xi_v

(the factor 2 comes from tr(A^T B) = 2 a.b for skew matrices); dropping it
silently halves the rotational control.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from . import kinematics
from .errors import EmptyGoalSetError
from .geometry import (
    DEFAULT_NORM_WEIGHT,
    Pose,
    Twist,
    pose_from_json,
    pose_to_json,
    rot_axis_angle,
    skew,
    weighted_frob_dist_sq,
)

# Gradient magnitude below which the pose sits at a critical point (goal or
# antipodal-rotation saddle).
STALL_GRAD_TOL = 1e-8
STALL_PERTURB_ANGLE = 0.01

# 26 lattice directions (3x3x3 cube minus center) probed to escape the saddle.
_LATTICE_26 = np.array([
    v / np.linalg.norm(v)
    for v in (np.array(ijk, dtype=float) for ijk in product((-1, 0, 1), repeat=3))
    if np.any(v)
])


@dataclass(frozen=True)
class DiscreteGoals:
    """Finite list of admissible grasp poses."""

    poses: tuple

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if not self.poses:
            raise EmptyGoalSetError("discrete goal set is empty")


@dataclass(frozen=True)
class AxialGoals:
    """One-parameter family base @ Rot(axis, phi), axis in the base body frame."""

    base: Pose
    axis: np.ndarray

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        n = np.linalg.norm(axis)
        if abs(n - 1.0) > 1e-9:
            raise EmptyGoalSetError(f"axial axis must be unit length, norm {n}")
        axis = axis.copy()
        axis.setflags(write=False)
        object.__setattr__(self, "axis", axis)


@dataclass(frozen=True)
class UnionGoals:
    """Union of goal sets; resolution recurses and keeps the overall minimum."""

    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise EmptyGoalSetError("union goal set is empty")


GoalSet = DiscreteGoals | AxialGoals | UnionGoals


@dataclass(frozen=True)
class ClfParams:
    k: float = DEFAULT_NORM_WEIGHT
    grasp_threshold: float = 0.005

    def __post_init__(self):
        if self.k <= 0 or self.grasp_threshold <= 0:
            raise ValueError("k and grasp_threshold must be positive")


@dataclass(frozen=True)
class ControlOutput:
    """One control evaluation: joint velocity, value, resolved goal, gradient."""

    u: np.ndarray
    value: float
    resolved_goal: Pose
    grad: Twist
    stalled: bool = False


def transform_goalset(x: Pose, gs: GoalSet) -> GoalSet:
    """Express an object-frame goal set in the world via the object pose x."""
    if isinstance(gs, DiscreteGoals):
        return DiscreteGoals(tuple(x @ g for g in gs.poses))
    if isinstance(gs, AxialGoals):
        # The axis lives in the base's body frame, so it is unchanged.
        return AxialGoals(x @ gs.base, gs.axis)
    return UnionGoals(tuple(transform_goalset(x, m) for m in gs.members))


def _resolve_axial(h: Pose, gs: AxialGoals, k: float) -> tuple[Pose, float]:
    # Minimizing ||R_H - R_G0 Rot(a, phi)||_F^2 maximizes
    # f(phi) = tr(Rot(a, phi)^T Q) = tr(Q) + c1 sin(phi) + c2 (1 - cos(phi))
    # with Q = R_G0^T R_H, c1 = -tr([a]x Q), c2 = tr([a]x^2 Q).
    q = gs.base.rotation.T @ h.rotation
    ax = skew(gs.axis)
    c1 = -np.trace(ax @ q)
    c2 = np.trace(ax @ ax @ q)
    if abs(c1) < 1e-15 and abs(c2) < 1e-15:
        phi = 0.0
    else:
        phi = np.arctan2(c1, -c2)
        # Two stationary points; keep the one with the larger f.
        alt = phi + np.pi if phi <= 0 else phi - np.pi
        def f(p):
            return c1 * np.sin(p) + c2 * (1.0 - np.cos(p))
        if f(alt) > f(phi):
            phi = alt
    best = Pose(gs.base.rotation @ rot_axis_angle(gs.axis, phi), gs.base.translation)
    return best, weighted_frob_dist_sq(h, best, k)


def _resolve(h: Pose, gs: GoalSet, k: float) -> tuple[Pose, float]:
    if isinstance(gs, DiscreteGoals):
        best, best_d = None, np.inf
        for g in gs.poses:
            d = weighted_frob_dist_sq(h, g, k)
            if d < best_d:
                best, best_d = g, d
        return best, best_d
    if isinstance(gs, AxialGoals):
        return _resolve_axial(h, gs, k)
    best, best_d = None, np.inf
    for m in gs.members:
        g, d = _resolve(h, m, k)
        if d < best_d:
            best, best_d = g, d
    return best, best_d


def resolve_goal(h: Pose, gs: GoalSet, k: float = DEFAULT_NORM_WEIGHT) -> Pose:
    """Goal pose in gs minimizing the weighted distance to h.

    Discrete sets break ties toward the lowest index; the axial family is
    resolved in closed form; unions recurse.
    """
    return _resolve(h, gs, k)[0]


def clf_value(h: Pose, g: Pose, k: float = DEFAULT_NORM_WEIGHT) -> float:
    """Half the weighted squared pose distance."""
    return 0.5 * weighted_frob_dist_sq(h, g, k)


def clf_gradient(h: Pose, g: Pose, k: float = DEFAULT_NORM_WEIGHT) -> Twist:
    """Metric gradient of clf_value at h, as a body twist.

    omega part: unskewed antisymmetric part of I - R_H^T R_G;
    v part: k * R_H^T (t_H - t_G).
    """
    m = np.eye(3) - h.rotation.T @ g.rotation
    omega = 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    v = k * (h.rotation.T @ (h.translation - g.translation))
    return Twist(omega, v)


def grad_pairing(grad: Twist, xi: Twist) -> float:
    """Directional-derivative pairing <g, xi> = 2 g_w.xi_w + g_v.xi_v."""
    return float(2.0 * grad.omega @ xi.omega + grad.vel @ xi.vel)


def descent_rate(grad: Twist) -> float:
    """|dV/dt| along the exact closed loop: 2||g_w||^2 + ||g_v||^2."""
    return float(2.0 * grad.omega @ grad.omega + grad.vel @ grad.vel)


def _escape_axis(h: Pose, gs: GoalSet, k: float) -> np.ndarray:
    """Probe 26 lattice directions for the body rotation that descends most."""
    best_axis, best_v = _LATTICE_26[0], np.inf
    for axis in _LATTICE_26:
        h_probe = Pose(h.rotation @ rot_axis_angle(axis, STALL_PERTURB_ANGLE),
                       h.translation)
        _, d = _resolve(h_probe, gs, k)
        if 0.5 * d < best_v:
            best_axis, best_v = axis, 0.5 * d
    return best_axis


def velocity_control(chain, q, gs: GoalSet, params: ClfParams = ClfParams(),
                     damping: float = kinematics.DEFAULT_DAMPING,
                     sigma_min_threshold: float = kinematics.DEFAULT_SIGMA_MIN,
                     stall_escape: bool = True) -> ControlOutput:
    """Joint-velocity control toward the nearest goal in gs.

    Solves J(q) qdot = -grad and clamps to the chain's speed caps.  At the
    antipodal-rotation saddle (zero gradient, positive value) the control
    would stall; with stall_escape a small body rotation about the best of 26
    probe axes is commanded instead and the output is flagged.
    """
    q = chain.check_limits(q)
    h = chain.forward(q, check=False)
    goal, dist_sq = _resolve(h, gs, params.k)
    value = 0.5 * dist_sq
    grad = clf_gradient(h, goal, params.k)
    jac = chain.body_jacobian(q)
    gvec = grad.vector
    stalled = False
    if np.linalg.norm(gvec) < STALL_GRAD_TOL and value > params.grasp_threshold:
        stalled = True
        if stall_escape:
            axis = _escape_axis(h, gs, params.k)
            xi = np.concatenate([STALL_PERTURB_ANGLE * axis, np.zeros(3)])
        else:
            xi = np.zeros(6)
    else:
        xi = -gvec
    u = kinematics.solve_joint_velocity(jac, xi, damping, sigma_min_threshold,
                                        speed_cap=chain.speed_cap)
    return ControlOutput(u=u, value=value, resolved_goal=goal, grad=grad,
                         stalled=stalled)


def goalset_to_json(gs: GoalSet) -> dict:
    if isinstance(gs, DiscreteGoals):
        return {"discrete": [pose_to_json(p) for p in gs.poses]}
    if isinstance(gs, AxialGoals):
        return {"axial": {"base": pose_to_json(gs.base),
                          "axis": [float(x) for x in gs.axis]}}
    return {"union": [goalset_to_json(m) for m in gs.members]}


def goalset_from_json(obj: dict) -> GoalSet:
    if "discrete" in obj:
        return DiscreteGoals(tuple(pose_from_json(p) for p in obj["discrete"]))
    if "axial" in obj:
        return AxialGoals(pose_from_json(obj["axial"]["base"]),
                          np.asarray(obj["axial"]["axis"], dtype=float))
    if "union" in obj:
        return UnionGoals(tuple(goalset_from_json(m) for m in obj["union"]))
    raise EmptyGoalSetError(f"unrecognized goal-set record: {sorted(obj)}")
