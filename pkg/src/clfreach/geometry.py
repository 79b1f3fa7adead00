"""SE(3) primitives: rotations, poses, twists, and the weighted pose metric.

Twists are stacked angular-first, xi = (omega, v).  The pose metric weights
the translation block by a factor k > 0 so that metric gradients trade off
meters against radians; the companion projection ``proj_se3_k`` maps an
arbitrary 4x4 matrix to se(3) under the same weighting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadAxisError, NotRotationError, NotSe3Error

# Default translation-vs-rotation weighting of the pose metric.
DEFAULT_NORM_WEIGHT = 5.0

# Max |R R^T - I| entry tolerated before re-orthonormalization kicks in;
# beyond the reject threshold the input is treated as garbage, not drift.
ORTHO_DRIFT_TOL = 1e-9
ORTHO_REJECT_TOL = 1e-6

SE3_TOL = 1e-9


def skew(w) -> np.ndarray:
    """3-vector -> skew-symmetric matrix with skew(w) @ x == cross(w, x)."""
    x, y, z = np.asarray(w, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def unskew(m: np.ndarray) -> np.ndarray:
    """Extract the 3-vector from the antisymmetric part of a 3x3 matrix."""
    a = 0.5 * (np.asarray(m, dtype=float) - np.asarray(m, dtype=float).T)
    return np.array([a[2, 1], a[0, 2], a[1, 0]])


def orthonormalized(r: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix (polar projection via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(r, dtype=float))
    d = np.eye(3)
    d[2, 2] = np.sign(np.linalg.det(u @ vt))
    return u @ d @ vt


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Pose:
    """Rigid transform: 3x3 rotation plus translation in meters.

    The rotation is validated on construction: drift up to ORTHO_REJECT_TOL
    is repaired by polar projection, anything worse raises NotRotationError.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).reshape(-1)
        if r.shape != (3, 3):
            raise NotRotationError(f"rotation must be 3x3, got {r.shape}")
        if t.shape != (3,):
            raise NotRotationError(f"translation must be a 3-vector, got {t.shape}")
        defect = np.max(np.abs(r.T @ r - np.eye(3)))
        det = np.linalg.det(r)
        if defect > ORTHO_REJECT_TOL or det < 0.0:
            raise NotRotationError(
                f"not a rotation: orthogonality defect {defect:.3g}, det {det:.6f}"
            )
        if defect > ORTHO_DRIFT_TOL or abs(det - 1.0) > ORTHO_DRIFT_TOL:
            r = orthonormalized(r)
        object.__setattr__(self, "rotation", _frozen(r))
        object.__setattr__(self, "translation", _frozen(t))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4) or np.max(np.abs(m[3] - np.array([0, 0, 0, 1.0]))) > 1e-9:
            raise NotRotationError("expected homogeneous 4x4 with bottom row (0,0,0,1)")
        return cls(m[:3, :3], m[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)

    def apply(self, p) -> np.ndarray:
        """Transform a point (or an (n,3) stack of points)."""
        p = np.asarray(p, dtype=float)
        return p @ self.rotation.T + self.translation


@dataclass(frozen=True)
class Twist:
    """se(3) element with vector readout (omega, v): rad/s and m/s."""

    omega: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", _frozen(np.asarray(self.omega).reshape(3)))
        object.__setattr__(self, "vel", _frozen(np.asarray(self.vel).reshape(3)))

    @classmethod
    def from_vector(cls, xi) -> "Twist":
        xi = np.asarray(xi, dtype=float).reshape(6)
        return cls(xi[:3], xi[3:])

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.omega, self.vel])


def hat(xi) -> np.ndarray:
    """6-vector (omega, v) -> 4x4 se(3) matrix [[skew(omega), v], [0, 0]]."""
    xi = np.asarray(xi, dtype=float).reshape(6)
    m = np.zeros((4, 4))
    m[:3, :3] = skew(xi[:3])
    m[:3, 3] = xi[3:]
    return m


def vee(xi_mat: np.ndarray) -> np.ndarray:
    """4x4 se(3) matrix -> 6-vector (omega, v); inverse of hat.

    Raises NotSe3Error unless the top-left block is skew-symmetric and the
    bottom row is zero, both within SE3_TOL.
    """
    m = np.asarray(xi_mat, dtype=float)
    if m.shape != (4, 4):
        raise NotSe3Error(f"expected 4x4, got {m.shape}")
    a = m[:3, :3]
    if np.max(np.abs(a + a.T)) > SE3_TOL:
        raise NotSe3Error("top-left block is not skew-symmetric")
    if np.max(np.abs(m[3])) > SE3_TOL:
        raise NotSe3Error("bottom row is not zero")
    return np.concatenate([unskew(a), m[:3, 3]])


def rot_axis_angle(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit axis."""
    axis = np.asarray(axis, dtype=float).reshape(3)
    if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
        raise BadAxisError(f"axis norm {np.linalg.norm(axis):.12f} != 1")
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def weighted_frob_dist_sq(a: Pose, b: Pose, k: float = DEFAULT_NORM_WEIGHT) -> float:
    """||R_a - R_b||_F^2 + k * ||t_a - t_b||^2 (block-weighted pose metric)."""
    if k <= 0.0:
        raise ValueError(f"norm weight must be positive, got {k}")
    dr = a.rotation - b.rotation
    dt = a.translation - b.translation
    return float(np.sum(dr * dr) + k * np.dot(dt, dt))


def proj_se3_k(d: np.ndarray, k: float = DEFAULT_NORM_WEIGHT) -> np.ndarray:
    """Project an arbitrary 4x4 matrix onto se(3) under the k-weighted metric.

    Returns [[(D11 - D11^T)/2, k*D12], [0, 0]]: the skew part of the rotation
    block and the k-scaled translation column.
    """
    if k <= 0.0:
        raise ValueError(f"norm weight must be positive, got {k}")
    d = np.asarray(d, dtype=float)
    out = np.zeros((4, 4))
    out[:3, :3] = 0.5 * (d[:3, :3] - d[:3, :3].T)
    out[:3, 3] = k * d[:3, 3]
    return out


def pose_to_json(p: Pose) -> dict:
    """Pose -> {"r": 9 row-major floats, "t": 3 floats}."""
    return {"r": [float(x) for x in p.rotation.reshape(-1)],
            "t": [float(x) for x in p.translation]}


def pose_from_json(obj: dict) -> Pose:
    r = np.asarray(obj["r"], dtype=float).reshape(3, 3)
    return Pose(r, np.asarray(obj["t"], dtype=float))
