"""Serial-chain forward kinematics, body Jacobians, and joint-velocity solves.

Two chain flavors share one interface:

* ``DhChain`` -- six revolute joints described by Denavit-Hartenberg rows,
  the production model (a UR5 table ships as package data).
* ``TwistChain`` -- a test chart where the pose is the matrix exponential of
  the hatted joint vector.  Its body Jacobian equals the identity at the zero
  configuration, which makes controller identities exactly checkable.

Jacobians are body-fixed and angular-first: hat(J @ qdot) = H^-1 dH/dt.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
import scipy.linalg

from .errors import ConfigError, JointLimitError, SingularNoDampingError
from .geometry import Pose, hat, unskew

N_JOINTS = 6

# Damped-least-squares defaults used when a velocity solve meets a singular
# Jacobian; overridable per call.
DEFAULT_DAMPING = 0.05
DEFAULT_SIGMA_MIN = 1e-4


def dh_transform(a: float, d: float, alpha: float, theta: float) -> np.ndarray:
    """Homogeneous transform for one DH row: Rz(theta) Tz(d) Tx(a) Rx(alpha)."""
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array([
        [ct, -st * ca, st * sa, a * ct],
        [st, ct * ca, -ct * sa, a * st],
        [0.0, sa, ca, d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _vec6(x, name: str) -> np.ndarray:
    out = np.array(x, dtype=float).reshape(-1)
    if out.shape != (N_JOINTS,):
        raise ConfigError(f"{name} must have {N_JOINTS} entries, got {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DhChain:
    """Six-revolute serial chain: DH rows plus joint limits and speed caps."""

    a: np.ndarray
    d: np.ndarray
    alpha: np.ndarray
    theta_offset: np.ndarray
    limit_lo: np.ndarray
    limit_hi: np.ndarray
    speed_cap: np.ndarray

    def __post_init__(self):
        for name in ("a", "d", "alpha", "theta_offset", "limit_lo", "limit_hi", "speed_cap"):
            object.__setattr__(self, name, _vec6(getattr(self, name), name))
        if np.any(self.limit_hi <= self.limit_lo):
            raise ConfigError("joint limits must satisfy lo < hi")
        if np.any(self.speed_cap <= 0):
            raise ConfigError("speed caps must be positive")

    def check_limits(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(N_JOINTS)
        if np.any(q < self.limit_lo - 1e-12) or np.any(q > self.limit_hi + 1e-12):
            raise JointLimitError(f"joint configuration {q} outside limits")
        return q

    def _frames(self, q: np.ndarray) -> list[np.ndarray]:
        """Cumulative transforms T_0..T_6 (base frame first)."""
        frames = [np.eye(4)]
        t = np.eye(4)
        for i in range(N_JOINTS):
            t = t @ dh_transform(self.a[i], self.d[i], self.alpha[i],
                                 q[i] + self.theta_offset[i])
            frames.append(t)
        return frames

    def forward(self, q, check: bool = True) -> Pose:
        """End-effector pose as the product of the six DH transforms."""
        q = self.check_limits(q) if check else np.asarray(q, dtype=float)
        return Pose.from_matrix(self._frames(q)[-1])

    def forward_batch(self, qs: np.ndarray) -> np.ndarray:
        """Vectorized forward kinematics: (n, 6) -> (n, 4, 4), no limit check."""
        qs = np.asarray(qs, dtype=float)
        n = qs.shape[0]
        t = np.broadcast_to(np.eye(4), (n, 4, 4)).copy()
        for i in range(N_JOINTS):
            th = qs[:, i] + self.theta_offset[i]
            ct, st = np.cos(th), np.sin(th)
            ca, sa = np.cos(self.alpha[i]), np.sin(self.alpha[i])
            ai = np.zeros((n, 4, 4))
            ai[:, 0, 0] = ct
            ai[:, 0, 1] = -st * ca
            ai[:, 0, 2] = st * sa
            ai[:, 0, 3] = self.a[i] * ct
            ai[:, 1, 0] = st
            ai[:, 1, 1] = ct * ca
            ai[:, 1, 2] = -ct * sa
            ai[:, 1, 3] = self.a[i] * st
            ai[:, 2, 1] = sa
            ai[:, 2, 2] = ca
            ai[:, 2, 3] = self.d[i]
            ai[:, 3, 3] = 1.0
            t = np.einsum("nij,njk->nik", t, ai)
        return t

    def body_jacobian(self, q) -> np.ndarray:
        """Geometric Jacobian in the end-effector frame, rows (omega, v)."""
        q = self.check_limits(q)
        frames = self._frames(q)
        r_ee = frames[-1][:3, :3]
        p_ee = frames[-1][:3, 3]
        jac = np.zeros((6, 6))
        for i in range(N_JOINTS):
            z = frames[i][:3, 2]
            p = frames[i][:3, 3]
            jac[:3, i] = r_ee.T @ z
            jac[3:, i] = r_ee.T @ np.cross(z, p_ee - p)
        return jac


@dataclass(frozen=True)
class TwistChain:
    """Test chart: forward(q) = expm(hat(q + offset)).

    A six-revolute DH chain cannot realize an identity body Jacobian, so
    controller identities that want J(0) = I use this chart instead.  The
    Jacobian is exact (Frechet derivative of expm), invertible while the
    rotation part stays away from 2*pi.
    """

    theta_offset: np.ndarray
    limit_lo: np.ndarray
    limit_hi: np.ndarray
    speed_cap: np.ndarray

    def __post_init__(self):
        for name in ("theta_offset", "limit_lo", "limit_hi", "speed_cap"):
            object.__setattr__(self, name, _vec6(getattr(self, name), name))

    def check_limits(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(N_JOINTS)
        if np.any(q < self.limit_lo - 1e-12) or np.any(q > self.limit_hi + 1e-12):
            raise JointLimitError(f"joint configuration {q} outside limits")
        return q

    def forward(self, q, check: bool = True) -> Pose:
        q = self.check_limits(q) if check else np.asarray(q, dtype=float)
        return Pose.from_matrix(scipy.linalg.expm(hat(q + self.theta_offset)))

    def forward_batch(self, qs: np.ndarray) -> np.ndarray:
        return np.stack([self.forward(q, check=False).matrix for q in np.asarray(qs)])

    def body_jacobian(self, q) -> np.ndarray:
        q = self.check_limits(q)
        a = hat(q + self.theta_offset)
        h = scipy.linalg.expm(a)
        h_inv = np.linalg.inv(h)
        jac = np.zeros((6, 6))
        for i in range(N_JOINTS):
            e = np.zeros(6)
            e[i] = 1.0
            _, dh = scipy.linalg.expm_frechet(a, hat(e))
            body = h_inv @ dh
            jac[:3, i] = unskew(body[:3, :3])
            jac[3:, i] = body[:3, 3]
        return jac


Chain = DhChain | TwistChain


def identity6_chain(limit: float = 4.0 * np.pi, speed_cap: float = 1.0) -> TwistChain:
    """Exponential-chart chain with J(0) = I exactly."""
    z = np.zeros(N_JOINTS)
    return TwistChain(z, z - limit, z + limit, z + speed_cap)


def chain_from_dict(obj: dict) -> Chain:
    kind = obj.get("kind", "dh")
    joints = obj.get("joints")
    if not isinstance(joints, list) or len(joints) != N_JOINTS:
        raise ConfigError(f"chain needs a 'joints' list of {N_JOINTS} records")

    def col(key, default=None):
        vals = []
        for j in joints:
            if key not in j and default is None:
                raise ConfigError(f"chain joint record missing '{key}'")
            vals.append(float(j.get(key, default)))
        return np.array(vals)

    if kind == "dh":
        return DhChain(
            a=col("a"), d=col("d"), alpha=col("alpha"),
            theta_offset=col("theta_offset", 0.0),
            limit_lo=col("limit_lo"), limit_hi=col("limit_hi"),
            speed_cap=col("speed_cap", 1.0),
        )
    if kind == "twist":
        return TwistChain(
            theta_offset=col("theta_offset", 0.0),
            limit_lo=col("limit_lo"), limit_hi=col("limit_hi"),
            speed_cap=col("speed_cap", 1.0),
        )
    raise ConfigError(f"unknown chain kind {kind!r}")


def chain_to_dict(chain: Chain) -> dict:
    joints = []
    for i in range(N_JOINTS):
        rec = {
            "theta_offset": float(chain.theta_offset[i]),
            "limit_lo": float(chain.limit_lo[i]),
            "limit_hi": float(chain.limit_hi[i]),
            "speed_cap": float(chain.speed_cap[i]),
        }
        if isinstance(chain, DhChain):
            rec.update(a=float(chain.a[i]), d=float(chain.d[i]),
                       alpha=float(chain.alpha[i]))
        joints.append(rec)
    return {"kind": "dh" if isinstance(chain, DhChain) else "twist", "joints": joints}


def load_chain(path) -> Chain:
    with open(path) as f:
        return chain_from_dict(json.load(f))


def ur5_chain() -> DhChain:
    """Default chain: classic UR5 DH table shipped as package data."""
    text = resources.files("clfreach.data").joinpath("ur5.json").read_text()
    return chain_from_dict(json.loads(text))


def solve_joint_velocity(jac: np.ndarray, xi, damping: float = DEFAULT_DAMPING,
                         sigma_min_threshold: float = DEFAULT_SIGMA_MIN,
                         speed_cap=None) -> np.ndarray:
    """Solve J qdot = xi, falling back to damped least squares near singularity.

    Args:
        jac: 6x6 body Jacobian.
        xi: desired body twist, 6-vector (omega, v).
        damping: lambda for the damped solve; 0 disables the fallback.
        sigma_min_threshold: smallest singular value treated as well-conditioned.
        speed_cap: optional per-joint magnitude caps; the solution is scaled
            uniformly (direction preserved) to respect them.

    Raises:
        SingularNoDampingError: sigma_min below threshold and damping == 0.
    """
    jac = np.asarray(jac, dtype=float)
    xi = np.asarray(xi, dtype=float).reshape(6)
    if not np.any(xi):
        return np.zeros(6)
    sigma_min = np.linalg.svd(jac, compute_uv=False)[-1]
    if sigma_min >= sigma_min_threshold:
        qdot = np.linalg.solve(jac, xi)
    elif damping > 0.0:
        qdot = jac.T @ np.linalg.solve(jac @ jac.T + damping**2 * np.eye(6), xi)
    else:
        raise SingularNoDampingError(
            f"sigma_min {sigma_min:.3e} < {sigma_min_threshold:.3e} with no damping")
    if speed_cap is not None:
        ratio = np.max(np.abs(qdot) / np.asarray(speed_cap, dtype=float))
        if ratio > 1.0:
            qdot = qdot / ratio
    return qdot
