"""6-DOF rigid-body model of the transported object.

State is a 12-vector: inertial position (X, Y, Z), Euler angles
(psi, theta, phi) = (yaw, pitch, roll), body-frame linear velocity
(vx, vy, vz) and body-frame angular velocity (wx, wy, wz).  Inputs are a
wrench: three force components expressed along the inertial axes and
three torques about the body axes, all applied at the center of mass.

Conventions
-----------
* The body-to-inertial rotation is the Z-Y-X product
  Q = Rz(psi) @ Ry(theta) @ Rx(phi).
* Euler-angle rates follow E_dot = W_inv(theta, phi) @ omega, which is
  singular at pitch +/- pi/2; every kinematic operation enforces a
  configurable gimbal margin and raises GimbalProximity beyond it.
* Translation: v_dot = F/m - omega x v.  Rotation: the Euler equation
  with diagonal inertia, omega_dot = J^-1 (tau - omega x (J omega)).
  No gravity term: the carrying agents support the weight.

Integration uses classical fixed-step RK4.  Analytic Jacobians of the
continuous dynamics and of one discrete step are provided for the
gradient-based planner; they are validated against finite differences in
the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Pitch must stay at least this far (rad) from +/- pi/2.
GIMBAL_MARGIN = 0.05


class GimbalProximity(RuntimeError):
    """Raised when pitch approaches the Euler-kinematics singularity."""


def _vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(3).copy()
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    return arr


@dataclass(frozen=True)
class State:
    """Rigid-body state (position, Euler angles, body-frame velocities)."""

    position: np.ndarray
    euler: np.ndarray
    lin_vel_body: np.ndarray
    ang_vel_body: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "position"))
        object.__setattr__(self, "euler", _vec3(self.euler, "euler"))
        object.__setattr__(self, "lin_vel_body", _vec3(self.lin_vel_body, "lin_vel_body"))
        object.__setattr__(self, "ang_vel_body", _vec3(self.ang_vel_body, "ang_vel_body"))

    @classmethod
    def zero(cls) -> "State":
        return cls(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(3))

    @classmethod
    def at_rest(cls, position, yaw: float = 0.0) -> "State":
        return cls(position, np.array([yaw, 0.0, 0.0]), np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, vec) -> "State":
        v = np.asarray(vec, dtype=float).reshape(12)
        return cls(v[0:3], v[3:6], v[6:9], v[9:12])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.euler, self.lin_vel_body, self.ang_vel_body])

    def speed(self) -> float:
        """Inertial speed of the center of mass (norm-preserving rotation)."""
        return float(np.linalg.norm(self.lin_vel_body))


@dataclass(frozen=True)
class Wrench:
    """Force (inertial axes) and torque (body axes) at the center of mass."""

    force: np.ndarray
    torque: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "force", _vec3(self.force, "force"))
        object.__setattr__(self, "torque", _vec3(self.torque, "torque"))

    @classmethod
    def zero(cls) -> "Wrench":
        return cls(np.zeros(3), np.zeros(3))

    @classmethod
    def from_vector(cls, vec) -> "Wrench":
        v = np.asarray(vec, dtype=float).reshape(6)
        return cls(v[0:3], v[3:6])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])

    def __add__(self, other: "Wrench") -> "Wrench":
        return Wrench(self.force + other.force, self.torque + other.torque)

    def __sub__(self, other: "Wrench") -> "Wrench":
        return Wrench(self.force - other.force, self.torque - other.torque)

    def __mul__(self, scale: float) -> "Wrench":
        return Wrench(self.force * scale, self.torque * scale)

    __rmul__ = __mul__


@dataclass(frozen=True)
class BodyParams:
    """Mass, diagonal inertia, and body-frame footprint points."""

    mass: float
    inertia_diag: np.ndarray
    footprint: np.ndarray  # (n, 3) body-frame sample points

    def __post_init__(self):
        object.__setattr__(self, "inertia_diag", _vec3(self.inertia_diag, "inertia_diag"))
        fp = np.atleast_2d(np.asarray(self.footprint, dtype=float)).copy()
        if fp.shape[0] < 1 or fp.shape[1] != 3:
            raise ValueError("footprint must be a non-empty (n, 3) array")
        object.__setattr__(self, "footprint", fp)
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if np.any(self.inertia_diag <= 0.0):
            raise ValueError("inertia components must be positive")

    @classmethod
    def rod(cls, mass: float = 12.0, length: float = 1.0, num_points: int = 5,
            radius: float = 0.15) -> "BodyParams":
        """Uniform rod along the body X axis, sampled at equispaced points.

        The first footprint point (+length/2) is the human's grasp end, the
        last is the robot's end.
        """
        xs = np.linspace(length / 2.0, -length / 2.0, num_points)
        footprint = np.column_stack([xs, np.zeros(num_points), np.zeros(num_points)])
        j_axial = mass * radius**2 / 2.0
        j_trans = mass * (length**2 / 12.0 + radius**2 / 4.0)
        return cls(mass, np.array([j_axial, j_trans, j_trans]), footprint)


@dataclass(frozen=True)
class WrenchBox:
    """Componentwise wrench bounds; always contains the zero wrench."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(6).copy()
        hi = np.asarray(self.upper, dtype=float).reshape(6).copy()
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(lo > 0.0) or np.any(hi < 0.0):
            raise ValueError("wrench box must contain the zero wrench")

    @classmethod
    def symmetric(cls, force: float, torque: float) -> "WrenchBox":
        hi = np.array([force, force, force, torque, torque, torque], dtype=float)
        return cls(-hi, hi)

    def clamp_vector(self, vec) -> np.ndarray:
        return np.clip(np.asarray(vec, dtype=float), self.lower, self.upper)

    def clamp(self, wrench: Wrench) -> Wrench:
        return Wrench.from_vector(self.clamp_vector(wrench.as_vector()))

    def contains(self, wrench: Wrench, atol: float = 0.0) -> bool:
        v = wrench.as_vector()
        return bool(np.all(v >= self.lower - atol) and np.all(v <= self.upper + atol))

    def minkowski_sum(self, other: "WrenchBox") -> "WrenchBox":
        return WrenchBox(self.lower + other.lower, self.upper + other.upper)


# ---------------------------------------------------------------------------
# Kinematic matrices
# ---------------------------------------------------------------------------

def _rz(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rx(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rotation_matrix(euler) -> np.ndarray:
    """Body-to-inertial rotation for euler = (yaw, pitch, roll)."""
    psi, theta, phi = float(euler[0]), float(euler[1]), float(euler[2])
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    cph, sph = math.cos(phi), math.sin(phi)
    return np.array(
        [
            [cps * cth, cps * sth * sph - sps * cph, cps * sth * cph + sps * sph],
            [sps * cth, sps * sth * sph + cps * cph, sps * sth * cph - cps * sph],
            [-sth, cth * sph, cth * cph],
        ]
    )


def rotation_matrices(eulers: np.ndarray) -> np.ndarray:
    """Batched body-to-inertial rotations for an (n, 3) array of Euler triples."""
    e = np.atleast_2d(np.asarray(eulers, dtype=float))
    cps, sps = np.cos(e[:, 0]), np.sin(e[:, 0])
    cth, sth = np.cos(e[:, 1]), np.sin(e[:, 1])
    cph, sph = np.cos(e[:, 2]), np.sin(e[:, 2])
    q = np.empty((e.shape[0], 3, 3))
    q[:, 0, 0] = cps * cth
    q[:, 0, 1] = cps * sth * sph - sps * cph
    q[:, 0, 2] = cps * sth * cph + sps * sph
    q[:, 1, 0] = sps * cth
    q[:, 1, 1] = sps * sth * sph + cps * cph
    q[:, 1, 2] = sps * sth * cph - cps * sph
    q[:, 2, 0] = -sth
    q[:, 2, 1] = cth * sph
    q[:, 2, 2] = cth * cph
    return q


def check_gimbal(euler, margin: float = GIMBAL_MARGIN) -> None:
    theta = float(euler[1])
    if abs(theta) >= math.pi / 2.0 - margin:
        raise GimbalProximity(f"pitch {theta:.4f} rad within {margin} of singularity")


def euler_rate_matrix_inv(euler, margin: float = GIMBAL_MARGIN) -> np.ndarray:
    """Matrix mapping body angular velocity to (yaw, pitch, roll) rates."""
    check_gimbal(euler, margin)
    theta, phi = float(euler[1]), float(euler[2])
    cth, sth = math.cos(theta), math.sin(theta)
    cph, sph = math.cos(phi), math.sin(phi)
    return (1.0 / cth) * np.array(
        [
            [0.0, sph, cph],
            [0.0, cph * cth, -sph * cth],
            [cth, sph * sth, cph * sth],
        ]
    )


def skew(v) -> np.ndarray:
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


# ---------------------------------------------------------------------------
# Continuous dynamics and RK4 step (raw 12-vector kernels + typed wrappers)
# ---------------------------------------------------------------------------

def dynamics_vector(s: np.ndarray, u: np.ndarray, mass: float, inertia: np.ndarray,
                    margin: float = GIMBAL_MARGIN) -> np.ndarray:
    """Time derivative of the 12-vector state under wrench ``u``."""
    _, _, _, psi, theta, phi, vx, vy, vz, wx, wy, wz = s.tolist()
    if abs(theta) >= math.pi / 2.0 - margin:
        raise GimbalProximity(f"pitch {theta:.4f} rad within {margin} of singularity")
    fx, fy, fz, tx, ty, tz = u.tolist()
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    cph, sph = math.cos(phi), math.sin(phi)
    jx, jy, jz = inertia.tolist()
    gz = sph * wy + cph * wz
    return np.array([
        # Position rate: Q(euler) v with Q = Rz Ry Rx.
        (cps * cth) * vx + (cps * sth * sph - sps * cph) * vy + (cps * sth * cph + sps * sph) * vz,
        (sps * cth) * vx + (sps * sth * sph + cps * cph) * vy + (sps * sth * cph - cps * sph) * vz,
        -sth * vx + (cth * sph) * vy + (cth * cph) * vz,
        # Euler rates: W_inv(theta, phi) omega.
        gz / cth,
        cph * wy - sph * wz,
        wx + gz * (sth / cth),
        # Body-frame velocity rate: F/m - omega x v.
        fx / mass - (wy * vz - wz * vy),
        fy / mass - (wz * vx - wx * vz),
        fz / mass - (wx * vy - wy * vx),
        # Euler equation with diagonal inertia.
        (tx - (wy * jz * wz - wz * jy * wy)) / jx,
        (ty - (wz * jx * wx - wx * jz * wz)) / jy,
        (tz - (wx * jy * wy - wy * jx * wx)) / jz,
    ])


def continuous_dynamics(state: State, wrench: Wrench, body: BodyParams,
                        margin: float = GIMBAL_MARGIN) -> np.ndarray:
    return dynamics_vector(state.as_vector(), wrench.as_vector(), body.mass,
                           body.inertia_diag, margin)


def step_vector(s: np.ndarray, u: np.ndarray, mass: float, inertia: np.ndarray,
                ts: float, margin: float = GIMBAL_MARGIN) -> np.ndarray:
    """One classical RK4 step of length ``ts``."""
    if ts <= 0.0:
        raise ValueError("ts must be positive")
    k1 = dynamics_vector(s, u, mass, inertia, margin)
    k2 = dynamics_vector(s + 0.5 * ts * k1, u, mass, inertia, margin)
    k3 = dynamics_vector(s + 0.5 * ts * k2, u, mass, inertia, margin)
    k4 = dynamics_vector(s + ts * k3, u, mass, inertia, margin)
    return s + (ts / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state: State, wrench: Wrench, body: BodyParams, ts: float,
         margin: float = GIMBAL_MARGIN) -> State:
    return State.from_vector(
        step_vector(state.as_vector(), wrench.as_vector(), body.mass,
                    body.inertia_diag, ts, margin)
    )


# ---------------------------------------------------------------------------
# Analytic Jacobians
# ---------------------------------------------------------------------------

def input_jacobian(mass: float, inertia: np.ndarray) -> np.ndarray:
    """Constant df/du of the continuous dynamics."""
    fu = np.zeros((12, 6))
    fu[6, 0] = fu[7, 1] = fu[8, 2] = 1.0 / mass
    fu[9, 3], fu[10, 4], fu[11, 5] = 1.0 / inertia[0], 1.0 / inertia[1], 1.0 / inertia[2]
    return fu


def state_jacobian(s: np.ndarray, mass: float, inertia: np.ndarray) -> np.ndarray:
    """Jacobian df/ds of the continuous dynamics.

    The Euler-angle partials of Q v use the rotation-generator identity
    dQ/dangle = skew(axis_in_parent_frame) @ Q, so each column is a single
    cross product.  The caller keeps pitch inside the gimbal margin.
    """
    _, _, _, psi, theta, phi, vx, vy, vz, wx, wy, wz = s.tolist()
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    cph, sph = math.cos(phi), math.sin(phi)

    fx = np.zeros((12, 12))

    q = np.empty((3, 3))
    q[0, 0] = cps * cth
    q[0, 1] = cps * sth * sph - sps * cph
    q[0, 2] = cps * sth * cph + sps * sph
    q[1, 0] = sps * cth
    q[1, 1] = sps * sth * sph + cps * cph
    q[1, 2] = sps * sth * cph - cps * sph
    q[2, 0] = -sth
    q[2, 1] = cth * sph
    q[2, 2] = cth * cph
    qv = q @ s[6:9]
    # d(Qv)/dpsi = ez x Qv; d/dtheta = (Rz ey) x Qv; d/dphi = (Q ex) x Qv.
    fx[0, 3], fx[1, 3], fx[2, 3] = -qv[1], qv[0], 0.0
    ay = (-sps, cps, 0.0)
    fx[0, 4] = ay[1] * qv[2]
    fx[1, 4] = -ay[0] * qv[2]
    fx[2, 4] = ay[0] * qv[1] - ay[1] * qv[0]
    ax = q[:, 0]
    fx[0, 5] = ax[1] * qv[2] - ax[2] * qv[1]
    fx[1, 5] = ax[2] * qv[0] - ax[0] * qv[2]
    fx[2, 5] = ax[0] * qv[1] - ax[1] * qv[0]
    fx[0:3, 6:9] = q

    tth = sth / cth
    sec2 = 1.0 / (cth * cth)
    gz = sph * wy + cph * wz
    fx[3, 4] = gz * sth * sec2
    fx[5, 4] = gz * sec2
    fx[3, 5] = (cph * wy - sph * wz) / cth
    fx[4, 5] = -sph * wy - cph * wz
    fx[5, 5] = (cph * wy - sph * wz) * tth
    fx[3, 10], fx[3, 11] = sph / cth, cph / cth
    fx[4, 10], fx[4, 11] = cph, -sph
    fx[5, 9], fx[5, 10], fx[5, 11] = 1.0, sph * tth, cph * tth

    # v_dot = F/m - w x v.
    fx[6, 7], fx[6, 8] = wz, -wy
    fx[7, 6], fx[7, 8] = -wz, wx
    fx[8, 6], fx[8, 7] = wy, -wx
    fx[6, 10], fx[6, 11] = -vz, vy
    fx[7, 9], fx[7, 11] = vz, -vx
    fx[8, 9], fx[8, 10] = -vy, vx

    jx, jy, jz = inertia[0], inertia[1], inertia[2]
    fx[9, 10] = -wz * (jz - jy) / jx
    fx[9, 11] = -wy * (jz - jy) / jx
    fx[10, 9] = -wz * (jx - jz) / jy
    fx[10, 11] = -wx * (jx - jz) / jy
    fx[11, 9] = -wy * (jy - jx) / jz
    fx[11, 10] = -wx * (jy - jx) / jz
    return fx


def dynamics_jacobians(s: np.ndarray, u: np.ndarray, mass: float,
                       inertia: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians (df/ds, df/du) of the continuous dynamics."""
    return state_jacobian(s, mass, inertia), input_jacobian(mass, inertia)


def dynamics_batch(states: np.ndarray, inputs: np.ndarray, mass: float,
                   inertia: np.ndarray, margin: float = GIMBAL_MARGIN) -> np.ndarray:
    """Vectorized continuous dynamics over (k, 12) states and (k, 6) inputs."""
    s = np.atleast_2d(states)
    u = np.atleast_2d(inputs)
    theta = s[:, 4]
    if np.any(np.abs(theta) >= math.pi / 2.0 - margin):
        bad = float(theta[np.argmax(np.abs(theta))])
        raise GimbalProximity(f"pitch {bad:.4f} rad within {margin} of singularity")
    cps, sps = np.cos(s[:, 3]), np.sin(s[:, 3])
    cth, sth = np.cos(theta), np.sin(theta)
    cph, sph = np.cos(s[:, 5]), np.sin(s[:, 5])
    vx, vy, vz = s[:, 6], s[:, 7], s[:, 8]
    wx, wy, wz = s[:, 9], s[:, 10], s[:, 11]
    jx, jy, jz = inertia[0], inertia[1], inertia[2]
    gz = sph * wy + cph * wz

    out = np.empty_like(s)
    out[:, 0] = (cps * cth) * vx + (cps * sth * sph - sps * cph) * vy + (cps * sth * cph + sps * sph) * vz
    out[:, 1] = (sps * cth) * vx + (sps * sth * sph + cps * cph) * vy + (sps * sth * cph - cps * sph) * vz
    out[:, 2] = -sth * vx + (cth * sph) * vy + (cth * cph) * vz
    out[:, 3] = gz / cth
    out[:, 4] = cph * wy - sph * wz
    out[:, 5] = wx + gz * (sth / cth)
    out[:, 6] = u[:, 0] / mass - (wy * vz - wz * vy)
    out[:, 7] = u[:, 1] / mass - (wz * vx - wx * vz)
    out[:, 8] = u[:, 2] / mass - (wx * vy - wy * vx)
    out[:, 9] = (u[:, 3] - (wy * jz * wz - wz * jy * wy)) / jx
    out[:, 10] = (u[:, 4] - (wz * jx * wx - wx * jz * wz)) / jy
    out[:, 11] = (u[:, 5] - (wx * jy * wy - wy * jx * wx)) / jz
    return out


def state_jacobian_batch(states: np.ndarray, mass: float,
                         inertia: np.ndarray) -> np.ndarray:
    """Vectorized df/ds over (k, 12) states, shape (k, 12, 12)."""
    s = np.atleast_2d(states)
    k = s.shape[0]
    cps, sps = np.cos(s[:, 3]), np.sin(s[:, 3])
    cth, sth = np.cos(s[:, 4]), np.sin(s[:, 4])
    cph, sph = np.cos(s[:, 5]), np.sin(s[:, 5])
    vx, vy, vz = s[:, 6], s[:, 7], s[:, 8]
    wx, wy, wz = s[:, 9], s[:, 10], s[:, 11]
    jx, jy, jz = inertia[0], inertia[1], inertia[2]

    q = np.empty((k, 3, 3))
    q[:, 0, 0] = cps * cth
    q[:, 0, 1] = cps * sth * sph - sps * cph
    q[:, 0, 2] = cps * sth * cph + sps * sph
    q[:, 1, 0] = sps * cth
    q[:, 1, 1] = sps * sth * sph + cps * cph
    q[:, 1, 2] = sps * sth * cph - cps * sph
    q[:, 2, 0] = -sth
    q[:, 2, 1] = cth * sph
    q[:, 2, 2] = cth * cph
    qv = np.einsum("kij,kj->ki", q, s[:, 6:9])

    fx = np.zeros((k, 12, 12))
    fx[:, 0, 3], fx[:, 1, 3] = -qv[:, 1], qv[:, 0]
    # d(Qv)/dtheta = (Rz ey) x Qv with Rz ey = (-sin psi, cos psi, 0).
    fx[:, 0, 4] = cps * qv[:, 2]
    fx[:, 1, 4] = sps * qv[:, 2]
    fx[:, 2, 4] = -sps * qv[:, 1] - cps * qv[:, 0]
    # d(Qv)/dphi = (Q ex) x Qv.
    fx[:, 0, 5] = q[:, 1, 0] * qv[:, 2] - q[:, 2, 0] * qv[:, 1]
    fx[:, 1, 5] = q[:, 2, 0] * qv[:, 0] - q[:, 0, 0] * qv[:, 2]
    fx[:, 2, 5] = q[:, 0, 0] * qv[:, 1] - q[:, 1, 0] * qv[:, 0]
    fx[:, 0:3, 6:9] = q

    tth = sth / cth
    sec2 = 1.0 / (cth * cth)
    gz = sph * wy + cph * wz
    fx[:, 3, 4] = gz * sth * sec2
    fx[:, 5, 4] = gz * sec2
    fx[:, 3, 5] = (cph * wy - sph * wz) / cth
    fx[:, 4, 5] = -sph * wy - cph * wz
    fx[:, 5, 5] = (cph * wy - sph * wz) * tth
    fx[:, 3, 10], fx[:, 3, 11] = sph / cth, cph / cth
    fx[:, 4, 10], fx[:, 4, 11] = cph, -sph
    fx[:, 5, 9], fx[:, 5, 10], fx[:, 5, 11] = 1.0, sph * tth, cph * tth

    fx[:, 6, 7], fx[:, 6, 8] = wz, -wy
    fx[:, 7, 6], fx[:, 7, 8] = -wz, wx
    fx[:, 8, 6], fx[:, 8, 7] = wy, -wx
    fx[:, 6, 10], fx[:, 6, 11] = -vz, vy
    fx[:, 7, 9], fx[:, 7, 11] = vz, -vx
    fx[:, 8, 9], fx[:, 8, 10] = -vy, vx

    fx[:, 9, 10] = -wz * (jz - jy) / jx
    fx[:, 9, 11] = -wy * (jz - jy) / jx
    fx[:, 10, 9] = -wz * (jx - jz) / jy
    fx[:, 10, 11] = -wx * (jx - jz) / jy
    fx[:, 11, 9] = -wy * (jy - jx) / jz
    fx[:, 11, 10] = -wx * (jy - jx) / jz
    return fx


def step_jacobians_batch(states: np.ndarray, inputs: np.ndarray, mass: float,
                         inertia: np.ndarray, ts: float,
                         margin: float = GIMBAL_MARGIN):
    """RK4 step Jacobians for a whole (k, 12)/(k, 6) trajectory at once.

    Returns (a, b) with shapes (k, 12, 12) and (k, 12, 6): the Jacobians of
    each step's end state w.r.t. its start state and its held input.
    """
    s = np.atleast_2d(states)
    u = np.atleast_2d(inputs)
    k = s.shape[0]
    eye = np.broadcast_to(np.eye(12), (k, 12, 12))
    fu = np.broadcast_to(input_jacobian(mass, inertia), (k, 12, 6))

    k1 = dynamics_batch(s, u, mass, inertia, margin)
    s2 = s + 0.5 * ts * k1
    k2 = dynamics_batch(s2, u, mass, inertia, margin)
    s3 = s + 0.5 * ts * k2
    k3 = dynamics_batch(s3, u, mass, inertia, margin)
    s4 = s + ts * k3

    f1x = state_jacobian_batch(s, mass, inertia)
    f2x = state_jacobian_batch(s2, mass, inertia)
    f3x = state_jacobian_batch(s3, mass, inertia)
    f4x = state_jacobian_batch(s4, mass, inertia)

    k1x, k1u = f1x, fu
    k2x = f2x @ (eye + 0.5 * ts * k1x)
    k2u = f2x @ (0.5 * ts * k1u) + fu
    k3x = f3x @ (eye + 0.5 * ts * k2x)
    k3u = f3x @ (0.5 * ts * k2u) + fu
    k4x = f4x @ (eye + ts * k3x)
    k4u = f4x @ (ts * k3u) + fu

    a = eye + (ts / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    b = (ts / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    return a, b


def step_with_jacobians(s: np.ndarray, u: np.ndarray, mass: float,
                        inertia: np.ndarray, ts: float,
                        margin: float = GIMBAL_MARGIN, fu: np.ndarray = None):
    """RK4 step plus its Jacobians (s_next, ds_next/ds, ds_next/du).

    ``fu`` lets callers pass the precomputed (constant) input Jacobian.
    """
    eye = np.eye(12)
    if fu is None:
        fu = input_jacobian(mass, inertia)

    k1 = dynamics_vector(s, u, mass, inertia, margin)
    s2 = s + 0.5 * ts * k1
    k2 = dynamics_vector(s2, u, mass, inertia, margin)
    s3 = s + 0.5 * ts * k2
    k3 = dynamics_vector(s3, u, mass, inertia, margin)
    s4 = s + ts * k3
    k4 = dynamics_vector(s4, u, mass, inertia, margin)
    s_next = s + (ts / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    f1x = state_jacobian(s, mass, inertia)
    f2x = state_jacobian(s2, mass, inertia)
    f3x = state_jacobian(s3, mass, inertia)
    f4x = state_jacobian(s4, mass, inertia)

    k1x, k1u = f1x, fu
    k2x = f2x @ (eye + 0.5 * ts * k1x)
    k2u = f2x @ (0.5 * ts * k1u) + fu
    k3x = f3x @ (eye + 0.5 * ts * k2x)
    k3u = f3x @ (0.5 * ts * k2u) + fu
    k4x = f4x @ (eye + ts * k3x)
    k4u = f4x @ (ts * k3u) + fu

    a = eye + (ts / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    b = (ts / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    return s_next, a, b
