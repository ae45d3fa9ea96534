"""Coordinate alignment utilities: quaternion helpers, gaze-in-world
computation, stream temporal offset estimation, and extrinsic chaining."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ORTHO_TOL = 1e-9


# ---------------------------------------------------------------------------
# Quaternion helpers. Storage convention is (w, x, y, z), unit norm.
# A recording's head_rot rotates world-frame vectors into the head frame.

def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quat_conjugate(q):
    q = np.asarray(q, dtype=float)
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def quat_multiply(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w1, x1, y1, z1 = (a[..., i] for i in range(4))
    w2, x2, y2, z2 = (b[..., i] for i in range(4))
    return np.stack([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ], axis=-1)


def quat_apply(q, v):
    """Rotate vectors v by quaternions q (broadcasts over leading axes)."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    qv = q[..., 1:]
    qw = q[..., 0:1]
    t = 2.0 * np.cross(qv, v)
    return v + qw * t + np.cross(qv, t)


def quat_from_axis_angle(axis, angle_rad):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * np.asarray(angle_rad, dtype=float)
    half = np.atleast_1d(half)
    q = np.zeros(half.shape + (4,))
    q[..., 0] = np.cos(half)
    q[..., 1:] = np.sin(half)[..., None] * axis
    return q[0] if np.isscalar(angle_rad) else q


def quat_slerp(q0, q1, frac):
    """Spherical interpolation between two unit quaternions, frac in [0, 1]."""
    q0 = quat_normalize(q0)
    q1 = quat_normalize(q1)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 1.0 - 1e-12:
        return quat_normalize(q0 + frac * (q1 - q0))
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    s = np.sin(theta)
    return (np.sin((1.0 - frac) * theta) * q0 + np.sin(frac * theta) * q1) / s


def quat_to_matrix(q):
    q = quat_normalize(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _check_rotation(R, name="rotation"):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3")
    if not np.allclose(R.T @ R, np.eye(3), atol=1e-8):
        raise ValueError(f"{name} is not orthonormal")
    if np.linalg.det(R) < 0:
        raise ValueError(f"{name} has negative determinant")
    return R


@dataclass
class RigAlignment:
    """Rotations taking the head-sensor and eye-tracker frames into the shared
    world frame, plus per-stream temporal offsets relative to the eye stream."""

    R_head_world: np.ndarray = field(default_factory=lambda: np.eye(3))
    R_eye_world: np.ndarray = field(default_factory=lambda: np.eye(3))
    dt_imu_s: float = 0.0
    dt_depth_s: float = 0.0

    def __post_init__(self):
        self.R_head_world = _check_rotation(self.R_head_world, "R_head_world")
        self.R_eye_world = _check_rotation(self.R_eye_world, "R_eye_world")


def gaze_in_world(eye_dir_in_head, head_rot, align: RigAlignment | None = None):
    """Head-compensate an eye-in-head direction into the world frame.

    head_rot rotates world vectors into the head frame, so its conjugate maps
    head-frame vectors back out. Accepts single samples or stacked arrays.
    """
    eye = np.asarray(eye_dir_in_head, dtype=float)
    norms = np.linalg.norm(eye, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise ValueError("eye direction must be unit length")
    if align is not None:
        eye = eye @ align.R_eye_world.T
    out = quat_apply(quat_conjugate(head_rot), eye)
    if align is not None:
        out = out @ align.R_head_world.T
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def estimate_temporal_offset(v1, v2, rate_hz, refine_subsample=False):
    """Lag (seconds) maximizing the normalized cross-correlation of two
    velocity traces. Positive result means v2 lags v1.

    With refine_subsample the integer-lag peak is refined by parabolic
    interpolation over the correlation triplet around it.
    """
    a = np.asarray(v1, dtype=float)
    b = np.asarray(v2, dtype=float)
    if a.std() == 0 or b.std() == 0:
        raise ValueError("cannot correlate a constant series")
    a = (a - a.mean()) / a.std()
    b = (b - b.mean()) / b.std()
    corr = np.correlate(a, b, mode="full")
    # index len(b)-1 corresponds to zero lag; positive index shift means
    # b must be advanced to align with a, i.e. b lags a.
    lags = np.arange(-len(b) + 1, len(a))
    peak = int(np.argmax(np.abs(corr)))
    lag = float(lags[peak])
    if refine_subsample and 0 < peak < len(corr) - 1:
        y0, y1, y2 = np.abs(corr[peak - 1:peak + 2])
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            lag += 0.5 * (y0 - y2) / denom
    return -lag / rate_hz


def chain_extrinsics(R_E_O, T_E_O, R_Z_O, T_Z_O):
    """Compose two camera-from-chart extrinsics into the camera-from-camera
    transform: R = R_E_O * R_Z_O^-1, T = T_E_O - R * T_Z_O."""
    R_E_O = _check_rotation(R_E_O, "R_E_O")
    R_Z_O = _check_rotation(R_Z_O, "R_Z_O")
    T_E_O = np.asarray(T_E_O, dtype=float).reshape(3)
    T_Z_O = np.asarray(T_Z_O, dtype=float).reshape(3)
    R = R_E_O @ R_Z_O.T
    T = T_E_O - R @ T_Z_O
    return R, T


def _rot_xyz(angles_rad):
    cx, cy, cz = np.cos(angles_rad)
    sx, sy, sz = np.sin(angles_rad)
    Rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    Ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    Rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return Rz @ Ry @ Rx


def refine_alignment(eye_dirs, head_rots, rate_hz, init: RigAlignment | None = None,
                     iters: int = 3, step_deg: float = 2.0):
    """Automated stand-in for manual rig fine-tuning: coordinate descent on the
    eye-frame alignment angles minimizing mean gaze-in-world speed over a
    VOR calibration segment."""
    from .signal import two_point_velocity  # local import avoids a cycle

    angles = np.zeros(3)
    base = init if init is not None else RigAlignment()

    def cost(ang):
        align = RigAlignment(base.R_head_world, _rot_xyz(ang) @ base.R_eye_world)
        giw = gaze_in_world(eye_dirs, head_rots, align)
        return float(np.mean(two_point_velocity(giw, rate_hz)))

    step = np.deg2rad(step_deg)
    best = cost(angles)
    for _ in range(iters):
        for axis in range(3):
            for delta in (step, -step):
                trial = angles.copy()
                trial[axis] += delta
                c = cost(trial)
                while c < best:
                    angles, best = trial, c
                    trial = trial.copy()
                    trial[axis] += delta
                    c = cost(trial)
        step *= 0.5
    return RigAlignment(base.R_head_world, _rot_xyz(angles) @ base.R_eye_world,
                        base.dt_imu_s, base.dt_depth_s)
