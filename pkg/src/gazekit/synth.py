"""Synthetic labelled eye+head signal generator.

Kinematic sketches per class: stationary fixations hold both gaze and head;
fixations under translation sweep the head while the eye counter-rotates
(near-unity gain); pursuit moves the world gaze point at a target velocity
shared between head and eye; saccades relocate gaze with a raised-cosine
velocity bell. Tremor-floor noise rides on everything. Labels are exact by
construction, which makes the generator the test oracle for the pipeline.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .core import GazeClass, LabelSequence, Recording
from .geometry import quat_conjugate, quat_multiply, quat_apply

MAX_HUMAN_VELOCITY_DPS = 900.0


@dataclass(frozen=True)
class ScenarioConfig:
    duration_s: float = 20.0
    rate_hz: float = 300.0
    # event mix: probability that the next scheduled event has this class
    mix: Dict[str, float] = field(default_factory=lambda: {
        "fixation_stationary": 0.30,
        "fixation_translation": 0.25,
        "pursuit": 0.15,
        "saccade": 0.30,
    })
    saccade_peak_dps: Tuple[float, float] = (250.0, 700.0)
    saccade_duration_s: Tuple[float, float] = (0.020, 0.080)
    hold_duration_s: Tuple[float, float] = (0.200, 0.700)
    # slow ocular drift during stationary fixations; overlapping this range
    # with the low end of pursuit speeds makes the two genuinely ambiguous
    fixation_drift_dps: Tuple[float, float] = (0.0, 0.0)
    pursuit_duration_s: Tuple[float, float] = (0.400, 1.000)
    pursuit_speed_dps: Tuple[float, float] = (3.0, 40.0)
    pursuit_head_fraction: Tuple[float, float] = (0.2, 0.8)
    translation_head_speed_dps: Tuple[float, float] = (10.0, 40.0)
    vor_gain: float = 1.0
    tremor_dps: float = 0.55
    blink_proportion: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        total = sum(self.mix.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError("event mix proportions must sum to 1")
        if self.rate_hz <= 0 or self.duration_s <= 0:
            raise ValueError("rate and duration must be positive")
        if self.saccade_peak_dps[1] > MAX_HUMAN_VELOCITY_DPS:
            raise ValueError("saccade peak exceeds the physiological ceiling")
        if self.mix.get("saccade", 0.0) == 1.0:
            raise ValueError("cannot schedule saccades only")


_CLASS_IDS = {
    "fixation_stationary": int(GazeClass.FIXATION_STATIONARY),
    "fixation_translation": int(GazeClass.FIXATION_TRANSLATION),
    "pursuit": int(GazeClass.PURSUIT),
    "saccade": int(GazeClass.SACCADE),
}

AZ_LIMIT = 55.0
EL_LIMIT = 35.0


def _angles_to_dir(az_deg, el_deg):
    az = np.deg2rad(az_deg)
    el = np.deg2rad(el_deg)
    return np.stack([np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)],
                    axis=-1)


def _head_quat(az_deg, el_deg):
    """world->head quaternion for a head yawed by az and pitched by el.

    The head pose (head->world) is R_yaw(az about +y, clockwise-from-above
    positive toward +x) composed with R_pitch(el upward); world->head is its
    conjugate.
    """
    az = np.deg2rad(np.atleast_1d(az_deg))
    el = np.deg2rad(np.atleast_1d(el_deg))
    # yaw about world up: forward z rotates toward +x for positive az
    q_yaw = np.zeros(az.shape + (4,))
    q_yaw[..., 0] = np.cos(az / 2)
    q_yaw[..., 2] = np.sin(az / 2)    # +y axis: +az moves forward toward +x
    q_pitch = np.zeros(el.shape + (4,))
    q_pitch[..., 0] = np.cos(el / 2)
    q_pitch[..., 1] = -np.sin(el / 2)  # -x axis so +el tilts forward upward
    pose = quat_multiply(q_yaw, q_pitch)   # head->world
    return quat_conjugate(pose)


def _inward(value, limit, rng):
    """Random sign, biased inward when close to the configured limit."""
    if value > 0.6 * limit:
        return -1.0
    if value < -0.6 * limit:
        return 1.0
    return rng.choice([-1.0, 1.0])


def generate(cfg: ScenarioConfig = ScenarioConfig()):
    """Seeded synthesis of one recording plus its exact label sequence."""
    rng = np.random.default_rng(cfg.rng_seed)
    n = int(round(cfg.duration_s * cfg.rate_hz))
    if n < 10:
        raise ValueError("duration too short for the requested rate")
    dt = 1.0 / cfg.rate_hz

    gaze_az = np.zeros(n)
    gaze_el = np.zeros(n)
    head_az = np.zeros(n)
    head_el = np.zeros(n)
    labels = np.zeros(n, dtype=np.int64)
    confidence = np.ones(n)

    names = list(cfg.mix.keys())
    probs = np.array([cfg.mix[k] for k in names])

    g_az, g_el = rng.uniform(-10, 10), rng.uniform(-8, 8)
    h_az, h_el = g_az, g_el
    i = 0
    while i < n:
        if cfg.blink_proportion > 0 and rng.random() < cfg.blink_proportion:
            kind = "blink"
        else:
            kind = names[rng.choice(len(names), p=probs)]
        if kind == "saccade":
            dur = rng.uniform(*cfg.saccade_duration_s)
        elif kind == "pursuit":
            dur = rng.uniform(*cfg.pursuit_duration_s)
        elif kind == "blink":
            dur = rng.uniform(0.08, 0.20)
        else:
            dur = rng.uniform(*cfg.hold_duration_s)
        m = max(2, int(round(dur * cfg.rate_hz)))
        m = min(m, n - i)
        sl = slice(i, i + m)
        tau = np.arange(m) * dt

        if kind == "saccade":
            peak = rng.uniform(*cfg.saccade_peak_dps)
            theta = rng.uniform(0, 2 * np.pi)
            # unit direction biased toward horizontal; unit norm keeps the
            # realized angular speed equal to the configured peak
            ux, uy = np.cos(theta), 0.5 * np.sin(theta)
            norm = np.hypot(ux, uy)
            ux, uy = ux / norm, uy / norm
            # steer inward if we would leave the field of view
            amp = peak * m * dt / 2.0
            if abs(g_az + ux * amp) > AZ_LIMIT:
                ux = -ux
            if abs(g_el + uy * amp) > EL_LIMIT:
                uy = -uy
            vel = peak * 0.5 * (1.0 - np.cos(2 * np.pi * np.arange(m) / m))
            disp = np.cumsum(vel) * dt
            gaze_az[sl] = g_az + ux * disp
            gaze_el[sl] = g_el + uy * disp
            head_az[sl] = h_az
            head_el[sl] = h_el
            g_az, g_el = gaze_az[i + m - 1], gaze_el[i + m - 1]
            labels[sl] = _CLASS_IDS["saccade"]
        elif kind == "fixation_stationary":
            drift = rng.uniform(*cfg.fixation_drift_dps)
            theta = rng.uniform(0, 2 * np.pi)
            dax = drift * np.cos(theta)
            day = drift * 0.5 * np.sin(theta)
            if abs(g_az + dax * m * dt) > AZ_LIMIT:
                dax = -dax
            gaze_az[sl] = g_az + dax * tau
            gaze_el[sl] = np.clip(g_el + day * tau, -EL_LIMIT, EL_LIMIT)
            head_az[sl], head_el[sl] = h_az, h_el
            g_az, g_el = gaze_az[i + m - 1], gaze_el[i + m - 1]
            labels[sl] = _CLASS_IDS["fixation_stationary"]
        elif kind == "fixation_translation":
            speed = rng.uniform(*cfg.translation_head_speed_dps)
            sign = _inward(h_az, AZ_LIMIT, rng)
            head_az[sl] = h_az + sign * speed * tau
            head_el[sl] = h_el
            # residual gaze drift for non-unity VOR gain
            resid = (1.0 - cfg.vor_gain) * sign * speed
            gaze_az[sl] = g_az + resid * tau
            gaze_el[sl] = g_el
            h_az = head_az[i + m - 1]
            g_az = gaze_az[i + m - 1]
            labels[sl] = _CLASS_IDS["fixation_translation"]
        elif kind == "pursuit":
            speed = rng.uniform(*cfg.pursuit_speed_dps)
            frac = rng.uniform(*cfg.pursuit_head_fraction)
            sign = _inward(g_az, AZ_LIMIT, rng)
            el_share = rng.uniform(-0.3, 0.3)
            gaze_az[sl] = g_az + sign * speed * tau
            gaze_el[sl] = np.clip(g_el + el_share * speed * tau, -EL_LIMIT, EL_LIMIT)
            head_az[sl] = h_az + sign * frac * speed * tau
            head_el[sl] = h_el
            g_az, g_el = gaze_az[i + m - 1], gaze_el[i + m - 1]
            h_az = head_az[i + m - 1]
            labels[sl] = _CLASS_IDS["pursuit"]
        else:  # blink
            gaze_az[sl], gaze_el[sl] = g_az, g_el
            head_az[sl], head_el[sl] = h_az, h_el
            labels[sl] = int(GazeClass.NONE)
            confidence[sl] = 0.0
        i += m

    # tremor floor: integrated white velocity noise on gaze and head angles
    if cfg.tremor_dps > 0:
        step = cfg.tremor_dps * dt
        for arr in (gaze_az, gaze_el, head_az, head_el):
            arr += np.cumsum(rng.normal(0.0, step, n))

    t = np.arange(n) * dt
    head_quat = _head_quat(head_az, head_el)
    gaze_world = _angles_to_dir(gaze_az, gaze_el)
    eye_dir = quat_apply(head_quat, gaze_world)
    eye_dir /= np.linalg.norm(eye_dir, axis=1, keepdims=True)
    rec = Recording(t, eye_dir, head_quat, confidence, cfg.rate_hz)
    return rec, LabelSequence(labels)
