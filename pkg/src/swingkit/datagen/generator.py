"""Procedural golf-swing corpus.

Each swing is built from ten keyframe poses (a setup hold, the eight swing
events, and a settle hold) in joint-angle space, connected by minimum-jerk
segments. Club type, sex, age, and an 8-dim per-player style latent modulate
keyframe amplitudes and timing systematically; per-swing noise is layered on
top. Everything is driven by an explicit seeded stream, so identical inputs
reproduce identical swings bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..kinematics import MotionSequence, compose_orientations
from ..skeleton import SkeletonConfig, default_skeleton
from .imu import simulate_imu

CLUBS = ("driver", "fairway", "hybrid", "iron", "wedge")
SEXES = ("male", "female")
EVENT_NAMES = ("address", "toe_up", "mid_backswing", "top", "mid_downswing",
               "impact", "mid_follow_through", "finish")
STYLE_FIELDS = ("tempo", "backswing_amplitude", "spine_tilt", "wrist_hinge_timing",
                "stance_width", "sway", "follow_through", "posture_bend")

# per-club modulation of the base swing; spreads sit well above the style and
# noise variance so club identity stays recoverable from generated poses
CLUB_AMPLITUDE = {"driver": 1.05, "fairway": 0.94, "hybrid": 0.83, "iron": 0.72,
                  "wedge": 0.62}
CLUB_TILT = {"driver": 0.00, "fairway": 0.045, "hybrid": 0.09, "iron": 0.135,
             "wedge": 0.18}
CLUB_BACKSWING_TIME = {"driver": 1.12, "fairway": 1.06, "hybrid": 1.00,
                       "iron": 0.94, "wedge": 0.86}
CLUB_STANCE = {"driver": 1.28, "fairway": 1.13, "hybrid": 1.00, "iron": 0.86,
               "wedge": 0.72}
CLUB_HINGE = {"driver": 0.90, "fairway": 0.98, "hybrid": 1.05, "iron": 1.13,
              "wedge": 1.20}


@dataclass
class PlayerProfile:
    player_id: str
    sex: str
    age: float
    style: np.ndarray  # 8 latents in [-1, 1], ordered as STYLE_FIELDS

    def __post_init__(self):
        self.style = np.asarray(self.style, dtype=np.float64)
        if self.sex not in SEXES:
            raise ValidationError(f"sex must be one of {SEXES}, got {self.sex!r}")
        if not 18.0 <= self.age <= 80.0:
            raise ValidationError(f"age must be within [18, 80], got {self.age}")
        if self.style.shape != (len(STYLE_FIELDS),) or np.abs(self.style).max() > 1.0:
            raise ValidationError("style must be 8 latents in [-1, 1]")

    def latent(self, name: str) -> float:
        return float(self.style[STYLE_FIELDS.index(name)])


@dataclass
class SwingRecord:
    swing_id: str
    profile: PlayerProfile
    club: str
    fps: float
    motion: MotionSequence
    sensor: np.ndarray          # (T, 9) wrist features
    events: np.ndarray          # (8,) strictly increasing frame indices

    def __post_init__(self):
        self.events = np.asarray(self.events, dtype=np.int64)
        if self.events.shape != (8,):
            raise ValidationError(f"expected 8 event indices, got {self.events.shape}")
        if not (np.diff(self.events) > 0).all():
            raise ValidationError("event indices must be strictly increasing")
        if self.events[0] < 0 or self.events[-1] >= len(self.motion):
            raise ValidationError("event indices must lie within [0, T)")


def min_jerk(u):
    """Minimum-jerk easing 10u^3 - 15u^4 + 6u^5 on [0, 1]."""
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


# ---- keyframe construction ---------------------------------------------------

# per-event profiles in [-1, 1] driving the main joint groups
_TURN = np.array([0.0, -0.28, -0.62, -1.0, -0.45, 0.12, 0.55, 0.85])
_LEAD_ARM = np.array([0.35, 0.62, 1.02, 1.42, 0.78, 0.40, 0.95, 1.50])
_TRAIL_ARM = np.array([0.30, 0.50, 0.80, 1.10, 0.62, 0.36, 1.00, 1.55])
_LEAD_ADD = np.array([0.10, 0.25, 0.48, 0.68, 0.35, 0.08, -0.15, -0.35])
_TRAIL_ELBOW = np.array([0.25, 0.45, 0.90, 1.35, 0.75, 0.30, 0.55, 1.10])
_LEAD_ELBOW = np.array([0.15, 0.18, 0.22, 0.28, 0.22, 0.15, 0.45, 1.05])
_HINGE = np.array([0.20, 0.38, 0.72, 1.00, 0.72, 0.05, -0.42, -0.62])
_TILT_PROFILE = np.array([1.0, 1.0, 0.97, 0.93, 0.97, 1.0, 0.82, 0.55])
_SWAY = np.array([0.0, -0.45, -0.85, -1.0, -0.15, 0.55, 0.85, 1.0])
_LIFT = np.array([0.0, 0.0, 0.05, 0.10, 0.02, -0.05, 0.12, 0.25])


def swing_drivers(profile: PlayerProfile, club: str) -> dict:
    """Scalar modulation factors for one (player, club) combination."""
    if club not in CLUBS:
        raise ValidationError(f"club must be one of {CLUBS}, got {club!r}")
    sex_f = 1.0 if profile.sex == "female" else 0.0
    age_n = (profile.age - 18.0) / 62.0  # 0 at 18, 1 at 80
    amp = CLUB_AMPLITUDE[club] * (1.0 + 0.05 * profile.latent("backswing_amplitude"))
    amp *= 1.0 - 0.07 * age_n
    amp *= 1.0 + 0.05 * sex_f  # greater trunk range
    tilt = (0.40 + 0.05 * profile.latent("posture_bend")
            + 0.04 * profile.latent("spine_tilt")
            + CLUB_TILT[club] + 0.04 * sex_f + 0.04 * age_n)
    stance = CLUB_STANCE[club] * (1.0 + 0.08 * profile.latent("stance_width")) \
        * (1.0 - 0.08 * sex_f)
    hinge = CLUB_HINGE[club] * (1.0 + 0.08 * sex_f)
    hinge_timing = 0.5 + 0.18 * profile.latent("wrist_hinge_timing")
    follow = 1.0 + 0.12 * profile.latent("follow_through") - 0.08 * age_n
    backswing_time = CLUB_BACKSWING_TIME[club] \
        * (1.0 + 0.08 * profile.latent("tempo")) \
        * (1.0 + 0.10 * age_n) * (1.0 + 0.06 * sex_f)
    sway = 0.035 * (1.0 + 0.5 * profile.latent("sway")) * stance
    return {"amp": amp, "tilt": tilt, "stance": stance, "hinge": hinge,
            "hinge_timing": hinge_timing, "follow": follow,
            "backswing_time": backswing_time, "sway": sway}


def swing_keyframes(profile: PlayerProfile, club: str,
                    rng: np.random.Generator, skel: SkeletonConfig):
    """Eight event keyframes: (angles (8, 52), root (8, 3)).

    Noise is drawn from `rng` in a fixed order; keyframes are clamped a
    margin inside the joint limits so interpolated poses never clip.
    """
    d = swing_drivers(profile, club)
    amp, tilt, follow = d["amp"], d["tilt"], d["follow"]
    idx = {name: i for i, name in enumerate(skel.dof_names)}
    kf = np.zeros((8, skel.n_dofs))

    def put(name, values):
        kf[:, idx[name]] = values

    turn = _TURN * amp
    turn[6:] *= follow
    put("pelvis_rotation", 0.42 * turn)
    put("lumbar_rotation", 0.30 * turn)
    put("thorax_rotation", 0.38 * turn)
    put("neck_rotation", np.clip(-0.60 * turn, -1.1, 1.1))  # eyes stay on the ball
    put("lumbar_bending", 0.10 * amp * np.array([0, .1, .2, .3, -.3, -.5, -.2, 0.0]))

    put("pelvis_extension", -0.55 * tilt * _TILT_PROFILE)
    put("lumbar_extension", -0.30 * tilt * _TILT_PROFILE)
    put("thorax_extension", -0.15 * tilt * _TILT_PROFILE)
    put("neck_extension", 0.55 * tilt * _TILT_PROFILE)

    hinge_mid = d["hinge_timing"]
    hinge_profile = _HINGE.copy()
    hinge_profile[2] = hinge_mid * hinge_profile[3]
    lead_wrist = np.clip(0.62 * d["hinge"] * hinge_profile, -0.8, 0.8)
    put("wrist_l_deviation", lead_wrist)
    put("wrist_r_deviation", -0.5 * lead_wrist)
    put("wrist_l_flexion", 0.18 * amp * np.array([0, .2, .4, .6, .2, -.3, -.5, -.4]))
    put("wrist_r_flexion", 0.22 * amp * np.array([0, -.2, -.5, -.7, -.3, .2, .4, .3]))

    put("shoulder_l_flexion", np.clip(_LEAD_ARM * (0.55 + 0.45 * amp), -1.4, 2.3))
    put("shoulder_r_flexion", np.clip(_TRAIL_ARM * (0.55 + 0.45 * amp), -1.4, 2.3))
    put("shoulder_l_adduction", np.clip(_LEAD_ADD * amp, -1.2, 1.2))
    put("shoulder_r_adduction", np.clip(-0.6 * _LEAD_ADD * amp, -1.2, 1.2))
    put("shoulder_l_rotation", np.clip(0.35 * turn, -1.3, 1.3))
    put("shoulder_r_rotation", np.clip(0.28 * turn, -1.3, 1.3))
    put("elbow_l_flexion", np.clip(_LEAD_ELBOW * (0.5 + 0.5 * amp), 0.0, 2.3))
    put("elbow_r_flexion", np.clip(_TRAIL_ELBOW * (0.5 + 0.5 * amp), 0.0, 2.3))
    put("forearm_l_pronation", np.clip(0.30 * turn, -1.3, 1.3))
    put("forearm_r_pronation", np.clip(-0.25 * turn, -1.3, 1.3))

    for side in "lr":
        put(f"clavicle_{side}_elevation", 0.12 * kf[:, idx[f"shoulder_{side}_flexion"]])
        put(f"clavicle_{side}_protraction", 0.10 * turn * (1 if side == "l" else -1))
        put(f"scapula_{side}_rotation", 0.15 * turn * (1 if side == "l" else -1))
        put(f"scapula_{side}_tilt", 0.08 * kf[:, idx[f"shoulder_{side}_flexion"]])
        put(f"scapula_{side}_winging", 0.05 * kf[:, idx[f"shoulder_{side}_adduction"]])

    knee = 0.30 + 0.10 * d["stance"]
    put("hip_l_flexion", 0.75 * tilt * _TILT_PROFILE + 0.1 * knee)
    put("hip_r_flexion", 0.75 * tilt * _TILT_PROFILE + 0.1 * knee)
    put("hip_l_adduction", 0.14 * d["stance"] + 0.08 * _SWAY * amp)
    put("hip_r_adduction", -0.14 * d["stance"] + 0.08 * _SWAY * amp)
    put("hip_l_rotation", np.clip(0.22 * turn, -0.9, 0.9))
    put("hip_r_rotation", np.clip(0.30 * turn, -0.9, 0.9))
    put("knee_l_flexion", -knee + 0.12 * _SWAY * amp
        - 0.1 * np.array([0, 0, 0, 0, .2, .5, .8, 1.0]))
    put("knee_r_flexion", -knee - 0.10 * _SWAY * amp
        - 0.2 * np.array([0, 0, .1, .2, .3, .4, 1.2, 1.6]))
    put("ankle_l_dorsiflexion", 0.10 * _TILT_PROFILE + 0.05 * _SWAY)
    put("ankle_r_dorsiflexion", 0.10 * _TILT_PROFILE - 0.15 * _SWAY
        - 0.3 * np.array([0, 0, 0, 0, 0, .2, .8, 1.0]))
    put("ankle_l_inversion", 0.08 * _SWAY)
    put("ankle_r_inversion", -0.08 * _SWAY)
    put("subtalar_l_rotation", 0.05 * _SWAY)
    put("subtalar_r_rotation", -0.05 * _SWAY)
    put("mtp_l_flexion", 0.05 * _SWAY)
    put("mtp_r_flexion", -0.3 * np.array([0, 0, 0, 0, 0, .1, .6, .8]))

    kf += rng.normal(0.0, 0.012, size=kf.shape)

    lo = skel.dof_limits[:, 0] + 0.03
    hi = skel.dof_limits[:, 1] - 0.03
    kf = np.clip(kf, lo, hi)

    root = np.zeros((8, 3))
    root[:, 0] = d["sway"] * _SWAY
    root[:, 2] = 0.02 * amp * _LIFT
    return kf, root


def event_fractions(profile: PlayerProfile, club: str,
                    rng: np.random.Generator) -> np.ndarray:
    """Eight event times as fractions of the sequence, strictly increasing."""
    d = swing_drivers(profile, club)
    deltas = np.array([0.22, 0.12, 0.10, 0.055, 0.055, 0.10, 0.19])
    deltas[:3] *= d["backswing_time"]
    deltas *= 1.0 + 0.05 * rng.normal(size=7)
    deltas = np.maximum(deltas, 0.02)
    start = 0.08 * (1.0 + 0.2 * rng.normal())
    start = float(np.clip(start, 0.02, 0.15))
    span = deltas.sum()
    end_target = 0.92
    deltas *= (end_target - start) / span
    return np.concatenate([[start], start + np.cumsum(deltas)])


def generate_swing(profile: PlayerProfile, club: str, T: int = 64,
                   fps: float = 30.0, seed: int = 0,
                   skel: SkeletonConfig | None = None) -> SwingRecord:
    """One deterministic synthetic swing with wrist-sensor channels."""
    if T < 48:
        raise ValidationError(f"T={T} is too short to place 8 distinct events "
                              "(minimum 48)")
    if fps not in (30, 60):
        raise ValidationError(f"fps must be 30 or 60, got {fps}")
    skel = skel or default_skeleton()
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 0x5717]))

    kf, kf_root = swing_keyframes(profile, club, rng, skel)
    fractions = event_fractions(profile, club, rng)
    events = np.round(fractions * (T - 1)).astype(np.int64)
    for i in range(1, 8):  # enforce strict increase after rounding
        events[i] = max(events[i], events[i - 1] + 1)
    if events[-1] > T - 2:
        raise ValidationError(f"T={T} cannot hold 8 strictly increasing events")

    # setup hold before address and settle hold after finish
    setup = kf[0] + rng.normal(0.0, 0.008, size=kf.shape[1])
    settle = kf[7] * 0.96 + rng.normal(0.0, 0.008, size=kf.shape[1])
    lo = skel.dof_limits[:, 0] + 0.02
    hi = skel.dof_limits[:, 1] - 0.02
    keys = np.clip(np.vstack([setup[None], kf, settle[None]]), lo, hi)
    key_root = np.vstack([kf_root[0][None], kf_root, (kf_root[7] * 0.96)[None]])
    key_frames = np.concatenate([[0], events, [T - 1]])

    angles = np.empty((T, skel.n_dofs))
    root = np.empty((T, 3))
    for seg in range(len(key_frames) - 1):
        a, b = key_frames[seg], key_frames[seg + 1]
        if b == a:
            continue
        u = np.arange(a, b + 1) - a
        s = min_jerk(u / (b - a))[:, None]
        angles[a:b + 1] = keys[seg] + s * (keys[seg + 1] - keys[seg])
        root[a:b + 1] = key_root[seg] + s * (key_root[seg + 1] - key_root[seg])

    R = compose_orientations(skel, angles)
    motion = MotionSequence(
        rotmat_sixd_flat(R).astype(np.float32), fps, root.astype(np.float32))
    sensor = simulate_imu(motion, skel, fps=fps)
    return SwingRecord(f"swing-{seed:08d}", profile, club, fps, motion, sensor,
                       events)


def rotmat_sixd_flat(R: np.ndarray) -> np.ndarray:
    """(T, n, 3, 3) -> (T, 6n) without re-validating orthonormality."""
    cols = np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)
    return cols.reshape(R.shape[0], -1)


def generate_players(n_players: int, seed: int) -> list[PlayerProfile]:
    """Deterministic player pool: balanced sexes, uniform ages and styles."""
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 0x9A7E]))
    players = []
    for i in range(n_players):
        players.append(PlayerProfile(
            player_id=f"p{i:03d}",
            sex=SEXES[i % 2],
            age=float(np.round(rng.uniform(18.0, 80.0), 1)),
            style=rng.uniform(-1.0, 1.0, size=len(STYLE_FIELDS)),
        ))
    return players


def generate_corpus(n_swings: int, seed: int, skel: SkeletonConfig | None = None,
                    T: int = 64, fps: float = 30.0,
                    n_players: int = 24) -> list[SwingRecord]:
    """A corpus of swings; each swing's stream is seeded by (seed, index)."""
    skel = skel or default_skeleton()
    players = generate_players(n_players, seed)
    records = []
    for i in range(n_swings):
        assign = np.random.default_rng(np.random.SeedSequence(
            [seed & 0xFFFFFFFF, 0xC1AB, i]))
        profile = players[int(assign.integers(0, n_players))]
        club = CLUBS[int(assign.integers(0, len(CLUBS)))]
        swing_seed = int(assign.integers(0, 2 ** 31 - 1))
        rec = generate_swing(profile, club, T=T, fps=fps, seed=swing_seed, skel=skel)
        rec.swing_id = f"s{i:05d}"
        records.append(rec)
    return records
