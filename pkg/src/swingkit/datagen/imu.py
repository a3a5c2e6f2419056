"""Virtual wrist IMU: orientation increments and global acceleration.

Channel layout of the (T, 9) output:

    0..5  6D encoding of the sensor body's frame-to-frame orientation
          increment R_{t-1}^T R_t, expressed in the sensor's own frame;
          the first frame replicates the earliest computed increment
    6..8  global-frame linear acceleration of the sensor point (m/s^2),
          from central second differences with replicated ends, plus
          gravity (0, 0, +g)

A static pose therefore reads (1,0,0, 0,1,0) and (0, 0, 9.80665) everywhere.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..kinematics import MotionSequence, forward_kinematics, rotmat_to_sixd
from ..skeleton import SkeletonConfig

GRAVITY = 9.80665  # m/s^2, +z up

DEFAULT_PLACEMENT = ("hand_l", (0.0, 0.0, 0.02))


def simulate_imu(motion: MotionSequence, skel: SkeletonConfig,
                 placement: tuple[str, tuple] = DEFAULT_PLACEMENT,
                 fps: float | None = None, smooth_window: int = 0,
                 noise_std: float = 0.0,
                 rng: np.random.Generator | None = None) -> np.ndarray:
    """Simulate a wrist-worn sensor rigidly attached to one body.

    `placement` is (body name, local offset in meters). `smooth_window`
    applies an optional centered moving average to the acceleration;
    `noise_std` adds white noise (m/s^2) to it, drawn from `rng`.
    """
    T = len(motion)
    if T < 3:
        raise ValidationError(f"cannot differentiate a {T}-frame sequence (need >= 3)")
    fps = float(fps if fps is not None else motion.fps)
    body_name, offset = placement
    body = skel.body_index(body_name)
    offset = np.asarray(offset, dtype=np.float64)

    R = motion.as_matrices()            # (T, n, 3, 3)
    Rs = R[:, body]                      # sensor orientation
    inc = np.swapaxes(Rs[:-1], -1, -2) @ Rs[1:]
    inc6 = rotmat_to_sixd(inc)
    inc6 = np.vstack([inc6[0][None], inc6])  # replicate the first frame

    pos = forward_kinematics(skel, R, root_translation=motion.root)
    p = pos[:, body] + (Rs @ offset[:, None])[..., 0]
    acc = np.empty_like(p)
    acc[1:-1] = (p[2:] - 2.0 * p[1:-1] + p[:-2]) * fps * fps
    acc[0] = acc[1]
    acc[-1] = acc[-2]
    if smooth_window > 1:
        kernel = np.ones(smooth_window) / smooth_window
        acc = np.stack([np.convolve(acc[:, k], kernel, mode="same")
                        for k in range(3)], axis=1)
    if noise_std > 0.0:
        if rng is None:
            raise ValidationError("noise_std > 0 requires an rng")
        acc = acc + rng.normal(0.0, noise_std, size=acc.shape)
    acc[:, 2] += GRAVITY

    return np.concatenate([inc6, acc], axis=1).astype(np.float32)
