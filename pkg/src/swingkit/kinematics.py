"""Rotation representations, forward kinematics, joint angles, pose metrics.

All functions are pure and broadcast over leading axes where noted. The 6D
rotation encoding is the first two columns of the rotation matrix, stored
column-major: (R00, R10, R20, R01, R11, R21).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, ValidationError
from .skeleton import SkeletonConfig

PARALLEL_TOL = 1e-6   # minimum angle between the two embedded columns, radians
GIMBAL_TOL = 1e-3     # proximity of a middle axis to +/- pi/2 that gets flagged


# ---- 6D <-> matrix ----------------------------------------------------------

def sixd_to_rotmat(r6: np.ndarray) -> np.ndarray:
    """Decode (..., 6) into orthonormal (..., 3, 3) via Gram-Schmidt."""
    r6 = np.asarray(r6, dtype=np.float64)
    if r6.shape[-1] != 6:
        raise ShapeError(f"6D rotation needs last axis 6, got {r6.shape[-1]}")
    a = r6[..., 0:3]
    b = r6[..., 3:6]
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    nb = np.linalg.norm(b, axis=-1, keepdims=True)
    if np.any(na < 1e-12) or np.any(nb < 1e-12):
        raise ValidationError("degenerate 6D rotation: zero column")
    a = a / na
    # angle between the columns must exceed the parallel tolerance
    cosang = np.clip(np.abs((a * (b / nb)).sum(axis=-1)), 0.0, 1.0)
    if np.any(np.arccos(cosang) < PARALLEL_TOL):
        raise ValidationError("degenerate 6D rotation: parallel columns")
    b = b - (a * b).sum(axis=-1, keepdims=True) * a
    b = b / np.linalg.norm(b, axis=-1, keepdims=True)
    c = np.cross(a, b)
    return np.stack([a, b, c], axis=-1)


def rotmat_to_sixd(R: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Encode orthonormal (..., 3, 3) as (..., 6): the first two columns."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape[-2:] != (3, 3):
        raise ShapeError(f"rotation matrix needs trailing (3, 3), got {R.shape[-2:]}")
    err = np.abs(R @ np.swapaxes(R, -1, -2) - np.eye(3)).max()
    if err > tol:
        raise ValidationError(f"matrix is not orthonormal (deviation {err:.2e})")
    return np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)


def geodesic_angle(R1: np.ndarray, R2: np.ndarray) -> np.ndarray:
    """Rotation distance arccos((trace(R1^T R2) - 1) / 2), clamped to [0, pi]."""
    R1 = np.asarray(R1, dtype=np.float64)
    R2 = np.asarray(R2, dtype=np.float64)
    m = np.swapaxes(R1, -1, -2) @ R2
    tr = np.trace(m, axis1=-2, axis2=-1)
    return np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))


def axis_angle_to_matrix(axis: np.ndarray, angle) -> np.ndarray:
    """Rodrigues formula; broadcasts angle over leading axes."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    angle = np.asarray(angle, dtype=np.float64)
    x, y, z = axis[..., 0], axis[..., 1], axis[..., 2]
    zero = np.zeros_like(x)
    k = np.stack([np.stack([zero, -z, y], axis=-1),
                  np.stack([z, zero, -x], axis=-1),
                  np.stack([-y, x, zero], axis=-1)], axis=-2)
    s = np.sin(angle)[..., None, None]
    c = np.cos(angle)[..., None, None]
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def random_rotations(n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform-ish random rotations via random axis and angle."""
    axes = rng.normal(size=(n, 3))
    angles = rng.uniform(-np.pi, np.pi, size=n)
    return axis_angle_to_matrix(axes, angles)


# ---- Euler helpers for joint decomposition ----------------------------------

def _euler_xyz_compose(a, b, c):
    """Intrinsic Rx(a) @ Ry(b) @ Rz(c); scalars or arrays broadcast."""
    sa, ca = np.sin(a), np.cos(a)
    sb, cb = np.sin(b), np.cos(b)
    sc, cc = np.sin(c), np.cos(c)
    row0 = np.stack([cb * cc, -cb * sc, sb], axis=-1)
    row1 = np.stack([sa * sb * cc + ca * sc, -sa * sb * sc + ca * cc, -sa * cb], axis=-1)
    row2 = np.stack([-ca * sb * cc + sa * sc, ca * sb * sc + sa * cc, ca * cb], axis=-1)
    return np.stack([row0, row1, row2], axis=-2)


def _euler_xyz_extract(m):
    """Inverse of _euler_xyz_compose; returns (a, b, c, gimbal_flag)."""
    b = np.arcsin(np.clip(m[..., 0, 2], -1.0, 1.0))
    gimbal = np.abs(np.abs(b) - np.pi / 2) < GIMBAL_TOL
    a = np.arctan2(-m[..., 1, 2], m[..., 2, 2])
    c = np.arctan2(-m[..., 0, 1], m[..., 0, 0])
    return a, b, c, gimbal


def _joint_basis(dofs) -> tuple[np.ndarray, float]:
    """Orthonormal right-handed triad (columns) spanning a joint's axes.

    Returns (B, sign) where sign flips the third extracted angle when the
    declared third axis is the negative of u1 x u2.
    """
    u1 = dofs[0].axis
    if len(dofs) >= 2:
        u2 = dofs[1].axis
    else:
        # deterministic completion: cross with the least-aligned basis vector
        pick = np.argmin(np.abs(u1))
        helper = np.zeros(3)
        helper[pick] = 1.0
        u2 = np.cross(u1, helper)
        u2 = u2 / np.linalg.norm(u2)
    u3t = np.cross(u1, u2)
    sign = 1.0
    if len(dofs) == 3:
        sign = float(np.dot(dofs[2].axis, u3t))
        if not np.isclose(abs(sign), 1.0, atol=1e-9):
            raise ValidationError(f"dof {dofs[2].name}: third axis must be "
                                  "perpendicular to the first two")
        sign = np.sign(sign)
    return np.stack([u1, u2, u3t], axis=-1), sign


def compose_joint_rotation(dofs, angles: np.ndarray) -> np.ndarray:
    """Local rotation from ordered DOF angles; angles (..., n_dofs)."""
    basis, sign = _joint_basis(dofs)
    n = len(dofs)
    a = angles[..., 0]
    b = angles[..., 1] if n >= 2 else np.zeros_like(a)
    c = angles[..., 2] * sign if n == 3 else np.zeros_like(a)
    return basis @ _euler_xyz_compose(a, b, c) @ basis.T


# ---- pose containers ---------------------------------------------------------

@dataclass
class MotionSequence:
    """Per-frame global 6D orientations of every body, plus optional root path."""

    sixd: np.ndarray                 # (T, 6 * n_bodies)
    fps: float
    root: np.ndarray | None = None  # (T, 3) meters

    def __post_init__(self):
        self.sixd = np.asarray(self.sixd)
        if self.sixd.ndim != 2 or self.sixd.shape[1] % 6 != 0:
            raise ShapeError(f"motion must be (T, 6*n_bodies), got {self.sixd.shape}")
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        if self.root is not None:
            self.root = np.asarray(self.root)
            if self.root.shape != (len(self), 3):
                raise ShapeError(f"root path shape {self.root.shape} != ({len(self)}, 3)")

    def __len__(self) -> int:
        return self.sixd.shape[0]

    @property
    def n_bodies(self) -> int:
        return self.sixd.shape[1] // 6

    def as_matrices(self) -> np.ndarray:
        """Decode to (T, n_bodies, 3, 3); validates orthonormalizability."""
        return sixd_to_rotmat(self.sixd.reshape(len(self), self.n_bodies, 6))

    @classmethod
    def from_matrices(cls, R: np.ndarray, fps: float, root=None) -> "MotionSequence":
        sixd = rotmat_to_sixd(R).reshape(R.shape[0], -1)
        return cls(sixd, fps, root)


@dataclass
class ExtractionResult:
    """Joint angles recovered from global orientations, with diagnostics."""

    angles: np.ndarray        # (T, 52), radians, clamped to limits
    residual: np.ndarray      # (T, n_bodies) leftover rotation per joint, radians
    gimbal: np.ndarray        # (T, n_bodies) bool, 3-DOF middle axis near +/- pi/2
    clamped: int              # how many entries hit the limits

    @property
    def max_residual(self) -> float:
        return float(self.residual.max()) if self.residual.size else 0.0


# ---- forward kinematics -------------------------------------------------------

def forward_kinematics(skel: SkeletonConfig, R_global: np.ndarray,
                       root_translation: np.ndarray | None = None) -> np.ndarray:
    """Joint positions (..., n_bodies, 3) from global orientations.

    position(body) = position(parent) + R_global(parent) @ offset(body);
    the root sits at root_translation (origin by default).
    """
    R_global = np.asarray(R_global, dtype=np.float64)
    n = skel.n_bodies
    if R_global.shape[-3:] != (n, 3, 3):
        raise ShapeError(f"orientations must end in ({n}, 3, 3), "
                         f"got {R_global.shape[-3:]}")
    lead = R_global.shape[:-3]
    pos = np.zeros(lead + (n, 3))
    if root_translation is not None:
        pos[..., skel.root, :] = np.asarray(root_translation, dtype=np.float64)
    for b in skel.topo_order:
        p = skel.parents[b]
        if p < 0:
            continue
        step = (R_global[..., p, :, :] @ skel.offsets[b]).reshape(lead + (3,))
        pos[..., b, :] = pos[..., p, :] + step
    return pos


def compose_orientations(skel: SkeletonConfig, angles: np.ndarray) -> np.ndarray:
    """Global orientations (..., n_bodies, 3, 3) from joint angles (..., 52)."""
    angles = np.asarray(angles, dtype=np.float64)
    if angles.shape[-1] != skel.n_dofs:
        raise ShapeError(f"expected {skel.n_dofs} joint angles, got {angles.shape[-1]}")
    lead = angles.shape[:-1]
    R = np.zeros(lead + (skel.n_bodies, 3, 3))
    slices = skel.dof_slices()
    joints = {j.body: j for j in skel.joints}
    for b in skel.topo_order:
        local = compose_joint_rotation(joints[b].dofs, angles[..., slices[b]])
        p = skel.parents[b]
        R[..., b, :, :] = local if p < 0 else R[..., p, :, :] @ local
    return R


def extract_joint_angles(skel: SkeletonConfig, R_global: np.ndarray) -> ExtractionResult:
    """Recover ordered DOF angles from global orientations (T, n_bodies, 3, 3).

    Per joint, the local rotation parent^T @ child is decomposed over the
    joint's ordered axes; rotation its DOF cannot express is reported as a
    residual angle instead of failing. Angles are clamped into their limits
    and the clamp count reported.
    """
    R_global = np.asarray(R_global, dtype=np.float64)
    single = R_global.ndim == 3
    if single:
        R_global = R_global[None]
    T = R_global.shape[0]
    n = skel.n_bodies
    if R_global.shape[1:] != (n, 3, 3):
        raise ShapeError(f"expected (T, {n}, 3, 3), got {R_global.shape}")

    angles = np.zeros((T, skel.n_dofs))
    residual = np.zeros((T, n))
    gimbal = np.zeros((T, n), dtype=bool)
    clamped = 0
    slices = skel.dof_slices()
    for joint in skel.joints:
        b = joint.body
        p = skel.parents[b]
        local = R_global[:, b] if p < 0 else \
            np.swapaxes(R_global[:, p], -1, -2) @ R_global[:, b]
        basis, sign = _joint_basis(joint.dofs)
        m = basis.T @ local @ basis
        nd = len(joint.dofs)
        if nd == 3:
            a, bb, c, gim = _euler_xyz_extract(m)
            got = np.stack([a, bb, c * sign], axis=-1)
            gimbal[:, b] = gim
        elif nd == 2:
            a = np.arctan2(m[..., 2, 1], m[..., 1, 1])
            bb = np.arctan2(m[..., 0, 2], m[..., 0, 0])
            got = np.stack([a, bb], axis=-1)
        else:
            a = np.arctan2(m[..., 2, 1], m[..., 1, 1])
            got = a[..., None]
        lim = skel.dof_limits[slices[b]]
        clipped = np.clip(got, lim[:, 0], lim[:, 1])
        clamped += int((clipped != got).sum())
        angles[:, slices[b]] = clipped
        recomposed = compose_joint_rotation(joint.dofs, got)
        residual[:, b] = geodesic_angle(recomposed, local)
    if single:
        return ExtractionResult(angles[0], residual[0], gimbal[0], clamped)
    return ExtractionResult(angles, residual, gimbal, clamped)


# ---- metrics -------------------------------------------------------------------

def mpjpe(pred: MotionSequence, gt: MotionSequence, skel: SkeletonConfig,
          align: str = "root") -> float:
    """Mean per-joint position error in centimeters.

    Both sequences are evaluated with the root pinned at the origin
    ("root" alignment); "procrustes" additionally applies the best-fit
    rotation per frame before measuring.
    """
    if len(pred) != len(gt):
        raise ShapeError(f"sequence lengths differ: {len(pred)} vs {len(gt)}")
    p = forward_kinematics(skel, pred.as_matrices())
    g = forward_kinematics(skel, gt.as_matrices())
    if align == "procrustes":
        p = _procrustes_align(p, g)
    elif align != "root":
        raise ValidationError(f"unknown alignment mode {align!r}")
    return float(np.linalg.norm(p - g, axis=-1).mean() * 100.0)


def _procrustes_align(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    out = np.empty_like(p)
    for t in range(p.shape[0]):
        a = p[t] - p[t].mean(axis=0)
        b = g[t] - g[t].mean(axis=0)
        u, _, vt = np.linalg.svd(a.T @ b)
        d = np.sign(np.linalg.det(u @ vt))
        rot = u @ np.diag([1.0, 1.0, d]) @ vt
        out[t] = a @ rot + g[t].mean(axis=0)
    return out


def mpjre(pred_angles: np.ndarray, gt_angles: np.ndarray) -> float:
    """Mean absolute joint-angle error in degrees, wrapped at +/- pi."""
    pred_angles = np.asarray(pred_angles, dtype=np.float64)
    gt_angles = np.asarray(gt_angles, dtype=np.float64)
    if pred_angles.shape != gt_angles.shape:
        raise ShapeError(f"angle shapes differ: {pred_angles.shape} vs {gt_angles.shape}")
    d = pred_angles - gt_angles
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    return float(np.degrees(np.abs(d)).mean())
