"""Compositional motion tokenizer: five per-part transformer autoencoders
with finite scalar quantization over a [7, 6, 5] lattice (210 codes per part,
one token per body part per frame).

Even level counts use the half-shift construction: round(((L-1)/2)*tanh(z)
- 0.5) + 0.5 realizes exactly L half-integer lattice points, keeping the
codebook size at the product of the levels.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError, ShapeError, ValidationError
from .kinematics import MotionSequence, forward_kinematics, mpjpe, sixd_to_rotmat
from .nn import (Adam, LayerNorm, Linear, Module, MultiheadAttention, Tensor,
                 concat, no_grad, round_ste, sinusoidal_positions, smooth_l1)
from .skeleton import SkeletonConfig

log = logging.getLogger(__name__)


# ---- finite scalar quantization ---------------------------------------------

@dataclass(frozen=True)
class FSQSpec:
    levels: tuple[int, ...] = (7, 6, 5)

    def __post_init__(self):
        if any(l < 2 for l in self.levels):
            raise ConfigError(f"all FSQ levels must be >= 2, got {self.levels}")

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def codebook_size(self) -> int:
        return int(np.prod(self.levels))

    def scales(self) -> np.ndarray:
        """Per-channel tanh scale: floor(L/2) for odd L, (L-1)/2 for even."""
        return np.array([l // 2 if l % 2 else (l - 1) / 2.0 for l in self.levels])

    def shifts(self) -> np.ndarray:
        """Half-integer offset applied after rounding on even channels."""
        return np.array([0.0 if l % 2 else 0.5 for l in self.levels])

    def lattice_min(self) -> np.ndarray:
        return np.array([-(l // 2) if l % 2 else -(l - 1) / 2.0 for l in self.levels])


def fsq_bound(z, spec: FSQSpec):
    """Bounded pre-rounding value; works on Tensors and arrays."""
    scales = spec.scales()
    shifts = spec.shifts()
    if isinstance(z, Tensor):
        return z.tanh() * scales.astype(z.dtype) - shifts.astype(z.dtype)
    return np.tanh(z) * scales - shifts


def fsq_quantize(z: np.ndarray, spec: FSQSpec) -> tuple[np.ndarray, np.ndarray]:
    """Quantize (..., d) latents to (lattice vectors, packed codes)."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != spec.dim:
        raise ShapeError(f"latent last axis {z.shape[-1]} != {spec.dim} channels")
    if not np.all(np.isfinite(z)):
        raise ValidationError("latents must be finite")
    lattice = np.round(fsq_bound(z, spec)) + spec.shifts()
    indices = np.round(lattice - spec.lattice_min()).astype(np.int64)
    return lattice, codes_pack(indices, spec)


def codes_pack(indices: np.ndarray, spec: FSQSpec = FSQSpec()) -> np.ndarray:
    """Mixed-radix packing, little-endian in channel order."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.shape[-1] != spec.dim:
        raise ShapeError(f"expected {spec.dim} level indices, got {indices.shape[-1]}")
    for i, l in enumerate(spec.levels):
        ch = indices[..., i]
        if ch.size and (ch.min() < 0 or ch.max() >= l):
            raise ValidationError(f"channel {i} index out of range [0, {l})")
    code = np.zeros(indices.shape[:-1], dtype=np.int64)
    radix = 1
    for i, l in enumerate(spec.levels):
        code = code + indices[..., i] * radix
        radix *= l
    return code


def codes_unpack(codes: np.ndarray, spec: FSQSpec = FSQSpec()) -> np.ndarray:
    """Inverse of codes_pack: packed code -> per-channel level indices."""
    codes = np.asarray(codes, dtype=np.int64)
    if codes.size and (codes.min() < 0 or codes.max() >= spec.codebook_size):
        raise ValidationError(f"code out of range [0, {spec.codebook_size})")
    out = np.empty(codes.shape + (spec.dim,), dtype=np.int64)
    rest = codes
    for i, l in enumerate(spec.levels):
        out[..., i] = rest % l
        rest = rest // l
    return out


def indices_to_lattice(indices: np.ndarray, spec: FSQSpec) -> np.ndarray:
    return np.asarray(indices, dtype=np.float64) + spec.lattice_min()


# ---- model -------------------------------------------------------------------

@dataclass
class VQVAEConfig:
    width: int = 256
    layers: int = 4
    heads: int = 4
    ff: int = 512
    levels: tuple[int, ...] = (7, 6, 5)
    single_codebook: bool = False
    velocity_weight: float = 0.5   # lambda in the composite loss
    smooth_beta: float = 1.0
    lr: float = 2e-4
    batch: int = 16
    epochs: int = 20
    weight_decay: float = 0.0
    max_pos: int = 512             # longest supported sequence

    @property
    def fsq(self) -> FSQSpec:
        return FSQSpec(tuple(self.levels))


class TransformerBlock(Module):
    """Pre-norm self-attention + feed-forward with residuals."""

    def __init__(self, width, heads, ff, rng):
        super().__init__()
        self.ln1 = LayerNorm(width)
        self.attn = MultiheadAttention(width, heads, rng)
        self.ln2 = LayerNorm(width)
        self.ff1 = Linear(width, ff, rng)
        self.ff2 = Linear(ff, width, rng)

    def forward(self, x, mask=None):
        x = x + self.attn(self.ln1(x), mask=mask)
        return x + self.ff2(self.ff1(self.ln2(x)).silu())


class PartAutoencoder(Module):
    """Transformer encoder/decoder pair for one body part's channels."""

    def __init__(self, part_width, cfg: VQVAEConfig, rng):
        super().__init__()
        w = cfg.width
        self.enc_in = Linear(part_width, w, rng)
        self.enc_blocks = [TransformerBlock(w, cfg.heads, cfg.ff, rng)
                           for _ in range(cfg.layers)]
        self.enc_ln = LayerNorm(w)
        self.enc_out = Linear(w, cfg.fsq.dim, rng)
        self.dec_in = Linear(cfg.fsq.dim, w, rng)
        self.dec_blocks = [TransformerBlock(w, cfg.heads, cfg.ff, rng)
                           for _ in range(cfg.layers)]
        self.dec_ln = LayerNorm(w)
        self.dec_out = Linear(w, part_width, rng)
        self.posenc = Tensor(sinusoidal_positions(cfg.max_pos, w))

    def _pos(self, t, dtype):
        return self.posenc.data[:t].astype(dtype)

    def encode(self, x: Tensor) -> Tensor:
        t = x.shape[-2]
        h = self.enc_in(x) + self._pos(t, x.dtype)
        for block in self.enc_blocks:
            h = block(h)
        return self.enc_out(self.enc_ln(h))

    def decode(self, lattice: Tensor) -> Tensor:
        t = lattice.shape[-2]
        h = self.dec_in(lattice) + self._pos(t, lattice.dtype)
        for block in self.dec_blocks:
            h = block(h)
        return self.dec_out(self.dec_ln(h))


class MotionVQVAE(Module):
    """Per-part encoders and decoders around a shared FSQ lattice geometry.

    Parts never exchange information: token column i is a function of part
    i's channels only, and decoded part channels depend only on column i.
    """

    def __init__(self, skel: SkeletonConfig, cfg: VQVAEConfig, seed: int = 0):
        super().__init__()
        self.cfg = cfg
        if cfg.single_codebook:
            self.part_slices = [("body", slice(0, skel.pose_width))]
        else:
            self.part_slices = skel.part_slices()
        rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 0xF5A]))
        self.parts = [PartAutoencoder(s.stop - s.start, cfg, rng)
                      for _, s in self.part_slices]

    @property
    def n_parts(self) -> int:
        return len(self.parts)

    def forward(self, m: Tensor, quantize: bool = True):
        """Reconstruct motion; returns (recon, codes (..., P) int array).

        With quantize=False the rounding step is bypassed (the smooth
        relaxation used by gradient checks); codes are still reported.
        """
        spec = self.cfg.fsq
        recons, codes = [], []
        for part, (_, sl) in zip(self.parts, self.part_slices):
            z = part.encode(m[..., sl])
            bounded = fsq_bound(z, spec)
            _, code = fsq_quantize(z.data, spec)
            codes.append(code)
            if quantize:
                lattice = round_ste(bounded) + spec.shifts().astype(bounded.dtype)
            else:
                lattice = bounded
            recons.append(part.decode(lattice))
        return concat(recons, axis=-1), np.stack(codes, axis=-1)

    def encode(self, motion: np.ndarray) -> np.ndarray:
        """Motion (T, 156) or (B, T, 156) -> token grid (T, P) / (B, T, P)."""
        motion = np.asarray(motion)
        if motion.shape[-1] != self.part_slices[-1][1].stop:
            raise ShapeError(f"pose width {motion.shape[-1]} != "
                             f"{self.part_slices[-1][1].stop}")
        spec = self.cfg.fsq
        with no_grad():
            cols = []
            for part, (_, sl) in zip(self.parts, self.part_slices):
                z = part.encode(Tensor(motion[..., sl]))
                _, code = fsq_quantize(z.data, spec)
                cols.append(code)
        return np.stack(cols, axis=-1)

    def decode(self, grid: np.ndarray) -> np.ndarray:
        """Token grid (T, P) or (B, T, P) -> motion (T, 156) / (B, T, 156)."""
        grid = np.asarray(grid, dtype=np.int64)
        if grid.shape[-1] != self.n_parts:
            raise ShapeError(f"grid last axis {grid.shape[-1]} != {self.n_parts} parts")
        spec = self.cfg.fsq
        with no_grad():
            outs = []
            for p, part in enumerate(self.parts):
                lattice = indices_to_lattice(codes_unpack(grid[..., p], spec), spec)
                outs.append(part.decode(Tensor(lattice.astype(np.float32))).data)
        return np.concatenate(outs, axis=-1)


def encode_motion(vqvae: MotionVQVAE, motion: np.ndarray) -> np.ndarray:
    return vqvae.encode(motion)


def decode_tokens(vqvae: MotionVQVAE, grid: np.ndarray) -> np.ndarray:
    return vqvae.decode(grid)


# ---- loss and metrics -----------------------------------------------------------

def velocity(m):
    """Frame-to-frame displacement along the time axis."""
    if isinstance(m, Tensor):
        t = m.shape[-2]
        return m[..., 1:t, :] - m[..., 0:t - 1, :]
    return m[..., 1:, :] - m[..., :-1, :]


def vqvae_loss(m, m_hat, velocity_weight: float = 0.5, smooth_beta: float = 1.0):
    """smooth-L1 position term plus weighted smooth-L1 velocity term."""
    target = m.data if isinstance(m, Tensor) else np.asarray(m)
    pred = m_hat if isinstance(m_hat, Tensor) else Tensor(np.asarray(m_hat))
    if target.shape != pred.shape:
        raise ShapeError(f"shapes differ: {target.shape} vs {pred.shape}")
    loss = smooth_l1(pred, target, beta=smooth_beta)
    if target.shape[-2] < 2:
        warnings.warn("sequence shorter than 2 frames: velocity term skipped")
        return loss
    vel_loss = smooth_l1(velocity(pred), velocity(target), beta=smooth_beta)
    return loss + vel_loss * velocity_weight


def codebook_utilization(grids, codebook_size: int = 210) -> np.ndarray:
    """Fraction of codes used at least once, per part column."""
    grids = [np.asarray(g) for g in grids]
    if not grids:
        raise ValidationError("utilization needs a nonempty token corpus")
    stacked = np.concatenate([g.reshape(-1, g.shape[-1]) for g in grids], axis=0)
    n_parts = stacked.shape[-1]
    out = np.empty(n_parts)
    for p in range(n_parts):
        out[p] = len(np.unique(stacked[:, p])) / codebook_size
    return out


def reconstruction_mpjpe(model: MotionVQVAE, motions: list[np.ndarray],
                         skel: SkeletonConfig, fps: float = 30.0) -> float:
    """Mean MPJPE of decode(encode(m)) over a list of (T, 156) motions."""
    errors = []
    for m in motions:
        recon = model.decode(model.encode(m))
        recon_r = sixd_to_rotmat(recon.reshape(len(m), skel.n_bodies, 6))
        gt = MotionSequence(m, fps)
        pred = MotionSequence.from_matrices(recon_r, fps)
        errors.append(mpjpe(pred, gt, skel))
    return float(np.mean(errors))


# ---- training --------------------------------------------------------------------

def train_vqvae(motions: list[np.ndarray], cfg: VQVAEConfig, seed: int,
                skel: SkeletonConfig, probe_size: int = 8) -> tuple[MotionVQVAE, dict]:
    """Train on a list of (T, 156) float arrays; all T must match for batching.

    Returns the model and a history dict with per-epoch loss, probe-set
    reconstruction MPJPE, and per-part codebook utilization.
    """
    if not motions:
        raise ValidationError("empty training corpus")
    lengths = {m.shape[0] for m in motions}
    if len(lengths) != 1:
        raise ValidationError(f"batched training needs uniform length, got {lengths}")
    model = MotionVQVAE(skel, cfg, seed=seed)
    opt = Adam(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, 0x7A41]))
    data = np.stack(motions).astype(np.float32)
    n = len(data)
    probe = [m for m in motions[:probe_size]]
    history = {"loss": [], "recon_mpjpe": [], "utilization": []}
    start = time.time()
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for i in range(0, n, cfg.batch):
            batch = Tensor(data[order[i:i + cfg.batch]])
            recon, _ = model(batch)
            loss = vqvae_loss(batch, recon, cfg.velocity_weight, cfg.smooth_beta)
            if not np.isfinite(loss.data):
                raise NumericError(f"non-finite tokenizer loss at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += loss.item()
            batches += 1
        model.eval()
        history["loss"].append(epoch_loss / batches)
        history["recon_mpjpe"].append(reconstruction_mpjpe(model, probe, skel))
        history["utilization"].append(
            codebook_utilization([model.encode(m) for m in probe],
                                 cfg.fsq.codebook_size).tolist())
        model.train()
        log.info("vqvae epoch %d: loss %.5f probe-mpjpe %.2f cm (%.1fs)",
                 epoch, history["loss"][-1], history["recon_mpjpe"][-1],
                 time.time() - start)
    model.eval()
    return model, history
