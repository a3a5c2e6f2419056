"""FSQ lattice exactness, pack/unpack bijection, compositional locality."""

import numpy as np
import pytest

from swingkit.errors import ValidationError
from swingkit.nn import Tensor, grad_check
from swingkit.skeleton import default_skeleton
from swingkit.tokenizer import (FSQSpec, MotionVQVAE, VQVAEConfig, codes_pack,
                                codes_unpack, decode_tokens, encode_motion,
                                fsq_bound, fsq_quantize, vqvae_loss)

SPEC = FSQSpec((7, 6, 5))


@pytest.fixture(scope="module")
def skel():
    return default_skeleton()


@pytest.fixture(scope="module")
def tiny_model(skel):
    cfg = VQVAEConfig(width=16, layers=1, heads=2, ff=32)
    return MotionVQVAE(skel, cfg, seed=0)


# ---- FSQ scalar behavior -----------------------------------------------------

def test_zero_latent_maps_to_center():
    lattice, _ = fsq_quantize(np.zeros(3), SPEC)
    assert lattice[0] == 0.0            # odd level: round(3*tanh(0)) = 0
    assert lattice[1] in (-0.5, 0.5)    # even level: nearest half-integer
    assert lattice[2] == 0.0


def test_saturation_at_top_level():
    lattice, _ = fsq_quantize(np.full(3, 10.0), SPEC)
    np.testing.assert_array_equal(lattice, [3.0, 2.5, 2.0])
    lattice, _ = fsq_quantize(np.full(3, -10.0), SPEC)
    np.testing.assert_array_equal(lattice, [-3.0, -2.5, -2.0])


def test_scalar_evaluation_oracle():
    # round(3 * tanh(0.5)) = round(1.3864...) = 1
    lattice, _ = fsq_quantize(np.array([0.5, 0.0, 0.0]), SPEC)
    assert lattice[0] == 1.0


def test_even_levels_realize_exactly_l_points():
    z = np.linspace(-6, 6, 20001)
    for i, l in enumerate(SPEC.levels):
        zz = np.zeros((z.size, 3))
        zz[:, i] = z
        lattice, _ = fsq_quantize(zz, SPEC)
        values = np.unique(lattice[:, i])
        assert len(values) == l, f"channel {i}: {values}"


def test_dense_sweep_hits_exactly_210_codes():
    grid = np.linspace(-5, 5, 41)
    zz = np.stack(np.meshgrid(grid, grid, grid, indexing="ij"), axis=-1).reshape(-1, 3)
    _, codes = fsq_quantize(zz, SPEC)
    assert len(np.unique(codes)) == SPEC.codebook_size == 210


# ---- pack / unpack -------------------------------------------------------------

def test_pack_corner_cases():
    assert codes_pack(np.array([0, 0, 0]), SPEC) == 0
    assert codes_pack(np.array([6, 5, 4]), SPEC) == 209  # 6 + 7*5 + 42*4


def test_pack_unpack_exhaustive_bijection():
    all_tuples = codes_unpack(np.arange(210), SPEC)
    codes = codes_pack(all_tuples, SPEC)
    np.testing.assert_array_equal(codes, np.arange(210))
    assert len(np.unique(codes)) == 210


def test_out_of_range_index_rejected():
    with pytest.raises(ValidationError, match="range"):
        codes_pack(np.array([7, 0, 0]), SPEC)
    with pytest.raises(ValidationError, match="range"):
        codes_unpack(np.array([210]), SPEC)


# ---- straight-through estimator ---------------------------------------------

def test_ste_gradient_passes_through_rounding():
    # the gradient at the rounding input equals the gradient at its output
    rng = np.random.default_rng(0)
    z = Tensor(rng.normal(size=(4, 3)).astype(np.float64), requires_grad=True)
    bounded = fsq_bound(z, SPEC)
    from swingkit.nn import round_ste
    lattice = round_ste(bounded) + SPEC.shifts()
    loss = (lattice * lattice).sum()
    loss.backward()
    np.testing.assert_array_equal(bounded.grad, lattice.grad)


# ---- composite loss -------------------------------------------------------------

def test_loss_zero_for_perfect_reconstruction():
    m = np.random.default_rng(1).normal(size=(6, 156)).astype(np.float32)
    assert vqvae_loss(m, Tensor(m.copy())).item() == 0.0


def test_loss_constant_offset_closed_form():
    # constant-in-time motion, prediction off by 0.5: velocity term vanishes,
    # position term is smooth-L1(0.5) = 0.125 at beta=1
    m = np.tile(np.linspace(-1, 1, 156, dtype=np.float64), (4, 1))
    m_hat = Tensor(m + 0.5)
    assert vqvae_loss(m, m_hat).item() == pytest.approx(0.125, abs=1e-7)


def test_velocity_term_only_adds(skel):
    rng = np.random.default_rng(2)
    m = rng.normal(size=(5, 156))
    m_hat = Tensor(rng.normal(size=(5, 156)))
    with_vel = vqvae_loss(m, m_hat, velocity_weight=0.5).item()
    without = vqvae_loss(m, m_hat, velocity_weight=0.0).item()
    assert with_vel >= without


def test_single_frame_skips_velocity_with_warning():
    m = np.zeros((1, 156))
    with pytest.warns(UserWarning, match="velocity"):
        vqvae_loss(m, Tensor(m + 1.0))


# ---- model structure ------------------------------------------------------------

def test_encode_shape_and_range(tiny_model):
    m = np.random.default_rng(3).normal(size=(10, 156)).astype(np.float32) * 0.5
    grid = encode_motion(tiny_model, m)
    assert grid.shape == (10, 5)
    assert grid.min() >= 0 and grid.max() < 210


def test_encode_deterministic(tiny_model):
    m = np.random.default_rng(4).normal(size=(8, 156)).astype(np.float32)
    np.testing.assert_array_equal(encode_motion(tiny_model, m),
                                  encode_motion(tiny_model, m))


def test_part_locality_in_encoding(tiny_model, skel):
    m = np.random.default_rng(5).normal(size=(8, 156)).astype(np.float32) * 0.5
    grid = encode_motion(tiny_model, m)
    m2 = m.copy()
    m2[:, 0:36] += 0.3  # left-arm channels only
    grid2 = encode_motion(tiny_model, m2)
    np.testing.assert_array_equal(grid[:, 1:], grid2[:, 1:])
    assert np.any(grid[:, 0] != grid2[:, 0])


def test_part_locality_in_decoding(tiny_model):
    rng = np.random.default_rng(6)
    grid = rng.integers(0, 210, size=(8, 5))
    grid2 = grid.copy()
    grid2[:, 3] = (grid2[:, 3] + 17) % 210  # right leg tokens only
    out = decode_tokens(tiny_model, grid)
    out2 = decode_tokens(tiny_model, grid2)
    np.testing.assert_array_equal(out[:, :102], out2[:, :102])
    np.testing.assert_array_equal(out[:, 132:], out2[:, 132:])
    assert np.abs(out[:, 102:132] - out2[:, 102:132]).max() > 0


def test_decode_encode_shapes_roundtrip(tiny_model):
    m = np.random.default_rng(7).normal(size=(9, 156)).astype(np.float32)
    out = decode_tokens(tiny_model, encode_motion(tiny_model, m))
    assert out.shape == m.shape


def test_single_codebook_variant(skel):
    cfg = VQVAEConfig(width=16, layers=1, heads=2, ff=32, single_codebook=True)
    model = MotionVQVAE(skel, cfg, seed=0)
    m = np.random.default_rng(8).normal(size=(6, 156)).astype(np.float32)
    grid = model.encode(m)
    assert grid.shape == (6, 1)
    assert model.decode(grid).shape == (6, 156)


def test_gradcheck_through_relaxed_stack(skel):
    # rounding bypassed: the smooth relaxation the STE backward corresponds to
    cfg = VQVAEConfig(width=8, layers=1, heads=2, ff=16)
    model = MotionVQVAE(skel, cfg, seed=1)
    for _, p in model.named_parameters():
        p.data = p.data.astype(np.float64)
    part = model.parts[0]
    rng = np.random.default_rng(9)
    x = Tensor(rng.normal(size=(3, 36)) * 0.5)
    target = rng.normal(size=(3, 36))

    def loss():
        z = part.encode(x)
        lattice = fsq_bound(z, model.cfg.fsq)
        recon = part.decode(lattice)
        d = recon - target
        return (d * d).mean()

    params = {n: p for n, p in part.named_parameters()}
    report = grad_check(loss, params, max_entries_per_param=6,
                        rng=np.random.default_rng(0))
    assert report.passed(1e-4), report.summary()
