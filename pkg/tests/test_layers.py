"""Layer primitives against brute-force oracles and finite differences."""

import numpy as np
import pytest

from swingkit.errors import ConfigError, ShapeError
from swingkit.nn import (LSTM, Dropout, Embedding, LayerNorm, LayerSpec, Linear,
                         MultiheadAttention, ParameterStore, Tensor, TimeMix,
                         grad_check, lstm_cell, primitive_forward,
                         sinusoidal_positions)


def rng64(seed=0):
    return np.random.default_rng(seed)


def as64(module):
    for _, p in module.named_parameters():
        p.data = p.data.astype(np.float64)
    return module


# ---- conv1x1-over-time -----------------------------------------------------

def test_time_mix_equals_explicit_matrix_product():
    rng = rng64(3)
    mix = as64(TimeMix(32, rng))
    x = rng.normal(size=(32, 9))
    out = mix(Tensor(x)).data
    # brute-force oracle: explicit product along the time axis
    expected = np.empty_like(out)
    for t in range(32):
        for d in range(9):
            expected[t, d] = sum(mix.weight.data[t, s] * x[s, d] for s in range(32)) \
                + mix.bias.data[t]
    np.testing.assert_allclose(out, expected, atol=1e-10)


def test_time_mix_wrong_length_names_axis():
    mix = TimeMix(8, rng64(0))
    with pytest.raises(ShapeError, match="time axis"):
        mix(Tensor(np.zeros((7, 4), dtype=np.float32)))


# ---- layernorm / silu ------------------------------------------------------

def test_layernorm_constant_vector_is_zero_pre_affine():
    ln = as64(LayerNorm(6))
    out = ln(Tensor(np.full((2, 6), 3.7))).data
    np.testing.assert_allclose(out, 0.0, atol=1e-3)  # epsilon damps 0/0 to ~0


def test_layernorm_normalizes_last_axis():
    ln = as64(LayerNorm(16))
    x = rng64(5).normal(size=(4, 16)) * 3 + 1
    out = ln(Tensor(x)).data
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-7)
    np.testing.assert_allclose(out.std(axis=-1), 1.0, atol=1e-3)


# ---- attention -------------------------------------------------------------

def brute_force_attention(x, mha):
    """Per-head softmax(QK^T/sqrt(d))V oracle in plain numpy."""
    s, w = x.shape
    h = mha.heads
    d = w // h
    q = x @ mha.wq.weight.data + mha.wq.bias.data
    k = x @ mha.wk.weight.data + mha.wk.bias.data
    v = x @ mha.wv.weight.data + mha.wv.bias.data
    out = np.zeros((s, w))
    for head in range(h):
        sl = slice(head * d, (head + 1) * d)
        logits = q[:, sl] @ k[:, sl].T / np.sqrt(d)
        e = np.exp(logits - logits.max(axis=-1, keepdims=True))
        attn = e / e.sum(axis=-1, keepdims=True)
        out[:, sl] = attn @ v[:, sl]
    return out @ mha.wo.weight.data + mha.wo.bias.data


def test_attention_matches_brute_force_oracle():
    mha = as64(MultiheadAttention(8, 2, rng64(11)))
    x = rng64(12).normal(size=(6, 8))
    out = mha(Tensor(x)).data
    np.testing.assert_allclose(out, brute_force_attention(x, mha), atol=1e-10)


def test_attention_length_one_is_value_path():
    mha = as64(MultiheadAttention(8, 2, rng64(1)))
    x = rng64(2).normal(size=(1, 8))
    out = mha(Tensor(x)).data
    v = x @ mha.wv.weight.data + mha.wv.bias.data
    np.testing.assert_allclose(out, v @ mha.wo.weight.data + mha.wo.bias.data, atol=1e-12)


def test_attention_equal_logits_averages_values():
    # zero q/k weights force uniform attention over value vectors
    mha = as64(MultiheadAttention(4, 1, rng64(4)))
    mha.wq.weight.data[:] = 0.0
    mha.wq.bias.data[:] = 0.0
    mha.wk.weight.data[:] = 0.0
    mha.wk.bias.data[:] = 0.0
    x = rng64(9).normal(size=(5, 4))
    out = mha(Tensor(x)).data
    v = x @ mha.wv.weight.data + mha.wv.bias.data
    expected = np.repeat(v.mean(axis=0, keepdims=True), 5, axis=0)
    np.testing.assert_allclose(out, expected @ mha.wo.weight.data + mha.wo.bias.data,
                               atol=1e-12)


def test_attention_mask_zeroes_weights():
    mha = as64(MultiheadAttention(8, 2, rng64(6)))
    x = rng64(7).normal(size=(4, 8))
    mask = np.ones((4, 4), dtype=bool)
    mask[:, 3] = False  # nobody may attend to position 3
    out_masked = mha(Tensor(x), mask=mask).data
    x_perturbed = x.copy()
    x_perturbed[3] += 10.0  # only reachable through k/v of position 3
    out_perturbed = mha(Tensor(x_perturbed), mask=mask).data
    np.testing.assert_allclose(out_masked[:3], out_perturbed[:3], atol=1e-12)


def test_attention_heads_must_divide_width():
    with pytest.raises(ConfigError, match="divisible"):
        MultiheadAttention(10, 3, rng64(0))


# ---- lstm ------------------------------------------------------------------

def one_step_lstm_oracle(x, w_ih, w_hh, b):
    """Hand-rolled single LSTM step from zero state."""
    h = np.zeros(w_hh.shape[0])
    gates = x @ w_ih + h @ w_hh + b
    hid = w_hh.shape[0]
    sig = lambda v: 1.0 / (1.0 + np.exp(-v))
    i, f, g, o = (gates[0 * hid:1 * hid], gates[1 * hid:2 * hid],
                  gates[2 * hid:3 * hid], gates[3 * hid:4 * hid])
    c = sig(i) * np.tanh(g)
    return sig(o) * np.tanh(c)


def test_bilstm_t1_matches_single_cell_oracle():
    rng = rng64(21)
    lstm = as64(LSTM(5, 4, rng, bidirectional=True))
    x = rng.normal(size=(1, 1, 5))
    out = lstm(Tensor(x)).data[0, 0]
    fwd = one_step_lstm_oracle(x[0, 0], lstm.w_ih_f.data, lstm.w_hh_f.data, lstm.b_f.data)
    bwd = one_step_lstm_oracle(x[0, 0], lstm.w_ih_b.data, lstm.w_hh_b.data, lstm.b_b.data)
    np.testing.assert_allclose(out[:4], fwd, atol=1e-12)
    np.testing.assert_allclose(out[4:], bwd, atol=1e-12)


def test_bilstm_zero_weights_zero_output():
    lstm = LSTM(3, 4, rng64(0), bidirectional=True)
    for _, p in lstm.named_parameters():
        p.data[:] = 0.0
    out = lstm(Tensor(np.random.default_rng(1).normal(size=(2, 6, 3)).astype(np.float32)))
    np.testing.assert_array_equal(out.data, 0.0)


def test_bilstm_forward_half_is_causal():
    rng = rng64(31)
    lstm = as64(LSTM(3, 4, rng, bidirectional=True))
    x = rng.normal(size=(1, 8, 3))
    base = lstm(Tensor(x)).data
    x2 = x.copy()
    x2[0, 5] += 1.0
    pert = lstm(Tensor(x2)).data
    np.testing.assert_array_equal(base[0, :5, :4], pert[0, :5, :4])
    assert np.abs(base[0, 5:, :4] - pert[0, 5:, :4]).max() > 0


# ---- dropout / embedding ---------------------------------------------------

def test_dropout_eval_is_identity():
    drop = Dropout(0.5, rng64(0))
    drop.eval()
    x = Tensor(np.random.default_rng(2).normal(size=(10, 10)).astype(np.float32))
    np.testing.assert_array_equal(drop(x).data, x.data)


def test_dropout_train_scales_kept_units():
    drop = Dropout(0.25, rng64(3))
    x = Tensor(np.ones((1000, 4), dtype=np.float64))
    out = drop(x).data
    kept = out != 0
    np.testing.assert_allclose(out[kept], 1.0 / 0.75)
    assert abs(kept.mean() - 0.75) < 0.03


def test_embedding_out_of_range():
    emb = Embedding(10, 4, rng64(0))
    with pytest.raises(ShapeError, match="out of range"):
        emb(np.array([3, 11]))


# ---- every primitive passes its gradient check ------------------------------

PRIMS = [
    LayerSpec("linear", in_dim=5, out_dim=4),
    LayerSpec("conv1x1-over-time", length=6),
    LayerSpec("layernorm", in_dim=7),
    LayerSpec("silu"),
    LayerSpec("relu"),
    LayerSpec("softmax"),
    LayerSpec("lstm-cell", in_dim=4, hidden=3),
    LayerSpec("multihead-attention", width=8, heads=2),
]


@pytest.mark.parametrize("spec", PRIMS, ids=lambda s: s.kind)
def test_primitive_gradients_ten_instances(spec):
    worst = 0.0
    for instance in range(10):
        rng = np.random.default_rng(100 + instance)
        params = spec.init_params(rng, dtype=np.float64)
        if spec.kind == "linear":
            x = Tensor(rng.normal(size=(3, spec.in_dim)), requires_grad=True)
        elif spec.kind == "conv1x1-over-time":
            x = Tensor(rng.normal(size=(spec.length, 4)), requires_grad=True)
        elif spec.kind == "layernorm":
            x = Tensor(rng.normal(size=(3, spec.in_dim)), requires_grad=True)
        elif spec.kind == "lstm-cell":
            x = Tensor(rng.normal(size=(2, spec.in_dim)), requires_grad=True)
        elif spec.kind == "multihead-attention":
            x = Tensor(rng.normal(size=(5, spec.width)), requires_grad=True)
        else:
            x = Tensor(rng.normal(size=(4, 6)), requires_grad=True)
        probe = rng.normal(size=1)[0]

        def loss():
            out = primitive_forward(spec, x, params)
            return ((out * probe) ** 2).mean()

        checked = dict(params.params)
        checked["__input__"] = x
        report = grad_check(loss, checked)
        worst = max(worst, report.max_rel_error)
        assert report.passed(1e-4), f"{spec.kind} instance {instance}:\n{report.summary()}"
    assert worst < 1e-4


def test_embedding_gradient():
    spec = LayerSpec("embedding", vocab=6, out_dim=3)
    rng = np.random.default_rng(0)
    params = spec.init_params(rng, dtype=np.float64)
    idx = Tensor(np.array([0, 2, 2, 5]))

    def loss():
        return (primitive_forward(spec, idx, params) ** 2).sum()

    report = grad_check(loss, dict(params.params))
    assert report.passed(1e-6), report.summary()


def test_dropout_eval_primitive_identity():
    spec = LayerSpec("dropout", rate=0.5)
    x = Tensor(np.ones((3, 3)))
    out = primitive_forward(spec, x, ParameterStore({}), training=False)
    np.testing.assert_array_equal(out.data, x.data)


def test_primitive_missing_param_named():
    spec = LayerSpec("linear", in_dim=2, out_dim=2)
    with pytest.raises(ConfigError, match="weight"):
        primitive_forward(spec, Tensor(np.zeros((1, 2))), ParameterStore({}))


def test_sinusoidal_positions_shape_and_range():
    table = sinusoidal_positions(10, 8)
    assert table.shape == (10, 8)
    assert np.abs(table).max() <= 1.0
