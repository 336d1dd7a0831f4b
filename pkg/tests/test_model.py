"""Transformer forward pass: oracles, symmetries, and head constraints."""

import numpy as np
import pytest

from cfpower import nncore as nn
from cfpower.model import (ModelConfig, attention, embed_tokens,
                           encoder_forward, forward, forward_z, init_weights,
                           mse_loss, predict_powers, split_features)
from cfpower.nncore import Tensor

TINY = ModelConfig(d_model=8, n_layers=2, n_heads=2, d_ffn=16)


def coords(k, l, seed):
    rng = np.random.default_rng(seed)
    return rng.random((k, 2)), rng.random((l, 2))


# ------------------------------------------------------------ numpy oracle

def _np_forward(weights, ue_xy, ap_xy):
    """Straight-line re-implementation of the eval-mode forward pass."""
    cfg = weights.cfg
    v = {name: t.value for name, t in weights.named_parameters()}

    def ln(x):
        mu = x.mean(axis=-1, keepdims=True)
        sd = np.sqrt(((x - mu) ** 2).mean(axis=-1, keepdims=True) + 1e-12)
        return (x - mu) / sd

    def sig(x):
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        e = np.exp(x[~pos])
        out[~pos] = e / (1.0 + e)
        return out

    h = ue_xy @ v["w_ue"] + v["b_ue"]
    h = h + (ap_xy @ v["w_ap"] + v["b_ap"]).mean(axis=0)
    h = np.maximum(h, 0.0)
    dh = cfg.d_head
    for i in range(cfg.n_layers):
        p = lambda name: v[f"layers.{i}.{name}"]
        q, k_, vv = h @ p("wq") + p("bq"), h @ p("wk") + p("bk"), h @ p("wv") + p("bv")
        heads = []
        for j in range(cfg.n_heads):
            s = slice(j * dh, (j + 1) * dh)
            scores = q[:, s] @ k_[:, s].T / np.sqrt(dh)
            scores -= scores.max(axis=-1, keepdims=True)
            att = np.exp(scores)
            att /= att.sum(axis=-1, keepdims=True)
            heads.append(att @ vv[:, s])
        mha = np.concatenate(heads, axis=-1) @ p("wo") + p("bo")
        h = ln(h + mha) * p("ln1_gain") + p("ln1_bias")
        ffn = np.maximum(h @ p("w_ffn1") + p("b_ffn1"), 0.0) @ p("w_ffn2") + p("b_ffn2")
        h = ln(h + ffn) * p("ln2_gain") + p("ln2_bias")

    p_ul = sig(h @ v["w_ul"] + v["b_ul"]) * cfg.p_ul_max
    raw = np.maximum(h @ v["w_dl"] + v["b_dl"], 0.0)
    budget = ap_xy.shape[0] * cfg.p_dl_max_per_ap
    total = raw.sum()
    if total < 1e-12:
        p_dl = np.full_like(raw, budget / raw.shape[0])
    else:
        p_dl = raw / total * budget
    return p_ul, p_dl


@pytest.mark.parametrize("cfg", [ModelConfig(), ModelConfig(d_model=8, n_layers=1, n_heads=1, d_ffn=16)])
def test_forward_matches_numpy_oracle(cfg):
    weights = init_weights(cfg, seed=3)
    ue_xy, ap_xy = coords(5, 4, 30)
    p_ul, p_dl = forward(weights, ue_xy, ap_xy)
    ref_ul, ref_dl = _np_forward(weights, ue_xy, ap_xy)
    np.testing.assert_allclose(p_ul.value, ref_ul, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(p_dl.value, ref_dl, rtol=1e-12, atol=1e-12)


# ------------------------------------------------------------------- embed

def test_embed_shape_and_ap_permutation_invariance():
    weights = init_weights(ModelConfig(), seed=0)
    ue_xy, ap_xy = coords(10, 16, 31)
    h = embed_tokens(weights, ue_xy, ap_xy)
    assert h.value.shape == (10, 32)
    perm = np.random.default_rng(0).permutation(16)
    h2 = embed_tokens(weights, ue_xy, ap_xy[perm])
    np.testing.assert_allclose(h2.value, h.value, atol=1e-12)


def test_embed_zero_weights_give_zero_tokens():
    weights = init_weights(TINY, seed=0)
    for t in weights.parameters():
        t.value = np.zeros_like(t.value)
    ue_xy, ap_xy = coords(4, 3, 32)
    assert np.array_equal(embed_tokens(weights, ue_xy, ap_xy).value, np.zeros((4, 8)))


# --------------------------------------------------------------- attention

def test_single_token_attention_is_projected_v_row():
    weights = init_weights(TINY, seed=1)
    layer = weights.layers[0]
    h = Tensor(np.random.default_rng(33).random((1, 8)))
    out = attention(h, layer, TINY)
    expected = (h.value @ layer.wv.value + layer.bv.value) @ layer.wo.value + layer.bo.value
    np.testing.assert_allclose(out.value, expected, rtol=1e-12)


def test_identical_tokens_attend_identically():
    weights = init_weights(TINY, seed=2)
    row = np.random.default_rng(34).random(8)
    out = attention(Tensor(np.tile(row, (2, 1))), weights.layers[0], TINY).value
    np.testing.assert_allclose(out[0], out[1], rtol=1e-12)


# ----------------------------------------------------------------- encoder

def test_encoder_eval_mode_deterministic():
    weights = init_weights(ModelConfig(), seed=4)
    ue_xy, ap_xy = coords(6, 9, 35)
    a = encoder_forward(weights, ue_xy, ap_xy).value
    b = encoder_forward(weights, ue_xy, ap_xy).value
    np.testing.assert_array_equal(a, b)


def test_encoder_empty_stack_returns_embedding():
    weights = init_weights(TINY, seed=5)
    weights.layers = []
    ue_xy, ap_xy = coords(3, 2, 36)
    h = encoder_forward(weights, ue_xy, ap_xy).value
    np.testing.assert_array_equal(h, embed_tokens(weights, ue_xy, ap_xy).value)


def test_training_mode_requires_rng():
    weights = init_weights(TINY, seed=6)
    ue_xy, ap_xy = coords(3, 2, 37)
    with pytest.raises(ValueError):
        encoder_forward(weights, ue_xy, ap_xy, training=True, rng=None)


# ------------------------------------------------------------------- heads

@pytest.mark.parametrize("k,l", [(1, 2), (10, 16), (100, 49)])
def test_forward_output_shapes_and_constraints(k, l):
    weights = init_weights(ModelConfig(), seed=7)
    ue_xy, ap_xy = coords(k, l, 38 + k)
    p_ul, p_dl = forward(weights, ue_xy, ap_xy)
    assert p_ul.value.shape == (k, 1) and p_dl.value.shape == (k, 1)
    assert np.all(p_ul.value >= 0.0) and np.all(p_ul.value <= 100.0)
    assert np.all(p_dl.value >= 0.0)
    assert np.sum(p_dl.value) == pytest.approx(l * 200.0, rel=1e-12)


def test_dead_dl_head_splits_budget_evenly():
    weights = init_weights(TINY, seed=8)
    weights.w_dl.value = np.zeros_like(weights.w_dl.value)
    weights.b_dl.value = np.full_like(weights.b_dl.value, -5.0)
    ue_xy, ap_xy = coords(4, 4, 39)
    _, p_dl = forward(weights, ue_xy, ap_xy)
    np.testing.assert_allclose(p_dl.value, np.full((4, 1), 4 * 200.0 / 4), rtol=1e-12)


def test_zero_weights_give_midrange_ul_and_even_dl():
    weights = init_weights(TINY, seed=9)
    for t in weights.parameters():
        t.value = np.zeros_like(t.value)
    ue_xy, ap_xy = coords(5, 3, 40)
    p_ul, p_dl = forward(weights, ue_xy, ap_xy)
    np.testing.assert_allclose(p_ul.value, np.full((5, 1), 50.0), atol=1e-12)
    np.testing.assert_allclose(p_dl.value, np.full((5, 1), 3 * 200.0 / 5), rtol=1e-12)


# -------------------------------------------------------------- symmetries

def test_ue_permutation_equivariance():
    weights = init_weights(ModelConfig(), seed=10)
    ue_xy, ap_xy = coords(8, 9, 41)
    p_ul, p_dl = forward(weights, ue_xy, ap_xy)
    perm = np.random.default_rng(1).permutation(8)
    p_ul_p, p_dl_p = forward(weights, ue_xy[perm], ap_xy)
    np.testing.assert_allclose(p_ul_p.value, p_ul.value[perm], atol=1e-9)
    np.testing.assert_allclose(p_dl_p.value, p_dl.value[perm], atol=1e-9)


def test_ap_permutation_invariance():
    weights = init_weights(ModelConfig(), seed=11)
    ue_xy, ap_xy = coords(6, 16, 42)
    p_ul, p_dl = forward(weights, ue_xy, ap_xy)
    perm = np.random.default_rng(2).permutation(16)
    p_ul_p, p_dl_p = forward(weights, ue_xy, ap_xy[perm])
    np.testing.assert_allclose(p_ul_p.value, p_ul.value, atol=1e-9)
    np.testing.assert_allclose(p_dl_p.value, p_dl.value, atol=1e-9)


# --------------------------------------------------------------- structure

def test_default_parameter_count():
    weights = init_weights(ModelConfig(), seed=12)
    # 2 embeds (2*32+32 each), 2 layers of 4 proj + FFN + 2 LN pairs, 2 heads.
    per_layer = 4 * (32 * 32 + 32) + (32 * 128 + 128) + (128 * 32 + 32) + 2 * (32 + 32)
    expected = 2 * (2 * 32 + 32) + 2 * per_layer + 2 * (32 + 1)
    assert expected == 25666
    assert weights.param_count() == 25666


def test_parameter_shapes_never_mention_k_or_l():
    weights = init_weights(ModelConfig(), seed=13)
    sizes = {name: t.value.shape for name, t in weights.named_parameters()}
    assert all(max(s, default=1) <= 1024 for s in sizes.values())
    # One weight set must drive every scenario size without reshaping.
    for k, l in [(2, 9), (6, 16), (40, 49)]:
        ue_xy, ap_xy = coords(k, l, 43 + k)
        p_ul, p_dl = forward(weights, ue_xy, ap_xy)
        assert p_ul.value.shape == (k, 1) and p_dl.value.shape == (k, 1)


def test_no_decay_covers_biases_and_norms_only():
    weights = init_weights(TINY, seed=14)
    skip = {id(t) for t in weights.no_decay_parameters()}
    for name, t in weights.named_parameters():
        leaf = name.rsplit(".", 1)[-1]
        expect_skip = leaf.startswith("b") or leaf.startswith("ln")
        assert (id(t) in skip) == expect_skip, name


# ---------------------------------------------------------------- features

def test_split_features_round_trip():
    rng = np.random.default_rng(44)
    ue_xy, ap_xy = rng.random((4, 2)), rng.random((3, 2))
    z = np.hstack([ue_xy, np.tile(ap_xy.reshape(-1), (4, 1))])
    got_ue, got_ap = split_features(z)
    np.testing.assert_array_equal(got_ue, ue_xy)
    np.testing.assert_array_equal(got_ap, ap_xy)
    p_a = forward_z(init_weights(TINY, seed=15), z)[0].value
    p_b = forward(init_weights(TINY, seed=15), ue_xy, ap_xy)[0].value
    np.testing.assert_array_equal(p_a, p_b)


def test_split_features_rejects_malformed_input():
    with pytest.raises(ValueError):
        split_features(np.ones((3,)))
    with pytest.raises(ValueError):
        split_features(np.ones((3, 5)))
    bad = np.ones((3, 6))
    bad[1, 3] = 2.0
    with pytest.raises(ValueError, match="identical"):
        split_features(bad)


def test_predict_powers_returns_flat_arrays():
    weights = init_weights(TINY, seed=16)
    ue_xy, ap_xy = coords(3, 2, 45)
    z = np.hstack([ue_xy, np.tile(ap_xy.reshape(-1), (3, 1))])
    p_ul, p_dl = predict_powers(weights, z)
    assert p_ul.shape == (3,) and p_dl.shape == (3,)


# ------------------------------------------------------------------ config

def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(d_model=30, n_heads=4)
    with pytest.raises(ValueError):
        ModelConfig(dropout_rate=1.0)
    with pytest.raises(ValueError):
        ModelConfig(n_layers=0)
    with pytest.raises(ValueError):
        ModelConfig.from_dict({"d_model": 8, "bogus": 1})
    cfg = ModelConfig.from_dict(ModelConfig().to_dict())
    assert cfg == ModelConfig()


# -------------------------------------------------------------------- loss

def test_mse_loss_values():
    pred = Tensor(np.ones((5, 1)), requires_grad=True)
    assert float(mse_loss(pred, np.ones((5, 1))).value) == 0.0
    assert float(mse_loss(pred, np.zeros((5, 1))).value) == pytest.approx(5.0, rel=1e-15)


def test_full_model_gradient_check_small():
    cfg = ModelConfig(d_model=8, n_layers=2, n_heads=2, d_ffn=16)
    weights = init_weights(cfg, seed=17)
    ue_xy, ap_xy = coords(3, 2, 46)
    rng = np.random.default_rng(47)
    t_ul = rng.random((3, 1))
    t_dl = rng.random((3, 1))
    budget = ap_xy.shape[0] * cfg.p_dl_max_per_ap

    def build():
        p_ul, p_dl = forward(weights, ue_xy, ap_xy)
        loss_ul = mse_loss(nn.scale(p_ul, 1.0 / cfg.p_ul_max), t_ul)
        loss_dl = mse_loss(nn.scale(p_dl, 1.0 / budget), t_dl)
        return nn.add(loss_ul, loss_dl)

    # h=1e-5 keeps float cancellation below the deep graph's tolerance.
    assert nn.grad_check(build, weights.parameters(), h=1e-5) < 1e-4
