"""Set transformer mapping network geometry to transmit powers.

UE positions become tokens; the AP layout enters every token through a
mean-pooled embedding, so one weight file serves any number of UEs and APs.
The encoder is permutation equivariant over UEs and the AP pooling is
permutation invariant, matching the physics of the allocation problem.
"""

import math
from dataclasses import dataclass, fields

import numpy as np

from . import nncore as nn
from .nncore import Tensor


@dataclass
class ModelConfig:
    d_model: int = 32
    n_layers: int = 2
    n_heads: int = 4
    d_ffn: int = 128
    dropout_rate: float = 0.1
    p_ul_max: float = 100.0          # mW, sigmoid head full scale
    p_dl_max_per_ap: float = 200.0   # mW, downlink budget is L times this

    def __post_init__(self):
        if self.d_model < 1 or self.n_layers < 1 or self.n_heads < 1 or self.d_ffn < 1:
            raise ValueError("model dimensions must be positive")
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.p_ul_max <= 0 or self.p_dl_max_per_ap <= 0:
            raise ValueError("power scales must be positive")

    @property
    def d_head(self):
        return self.d_model // self.n_heads

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)


class EncoderLayerWeights:
    """Parameters of one post-norm encoder block."""

    FIELDS = ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
              "ln1_gain", "ln1_bias", "ln2_gain", "ln2_bias",
              "w_ffn1", "b_ffn1", "w_ffn2", "b_ffn2")

    def __init__(self, cfg, rng):
        d, f = cfg.d_model, cfg.d_ffn
        for name in ("wq", "wk", "wv", "wo"):
            setattr(self, name, Tensor(nn.glorot_uniform(rng, (d, d)), requires_grad=True))
        for name in ("bq", "bk", "bv", "bo"):
            setattr(self, name, Tensor(np.zeros(d), requires_grad=True))
        self.w_ffn1 = Tensor(nn.glorot_uniform(rng, (d, f)), requires_grad=True)
        self.b_ffn1 = Tensor(np.zeros(f), requires_grad=True)
        self.w_ffn2 = Tensor(nn.glorot_uniform(rng, (f, d)), requires_grad=True)
        self.b_ffn2 = Tensor(np.zeros(d), requires_grad=True)
        self.ln1_gain = Tensor(np.ones(d), requires_grad=True)
        self.ln1_bias = Tensor(np.zeros(d), requires_grad=True)
        self.ln2_gain = Tensor(np.ones(d), requires_grad=True)
        self.ln2_bias = Tensor(np.zeros(d), requires_grad=True)


class TransformerWeights:
    """Full parameter set plus the architecture that generated it."""

    def __init__(self, cfg, rng):
        self.cfg = cfg
        d = cfg.d_model
        self.w_ue = Tensor(nn.glorot_uniform(rng, (2, d)), requires_grad=True)
        self.b_ue = Tensor(np.zeros(d), requires_grad=True)
        self.w_ap = Tensor(nn.glorot_uniform(rng, (2, d)), requires_grad=True)
        self.b_ap = Tensor(np.zeros(d), requires_grad=True)
        self.layers = [EncoderLayerWeights(cfg, rng) for _ in range(cfg.n_layers)]
        self.w_ul = Tensor(nn.glorot_uniform(rng, (d, 1)), requires_grad=True)
        self.b_ul = Tensor(np.zeros(1), requires_grad=True)
        self.w_dl = Tensor(nn.glorot_uniform(rng, (d, 1)), requires_grad=True)
        self.b_dl = Tensor(np.zeros(1), requires_grad=True)

    def named_parameters(self):
        out = [("w_ue", self.w_ue), ("b_ue", self.b_ue),
               ("w_ap", self.w_ap), ("b_ap", self.b_ap)]
        for i, layer in enumerate(self.layers):
            out.extend((f"layers.{i}.{name}", getattr(layer, name))
                       for name in EncoderLayerWeights.FIELDS)
        out.extend([("w_ul", self.w_ul), ("b_ul", self.b_ul),
                    ("w_dl", self.w_dl), ("b_dl", self.b_dl)])
        return out

    def parameters(self):
        return [t for _, t in self.named_parameters()]

    def no_decay_parameters(self):
        """Biases and normalization parameters, excluded from weight decay."""
        skip = []
        for name, t in self.named_parameters():
            leaf = name.rsplit(".", 1)[-1]
            if leaf.startswith(("b", "ln")):
                skip.append(t)
        return skip

    def param_count(self):
        return sum(t.value.size for t in self.parameters())


def init_weights(cfg, seed):
    """Glorot-initialized weights, deterministic in the seed."""
    return TransformerWeights(cfg, np.random.default_rng(seed))


def split_features(z):
    """Split a (K, 2L + 2) feature matrix into UE and AP coordinates.

    Columns 0:2 hold the UE position, the rest the flattened AP layout,
    identical across rows.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] < 4 or z.shape[1] % 2 != 0:
        raise ValueError("features must be (K, 2L + 2) with L >= 1")
    l = (z.shape[1] - 2) // 2
    ap_xy = z[0, 2:].reshape(l, 2)
    if z.shape[0] > 1 and not np.array_equal(z[1:, 2:], np.broadcast_to(z[0, 2:], (z.shape[0] - 1, 2 * l))):
        raise ValueError("AP feature block must be identical across UE rows")
    return z[:, :2].copy(), ap_xy.copy()


def embed_tokens(weights, ue_xy, ap_xy):
    """Per-UE tokens fusing own position with the pooled AP layout."""
    ue = nn.add(nn.matmul(Tensor(ue_xy), weights.w_ue), weights.b_ue)
    ap = nn.add(nn.matmul(Tensor(ap_xy), weights.w_ap), weights.b_ap)
    ap_mean = nn.tmean(ap, axis=0, keepdims=True)
    return nn.relu(nn.add(ue, ap_mean))


def attention(h, layer, cfg):
    """Multi-head scaled dot-product self-attention over UE tokens."""
    q = nn.add(nn.matmul(h, layer.wq), layer.bq)
    k = nn.add(nn.matmul(h, layer.wk), layer.bk)
    v = nn.add(nn.matmul(h, layer.wv), layer.bv)
    dh = cfg.d_head
    heads = []
    for i in range(cfg.n_heads):
        qi = nn.slice_last(q, i * dh, (i + 1) * dh)
        ki = nn.slice_last(k, i * dh, (i + 1) * dh)
        vi = nn.slice_last(v, i * dh, (i + 1) * dh)
        scores = nn.scale(nn.matmul(qi, nn.transpose(ki)), 1.0 / math.sqrt(dh))
        heads.append(nn.matmul(nn.softmax(scores), vi))
    cat = heads[0] if len(heads) == 1 else nn.concat(heads, axis=-1)
    return nn.add(nn.matmul(cat, layer.wo), layer.bo)


def _post_norm(x, residual, gain, bias, rate, rng, training):
    summed = nn.add(residual, nn.dropout(x, rate, rng, training))
    return nn.add(nn.mul(nn.layer_norm(summed), gain), bias)


def encoder_forward(weights, ue_xy, ap_xy, training=False, rng=None):
    """Hidden states (K, d_model) after all encoder blocks."""
    cfg = weights.cfg
    if training and rng is None:
        raise ValueError("training mode needs an rng for dropout")
    h = embed_tokens(weights, ue_xy, ap_xy)
    for layer in weights.layers:
        att = attention(h, layer, cfg)
        h = _post_norm(att, h, layer.ln1_gain, layer.ln1_bias,
                       cfg.dropout_rate, rng, training)
        inner = nn.relu(nn.add(nn.matmul(h, layer.w_ffn1), layer.b_ffn1))
        ffn = nn.add(nn.matmul(inner, layer.w_ffn2), layer.b_ffn2)
        h = _post_norm(ffn, h, layer.ln2_gain, layer.ln2_bias,
                       cfg.dropout_rate, rng, training)
    return h


def forward(weights, ue_xy, ap_xy, training=False, rng=None):
    """Predicted powers in mW as differentiable (K, 1) tensors.

    The uplink head is a sigmoid scaled by the per-UE cap. The downlink
    head produces nonnegative shares renormalized to spend the budget
    L * p_dl_max_per_ap exactly; if every share is dead the budget is
    split evenly instead.
    """
    cfg = weights.cfg
    h = encoder_forward(weights, ue_xy, ap_xy, training=training, rng=rng)
    k = ue_xy.shape[0]
    budget = ap_xy.shape[0] * cfg.p_dl_max_per_ap

    p_ul = nn.scale(nn.sigmoid(nn.add(nn.matmul(h, weights.w_ul), weights.b_ul)),
                    cfg.p_ul_max)

    raw = nn.relu(nn.add(nn.matmul(h, weights.w_dl), weights.b_dl))
    total = nn.tsum(raw)
    dead = 1.0 if float(total.value) < 1e-12 else 0.0
    safe_total = nn.add(total, Tensor(dead))
    shared = nn.scale(nn.div(raw, safe_total), (1.0 - dead) * budget)
    p_dl = nn.add(shared, Tensor(np.full((k, 1), dead * budget / k)))
    return p_ul, p_dl


def forward_z(weights, z, training=False, rng=None):
    """Forward pass from the packed (K, 2L + 2) feature matrix."""
    ue_xy, ap_xy = split_features(z)
    return forward(weights, ue_xy, ap_xy, training=training, rng=rng)


def predict_powers(weights, z):
    """Evaluation-mode prediction, returned as plain (K,) arrays in mW."""
    p_ul, p_dl = forward_z(weights, z, training=False)
    return p_ul.value[:, 0].copy(), p_dl.value[:, 0].copy()


def mse_loss(pred, target):
    """Sum of squared errors between a prediction tensor and a target array."""
    diff = nn.sub(pred, Tensor(np.asarray(target, dtype=np.float64)))
    return nn.tsum(nn.mul(diff, diff))
