"""Minimal reverse-mode autodiff on numpy arrays, plus AdamW and init helpers.

Every operation records its parents and a closure mapping the output
gradient to parent gradients. ``Tensor.backward`` topologically sorts the
graph and accumulates gradients into every tensor that requires them.
Values are float64 throughout; gradient checks run at tight tolerances.
"""

import numpy as np


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` to undo numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """Node in the computation graph wrapping a float64 array."""

    def __init__(self, value, requires_grad=False, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in parents)
        self.grad = None
        self._parents = tuple(parents)
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def backward(self):
        if self.value.size != 1:
            raise ValueError("backward expects a scalar loss")
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad:
                    stack.append((p, False))
        self.grad = np.ones_like(self.value)
        for node in reversed(topo):
            if node._backward is None or node.grad is None:
                continue
            parent_grads = node._backward(node.grad)
            for p, g in zip(node._parents, parent_grads):
                if g is None or not p.requires_grad:
                    continue
                p.grad = g if p.grad is None else p.grad + g

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)


def _wrap(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a, b):
    a, b = _wrap(a), _wrap(b)
    out_val = a.value + b.value

    def backward(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(g, b.value.shape)

    return Tensor(out_val, parents=(a, b), backward=backward)


def sub(a, b):
    a, b = _wrap(a), _wrap(b)
    out_val = a.value - b.value

    def backward(g):
        return _unbroadcast(g, a.value.shape), _unbroadcast(-g, b.value.shape)

    return Tensor(out_val, parents=(a, b), backward=backward)


def mul(a, b):
    a, b = _wrap(a), _wrap(b)
    out_val = a.value * b.value

    def backward(g):
        return (_unbroadcast(g * b.value, a.value.shape),
                _unbroadcast(g * a.value, b.value.shape))

    return Tensor(out_val, parents=(a, b), backward=backward)


def div(a, b):
    a, b = _wrap(a), _wrap(b)
    out_val = a.value / b.value

    def backward(g):
        return (_unbroadcast(g / b.value, a.value.shape),
                _unbroadcast(-g * a.value / (b.value ** 2), b.value.shape))

    return Tensor(out_val, parents=(a, b), backward=backward)


def matmul(a, b):
    a, b = _wrap(a), _wrap(b)
    if a.value.ndim < 2 or b.value.ndim < 2:
        raise ValueError("matmul operands need at least two dimensions")
    out_val = a.value @ b.value

    def backward(g):
        ga = _unbroadcast(g @ np.swapaxes(b.value, -1, -2), a.value.shape)
        gb = _unbroadcast(np.swapaxes(a.value, -1, -2) @ g, b.value.shape)
        return ga, gb

    return Tensor(out_val, parents=(a, b), backward=backward)


def scale(a, factor):
    a = _wrap(a)
    factor = float(factor)

    def backward(g):
        return (g * factor,)

    return Tensor(a.value * factor, parents=(a,), backward=backward)


def relu(a):
    a = _wrap(a)
    mask = a.value > 0

    def backward(g):
        return (g * mask,)

    return Tensor(a.value * mask, parents=(a,), backward=backward)


def sigmoid(a):
    a = _wrap(a)
    out_val = np.where(a.value >= 0,
                       1.0 / (1.0 + np.exp(-np.abs(a.value))),
                       np.exp(-np.abs(a.value)) / (1.0 + np.exp(-np.abs(a.value))))

    def backward(g):
        return (g * out_val * (1.0 - out_val),)

    return Tensor(out_val, parents=(a,), backward=backward)


def log(a):
    a = _wrap(a)

    def backward(g):
        return (g / a.value,)

    return Tensor(np.log(a.value), parents=(a,), backward=backward)


def softmax(a):
    """Softmax over the last axis with max subtraction for stability."""
    a = _wrap(a)
    shifted = a.value - np.max(a.value, axis=-1, keepdims=True)
    e = np.exp(shifted)
    out_val = e / np.sum(e, axis=-1, keepdims=True)

    def backward(g):
        dot = np.sum(g * out_val, axis=-1, keepdims=True)
        return (out_val * (g - dot),)

    return Tensor(out_val, parents=(a,), backward=backward)


def layer_norm(a, eps=1e-12):
    """Normalize the last axis to zero mean and unit variance."""
    a = _wrap(a)
    mu = np.mean(a.value, axis=-1, keepdims=True)
    var = np.mean((a.value - mu) ** 2, axis=-1, keepdims=True)
    std = np.sqrt(var + eps)
    out_val = (a.value - mu) / std

    def backward(g):
        gm = np.mean(g, axis=-1, keepdims=True)
        gy = np.mean(g * out_val, axis=-1, keepdims=True)
        return ((g - gm - out_val * gy) / std,)

    return Tensor(out_val, parents=(a,), backward=backward)


def dropout(a, rate, rng, training):
    """Inverted dropout; identity when not training or rate is zero."""
    a = _wrap(a)
    if not training or rate == 0.0:
        return a
    if not 0.0 <= rate < 1.0:
        raise ValueError("dropout rate must be in [0, 1)")
    mask = (rng.random(a.value.shape) >= rate) / (1.0 - rate)

    def backward(g):
        return (g * mask,)

    return Tensor(a.value * mask, parents=(a,), backward=backward)


def transpose(a):
    """Swap the last two axes."""
    a = _wrap(a)

    def backward(g):
        return (np.swapaxes(g, -1, -2),)

    return Tensor(np.swapaxes(a.value, -1, -2), parents=(a,), backward=backward)


def reshape(a, shape):
    a = _wrap(a)
    old_shape = a.value.shape

    def backward(g):
        return (g.reshape(old_shape),)

    return Tensor(a.value.reshape(shape), parents=(a,), backward=backward)


def concat(tensors, axis=-1):
    tensors = [_wrap(t) for t in tensors]
    sizes = [t.value.shape[axis] for t in tensors]
    out_val = np.concatenate([t.value for t in tensors], axis=axis)

    def backward(g):
        pieces = np.split(g, np.cumsum(sizes)[:-1], axis=axis)
        return tuple(pieces)

    return Tensor(out_val, parents=tuple(tensors), backward=backward)


def slice_last(a, start, stop):
    """Slice [start:stop] along the last axis."""
    a = _wrap(a)
    out_val = a.value[..., start:stop]

    def backward(g):
        full = np.zeros_like(a.value)
        full[..., start:stop] = g
        return (full,)

    return Tensor(out_val, parents=(a,), backward=backward)


def tsum(a, axis=None, keepdims=False):
    a = _wrap(a)
    out_val = np.sum(a.value, axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.value.shape).copy(),)

    return Tensor(out_val, parents=(a,), backward=backward)


def tmean(a, axis=None, keepdims=False):
    a = _wrap(a)
    out_val = np.mean(a.value, axis=axis, keepdims=keepdims)
    count = a.value.size if axis is None else a.value.shape[axis]

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.value.shape).copy() / count,)

    return Tensor(out_val, parents=(a,), backward=backward)


def glorot_uniform(rng, shape, fan_in=None, fan_out=None):
    """Glorot uniform init; fans default to the trailing two dimensions."""
    if fan_in is None:
        fan_in = shape[-2] if len(shape) >= 2 else shape[-1]
    if fan_out is None:
        fan_out = shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class AdamW:
    """Adam with decoupled weight decay.

    Tensors listed in ``no_decay`` (biases, normalization gains) skip the
    decay term but follow the same moment updates.
    """

    def __init__(self, params, lr=0.001, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.01, no_decay=()):
        self.params = list(params)
        if any(not p.requires_grad for p in self.params):
            raise ValueError("optimizer parameters must require gradients")
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self._no_decay = {id(p) for p in no_decay}
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]
        self._t = 0

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self._t += 1
        bc1 = 1.0 - self.beta1 ** self._t
        bc2 = 1.0 - self.beta2 ** self._t
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * g * g
            m_hat = self._m[i] / bc1
            v_hat = self._v[i] / bc2
            update = m_hat / (np.sqrt(v_hat) + self.eps)
            if self.weight_decay and id(p) not in self._no_decay:
                update = update + self.weight_decay * p.value
            p.value = p.value - self.lr * update


def grad_check(build_loss, params, h=1e-6, floor=1e-6):
    """Compare analytic gradients against central differences.

    ``build_loss`` rebuilds the scalar loss from the current parameter
    values on every call. Returns the worst relative disagreement over all
    parameter entries. Entries whose gradients sit below ``floor`` are
    compared at the floor scale: the finite-difference noise there is pure
    float cancellation and would swamp a ratio of near-zero numbers.
    """
    for p in params:
        p.grad = None
    loss = build_loss()
    loss.backward()
    analytic = [None if p.grad is None else p.grad.copy() for p in params]

    worst = 0.0
    for p, ana in zip(params, analytic):
        if ana is None:
            raise ValueError("parameter received no gradient")
        flat = p.value.reshape(-1)
        ana_flat = ana.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(build_loss().value)
            flat[i] = orig - h
            f_minus = float(build_loss().value)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            denom = max(abs(numeric), abs(ana_flat[i]), floor)
            err = abs(numeric - ana_flat[i]) / denom
            worst = max(worst, err)
    return worst
