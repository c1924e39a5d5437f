"""Dense numeric core: tensors, forward ops, and tape-based reverse-mode autodiff.

Everything is float64 by default so gradient checks against central finite
differences are robust. Ops take an optional Tape; with tape=None they run
pure forward (inference).
"""

import numpy as np


class ShapeMismatchError(ValueError):
    pass


class ContractError(ValueError):
    pass


class Tensor:
    """Immutable dense array, row-major."""

    __slots__ = ("data",)

    def __init__(self, data, dtype=np.float64):
        arr = np.array(data, dtype=dtype)
        arr.setflags(write=False)
        self.data = arr

    @property
    def shape(self):
        return tuple(self.data.shape)

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape})"


def _wrap(arr):
    t = Tensor.__new__(Tensor)
    arr = np.asarray(arr)
    arr.setflags(write=False)
    t.data = arr
    return t


class Tape:
    """Ordered record of executed ops, replayed backward for gradients.

    Single-owner: one tape per forward pass, not shared across threads.
    """

    def __init__(self):
        self._entries = []  # (out, inputs, backward_fn)

    def record(self, out, inputs, backward_fn):
        self._entries.append((out, inputs, backward_fn))

    def __len__(self):
        return len(self._entries)


def backward(loss, tape, wrt=None):
    """Accumulate gradients of a scalar loss over the tape.

    Returns a dict keyed by Tensor (identity). If `wrt` is given, the result
    contains exactly those tensors, with exact-zero gradients for any that
    did not influence the loss.
    """
    if loss.shape != ():
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads = {loss: np.array(1.0)}
    for out, inputs, backward_fn in reversed(tape._entries):
        g = grads.get(out)
        if g is None:
            continue
        for inp, gi in zip(inputs, backward_fn(g)):
            if gi is None:
                continue
            acc = grads.get(inp)
            grads[inp] = gi if acc is None else acc + gi
    if wrt is None:
        return grads
    return {t: grads.get(t, np.zeros(t.shape)) for t in wrt}


# ---------------------------------------------------------------------------
# Forward ops (each optionally recorded on a tape)
# ---------------------------------------------------------------------------


def matmul(a, b, tape=None):
    """Matrix product of two 2-d tensors."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul shapes do not agree: {a.shape} x {b.shape}")
    out = _wrap(a.data @ b.data)
    if tape is not None:
        def bwd(g):
            return g @ b.data.T, a.data.T @ g
        tape.record(out, (a, b), bwd)
    return out


def transpose(a, tape=None):
    out = _wrap(a.data.T)
    if tape is not None:
        tape.record(out, (a,), lambda g: (g.T,))
    return out


def _unbroadcast(g, shape):
    """Sum gradient g down to `shape` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b, tape=None):
    """Elementwise sum with numpy broadcasting."""
    out = _wrap(a.data + b.data)
    if tape is not None:
        def bwd(g):
            return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)
        tape.record(out, (a, b), bwd)
    return out


def mul(a, b, tape=None):
    """Elementwise product with numpy broadcasting."""
    out = _wrap(a.data * b.data)
    if tape is not None:
        def bwd(g):
            return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)
        tape.record(out, (a, b), bwd)
    return out


def scale(a, c, tape=None):
    """Multiply by a python scalar constant."""
    out = _wrap(a.data * c)
    if tape is not None:
        tape.record(out, (a,), lambda g: (g * c,))
    return out


def relu(a, tape=None):
    out = _wrap(np.maximum(a.data, 0.0))
    if tape is not None:
        keep = a.data > 0.0
        tape.record(out, (a,), lambda g: (g * keep,))
    return out


def total(a, tape=None):
    """Sum of all entries, as a scalar tensor."""
    out = _wrap(np.array(a.data.sum()))
    if tape is not None:
        tape.record(out, (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))
    return out


def masked_softmax_rows(scores, mask, tape=None):
    """Row-wise softmax of (scores + mask); -inf mask entries give exactly 0.

    The mask is additive with entries in {0, -inf} and is not differentiated.
    A fully masked row cannot be normalized and raises ContractError.
    """
    if scores.shape != mask.shape:
        raise ShapeMismatchError(
            f"scores shape {scores.shape} != mask shape {mask.shape}")
    m = mask.data
    if m.ndim >= 1 and bool(np.isneginf(m).all(axis=-1).any()):
        raise ContractError("masked_softmax_rows: fully masked row")
    z = scores.data + m
    zmax = np.max(z, axis=-1, keepdims=True)
    e = np.exp(z - zmax)  # exp(-inf) == 0 exactly
    p = e / e.sum(axis=-1, keepdims=True)
    out = _wrap(p)
    if tape is not None:
        def bwd(g):
            dot = (g * p).sum(axis=-1, keepdims=True)
            return p * (g - dot), None
        tape.record(out, (scores, mask), bwd)
    return out


def softmax_rows(x, tape=None):
    """Plain row-wise softmax."""
    zero = _wrap(np.zeros(x.shape))
    return masked_softmax_rows(x, zero, tape)


def layer_norm(x, gain, bias, tape=None, eps=1e-6):
    """Normalize the last axis to mean 0 / variance 1, then affine."""
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        raise ShapeMismatchError(
            f"layer_norm gain/bias must have shape ({d},), got {gain.shape}/{bias.shape}")
    mean = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean) * inv
    out = _wrap(xhat * gain.data + bias.data)
    if tape is not None:
        def bwd(g):
            dxhat = g * gain.data
            dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
            axes = tuple(range(g.ndim - 1))
            return dx, (g * xhat).sum(axis=axes), g.sum(axis=axes)
        tape.record(out, (x, gain, bias), bwd)
    return out


def embedding_lookup(table, ids, tape=None):
    """Gather rows of `table` by integer id."""
    idx = np.asarray(ids, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ContractError(
            f"embedding id out of range for table with {table.shape[0]} rows")
    out = _wrap(table.data[idx])
    if tape is not None:
        def bwd(g):
            gt = np.zeros(table.shape)
            np.add.at(gt, idx, g)
            return (gt,)
        tape.record(out, (table,), bwd)
    return out


def concat_cols(parts, tape=None):
    """Concatenate 2-d tensors along the last axis."""
    out = _wrap(np.concatenate([p.data for p in parts], axis=-1))
    if tape is not None:
        widths = [p.shape[-1] for p in parts]
        splits = np.cumsum(widths)[:-1]
        tape.record(out, tuple(parts),
                    lambda g: tuple(np.split(g, splits, axis=-1)))
    return out


def cross_entropy_mean(logits, targets, tape=None):
    """Mean per-row cross entropy of logits (n, C) against integer targets."""
    t = np.asarray(targets, dtype=np.int64)
    n, c = logits.shape
    if t.shape != (n,):
        raise ContractError(
            f"cross_entropy_mean: {n} logit rows vs {t.shape} targets")
    if t.size and (t.min() < 0 or t.max() >= c):
        raise ContractError(f"target id out of range for {c} classes")
    z = logits.data
    zmax = z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z - zmax).sum(axis=1, keepdims=True)) + zmax
    picked = z[np.arange(n), t][:, None]
    out = _wrap(np.array((lse - picked).mean()))
    if tape is not None:
        def bwd(g):
            p = np.exp(z - lse)
            p[np.arange(n), t] -= 1.0
            return (p * (float(g) / n),)
        tape.record(out, (logits,), bwd)
    return out
