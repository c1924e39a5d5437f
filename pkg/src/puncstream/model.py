"""Encoder with controllable look-ahead attention plus two tagging heads.

The encoder stacks N layers of multi-head masked self-attention and a
position-wise feed-forward network (post-layer-norm residuals, ReLU inner
activation). Final hidden states feed two independent linear+softmax heads,
one for punctuation labels and one for disfluency labels.
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import numcore as nc
from .masks import MaskSpec, build_ct_mask
from .numcore import Tensor


class CheckpointError(ValueError):
    pass


class LengthError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int
    n_layers: int
    n_heads: int
    d_ff: int
    mask_spec: MaskSpec
    punct_label_count: int
    disf_label_count: int
    max_positions: int = 512
    dropout: float = 0.0  # hook for parity experiments; 0 keeps runs deterministic

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model={self.d_model} not divisible by n_heads={self.n_heads}")
        if len(self.mask_spec) != self.n_layers:
            raise ValueError(
                f"mask spec has {len(self.mask_spec)} budgets for "
                f"{self.n_layers} layers")

    @property
    def d_k(self):
        return self.d_model // self.n_heads


class ModelParams:
    """Named parameter tensors; shapes are fixed by the ModelConfig."""

    def __init__(self, tensors):
        self.tensors = dict(tensors)

    def __getitem__(self, name):
        return self.tensors[name]

    def __setitem__(self, name, t):
        self.tensors[name] = t

    def names(self):
        return list(self.tensors)

    def items(self):
        return self.tensors.items()

    def copy(self):
        return ModelParams(dict(self.tensors))


def param_shapes(config):
    """The full name -> shape map for a config (checkpoint validation)."""
    d, dk, dff = config.d_model, config.d_k, config.d_ff
    shapes = {"embed": (config.vocab_size, d)}
    for i in range(config.n_layers):
        for h in range(config.n_heads):
            for proj in ("wq", "wk", "wv"):
                shapes[f"layer{i}.head{h}.{proj}"] = (d, dk)
        shapes[f"layer{i}.wo"] = (d, d)
        shapes[f"layer{i}.ff.w1"] = (d, dff)
        shapes[f"layer{i}.ff.b1"] = (dff,)
        shapes[f"layer{i}.ff.w2"] = (dff, d)
        shapes[f"layer{i}.ff.b2"] = (d,)
        shapes[f"layer{i}.norm1.gain"] = (d,)
        shapes[f"layer{i}.norm1.bias"] = (d,)
        shapes[f"layer{i}.norm2.gain"] = (d,)
        shapes[f"layer{i}.norm2.bias"] = (d,)
    shapes["punct.w"] = (d, config.punct_label_count)
    shapes["punct.b"] = (config.punct_label_count,)
    shapes["disf.w"] = (d, config.disf_label_count)
    shapes["disf.b"] = (config.disf_label_count,)
    return shapes


def init_params(config, rng):
    """Random init: embeddings uniform +-d_model^-0.5, Glorot elsewhere."""
    tensors = {}
    bound_embed = config.d_model ** -0.5
    for name, shape in param_shapes(config).items():
        if name == "embed":
            tensors[name] = Tensor(rng.uniform(-bound_embed, bound_embed, shape))
        elif name.endswith(".gain"):
            tensors[name] = Tensor(np.ones(shape))
        elif name.endswith((".bias", ".b1", ".b2")) or name in ("punct.b", "disf.b"):
            tensors[name] = Tensor(np.zeros(shape))
        else:
            fan_in, fan_out = shape
            bound = math.sqrt(6.0 / (fan_in + fan_out))
            tensors[name] = Tensor(rng.uniform(-bound, bound, shape))
    return ModelParams(tensors)


def sinusoidal_positions(n, d_model, max_positions=512):
    """Sine/cosine position encoding: even channels sin, odd channels cos."""
    if n > max_positions:
        raise LengthError(f"sequence length {n} exceeds max_positions {max_positions}")
    pos = np.arange(n)[:, None].astype(np.float64)
    chan = np.arange(d_model)[None, :]
    angle = pos / np.power(10000.0, (2 * (chan // 2)) / d_model)
    enc = np.empty((n, d_model))
    enc[:, 0::2] = np.sin(angle[:, 0::2])
    enc[:, 1::2] = np.cos(angle[:, 1::2])
    return Tensor(enc)


def encoder_forward(token_ids, config, params, tape=None):
    """Run the masked-attention encoder; returns hidden states (n, d_model)."""
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.size and ids.max() >= config.vocab_size:
        raise nc.ContractError(
            f"token id {ids.max()} outside vocabulary of {config.vocab_size}")
    n = len(ids)
    x = nc.add(nc.embedding_lookup(params["embed"], ids, tape),
               sinusoidal_positions(n, config.d_model, config.max_positions), tape)
    inv_sqrt_dk = 1.0 / math.sqrt(config.d_k)
    for i, lookahead in enumerate(config.mask_spec.per_layer_lookahead):
        mask = Tensor(build_ct_mask(n, min(lookahead, n)).entries)
        heads = []
        for h in range(config.n_heads):
            q = nc.matmul(x, params[f"layer{i}.head{h}.wq"], tape)
            k = nc.matmul(x, params[f"layer{i}.head{h}.wk"], tape)
            v = nc.matmul(x, params[f"layer{i}.head{h}.wv"], tape)
            scores = nc.scale(nc.matmul(q, nc.transpose(k, tape), tape),
                              inv_sqrt_dk, tape)
            probs = nc.masked_softmax_rows(scores, mask, tape)
            heads.append(nc.matmul(probs, v, tape))
        attn = nc.matmul(nc.concat_cols(heads, tape), params[f"layer{i}.wo"], tape)
        x = nc.layer_norm(nc.add(x, attn, tape),
                          params[f"layer{i}.norm1.gain"],
                          params[f"layer{i}.norm1.bias"], tape)
        inner = nc.relu(nc.add(nc.matmul(x, params[f"layer{i}.ff.w1"], tape),
                               params[f"layer{i}.ff.b1"], tape), tape)
        ff = nc.add(nc.matmul(inner, params[f"layer{i}.ff.w2"], tape),
                    params[f"layer{i}.ff.b2"], tape)
        x = nc.layer_norm(nc.add(x, ff, tape),
                          params[f"layer{i}.norm2.gain"],
                          params[f"layer{i}.norm2.bias"], tape)
    return x


def heads_forward(hidden, params, tape=None):
    """Linear projections to (punct logits, disf logits)."""
    punct = nc.add(nc.matmul(hidden, params["punct.w"], tape), params["punct.b"], tape)
    disf = nc.add(nc.matmul(hidden, params["disf.w"], tape), params["disf.b"], tape)
    return punct, disf


def forward(token_ids, config, params, tape=None):
    """Full pass: token ids -> (punct logits, disf logits)."""
    hidden = encoder_forward(token_ids, config, params, tape)
    return heads_forward(hidden, params, tape)


def predict(token_ids, config, params):
    """Per-position argmax labels; ties resolve to the lowest label index."""
    if len(token_ids) == 0:
        return [], []
    punct, disf = forward(token_ids, config, params)
    return (np.argmax(punct.data, axis=1).tolist(),
            np.argmax(disf.data, axis=1).tolist())


# ---------------------------------------------------------------------------
# Checkpoint format: magic "CTT1", key=value config block, then named tensors
# (name length + name + shape + row-major little-endian float64 values).
# ---------------------------------------------------------------------------

_MAGIC = b"CTT1"


def _config_block(config, extras):
    kv = {
        "vocab_size": config.vocab_size,
        "d_model": config.d_model,
        "n_layers": config.n_layers,
        "n_heads": config.n_heads,
        "d_ff": config.d_ff,
        "lookahead": config.mask_spec.to_string(),
        "punct_label_count": config.punct_label_count,
        "disf_label_count": config.disf_label_count,
        "max_positions": config.max_positions,
    }
    kv.update(extras)
    return "".join(f"{k}={v}\n" for k, v in kv.items()).encode("utf-8")


def save_checkpoint(path, config, params, extras=None):
    """Write config plus all tensors. `extras` adds flat key=value entries
    (vocabulary and label names live there)."""
    block = _config_block(config, extras or {})
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(block)))
        f.write(block)
        f.write(struct.pack("<I", len(params.tensors)))
        for name in sorted(params.tensors):
            data = np.ascontiguousarray(params[name].data, dtype="<f8")
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<I", data.ndim))
            f.write(struct.pack(f"<{data.ndim}I", *data.shape))
            f.write(data.tobytes())


def load_checkpoint(path):
    """Read a checkpoint; returns (config, params, extras dict).

    Every tensor shape is validated against the config; any mismatch or
    missing/unknown tensor is rejected.
    """
    with open(path, "rb") as f:
        raw = f.read()
    off = 0

    def take(n):
        nonlocal off
        if off + n > len(raw):
            raise CheckpointError(f"truncated checkpoint {path}")
        chunk = raw[off:off + n]
        off += n
        return chunk

    if take(4) != _MAGIC:
        raise CheckpointError(f"{path} is not a CTT1 checkpoint")
    (block_len,) = struct.unpack("<I", take(4))
    kv = {}
    for line in take(block_len).decode("utf-8").splitlines():
        if line:
            key, _, value = line.partition("=")
            kv[key] = value
    try:
        config = ModelConfig(
            vocab_size=int(kv["vocab_size"]),
            d_model=int(kv["d_model"]),
            n_layers=int(kv["n_layers"]),
            n_heads=int(kv["n_heads"]),
            d_ff=int(kv["d_ff"]),
            mask_spec=MaskSpec.from_string(kv["lookahead"]),
            punct_label_count=int(kv["punct_label_count"]),
            disf_label_count=int(kv["disf_label_count"]),
            max_positions=int(kv["max_positions"]),
        )
    except KeyError as e:
        raise CheckpointError(f"checkpoint {path} missing config key {e}") from None
    extras = {k: v for k, v in kv.items()
              if k not in ("vocab_size", "d_model", "n_layers", "n_heads", "d_ff",
                           "lookahead", "punct_label_count", "disf_label_count",
                           "max_positions")}

    expected = param_shapes(config)
    (count,) = struct.unpack("<I", take(4))
    tensors = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (ndim,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        size = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(take(8 * size), dtype="<f8").reshape(shape)
        tensors[name] = Tensor(data.astype(np.float64))
    mismatches = []
    for name, shape in expected.items():
        if name not in tensors:
            mismatches.append(f"missing tensor {name}")
        elif tensors[name].shape != shape:
            mismatches.append(
                f"{name}: expected {shape}, found {tensors[name].shape}")
    for name in tensors:
        if name not in expected:
            mismatches.append(f"unexpected tensor {name}")
    if mismatches:
        raise CheckpointError(
            f"checkpoint {path} fails shape validation: " + "; ".join(mismatches))
    return config, ModelParams(tensors), extras


def save_model(path, config, params, vocab, scheme):
    """Checkpoint plus the vocabulary and label names needed to run it."""
    extras = {
        "vocab": " ".join(vocab.words[2:]),  # PAD/UNK are implicit
        "punct_labels": " ".join(scheme.punct_labels),
        "disf_labels": " ".join(scheme.disf_labels),
    }
    save_checkpoint(path, config, params, extras)


def load_model(path):
    """Inverse of save_model: (config, params, vocab, scheme)."""
    from .data import LabelScheme, Vocabulary
    config, params, extras = load_checkpoint(path)
    try:
        vocab = Vocabulary(extras["vocab"].split())
        scheme = LabelScheme(tuple(extras["punct_labels"].split()),
                             tuple(extras["disf_labels"].split()))
    except KeyError as e:
        raise CheckpointError(f"checkpoint {path} missing {e}") from None
    if len(vocab) != config.vocab_size:
        raise CheckpointError(
            f"checkpoint {path}: vocabulary has {len(vocab)} entries but "
            f"config says {config.vocab_size}")
    return config, params, vocab, scheme
