"""Joint multi-task loss, Adam with warm-up and clipping, and the train loop.

Both tagging heads contribute a token-mean cross entropy; the total loss is
their sum. The learning-rate schedule is the inverse-square-root ramp
peaking at `warmup_steps`.
"""

import math
import random
from dataclasses import dataclass

import numpy as np

from . import model as mdl
from . import numcore as nc
from .data import encode, truncation_augment


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    batch_size: int = 8
    warmup_steps: int = 400
    max_steps: int = 2000
    clip_norm: float = 1.0
    seed: int = 0
    augment: bool = True
    phase: str = "pretrain"  # pretrain | finetune
    init_checkpoint: str = None
    eval_every: int = 100

    def __post_init__(self):
        if self.warmup_steps < 1:
            raise ValueError("warmup_steps must be >= 1")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be > 0")


def joint_loss(punct_logits, disf_logits, punct_ids, disf_ids, tape=None):
    """Sum of the two heads' token-mean cross entropies (scalar tensor)."""
    if len(punct_ids) != punct_logits.shape[0] or len(disf_ids) != disf_logits.shape[0]:
        raise nc.ContractError("joint_loss: logits and gold lengths disagree")
    return nc.add(nc.cross_entropy_mean(punct_logits, punct_ids, tape),
                  nc.cross_entropy_mean(disf_logits, disf_ids, tape), tape)


def lr_schedule(step, d_model, warmup_steps):
    """d_model^-0.5 * min(step^-0.5, step * warmup_steps^-1.5)."""
    if step < 1:
        raise nc.ContractError(f"lr_schedule: step must be >= 1, got {step}")
    return d_model ** -0.5 * min(step ** -0.5, step * warmup_steps ** -1.5)


def clip_gradients(grads, clip_norm):
    """Scale the whole gradient set so its global L2 norm is <= clip_norm."""
    sq = 0.0
    for g in grads.values():
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient; aborting")
        sq += float((g * g).sum())
    norm = math.sqrt(sq)
    if norm <= clip_norm:
        return grads
    factor = clip_norm / norm
    return {name: g * factor for name, g in grads.items()}


class Adam:
    """Adam with external learning rate (beta1=0.9, beta2=0.98, eps=1e-9)."""

    def __init__(self, param_names, beta1=0.9, beta2=0.98, eps=1e-9):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {n: None for n in param_names}
        self.v = {n: None for n in param_names}
        self.t = 0

    def step(self, params, grads, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name, g in grads.items():
            if self.m[name] is None:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            mhat = self.m[name] / (1 - b1 ** self.t)
            vhat = self.v[name] / (1 - b2 ** self.t)
            update = lr * mhat / (np.sqrt(vhat) + self.eps)
            params[name] = nc.Tensor(params[name].data - update)


def batch_gradients(batch, model_config, params, vocab, scheme):
    """Mean joint loss over a batch of sequences plus summed-then-averaged
    gradients keyed by parameter name."""
    names = list(params.tensors)
    acc = {n: None for n in names}
    total_loss = 0.0
    for seq in batch:
        ids, punct_ids, disf_ids = encode(seq, vocab, scheme)
        tape = nc.Tape()
        punct_logits, disf_logits = mdl.forward(ids, model_config, params, tape)
        loss = joint_loss(punct_logits, disf_logits, punct_ids, disf_ids, tape)
        total_loss += loss.item()
        grads = nc.backward(loss, tape, wrt=[params[n] for n in names])
        for n in names:
            g = grads[params[n]]
            acc[n] = g if acc[n] is None else acc[n] + g
    k = len(batch)
    return total_loss / k, {n: g / k for n, g in acc.items()}


@dataclass
class TrainResult:
    params: "mdl.ModelParams"
    config: "mdl.ModelConfig"
    history: list  # (step, train_loss, dev_punct_f1, dev_interregnum_f1, dev_either_f1)
    initial_loss: float
    final_loss: float
    steps_run: int


def _dev_f1(dev_corpus, model_config, params, vocab, scheme):
    # local import: decoding/evaluation depend on model, not on training
    from .decoding import ModelTagger, tag_offline
    from .evaluation import score
    tagger = ModelTagger(model_config, params, vocab, scheme)
    preds = [tag_offline(seq.words, tagger) for seq in dev_corpus]
    report = score(preds, dev_corpus, scheme)
    return (report.punct_overall.f1,
            report.disf["interregnum"].f1,
            report.disf["either"].f1)


def train(corpus, config, model_config, vocab, scheme, dev=None,
          init_params=None, stop_dev_f1=None):
    """Run Adam steps over shuffled mini-batches; returns a TrainResult.

    With `dev` given, evaluates every `eval_every` steps and keeps the
    parameters scoring best on mean(punct micro-F1, either-disfluency F1).
    `stop_dev_f1` = (punct_f1, interregnum_f1) stops early once both are
    reached.
    Reproducible: identical seeds and inputs give identical parameters.
    """
    if not corpus:
        raise ValueError("training corpus is empty")
    rng = random.Random(config.seed)
    if init_params is not None:
        params = init_params.copy()
    else:
        params = mdl.init_params(model_config, np.random.default_rng(config.seed))
    opt = Adam(list(params.tensors))
    history = []
    best_score, best_params = -1.0, None
    initial_loss = final_loss = None

    order = list(range(len(corpus)))
    cursor = len(order)  # force initial shuffle
    step = 0
    while step < config.max_steps:
        step += 1
        batch = []
        while len(batch) < config.batch_size:
            if cursor >= len(order):
                rng.shuffle(order)
                cursor = 0
            batch.append(corpus[order[cursor]])
            cursor += 1
        if config.augment:
            batch = truncation_augment(batch, rng)
        loss, grads = batch_gradients(batch, model_config, params, vocab, scheme)
        if initial_loss is None:
            initial_loss = loss
        final_loss = loss
        grads = clip_gradients(grads, config.clip_norm)
        lr = lr_schedule(step, model_config.d_model, config.warmup_steps)
        opt.step(params, grads, lr)

        if dev is not None and step % config.eval_every == 0:
            pf1, if1, ef1 = _dev_f1(dev, model_config, params, vocab, scheme)
            history.append((step, loss, pf1, if1, ef1))
            mean_f1 = (pf1 + ef1) / 2
            if mean_f1 > best_score:
                best_score = mean_f1
                best_params = params.copy()
            if stop_dev_f1 is not None and pf1 >= stop_dev_f1[0] and if1 >= stop_dev_f1[1]:
                break
        elif dev is None:
            history.append((step, loss, None, None, None))

    if best_params is not None:
        params = best_params
    return TrainResult(params, model_config, history, initial_loss,
                       final_loss, step)
