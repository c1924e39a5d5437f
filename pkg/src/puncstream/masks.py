"""Additive attention masks: controllable look-ahead, forward, local, full.

A mask entry is 0 where attention is allowed and -inf where it is blocked.
The look-ahead mask permits all history plus at most L future positions.
Masks are cached per (length, budget) pair since streaming re-decodes the
buffer every step with slowly varying lengths.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class MaskSpec:
    """Per-encoder-layer look-ahead budgets, in word positions."""

    per_layer_lookahead: tuple

    def __post_init__(self):
        budgets = tuple(int(x) for x in self.per_layer_lookahead)
        if any(b < 0 for b in budgets):
            raise ValueError(f"look-ahead budgets must be non-negative: {budgets}")
        object.__setattr__(self, "per_layer_lookahead", budgets)

    @classmethod
    def from_string(cls, text):
        """Parse a comma-separated budget list, e.g. "0,0,0,0,0,9"."""
        try:
            return cls(tuple(int(p.strip()) for p in text.split(",")))
        except ValueError as e:
            raise ValueError(f"bad look-ahead list {text!r}: {e}") from None

    def to_string(self):
        return ",".join(str(b) for b in self.per_layer_lookahead)

    def __len__(self):
        return len(self.per_layer_lookahead)


def effective_lookahead(spec):
    """Total future-word visibility: the sum of per-layer budgets."""
    return sum(spec.per_layer_lookahead)


@dataclass(frozen=True, eq=False)
class AttentionMask:
    """n x n additive matrix with entries in {0, -inf}; diagonal always 0."""

    n: int
    entries: np.ndarray


def _freeze(m):
    m.setflags(write=False)
    return m


def _check_n(n):
    if n < 1:
        raise EmptyInputError(f"mask length must be >= 1, got {n}")


@lru_cache(maxsize=512)
def build_ct_mask(n, lookahead):
    """Mask allowing all history plus at most `lookahead` future positions.

    Entry (i, j) is 0 iff i + lookahead >= j (0-based), else -inf.
    """
    _check_n(n)
    if lookahead < 0:
        raise ValueError(f"lookahead must be >= 0, got {lookahead}")
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    m = np.where(i + lookahead >= j, 0.0, -np.inf)
    return AttentionMask(n, _freeze(m))


@lru_cache(maxsize=512)
def build_forward_mask(n):
    """Causal mask: (i, j) unmasked iff j <= i."""
    _check_n(n)
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    return AttentionMask(n, _freeze(np.where(j <= i, 0.0, -np.inf)))


@lru_cache(maxsize=512)
def build_local_mask(n, history):
    """Local mask: (i, j) unmasked iff i - history <= j <= i."""
    _check_n(n)
    if history < 0:
        raise ValueError(f"history must be >= 0, got {history}")
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    keep = (j <= i) & (j >= i - history)
    return AttentionMask(n, _freeze(np.where(keep, 0.0, -np.inf)))


@lru_cache(maxsize=512)
def build_full_mask(n):
    """All-zero mask: unrestricted attention."""
    _check_n(n)
    return AttentionMask(n, _freeze(np.zeros((n, n))))
