# -*- coding: utf-8 -*-
"""
Selective category attention with compensation.

Tokens are sorted into categories (argmax of their similarity row), the
sorted sequence is cut into groups of at most G tokens and multi-head
softmax attention runs inside each group only.  The pure-pass path does
this for the hard tokens alone and fills the pure rows from a parallel
branch (the bypass matrix), so every output row is written exactly once.

"""
from dataclasses import dataclass, field as dc_field
import numpy as np

from .classify import NormalizedImage, ColorCenters
from .masks import PurityMask, HardIndexSet, mask_to_indices

DEFAULT_GROUP_CAPACITY = 128
MIN_HEAD_DIM = 8


@dataclass(frozen=True)
class TokenField:
    """ tokens X (N x C) and similarity map A (N x M) """
    tokens: np.ndarray
    similarity: np.ndarray

    def __post_init__(self):
        if self.tokens.ndim != 2 or self.similarity.ndim != 2:
            raise ValueError("tokens and similarity must be 2D")
        if self.tokens.shape[0] != self.similarity.shape[0]:
            raise ValueError(f"row counts differ: tokens {self.tokens.shape[0]}, "
                             f"similarity {self.similarity.shape[0]}")
        if not (np.all(np.isfinite(self.tokens)) and np.all(np.isfinite(self.similarity))):
            raise ValueError("token field entries must be finite")

    @property
    def token_count(self) -> int:
        return self.tokens.shape[0]

    @property
    def channels(self) -> int:
        return self.tokens.shape[1]


@dataclass(frozen=True)
class CategoryPartition:
    groups: tuple
    group_capacity: int

    def __len__(self):
        return len(self.groups)

    def sizes(self) -> list[int]:
        return [int(g.shape[0]) for g in self.groups]

    def indices(self) -> np.ndarray:
        if not self.groups:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(self.groups)


@dataclass(frozen=True)
class MixerWeights:
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    head_count: int

    def __post_init__(self):
        c = self.w_q.shape[0]
        for name, w in (("w_q", self.w_q), ("w_k", self.w_k), ("w_v", self.w_v)):
            if w.shape != (c, c):
                raise ValueError(f"{name} must be {c} x {c}, got {w.shape}")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"{name} has non-finite entries")
        if self.head_count < 1 or c % self.head_count:
            raise ValueError(f"head_count {self.head_count} must divide channels {c}")

    @property
    def channels(self) -> int:
        return self.w_q.shape[0]

    @classmethod
    def random(cls, channels: int, head_count: int | None = None, seed: int = 0) -> "MixerWeights":
        """ seeded Gaussian weights scaled by 1/sqrt(C) """
        if head_count is None:
            head_count = default_head_count(channels)
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(channels)
        w = rng.standard_normal((3, channels, channels)) * scale
        return cls(w_q=w[0], w_k=w[1], w_v=w[2], head_count=head_count)


@dataclass
class MixerTrace:
    """ instrumentation for a mixer run """
    row_writes: np.ndarray
    score_entries: int = 0
    groups: int = 0
    group_sizes: list = dc_field(default_factory=list)
    # last partition grouped_msa ran over
    partition: CategoryPartition | None = None

    @classmethod
    def for_tokens(cls, token_count: int) -> "MixerTrace":
        return cls(row_writes=np.zeros(token_count, dtype=np.int64))


def default_head_count(channels: int) -> int:
    """ largest power of two h dividing C with C / h >= 8 """
    if channels < 1:
        raise ValueError(f"channels must be >= 1, got {channels}")
    h = 1
    while channels % (h * 2) == 0 and channels // (h * 2) >= MIN_HEAD_DIM:
        h *= 2
    return h


def categorize(field: TokenField,
               indices: HardIndexSet | np.ndarray | None = None,
               capacity: int = DEFAULT_GROUP_CAPACITY) -> CategoryPartition:
    """ Sort selected tokens by (category, index) and cut into groups of <= G

    :param indices: HardIndexSet, index array, or None for all tokens
    :param capacity: G >= 1
    """
    if capacity < 1:
        raise ValueError(f"capacity must be >= 1, got {capacity}")

    if indices is None:
        selected = np.arange(field.token_count, dtype=np.int64)
    elif isinstance(indices, HardIndexSet):
        selected = np.asarray(indices.indices, dtype=np.int64)
    else:
        selected = np.asarray(indices, dtype=np.int64).ravel()

    if selected.size == 0:
        return CategoryPartition(groups=(), group_capacity=capacity)

    if selected.min() < 0 or selected.max() >= field.token_count:
        raise ValueError(f"indices must lie in [0, {field.token_count})")

    category = np.argmax(field.similarity[selected], axis=1)
    order = np.lexsort((selected, category))
    ordered = selected[order]

    groups = tuple(ordered[i:i + capacity] for i in range(0, ordered.shape[0], capacity))
    return CategoryPartition(groups=groups, group_capacity=capacity)


def _softmax(scores: np.ndarray) -> np.ndarray:
    e = np.exp(scores - np.max(scores, axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _group_attention(x: np.ndarray, weights: MixerWeights) -> np.ndarray:
    """ multi-head softmax attention over one group, (n, C) -> (n, C) """
    n, c = x.shape
    heads = weights.head_count
    d = c // heads

    with np.errstate(over="ignore", invalid="ignore"):
        q = x @ weights.w_q
        k = x @ weights.w_k
        v = x @ weights.w_v
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(k)) and np.all(np.isfinite(v))):
        raise FloatingPointError("non-finite projection in group attention")

    # (heads, n, d)
    q = q.reshape(n, heads, d).transpose(1, 0, 2)
    k = k.reshape(n, heads, d).transpose(1, 0, 2)
    v = v.reshape(n, heads, d).transpose(1, 0, 2)

    with np.errstate(over="ignore", invalid="ignore"):
        scores = (q @ k.transpose(0, 2, 1)) / np.sqrt(d)
        out = _softmax(scores) @ v
    if not (np.all(np.isfinite(scores)) and np.all(np.isfinite(out))):
        raise FloatingPointError("non-finite attention scores in group attention")
    return out.transpose(1, 0, 2).reshape(n, c)


def grouped_msa(field: TokenField,
                partition: CategoryPartition,
                weights: MixerWeights,
                trace: MixerTrace | None = None) -> np.ndarray:
    """ Attention inside each group, rows written back at their token positions

    Rows not covered by the partition stay zero.
    """
    if weights.channels != field.channels:
        raise ValueError(f"weights are {weights.channels} channels, tokens have {field.channels}")

    if trace is not None:
        trace.partition = partition

    out = np.zeros_like(field.tokens, dtype=np.float64)
    for group in partition.groups:
        if group.size == 0:
            continue
        out[group] = _group_attention(field.tokens[group], weights)

        if trace is not None:
            np.add.at(trace.row_writes, group, 1)
            trace.score_entries += int(group.size) ** 2
            trace.groups += 1
            trace.group_sizes.append(int(group.size))

    return out


def full_ac_msa(field: TokenField,
                weights: MixerWeights,
                capacity: int = DEFAULT_GROUP_CAPACITY,
                trace: MixerTrace | None = None) -> np.ndarray:
    """ unoptimized path, every token categorized and attended """
    return grouped_msa(field, categorize(field, None, capacity), weights, trace=trace)


def pure_pass_ac_msa(field: TokenField,
                     mask: PurityMask,
                     bypass: np.ndarray,
                     weights: MixerWeights,
                     capacity: int = DEFAULT_GROUP_CAPACITY,
                     compensate: bool = True,
                     trace: MixerTrace | None = None) -> np.ndarray:
    """ Attention on hard tokens only, pure rows taken from bypass

    :param mask: PurityMask with H*W == N
    :param bypass: N x C parallel-branch output
    :param compensate: False leaves pure rows at zero
    :return: N x C
    """
    n = field.token_count
    if mask.values.size != n:
        raise ValueError(f"mask has {mask.values.size} pixels, field has {n} tokens")
    if bypass.shape != field.tokens.shape:
        raise ValueError(f"bypass shape {bypass.shape} != tokens shape {field.tokens.shape}")

    hard = mask_to_indices(mask)
    partition = categorize(field, hard, capacity)
    hard_out = grouped_msa(field, partition, weights, trace=trace)

    out = np.zeros_like(field.tokens, dtype=np.float64)
    out[hard.indices] = hard_out[hard.indices]

    pure = hard.complement()
    if compensate:
        out[pure] = bypass[pure]
        if trace is not None:
            np.add.at(trace.row_writes, pure, 1)

    return out


def tokens_from_image(image: NormalizedImage,
                      centers: ColorCenters,
                      channels: int = 48,
                      seed: int = 0) -> TokenField:
    """ Synthetic token field from an image

    - tokens: per-pixel RGB lifted to C channels by a seeded 3 x C projection
    - similarity: negated squared distance to every color center
    """
    if channels < 1:
        raise ValueError(f"channels must be >= 1, got {channels}")
    rgb = image.pixels.reshape(-1, 3)
    lift = np.random.default_rng(seed).standard_normal((3, channels))
    d = rgb[:, None, :] - centers.centers[None, :, :]
    similarity = -np.einsum("nkc,nkc->nk", d, d)
    return TokenField(tokens=rgb @ lift, similarity=similarity)
