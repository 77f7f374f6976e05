# -*- coding: utf-8 -*-
"""
Pixel-level purity masks.

Mask polarity: 0 = pure (bypass), 1 = hard (full computation).

- window_purity_mask: a window is pure iff every label in it is identical,
  the window flag is broadcast to its pixels
- cross-shift fusion: the same test on a label map cyclically shifted by
  delta, the resulting mask shifted back by -delta and AND-ed with the base
- fixed_ratio_window_mask: baseline that marks a fixed share of windows hard,
  ranked by luminance variance (not content adaptive)

"""
import math
from dataclasses import dataclass
import numpy as np

from .classify import NormalizedImage, ColorCenters, LabelMap, classify_pixels

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

# window variances are compared at this many decimals, closer values tie
VARIANCE_DECIMALS = 12


@dataclass(frozen=True)
class PurityMask:
    """ H x W uint8, 0 = pure, 1 = hard """
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError(f"mask must be 2D, got {self.values.shape}")
        if self.values.size and not np.all((self.values == 0) | (self.values == 1)):
            raise ValueError("mask values must be 0 or 1")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def pure_count(self) -> int:
        return int(self.values.size - np.count_nonzero(self.values))


@dataclass(frozen=True)
class HardIndexSet:
    """ row-major indices of hard pixels, strictly ascending """
    indices: np.ndarray
    total: int

    def __len__(self):
        return int(self.indices.shape[0])

    def complement(self) -> np.ndarray:
        keep = np.ones(self.total, dtype=bool)
        keep[self.indices] = False
        return np.flatnonzero(keep)


@dataclass(frozen=True)
class MaskStats:
    pure_fraction: float
    pure_pixel_count: int
    total_pixels: int
    window_size: int
    shift_size: int

    def to_dict(self) -> dict:
        return {"pure_fraction": self.pure_fraction,
                "pure_pixel_count": self.pure_pixel_count,
                "total_pixels": self.total_pixels,
                "window_size": self.window_size,
                "shift_size": self.shift_size}


def _check_window_size(window_size: int) -> None:
    if isinstance(window_size, bool) or not isinstance(window_size, (int, np.integer)) or window_size < 1:
        raise ValueError(f"window_size must be an integer >= 1, got {window_size}")


def _window_starts(length: int, window_size: int) -> np.ndarray:
    return np.arange(0, length, window_size)


def _broadcast_windows(flags: np.ndarray, window_size: int, height: int, width: int) -> np.ndarray:
    """ expand a per-window grid to pixels, truncating edge windows """
    out = np.repeat(flags, window_size, axis=0)[:height]
    return np.repeat(out, window_size, axis=1)[:, :width]


def window_purity_mask(labels: LabelMap, window_size: int) -> PurityMask:
    """ Window purity test broadcast to pixel resolution

    - windows anchored at multiples of S, edge windows cover only what is left
    - a window is pure when its min label equals its max label
    """
    _check_window_size(window_size)
    y = labels.labels
    h, w = y.shape
    rows = _window_starts(h, window_size)
    cols = _window_starts(w, window_size)

    lo = np.minimum.reduceat(np.minimum.reduceat(y, rows, axis=0), cols, axis=1)
    hi = np.maximum.reduceat(np.maximum.reduceat(y, rows, axis=0), cols, axis=1)
    flags = (lo != hi).astype(np.uint8)

    return PurityMask(_broadcast_windows(flags, window_size, h, w))


def _roll(values: np.ndarray, shift: int) -> np.ndarray:
    # out[i][j] = values[(i + shift) % H][(j + shift) % W]
    return np.roll(values, (-shift, -shift), axis=(0, 1))


def cyclic_shift_labels(labels: LabelMap, shift: int) -> LabelMap:
    """ Cyclic shift by delta on both axes

    output[i][j] = labels[(i + delta) mod H][(j + delta) mod W]
    """
    return LabelMap(labels=_roll(labels.labels, int(shift)), k_count=labels.k_count)


def cyclic_shift_mask(mask: PurityMask, shift: int) -> PurityMask:
    return PurityMask(_roll(mask.values, int(shift)))


def fuse_masks(base: PurityMask, shifted_back: PurityMask) -> PurityMask:
    """ Element-wise AND, pure in either configuration -> pure """
    if base.shape != shifted_back.shape:
        raise ValueError(f"mask dimensions differ: {base.shape} vs {shifted_back.shape}")
    return PurityMask(base.values * shifted_back.values)


def mask_stats(mask: PurityMask, window_size: int, shift: int) -> MaskStats:
    total = int(mask.values.size)
    pure = mask.pure_count()
    return MaskStats(pure_fraction=pure / total if total else 0.0,
                     pure_pixel_count=pure,
                     total_pixels=total,
                     window_size=int(window_size),
                     shift_size=int(shift))


def pure_pass_mask_from_labels(labels: LabelMap,
                               window_size: int,
                               shift: int,
                               cross_shift: bool = True) -> tuple[PurityMask, MaskStats]:
    """ Base grid mask, optionally fused with the delta-shifted grid mask

    :param cross_shift: False returns the unfused base mask, stats record shift 0
    """
    _check_window_size(window_size)
    if not 0 <= shift < window_size:
        raise ValueError(f"shift must satisfy 0 <= shift < window_size ({window_size}), got {shift}")

    base = window_purity_mask(labels, window_size)
    if not cross_shift:
        return base, mask_stats(base, window_size, 0)

    shifted = window_purity_mask(cyclic_shift_labels(labels, shift), window_size)
    fused = fuse_masks(base, cyclic_shift_mask(shifted, -shift))
    return fused, mask_stats(fused, window_size, shift)


def pure_pass_mask(image: NormalizedImage,
                   centers: ColorCenters,
                   window_size: int = 8,
                   shift: int = 4,
                   cross_shift: bool = True) -> tuple[PurityMask, MaskStats]:
    """ Classify -> window purity -> cross-shift fusion

    :return: fused mask, stats
    """
    labels = classify_pixels(image, centers)
    return pure_pass_mask_from_labels(labels, window_size, shift, cross_shift=cross_shift)


def mask_to_indices(mask: PurityMask) -> HardIndexSet:
    """ row-major indices of hard (1) pixels """
    return HardIndexSet(indices=np.flatnonzero(mask.values.ravel()), total=int(mask.values.size))


def mask_disagreement(a: PurityMask, b: PurityMask) -> float:
    """ fraction of pixels where two masks differ """
    if a.shape != b.shape:
        raise ValueError(f"mask dimensions differ: {a.shape} vs {b.shape}")
    return float(np.count_nonzero(a.values != b.values)) / a.values.size


def window_luminance_variance(image: NormalizedImage, window_size: int) -> np.ndarray:
    """ population variance of luminance per window, (rows, cols) grid """
    _check_window_size(window_size)
    y = image.pixels @ LUMA_WEIGHTS
    h, w = y.shape
    rows = _window_starts(h, window_size)
    cols = _window_starts(w, window_size)

    ones = np.ones_like(y)
    count = np.add.reduceat(np.add.reduceat(ones, rows, axis=0), cols, axis=1)
    total = np.add.reduceat(np.add.reduceat(y, rows, axis=0), cols, axis=1)
    mean = total / count

    dev = y - _broadcast_windows(mean, window_size, h, w)
    sq = np.add.reduceat(np.add.reduceat(dev * dev, rows, axis=0), cols, axis=1)
    return sq / count


def fixed_ratio_window_mask(image: NormalizedImage, window_size: int, ratio: float) -> PurityMask:
    """ Mark the ceil(ratio * windows) highest-variance windows hard

    Ties keep ascending row-major window order.
    """
    _check_window_size(window_size)
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")

    var = np.round(window_luminance_variance(image, window_size), VARIANCE_DECIMALS)
    grid = var.shape
    count = var.size
    n_hard = min(count, math.ceil(round(ratio * count, 9)))

    order = np.argsort(-var.ravel(), kind="stable")
    flags = np.zeros(count, dtype=np.uint8)
    flags[order[:n_hard]] = 1

    return PurityMask(_broadcast_windows(flags.reshape(grid), window_size, image.height, image.width))
