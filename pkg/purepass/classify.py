# -*- coding: utf-8 -*-
"""
Fixed color centers and nearest-center pixel classification.

Centers are K hues spaced evenly around the HSV wheel at a fixed saturation
and value, converted to RGB.  Every pixel gets the index of the nearest
center (squared Euclidean distance, smallest index wins a tie).

"""
from dataclasses import dataclass
import numpy as np

# pixels classified per chunk, bounds the (rows, W, K) distance buffer
CLASSIFY_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class ColorCenters:
    """ K fixed RGB anchors

    centers: (K, 3) float64, components in [0, 1]
    """
    centers: np.ndarray
    k_count: int
    saturation: float
    value: float

    def __post_init__(self):
        if self.centers.shape != (self.k_count, 3):
            raise ValueError(f"centers shape {self.centers.shape} != ({self.k_count}, 3)")
        if np.any(self.centers < 0.0) or np.any(self.centers > 1.0):
            raise ValueError("center components must lie in [0, 1]")

    def hues(self) -> np.ndarray:
        return np.arange(self.k_count, dtype=np.float64) / self.k_count

    def as_uint8(self) -> np.ndarray:
        return np.round(self.centers * 255.0).astype(np.uint8)


@dataclass(frozen=True)
class NormalizedImage:
    """ H x W RGB image, float64 components in [0, 1] """
    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"pixels must be H x W x 3, got {self.pixels.shape}")
        if self.pixels.shape[0] == 0 or self.pixels.shape[1] == 0:
            raise ValueError("image is empty")
        if not np.all(np.isfinite(self.pixels)):
            raise ValueError("pixels must be finite")
        if np.any(self.pixels < 0.0) or np.any(self.pixels > 1.0):
            raise ValueError("pixel components must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @classmethod
    def from_array(cls, array: np.ndarray) -> "NormalizedImage":
        """ Build from an H x W x 3 (or H x W grayscale) array

        Integer 8-bit input is divided by 255, float input is taken as already normalized.
        """
        a = np.asarray(array)
        if a.ndim == 2:
            a = np.repeat(a[:, :, None], 3, axis=2)

        if a.dtype == np.uint8:
            a = a.astype(np.float64) / 255.0
        elif np.issubdtype(a.dtype, np.integer):
            raise ValueError(f"unsupported integer pixel type {a.dtype}, expected uint8")
        else:
            a = a.astype(np.float64)

        return cls(a)


@dataclass(frozen=True)
class LabelMap:
    """ H x W color-category indices in [0, K-1] """
    labels: np.ndarray
    k_count: int

    def __post_init__(self):
        if self.labels.ndim != 2:
            raise ValueError(f"labels must be 2D, got {self.labels.shape}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k_count):
            raise ValueError(f"labels must lie in [0, {self.k_count - 1}]")

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


def hsv_to_rgb(hue: np.ndarray, saturation: float, value: float) -> np.ndarray:
    """ Sexant HSV -> RGB for an array of hues in [0, 1)

    :return: (len(hue), 3) float64
    """
    h = np.asarray(hue, dtype=np.float64) * 6.0
    c = value * saturation
    x = c * (1.0 - np.abs(np.mod(h, 2.0) - 1.0))
    m = value - c
    zero = np.zeros_like(h)
    sexant = np.floor(h).astype(int) % 6

    # rows are (r', g', b') for sexants 0..5
    table = np.stack([
        np.stack([np.full_like(h, c), x, zero], axis=-1),
        np.stack([x, np.full_like(h, c), zero], axis=-1),
        np.stack([zero, np.full_like(h, c), x], axis=-1),
        np.stack([zero, x, np.full_like(h, c)], axis=-1),
        np.stack([x, zero, np.full_like(h, c)], axis=-1),
        np.stack([np.full_like(h, c), zero, x], axis=-1),
    ])
    rgb = table[sexant, np.arange(h.shape[0])] + m
    return np.clip(rgb, 0.0, 1.0)


def make_color_centers(k_count: int = 16, saturation: float = 0.9, value: float = 0.9) -> ColorCenters:
    """ Make K centers at hues k/K, k = 0..K-1

    :param k_count: number of centers, >= 1
    :param saturation: [0, 1]
    :param value: [0, 1]
    :return: ColorCenters
    """
    if isinstance(k_count, bool) or not isinstance(k_count, (int, np.integer)) or k_count < 1:
        raise ValueError(f"k_count must be a positive integer, got {k_count}")
    if not 0.0 <= saturation <= 1.0:
        raise ValueError(f"saturation must be in [0, 1], got {saturation}")
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"value must be in [0, 1], got {value}")

    hues = np.arange(k_count, dtype=np.float64) / k_count
    return ColorCenters(centers=hsv_to_rgb(hues, saturation, value),
                        k_count=int(k_count),
                        saturation=float(saturation),
                        value=float(value))


def classify_pixels(image: NormalizedImage, centers: ColorCenters) -> LabelMap:
    """ Label every pixel with its nearest color center

    - squared distances, argmin takes the first (smallest) index on ties
    - processed in row chunks so the distance buffer stays bounded
    """
    pixels = image.pixels
    if pixels.size == 0:
        raise ValueError("image is empty")

    h, w, _ = pixels.shape
    c = centers.centers
    labels = np.empty((h, w), dtype=np.int64)

    rows = max(1, CLASSIFY_CHUNK_ELEMENTS // max(1, w * centers.k_count))
    for r0 in range(0, h, rows):
        block = pixels[r0:r0 + rows]
        d = block[:, :, None, :] - c[None, None, :, :]
        d2 = np.einsum("hwkc,hwkc->hwk", d, d)
        labels[r0:r0 + rows] = np.argmin(d2, axis=2)

    return LabelMap(labels=labels, k_count=centers.k_count)


def quantize(image: NormalizedImage, labels: LabelMap, centers: ColorCenters) -> NormalizedImage:
    """ Replace every pixel by its assigned center """
    if labels.labels.shape != image.pixels.shape[:2]:
        raise ValueError("label map and image dimensions differ")
    return NormalizedImage(centers.centers[labels.labels])
