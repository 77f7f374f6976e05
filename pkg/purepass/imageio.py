# -*- coding: utf-8 -*-
"""
Image, mask, overlay and mask-bundle files.

- images: 8-bit RGB or grayscale PNG/PPM in, normalized to [0, 1]
- masks: single channel 8-bit PNG, 0 = pure, 255 = hard
- bundles: CBOR map with labels and the bit-packed mask, numpy buffers as bytes

"""
import os
import numpy as np
import cbor2
from PIL import Image, UnidentifiedImageError

from .classify import NormalizedImage, LabelMap
from .masks import PurityMask, MaskStats

MASK_LEVEL_PURE = 0
MASK_LEVEL_HARD = 255

# PIL modes accepted as-is or converted without losing information
_RGB_MODES = ("RGB",)
_GRAY_MODES = ("L", "1")
_PALETTE_MODES = ("P",)

BUNDLE_VERSION = 1


def load_image(path: str) -> NormalizedImage:
    """ Read an 8-bit RGB or grayscale PNG/PPM

    - grayscale replicated to three channels
    - components divided by 255
    """
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in _GRAY_MODES:
                rgb = np.asarray(im.convert("L"), dtype=np.uint8)
            elif mode in _RGB_MODES:
                rgb = np.asarray(im, dtype=np.uint8)
            elif mode in _PALETTE_MODES and "transparency" not in im.info:
                rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
            else:
                raise OSError(f"{path}: unsupported image mode {mode}, expected 8-bit RGB or grayscale")

    except UnidentifiedImageError as e:
        raise OSError(f"{path}: not a readable PNG/PPM image") from e

    except OSError as e:
        if str(e).startswith(f"{path}:"):
            raise
        raise OSError(f"{path}: {e.strerror or e}") from e

    return NormalizedImage.from_array(rgb)


def to_uint8(image: NormalizedImage) -> np.ndarray:
    return np.round(image.pixels * 255.0).astype(np.uint8)


def save_image(image: NormalizedImage, path: str) -> None:
    Image.fromarray(to_uint8(image)).save(path)


def save_mask(mask: PurityMask, path: str) -> None:
    levels = np.where(mask.values == 1, MASK_LEVEL_HARD, MASK_LEVEL_PURE).astype(np.uint8)
    Image.fromarray(levels).save(path)


def load_mask(path: str) -> PurityMask:
    """ Read a mask PNG written by save_mask """
    try:
        with Image.open(path) as im:
            if im.mode != "L":
                raise OSError(f"{path}: mask must be single channel 8-bit, got {im.mode}")
            levels = np.asarray(im, dtype=np.uint8)

    except UnidentifiedImageError as e:
        raise OSError(f"{path}: not a readable mask PNG") from e

    except OSError as e:
        if str(e).startswith(f"{path}:"):
            raise
        raise OSError(f"{path}: {e.strerror or e}") from e

    if not np.all((levels == MASK_LEVEL_PURE) | (levels == MASK_LEVEL_HARD)):
        raise ValueError(f"{path}: mask levels must be {MASK_LEVEL_PURE} or {MASK_LEVEL_HARD}")
    return PurityMask((levels == MASK_LEVEL_HARD).astype(np.uint8))


def render_overlay(image: NormalizedImage,
                   mask: PurityMask,
                   pure_tint: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> NormalizedImage:
    """ Blend pure pixels 50/50 with the tint, hard pixels unchanged """
    if mask.shape != (image.height, image.width):
        raise ValueError(f"mask {mask.shape} and image {(image.height, image.width)} dimensions differ")
    tint = np.asarray(pure_tint, dtype=np.float64)
    if tint.shape != (3,) or np.any(tint < 0.0) or np.any(tint > 1.0):
        raise ValueError(f"pure_tint must be an RGB triple in [0, 1], got {pure_tint}")

    pure = (mask.values == 0)[:, :, None]
    blended = 0.5 * image.pixels + 0.5 * tint
    return NormalizedImage(np.where(pure, blended, image.pixels))


def downscale(image: NormalizedImage, scale: int) -> NormalizedImage:
    """ Bicubic downscale by an integer factor, sizes floored

    :param scale: 1 returns the image unchanged
    """
    if isinstance(scale, bool) or not isinstance(scale, (int, np.integer)) or scale < 1:
        raise ValueError(f"scale must be an integer >= 1, got {scale}")
    if scale == 1:
        return image
    w, h = image.width // scale, image.height // scale
    if w < 1 or h < 1:
        raise ValueError(f"{image.height}x{image.width} image is too small for scale {scale}")
    small = Image.fromarray(to_uint8(image)).resize((w, h), Image.Resampling.BICUBIC)
    return NormalizedImage.from_array(np.asarray(small, dtype=np.uint8))


def side_by_side(left: NormalizedImage, right: NormalizedImage, gap: int = 4) -> NormalizedImage:
    """ two images next to each other on a white gutter """
    h = max(left.height, right.height)
    canvas = np.ones((h, left.width + gap + right.width, 3), dtype=np.float64)
    canvas[:left.height, :left.width] = left.pixels
    canvas[:right.height, left.width + gap:] = right.pixels
    return NormalizedImage(canvas)


def write_mask_bundle(path: str, labels: LabelMap, mask: PurityMask, stats: MaskStats) -> None:
    """ CBOR bundle, labels as uint8 bytes (K <= 256), mask bit-packed """
    if labels.labels.shape != mask.shape:
        raise ValueError("label map and mask dimensions differ")
    if labels.k_count > 256:
        raise ValueError(f"bundle stores labels as uint8, k_count {labels.k_count} > 256")

    payload = {"v": BUNDLE_VERSION,
               "h": mask.height,
               "w": mask.width,
               "k": labels.k_count,
               "labels": labels.labels.astype("u1").tobytes(),
               "mask": np.packbits(mask.values.ravel()).tobytes(),
               "stats": stats.to_dict()}

    with open(path, "wb") as f:
        cbor2.dump(payload, f)


def read_mask_bundle(path: str) -> tuple[LabelMap, PurityMask, MaskStats]:
    if not os.path.isfile(path):
        raise OSError(f"{path}: bundle not found")
    try:
        with open(path, "rb") as f:
            item = cbor2.load(f)
    except cbor2.CBORDecodeError as e:
        raise OSError(f"{path}: corrupt mask bundle") from e

    if item.get("v") != BUNDLE_VERSION:
        raise OSError(f"{path}: unsupported bundle version {item.get('v')}")

    h, w = item["h"], item["w"]
    labels = np.frombuffer(item["labels"], dtype="u1").copy().astype(np.int64).reshape(h, w)
    bits = np.unpackbits(np.frombuffer(item["mask"], dtype="u1"), count=h * w)
    return (LabelMap(labels=labels, k_count=item["k"]),
            PurityMask(bits.reshape(h, w).astype(np.uint8)),
            MaskStats(**item["stats"]))
