# -*- coding: utf-8 -*-
"""
MIT License

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.

A minimal example program.  Builds a small synthetic image (a pure square
straddling four windows on a flat background, with a noisy strip), computes the
pure-pass mask with and without cross-shift fusion, and plots both.

Pass --image to use a PNG/PPM of your own instead.

"""
import argparse
import numpy as np
from purepass import classify, masks, cost, imageio
from purepass.PurePass import PurePassAPI
import matplotlib.pyplot as plt
import logging

logger = logging.getLogger()
FORMAT = "%(asctime)s: %(filename)22s %(funcName)25s %(levelname)-5.5s :%(lineno)4s: %(message)s"
formatter = logging.Formatter(FORMAT)
consoleHandler = logging.StreamHandler()
consoleHandler.setFormatter(formatter)
consoleHandler.setLevel(logging.INFO)
logger.addHandler(consoleHandler)
logger.setLevel(logging.INFO)

IMAGE_SIZE = 64
SQUARE_RGB = (0.9, 0.09, 0.09)
BACKGROUND_RGB = (0.09, 0.09, 0.9)


def synthetic_image(size: int = IMAGE_SIZE, seed: int = 0) -> classify.NormalizedImage:
    """ flat background, pure square centered on a window corner, noisy bottom strip """
    rng = np.random.default_rng(seed)
    px = np.empty((size, size, 3))
    px[:, :] = BACKGROUND_RGB
    c = size // 2
    half = PurePassAPI.DEFAULT_WINDOW_SIZE // 2
    px[c - half:c + half, c - half:c + half] = SQUARE_RGB
    px[-PurePassAPI.DEFAULT_WINDOW_SIZE:] = rng.random((PurePassAPI.DEFAULT_WINDOW_SIZE, size, 3))
    return classify.NormalizedImage(px)


if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument("--image", default=None, help="PNG/PPM image, default synthetic")
    args = parser.parse_args()

    if args.image:
        try:
            image = imageio.load_image(args.image)
        except OSError as e:
            logger.error(f"{e}")
            exit(1)
    else:
        image = synthetic_image()

    centers = classify.make_color_centers(PurePassAPI.DEFAULT_CENTER_COUNT,
                                          PurePassAPI.DEFAULT_SATURATION,
                                          PurePassAPI.DEFAULT_VALUE)

    base, base_stats = masks.pure_pass_mask(image, centers, PurePassAPI.DEFAULT_WINDOW_SIZE,
                                            PurePassAPI.DEFAULT_SHIFT_SIZE, cross_shift=False)
    fused, fused_stats = masks.pure_pass_mask(image, centers, PurePassAPI.DEFAULT_WINDOW_SIZE,
                                              PurePassAPI.DEFAULT_SHIFT_SIZE)
    logger.info(f"pure fraction without fusion {base_stats.pure_fraction:0.4f}")
    logger.info(f"pure fraction with fusion    {fused_stats.pure_fraction:0.4f}")

    savings = cost.predict_flops(cost.DEFAULT_PROFILE, fused_stats.pure_fraction)
    logger.info(f"predicted {savings.predicted_flops:0.2f}G of {savings.baseline_flops:0.2f}G")

    # plot the results, white = pure (computation skipped)
    fig, ax = plt.subplots(1, 3, figsize=(12, 4))
    ax[0].imshow(image.pixels)
    ax[0].set_title("input")
    ax[1].imshow(imageio.render_overlay(image, base).pixels)
    ax[1].set_title(f"base grid, pure {base_stats.pure_fraction:0.1%}")
    ax[2].imshow(imageio.render_overlay(image, fused).pixels)
    ax[2].set_title(f"cross-shift fused, pure {fused_stats.pure_fraction:0.1%}")
    for a in ax:
        a.axis("off")

    plt.tight_layout()
    plt.show()
    exit(0)
