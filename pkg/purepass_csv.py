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

A minimal example program to stream per-image pure fractions of a corpus to a
csv file, with and without cross-shift fusion, and compare the corpus mean with
the published 38.89% (manga images at 2x, fused).  Images are downscaled by
--scale (default 2, bicubic) before masking to match that protocol.  The
averaging protocol behind the published figure is not known, so no tolerance
is applied.

"""
import os
import glob
import argparse
import csv
from timeit import default_timer as timer
from purepass import classify, masks, cost, imageio
from purepass.PurePass import PurePassAPI
import logging

logger = logging.getLogger()
FORMAT = "%(asctime)s: %(filename)22s %(funcName)25s %(levelname)-5.5s :%(lineno)4s: %(message)s"
formatter = logging.Formatter(FORMAT)
consoleHandler = logging.StreamHandler()
consoleHandler.setFormatter(formatter)
consoleHandler.setLevel(logging.INFO)
logger.addHandler(consoleHandler)
logger.setLevel(logging.INFO)

CSV_FILENAME = "purepass_out.csv"
CSV_HEADER = ["image", "height", "width", "pure_fraction_base", "pure_fraction_fused", "predicted_gflops"]
IMAGE_PATTERNS = ("*.png", "*.ppm")
# the published corpus fraction was measured on 2x low-resolution inputs
LR_SCALE = 2


if __name__ == '__main__':
    parser = argparse.ArgumentParser()
    parser.add_argument("--dir", required=True, help="directory of PNG/PPM images")
    parser.add_argument("--csv", default=CSV_FILENAME, help="output csv file")
    parser.add_argument("--scale", type=int, default=LR_SCALE,
                        help="bicubic downscale factor applied before masking, 1 = as loaded")
    args = parser.parse_args()

    if args.scale < 1:
        logger.error(f"--scale must be >= 1, got {args.scale}")
        exit(1)

    paths = sorted(p for pattern in IMAGE_PATTERNS for p in glob.glob(os.path.join(args.dir, pattern)))
    if not paths:
        logger.error(f"no PNG/PPM images in {args.dir}")
        exit(1)

    centers = classify.make_color_centers(PurePassAPI.DEFAULT_CENTER_COUNT,
                                          PurePassAPI.DEFAULT_SATURATION,
                                          PurePassAPI.DEFAULT_VALUE)
    S, delta = PurePassAPI.DEFAULT_WINDOW_SIZE, PurePassAPI.DEFAULT_SHIFT_SIZE

    # remove the previous csv file, else it just keeps getting bigger
    if os.path.exists(args.csv):
        os.remove(args.csv)

    fused_fractions = []
    start = timer()
    with open(args.csv, 'a+', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)

        for path in paths:
            try:
                image = imageio.downscale(imageio.load_image(path), args.scale)
            except (OSError, ValueError) as e:
                logger.error(f"{e}")
                continue

            labels = classify.classify_pixels(image, centers)
            _, base = masks.pure_pass_mask_from_labels(labels, S, delta, cross_shift=False)
            _, fused = masks.pure_pass_mask_from_labels(labels, S, delta)
            savings = cost.predict_flops(cost.DEFAULT_PROFILE, fused.pure_fraction)

            writer.writerow([os.path.basename(path), image.height, image.width,
                             f"{base.pure_fraction:0.6f}", f"{fused.pure_fraction:0.6f}",
                             f"{savings.predicted_flops:0.4f}"])
            fused_fractions.append(fused.pure_fraction)
            logger.info(f"{path}: base {base.pure_fraction:0.4f}, fused {fused.pure_fraction:0.4f}")

    if not fused_fractions:
        logger.error("all images failed")
        exit(1)

    mean = sum(fused_fractions) / len(fused_fractions)
    logger.info(f"{len(fused_fractions)} images in {timer() - start:0.2f}s, csv {args.csv}")
    logger.info(f"mean pure fraction {mean:0.4f} at 1/{args.scale} scale, published {cost.REFERENCE_CORPUS_PURE_FRACTION:0.4f}")
    exit(0)
