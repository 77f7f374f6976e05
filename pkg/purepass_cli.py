# -*- coding: utf-8 -*-
"""
MIT License

Copyright (c) 2026 Pure-Pass contributors

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

Command line for pure-pass masks, baseline comparison, FLOPs prediction and
the selective attention simulation.

    python purepass_cli.py mask images/*.png --out out
    python purepass_cli.py compare images/*.png --ratio 0.5 --out out
    python purepass_cli.py cost images/*.png --fraction 0.895
    python purepass_cli.py simulate crop.png --channels 48 --seed 0
    python purepass_cli.py centers --centers 16

Exit codes: 0 success, 1 every input failed, 2 invalid arguments.
"""
import sys
import argparse
import logging
from purepass import PurePass, cost, report
from purepass.PurePass import PurePassAPI

logger = logging.getLogger()
FORMAT = "%(asctime)s: %(filename)22s %(funcName)25s %(levelname)-5.5s :%(lineno)4s: %(message)s"


def setup_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    if not any(getattr(h, "_purepass", False) for h in logger.handlers):
        consoleHandler = logging.StreamHandler()
        consoleHandler.setFormatter(logging.Formatter(FORMAT))
        consoleHandler._purepass = True
        logger.addHandler(consoleHandler)
    for h in logger.handlers:
        if getattr(h, "_purepass", False):
            h.setLevel(level)
    logger.setLevel(level)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--window-size", type=int, default=PurePassAPI.DEFAULT_WINDOW_SIZE,
                        help="purity window size S")
    common.add_argument("--shift-size", type=int, default=PurePassAPI.DEFAULT_SHIFT_SIZE,
                        help="cross-shift offset, 0 <= shift < S")
    common.add_argument("--centers", type=int, default=PurePassAPI.DEFAULT_CENTER_COUNT,
                        help="number of fixed color centers K")
    common.add_argument("--saturation", type=float, default=PurePassAPI.DEFAULT_SATURATION)
    common.add_argument("--value", type=float, default=PurePassAPI.DEFAULT_VALUE)
    common.add_argument("--ratio", type=float, default=None,
                        help="fixed-ratio baseline: share of windows marked hard")
    common.add_argument("--group-capacity", type=int, default=PurePassAPI.DEFAULT_GROUP_CAPACITY,
                        help="attention group size G")
    common.add_argument("--channels", type=int, default=PurePassAPI.DEFAULT_CHANNELS,
                        help="token channels C for simulate")
    common.add_argument("--heads", type=int, default=None, help="attention heads, default from C")
    common.add_argument("--profile", default=None, help="key=value cost profile file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=PurePassAPI.DEFAULT_SEED)
    common.add_argument("--jobs", type=int, default=1, help="images processed in parallel")
    common.add_argument("--no-cross-shift", action="store_true", help="base grid mask only, no fusion")
    common.add_argument("--no-compensation", action="store_true",
                        help="simulate: leave pure rows empty instead of copying the bypass")
    common.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(description="Pure-pass adaptive computation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in ((PurePassAPI.CMD_MASK, "masks, overlays and stats per image"),
                        (PurePassAPI.CMD_COMPARE, "pure-pass vs fixed-ratio window masks"),
                        (PurePassAPI.CMD_COST, "predicted FLOPs from pure fractions"),
                        (PurePassAPI.CMD_SIMULATE, "selective attention on image tokens")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("paths", nargs="*", help="PNG/PPM images")
        if name == PurePassAPI.CMD_COST:
            p.add_argument("--fraction", type=float, action="append", default=[],
                           help="pure fraction to price, repeatable")

    sub.add_parser(PurePassAPI.CMD_CENTERS, parents=[common], help="dump the K color center table")
    return parser


def config_from_args(args) -> PurePass.RunConfig:
    return PurePass.RunConfig(window_size=args.window_size,
                              shift_size=args.shift_size,
                              center_count=args.centers,
                              saturation=args.saturation,
                              value=args.value,
                              group_capacity=args.group_capacity,
                              baseline_ratio=args.ratio,
                              output_dir=args.out,
                              channels=args.channels,
                              head_count=args.heads,
                              seed=args.seed,
                              cross_shift=not args.no_cross_shift,
                              compensate=not args.no_compensation,
                              jobs=args.jobs)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    try:
        config = config_from_args(args)
        profile = cost.load_profile(args.profile) if args.profile else cost.DEFAULT_PROFILE
        pp = PurePass.PurePass(config=config, profile=profile, logger=logger)

    except (ValueError, OSError) as e:
        logger.error(f"invalid arguments: {e}")
        return PurePassAPI.EXIT_INVALID_ARGS

    if args.command == PurePassAPI.CMD_CENTERS:
        success, response = pp.centers_table()
        # center components at full precision, not report precision
        sys.stdout.write(report.dumps(response, digits=None))
        return PurePassAPI.EXIT_SUCCESS

    if args.command != PurePassAPI.CMD_COST and not args.paths:
        logger.error(f"{args.command}: at least one image path is required")
        return PurePassAPI.EXIT_INVALID_ARGS

    if args.command == PurePassAPI.CMD_MASK:
        success, response = pp.mask(args.paths)
    elif args.command == PurePassAPI.CMD_COMPARE:
        success, response = pp.compare(args.paths)
    elif args.command == PurePassAPI.CMD_COST:
        success, response = pp.cost(args.paths, args.fraction)
    else:
        success, response = pp.simulate(args.paths)

    if "ERROR" in response:
        logger.error(f"{args.command}: {response['ERROR']}")
        return PurePassAPI.EXIT_INVALID_ARGS

    corpus = response["report"]
    sys.stdout.write(report.dumps(corpus.aggregate()))
    if not success:
        logger.error(f"{args.command}: all inputs failed")
        return PurePassAPI.EXIT_FAILURE

    logger.info(f"{args.command}: {len(corpus.per_image)} ok, {len(corpus.errors)} failed, report {response['path']}")
    return PurePassAPI.EXIT_SUCCESS


if __name__ == '__main__':
    sys.exit(main())
