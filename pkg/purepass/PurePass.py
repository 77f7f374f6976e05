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
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
from threading import Lock
from timeit import default_timer as timer
import numpy as np

from . import classify, masks, mixer, cost, imageio, report


class StubLogger(object):
    """ stub out logger if none is provided"""
    def info(self, *args, **kwargs): pass
    def error(self, *args, **kwargs): pass
    def debug(self, *args, **kwargs): pass
    def warning(self, *args, **kwargs): pass
    def critical(self, *args, **kwargs): pass
    def exception(self, *args, **kwargs): pass


@dataclass(frozen=True)
class PurePassAPI:
    """ PurePass Constants

    """

    CMD_MASK = "mask"
    CMD_COMPARE = "compare"
    CMD_COST = "cost"
    CMD_SIMULATE = "simulate"
    CMD_CENTERS = "centers"
    CMD_LIST = [
        CMD_MASK,
        CMD_COMPARE,
        CMD_COST,
        CMD_SIMULATE,
        CMD_CENTERS,
    ]

    # mask generation defaults: window 8, shift 4, 16 centers at s = v = 0.9
    DEFAULT_WINDOW_SIZE = 8
    DEFAULT_SHIFT_SIZE = 4
    DEFAULT_CENTER_COUNT = 16
    DEFAULT_SATURATION = 0.9
    DEFAULT_VALUE = 0.9

    # attention defaults: 48 channels, sub-categories of 128
    DEFAULT_GROUP_CAPACITY = mixer.DEFAULT_GROUP_CAPACITY
    DEFAULT_CHANNELS = 48
    DEFAULT_SEED = 0

    # compare uses this when no --ratio is given
    DEFAULT_COMPARE_RATIO = 0.5

    PURE_TINT_WHITE = (1.0, 1.0, 1.0)

    SUFFIX_MASK = "_mask.png"
    SUFFIX_OVERLAY = "_overlay.png"
    SUFFIX_STATS = "_stats.json"
    SUFFIX_BUNDLE = "_mask.cbor"
    SUFFIX_BASELINE_MASK = "_baseline_mask.png"
    SUFFIX_COMPARE = "_compare.png"

    REPORT_FILE = {
        CMD_MASK: "mask_report.json",
        CMD_COMPARE: "compare_report.json",
        CMD_COST: "cost_report.json",
        CMD_SIMULATE: "simulate_report.json",
        CMD_CENTERS: "centers.json",
    }

    # simulate holds N x C float64 token matrices, warn above this many tokens
    SIMULATE_WARN_TOKENS = 512 * 512

    EXIT_SUCCESS = 0
    EXIT_FAILURE = 1
    EXIT_INVALID_ARGS = 2


@dataclass(frozen=True)
class RunConfig:
    window_size: int = PurePassAPI.DEFAULT_WINDOW_SIZE
    shift_size: int = PurePassAPI.DEFAULT_SHIFT_SIZE
    center_count: int = PurePassAPI.DEFAULT_CENTER_COUNT
    saturation: float = PurePassAPI.DEFAULT_SATURATION
    value: float = PurePassAPI.DEFAULT_VALUE
    group_capacity: int = PurePassAPI.DEFAULT_GROUP_CAPACITY
    baseline_ratio: float | None = None
    output_dir: str = "."
    channels: int = PurePassAPI.DEFAULT_CHANNELS
    head_count: int | None = None
    seed: int = PurePassAPI.DEFAULT_SEED
    cross_shift: bool = True
    compensate: bool = True
    jobs: int = 1

    def __post_init__(self):
        if self.window_size < 1:
            raise ValueError(f"window size must be >= 1, got {self.window_size}")
        if not 0 <= self.shift_size < self.window_size:
            raise ValueError(f"shift size must satisfy 0 <= shift < window size ({self.window_size}), "
                             f"got {self.shift_size}")
        if self.center_count < 1:
            raise ValueError(f"center count must be >= 1, got {self.center_count}")
        if not 0.0 <= self.saturation <= 1.0:
            raise ValueError(f"saturation must be in [0, 1], got {self.saturation}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"value must be in [0, 1], got {self.value}")
        if self.group_capacity < 1:
            raise ValueError(f"group capacity must be >= 1, got {self.group_capacity}")
        if self.baseline_ratio is not None and not 0.0 <= self.baseline_ratio <= 1.0:
            raise ValueError(f"ratio must be in [0, 1], got {self.baseline_ratio}")
        if self.channels < 1:
            raise ValueError(f"channels must be >= 1, got {self.channels}")
        heads = self.heads()
        if heads < 1 or self.channels % heads:
            raise ValueError(f"head count {heads} must divide channels {self.channels}")
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")

    def heads(self) -> int:
        if self.head_count is None:
            return mixer.default_head_count(self.channels)
        return self.head_count

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("output_dir")
        d.pop("jobs")
        d["head_count"] = self.heads()
        return d


def image_ids(paths: list[str]) -> list[str]:
    """ file stem per path, made unique by suffixing a counter """
    ids, seen = [], {}
    for p in paths:
        stem = os.path.splitext(os.path.basename(p))[0] or "image"
        n = seen.get(stem, 0)
        seen[stem] = n + 1
        ids.append(stem if n == 0 else f"{stem}-{n}")
    return ids


class PurePass(object):
    """ PurePass Class

    Notes:
    - All commands are blocking
    - All commands send back a success flag, if False, client must handle error
    - per-image failures are logged and skipped, success is False only when
      every input failed

    """

    def __init__(self, config: RunConfig = RunConfig(), profile: cost.CostProfile = cost.DEFAULT_PROFILE,
                 logger=StubLogger()):
        """ Init

        : param config: RunConfig
        : param profile: CostProfile used to turn pure fractions into FLOPs
        : param logger
        """
        self.config = config
        self.profile = profile
        self.logger = logger
        self._lock = Lock()
        self._centers = classify.make_color_centers(config.center_count, config.saturation, config.value)
        self._weights = None

    @property
    def centers(self) -> classify.ColorCenters:
        return self._centers

    def weights(self) -> mixer.MixerWeights:
        with self._lock:
            if self._weights is None:
                self._weights = mixer.MixerWeights.random(self.config.channels,
                                                          self.config.heads(),
                                                          seed=self.config.seed)
            return self._weights

    def _out(self, image_id: str, suffix: str) -> str:
        return os.path.join(self.config.output_dir, f"{image_id}{suffix}")

    def _ensure_output_dir(self) -> None:
        os.makedirs(self.config.output_dir, exist_ok=True)

    def _mask_image(self, image: classify.NormalizedImage):
        labels = classify.classify_pixels(image, self._centers)
        mask, stats = masks.pure_pass_mask_from_labels(labels,
                                                       self.config.window_size,
                                                       self.config.shift_size,
                                                       cross_shift=self.config.cross_shift)
        return labels, mask, stats

    def _run_images(self, command: str, paths: list[str], worker) -> tuple[bool, report.CorpusReport]:
        """ run worker(path, image_id) -> ImageRow over every path

        Rows keep input order, failures are logged and recorded in report.errors.
        """
        corpus = report.CorpusReport(config=self.config.to_dict())
        corpus.config["command"] = command
        corpus.config["profile"] = self.profile.to_dict()

        if not paths:
            self.logger.error(f"{command}: no input paths")
            corpus.errors.append({"path": None, "error": "no input paths"})
            return False, corpus

        def _one(item):
            path, image_id = item
            start = timer()
            try:
                row = worker(path, image_id)
            except Exception as e:
                self.logger.exception(e)
                self.logger.error(f"{command} {path}: skipped")
                return None, {"path": path, "error": str(e)}
            self.logger.info(f"{command} {path}: pure {row.savings.pure_fraction:0.4f}, "
                             f"{timer() - start:0.3f}s")
            return row, None

        items = list(zip(paths, image_ids(paths)))
        if self.config.jobs > 1:
            with ThreadPoolExecutor(max_workers=self.config.jobs) as pool:
                results = list(pool.map(_one, items))
        else:
            results = [_one(item) for item in items]

        for row, error in results:
            if row is not None:
                corpus.per_image.append(row)
            else:
                corpus.errors.append(error)

        return len(corpus.per_image) > 0, corpus

    def _write_report(self, command: str, corpus: report.CorpusReport) -> str:
        self._ensure_output_dir()
        path = os.path.join(self.config.output_dir, PurePassAPI.REPORT_FILE[command])
        report.write_json(corpus, path)
        self.logger.info(f"{command}: report {path}")
        return path

    def centers_table(self) -> tuple[bool, dict]:
        """ K center table

        :return: success <True>, {"k_count", "saturation", "value", "centers": [{index, hue, r, g, b, rgb8}]}
        """
        c = self._centers
        rows = []
        for k, (hue, rgb, rgb8) in enumerate(zip(c.hues(), c.centers, c.as_uint8())):
            rows.append({"index": k,
                         "hue": float(hue),
                         "r": float(rgb[0]), "g": float(rgb[1]), "b": float(rgb[2]),
                         "rgb8": [int(v) for v in rgb8]})
        return True, {"k_count": c.k_count, "saturation": c.saturation, "value": c.value, "centers": rows}

    def mask(self, paths: list[str]) -> tuple[bool, dict]:
        """ Pure-pass masks for every image

        Writes <id>_mask.png, <id>_overlay.png, <id>_stats.json, <id>_mask.cbor
        and mask_report.json into the output dir.

        :return: success <True/False>, {"report": CorpusReport, "path": <report path>}
        """
        self._ensure_output_dir()

        def _worker(path, image_id):
            image = imageio.load_image(path)
            labels, mask, stats = self._mask_image(image)

            imageio.save_mask(mask, self._out(image_id, PurePassAPI.SUFFIX_MASK))
            overlay = imageio.render_overlay(image, mask, PurePassAPI.PURE_TINT_WHITE)
            imageio.save_image(overlay, self._out(image_id, PurePassAPI.SUFFIX_OVERLAY))
            imageio.write_mask_bundle(self._out(image_id, PurePassAPI.SUFFIX_BUNDLE), labels, mask, stats)

            row = report.ImageRow(image_id=image_id,
                                  stats=stats,
                                  savings=cost.predict_flops(self.profile, stats.pure_fraction),
                                  extra={"source": path})
            report.write_json(row, self._out(image_id, PurePassAPI.SUFFIX_STATS))
            return row

        success, corpus = self._run_images(PurePassAPI.CMD_MASK, paths, _worker)
        return success, {"report": corpus, "path": self._write_report(PurePassAPI.CMD_MASK, corpus)}

    def compare(self, paths: list[str]) -> tuple[bool, dict]:
        """ Pure-pass mask vs fixed-ratio window mask

        Writes <id>_compare.png (pure-pass overlay left, baseline right),
        <id>_baseline_mask.png and compare_report.json.

        :return: success <True/False>, {"report": CorpusReport, "path": <report path>}
        """
        self._ensure_output_dir()
        ratio = self.config.baseline_ratio
        if ratio is None:
            ratio = PurePassAPI.DEFAULT_COMPARE_RATIO
            self.logger.info(f"compare: no ratio given, using {ratio}")

        def _worker(path, image_id):
            image = imageio.load_image(path)
            _, mask, stats = self._mask_image(image)
            baseline = masks.fixed_ratio_window_mask(image, self.config.window_size, ratio)
            baseline_stats = masks.mask_stats(baseline, self.config.window_size, 0)

            left = imageio.render_overlay(image, mask, PurePassAPI.PURE_TINT_WHITE)
            right = imageio.render_overlay(image, baseline, PurePassAPI.PURE_TINT_WHITE)
            imageio.save_image(imageio.side_by_side(left, right), self._out(image_id, PurePassAPI.SUFFIX_COMPARE))
            imageio.save_mask(baseline, self._out(image_id, PurePassAPI.SUFFIX_BASELINE_MASK))

            baseline_cost = cost.predict_flops(self.profile, baseline_stats.pure_fraction)
            return report.ImageRow(image_id=image_id,
                                   stats=stats,
                                   savings=cost.predict_flops(self.profile, stats.pure_fraction),
                                   extra={"source": path,
                                          "baseline": {"ratio": ratio,
                                                       "pure_fraction": baseline_stats.pure_fraction,
                                                       "predicted_flops": baseline_cost.predicted_flops},
                                          "disagreement": masks.mask_disagreement(mask, baseline)})

        success, corpus = self._run_images(PurePassAPI.CMD_COMPARE, paths, _worker)
        return success, {"report": corpus, "path": self._write_report(PurePassAPI.CMD_COMPARE, corpus)}

    def cost(self, paths: list[str], fractions: list[float] | None = None) -> tuple[bool, dict]:
        """ Predicted FLOPs from measured and/or given pure fractions

        :param paths: images to measure
        :param fractions: pure fractions given directly, rows named fraction-<i>
        :return: success <True/False>, {"report": CorpusReport, "path": <report path>}
        """
        fractions = list(fractions or [])
        for f in fractions:
            if not 0.0 <= f <= 1.0:
                return False, {"ERROR": f"fraction must be in [0, 1], got {f}"}

        def _worker(path, image_id):
            image = imageio.load_image(path)
            _, _, stats = self._mask_image(image)
            return report.ImageRow(image_id=image_id,
                                   stats=stats,
                                   savings=cost.predict_flops(self.profile, stats.pure_fraction),
                                   extra={"source": path})

        if not paths and not fractions:
            self.logger.error("cost: no images and no fractions given")
            return False, {"ERROR": "no images and no fractions given"}

        if paths:
            success, corpus = self._run_images(PurePassAPI.CMD_COST, paths, _worker)
        else:
            corpus = report.CorpusReport(config=self.config.to_dict())
            corpus.config["command"] = PurePassAPI.CMD_COST
            corpus.config["profile"] = self.profile.to_dict()
            success = True

        for i, f in enumerate(fractions):
            corpus.per_image.append(report.ImageRow(image_id=f"fraction-{i}",
                                                    stats=None,
                                                    savings=cost.predict_flops(self.profile, f)))
        success = success or bool(fractions)

        corpus.extra["reference_models"] = [{"name": n, "params": p, "flops": f}
                                            for n, p, f in cost.REFERENCE_MODELS]
        return success, {"report": corpus, "path": self._write_report(PurePassAPI.CMD_COST, corpus)}

    def simulate(self, paths: list[str]) -> tuple[bool, dict]:
        """ Selective attention on tokens built from each image

        Counts attention FLOPs of the full path vs the pure-pass path and
        checks the pure rows against the bypass branch.

        :return: success <True/False>, {"report": CorpusReport, "path": <report path>}
        """
        weights = self.weights()
        capacity = self.config.group_capacity
        channels = self.config.channels

        def _worker(path, image_id):
            image = imageio.load_image(path)
            _, mask, stats = self._mask_image(image)

            n = image.height * image.width
            if n > PurePassAPI.SIMULATE_WARN_TOKENS:
                self.logger.warning(f"simulate {path}: {n} tokens x {channels} channels, this may be slow")

            field = mixer.tokens_from_image(image, self._centers, channels, seed=self.config.seed)
            # stand-in for the parallel window-attention branch
            bypass = field.tokens @ weights.w_v

            full_trace = mixer.MixerTrace.for_tokens(n)
            mixer.full_ac_msa(field, weights, capacity, trace=full_trace)

            pp_trace = mixer.MixerTrace.for_tokens(n)
            out = mixer.pure_pass_ac_msa(field, mask, bypass, weights, capacity,
                                         compensate=self.config.compensate, trace=pp_trace)
            # FLOPs are counted on the partitions the two runs actually used
            full_partition = full_trace.partition
            pp_partition = pp_trace.partition
            hard_count = int(pp_partition.indices().size)

            pure = np.flatnonzero(mask.values.ravel() == 0)
            if self.config.compensate:
                bypass_exact = bool(np.array_equal(out[pure], bypass[pure]))
            else:
                bypass_exact = bool(not np.any(out[pure]))

            flops_full = cost.attention_flops_count(full_partition, channels, weights.head_count)
            flops_pp = cost.attention_flops_count(pp_partition, channels, weights.head_count)
            write_counts = pp_trace.row_writes
            return report.ImageRow(image_id=image_id,
                                   stats=stats,
                                   savings=cost.predict_flops(self.profile, stats.pure_fraction),
                                   extra={"source": path,
                                          "tokens": n,
                                          "hard_tokens": hard_count,
                                          "groups_full": full_trace.groups,
                                          "groups_pure_pass": pp_trace.groups,
                                          "score_entries_full": full_trace.score_entries,
                                          "score_entries_pure_pass": pp_trace.score_entries,
                                          "attention_flops_full": flops_full,
                                          "attention_flops_pure_pass": flops_pp,
                                          "attention_flops_ratio": flops_pp / flops_full if flops_full else 0.0,
                                          "compensated": self.config.compensate,
                                          "pure_rows_match": bypass_exact,
                                          "rows_written_once": bool(np.all(write_counts == 1))
                                          if self.config.compensate else None})

        success, corpus = self._run_images(PurePassAPI.CMD_SIMULATE, paths, _worker)
        return success, {"report": corpus, "path": self._write_report(PurePassAPI.CMD_SIMULATE, corpus)}
