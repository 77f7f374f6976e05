# -*- coding: utf-8 -*-
"""
Affine FLOPs model.

    flops(p) = total_flops_full - maskable_flops * p

p is the pure-pixel fraction.  The published points (0, 87.15G),
(0.3171, 80.75G), (0.3889, 79.30G) and (0.895, 69.09G) all sit on one line
to within 0.5%, which is what the default profile is calibrated from.

Group attention cost is n^2 in group size, but with groups capped at G the
per-token cost is close to constant, so the affine form holds in practice.

"""
import os
from dataclasses import dataclass
import numpy as np

from .mixer import CategoryPartition

# (pure fraction, GFLOPs)
POINT_FULL = (0.0, 87.15)
POINT_NO_CROSS_SHIFT = (0.3171, 80.75)
POINT_AVERAGE = (0.3889, 79.30)
POINT_BEST_CASE = (0.895, 69.09)
PAPER_POINTS = (POINT_FULL, POINT_NO_CROSS_SHIFT, POINT_AVERAGE, POINT_BEST_CASE)

# published pure fraction on the manga corpus at 2x, with cross-shift fusion
REFERENCE_CORPUS_PURE_FRACTION = 0.3889

DEFAULT_TOTAL_FLOPS = 87.15
DEFAULT_MASKABLE_FLOPS = 20.18
DEFAULT_PARAMS = 769_000

# published comparison rows: name, params, GFLOPs
REFERENCE_MODELS = (
    ("baseline", 769_000, 87.15),
    ("fixed-ratio-0.8", 838_000, 83.67),
    ("fixed-ratio-0.5", 838_000, 73.48),
    ("pure-pass-average", 769_000, 79.30),
    ("pure-pass-best-case", 769_000, 69.09),
)

PROFILE_KEYS = ("total_flops_full", "maskable_flops", "params")


@dataclass(frozen=True)
class CostProfile:
    total_flops_full: float
    maskable_flops: float
    params: int = DEFAULT_PARAMS

    def __post_init__(self):
        if not 0.0 < self.maskable_flops < self.total_flops_full:
            raise ValueError(f"need 0 < maskable_flops ({self.maskable_flops}) "
                             f"< total_flops_full ({self.total_flops_full})")
        if self.params <= 0:
            raise ValueError(f"params must be > 0, got {self.params}")

    def to_dict(self) -> dict:
        return {"total_flops_full": self.total_flops_full,
                "maskable_flops": self.maskable_flops,
                "params": self.params}


@dataclass(frozen=True)
class SavingsReport:
    pure_fraction: float
    predicted_flops: float
    flops_saved: float
    baseline_flops: float

    @property
    def saved_fraction(self) -> float:
        return self.flops_saved / self.baseline_flops

    def to_dict(self) -> dict:
        return {"pure_fraction": self.pure_fraction,
                "predicted_flops": self.predicted_flops,
                "flops_saved": self.flops_saved,
                "baseline_flops": self.baseline_flops,
                "saved_fraction": self.saved_fraction}


DEFAULT_PROFILE = CostProfile(total_flops_full=DEFAULT_TOTAL_FLOPS,
                              maskable_flops=DEFAULT_MASKABLE_FLOPS,
                              params=DEFAULT_PARAMS)


def calibrate(points, total_flops_full: float = DEFAULT_TOTAL_FLOPS, params: int = DEFAULT_PARAMS) -> CostProfile:
    """ Least-squares fit of maskable_flops with the intercept held at total_flops_full

    :param points: iterable of (pure_fraction, gflops)
    :return: CostProfile
    """
    pts = np.asarray(list(points), dtype=np.float64).reshape(-1, 2)
    p, f = pts[:, 0], pts[:, 1]
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("calibration fractions must lie in [0, 1]")

    denom = float(np.dot(p, p))
    if denom == 0.0:
        raise ValueError("need at least one calibration point with pure_fraction > 0")

    maskable = float(np.dot(p, total_flops_full - f)) / denom
    return CostProfile(total_flops_full=float(total_flops_full), maskable_flops=maskable, params=params)


def fit_affine(points, params: int = DEFAULT_PARAMS) -> CostProfile:
    """ Least-squares line through the points, intercept fitted too

    Needs at least two distinct fractions.
    """
    pts = np.asarray(list(points), dtype=np.float64).reshape(-1, 2)
    if np.unique(pts[:, 0]).shape[0] < 2:
        raise ValueError("need at least two distinct pure fractions to fit slope and intercept")
    slope, intercept = np.polyfit(pts[:, 0], pts[:, 1], 1)
    return CostProfile(total_flops_full=float(intercept), maskable_flops=float(-slope), params=params)


def predict_flops(profile: CostProfile, pure_fraction: float) -> SavingsReport:
    if not 0.0 <= pure_fraction <= 1.0:
        raise ValueError(f"pure_fraction must be in [0, 1], got {pure_fraction}")
    saved = profile.maskable_flops * pure_fraction
    return SavingsReport(pure_fraction=float(pure_fraction),
                         predicted_flops=profile.total_flops_full - saved,
                         flops_saved=saved,
                         baseline_flops=profile.total_flops_full)


def attention_flops_count(partition: CategoryPartition, channels: int, head_count: int = 1) -> float:
    """ analytic count over groups: 3nC^2 projections + 2n^2C scores and value mix

    Head count splits C but leaves the totals unchanged.
    """
    if head_count < 1 or channels % head_count:
        raise ValueError(f"head_count {head_count} must divide channels {channels}")
    total = 0.0
    for n in partition.sizes():
        total += 3.0 * n * channels * channels + 2.0 * n * n * channels
    return total


def parse_profile(text: str, source: str = "<profile>") -> CostProfile:
    """ key=value profile

    keys: total_flops_full, maskable_flops, params, point=<fraction>,<gflops> (repeatable)
    '#' starts a comment.  With points present, maskable_flops is refit from them.
    """
    values = DEFAULT_PROFILE.to_dict()
    points = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected key=value, got '{line}'")

        key, val = (s.strip() for s in line.split("=", 1))
        try:
            if key == "point":
                frac, gflops = (float(v) for v in val.split(","))
                points.append((frac, gflops))
            elif key == "params":
                values[key] = int(float(val))
            elif key in PROFILE_KEYS:
                values[key] = float(val)
            else:
                raise ValueError(f"unknown key '{key}'")
        except ValueError as e:
            raise ValueError(f"{source}:{lineno}: {e}") from e

    if points:
        return calibrate(points, values["total_flops_full"], values["params"])
    return CostProfile(**values)


def load_profile(path: str) -> CostProfile:
    if not os.path.isfile(path):
        raise OSError(f"{path}: profile file not found")
    with open(path, "r", encoding="utf-8") as f:
        return parse_profile(f.read(), source=path)
