# -*- coding: utf-8 -*-
"""
Corpus reports and their JSON form.

Top-level fields: config, per_image[], aggregate (plus errors[] when any
input failed and command-specific extras).  Floats are written at 6
significant digits so identical runs diff clean.

"""
import json
from dataclasses import dataclass, field
import numpy as np

from .masks import MaskStats
from .cost import SavingsReport

FLOAT_SIGNIFICANT_DIGITS = 6


@dataclass(frozen=True)
class ImageRow:
    image_id: str
    stats: MaskStats | None
    savings: SavingsReport
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"id": self.image_id,
             "mask": self.stats.to_dict() if self.stats is not None else None,
             "cost": self.savings.to_dict()}
        d.update(self.extra)
        return d


@dataclass
class CorpusReport:
    config: dict
    per_image: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def aggregate(self) -> dict:
        """ recomputed from per_image rows every time """
        if not self.per_image:
            return {"count": 0}
        fractions = np.array([r.savings.pure_fraction for r in self.per_image])
        flops = np.array([r.savings.predicted_flops for r in self.per_image])
        return {"count": len(self.per_image),
                "mean_pure_fraction": float(fractions.mean()),
                "min_pure_fraction": float(fractions.min()),
                "max_pure_fraction": float(fractions.max()),
                "mean_predicted_flops": float(flops.mean())}

    def to_dict(self) -> dict:
        d = {"config": self.config,
             "per_image": [r.to_dict() for r in self.per_image],
             "aggregate": self.aggregate()}
        if self.errors:
            d["errors"] = list(self.errors)
        d.update(self.extra)
        return d


def round_floats(item, digits: int | None = FLOAT_SIGNIFICANT_DIGITS):
    """ walk dicts/lists, floats to `digits` significant digits, None keeps full precision """
    if isinstance(item, bool) or item is None:
        return item
    if isinstance(item, (float, np.floating)):
        if digits is None:
            return float(item)
        return float(f"{float(item):.{digits}g}")
    if isinstance(item, (int, np.integer)):
        return int(item)
    if isinstance(item, dict):
        return {str(k): round_floats(v, digits) for k, v in item.items()}
    if isinstance(item, (list, tuple)):
        return [round_floats(v, digits) for v in item]
    if isinstance(item, np.ndarray):
        return round_floats(item.tolist(), digits)
    return item


def dumps(item, digits: int | None = FLOAT_SIGNIFICANT_DIGITS) -> str:
    if hasattr(item, "to_dict"):
        item = item.to_dict()
    return json.dumps(round_floats(item, digits), indent=2) + "\n"


def write_json(item, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(item))
