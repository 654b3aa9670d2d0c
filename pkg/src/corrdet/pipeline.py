"""Post-processing chain: score filter, greedy class-wise NMS, top-k.

Raw detections carry a score vector over all classes; the pipeline expands
them into per-class candidates, prunes, and returns scalar-scored final
detections sorted by descending score.  An NMS-free mode skips the middle
step (useful for NMS-free detector outputs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .geometry import Box, iou

__all__ = ["RawDetection", "FinalDetection", "PipelineConfig", "nms", "postprocess"]


@dataclass(frozen=True)
class RawDetection:
    """Pre-post-processing detection: one box, one score per class.

    ``class_scores`` accepts any iterable of reals and is stored as a
    tuple, so instances stay hashable and safely shareable.
    """

    box: Box
    class_scores: tuple[float, ...]

    def __post_init__(self) -> None:
        scores = tuple(float(s) for s in self.class_scores)
        if len(scores) < 1:
            raise ValueError("class_scores must have at least one entry")
        for s in scores:
            if not (math.isfinite(s) and 0.0 <= s <= 1.0):
                raise ValueError(f"class scores must lie in [0, 1], got {s}")
        object.__setattr__(self, "class_scores", scores)


@dataclass(frozen=True)
class FinalDetection:
    """Post-processing detection: box, class id, scalar score."""

    box: Box
    class_id: int
    score: float
    image_id: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


@dataclass(frozen=True)
class PipelineConfig:
    score_thr: float = 0.05
    nms_iou: float = 0.6
    top_k: int = 100
    nms_enabled: bool = True

    def __post_init__(self) -> None:
        for name, v in (("score_thr", self.score_thr), ("nms_iou", self.nms_iou)):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")


def _nms_keep(boxes: Sequence[Box], scores: Sequence[float], iou_thr: float) -> list[int]:
    """Indices surviving greedy NMS, in keep (descending score) order.

    Score ties break by lower index.  Suppression is strict: overlap must
    exceed iou_thr.
    """
    order = sorted(range(len(boxes)), key=lambda i: (-scores[i], i))
    alive = [True] * len(boxes)
    kept = []
    for i in order:
        if not alive[i]:
            continue
        kept.append(i)
        for j in order:
            if alive[j] and j != i and iou(boxes[i], boxes[j]) > iou_thr:
                alive[j] = False
    return kept


def nms(dets: Sequence[FinalDetection], iou_thr: float) -> list[FinalDetection]:
    """Greedy non-maximum suppression over single-class detections.

    Repeatedly keeps the highest-scoring remaining detection and removes
    every remaining one overlapping it with IoU > iou_thr.
    """
    kept = _nms_keep([d.box for d in dets], [d.score for d in dets], iou_thr)
    return [dets[i] for i in kept]


def postprocess(
    dets: Sequence[RawDetection],
    cfg: PipelineConfig,
    image_id: int = 0,
) -> list[FinalDetection]:
    """Standard detector post-processing of one image's raw detections.

    (i) every (box, class) candidate with score > score_thr survives the
    filter, (ii) greedy NMS runs per class when enabled, (iii) the top_k
    highest-scoring candidates overall are kept, sorted by descending
    score.  All ties break by candidate enumeration order (detection
    index, then class index), which makes the output deterministic.
    """
    candidates: list[FinalDetection] = []
    for det in dets:
        for c, s in enumerate(det.class_scores):
            if s > cfg.score_thr:
                candidates.append(FinalDetection(det.box, c, s, image_id))

    if cfg.nms_enabled:
        survivors: list[tuple[int, FinalDetection]] = []
        by_class: dict[int, list[int]] = {}
        for seq, cand in enumerate(candidates):
            by_class.setdefault(cand.class_id, []).append(seq)
        for _, seqs in sorted(by_class.items()):
            kept = _nms_keep(
                [candidates[s].box for s in seqs],
                [candidates[s].score for s in seqs],
                cfg.nms_iou,
            )
            survivors.extend((seqs[k], candidates[seqs[k]]) for k in kept)
    else:
        survivors = list(enumerate(candidates))

    survivors.sort(key=lambda item: (-item[1].score, item[0]))
    return [det for _, det in survivors[: cfg.top_k]]
