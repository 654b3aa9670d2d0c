"""Boxes, IoU, and the two matching procedures everything else consumes.

Two flavours of matching exist side by side:

* :func:`match_positives` -- training-style assignment of raw detections to
  ground-truth objects (greedy, one-to-one, by descending IoU).  Feeds the
  image-level correlation measure and the Correlation Loss.
* :func:`match_tp` -- evaluation-style true-positive matching (greedy by
  descending score, COCO convention).  Feeds PR curves, AP and the
  class-level correlation measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Sequence

if TYPE_CHECKING:
    from .pipeline import FinalDetection, RawDetection

__all__ = ["Box", "GtObject", "Match", "MatchSet", "iou", "match_positives", "match_tp"]


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in corner form (x1, y1, x2, y2), pixel units."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"box coordinates must be finite, got {coords}")
        if not (self.x2 > self.x1 and self.y2 > self.y1):
            raise ValueError(f"box must have positive area, got {coords}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float) -> "Box":
        return cls(x, y, x + w, y + h)

    def to_xywh(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2 - self.x1, self.y2 - self.y1)


@dataclass(frozen=True)
class GtObject:
    """A ground-truth object: box, class index in [0, C), owning image id."""

    box: Box
    class_id: int
    image_id: int = 0


@dataclass(frozen=True)
class Match:
    """One matched (detection, ground truth) pair.

    ``class_id`` is the gt's class; for raw detections it names the
    score-vector entry that ``score`` was read from.
    """

    detection_index: int
    gt_index: int
    iou: float
    score: float
    class_id: int = 0


@dataclass(frozen=True)
class MatchSet:
    """Positives paired with GTs; houses the (IoU, score) pairs that the
    correlation measures and the Correlation Loss consume.

    Each gt_index appears at most once; ious and scores lie in [0, 1].
    """

    entries: tuple[Match, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Match]:
        return iter(self.entries)

    def ious(self) -> list[float]:
        return [m.iou for m in self.entries]

    def scores(self) -> list[float]:
        return [m.score for m in self.entries]

    def detection_indices(self) -> list[int]:
        return [m.detection_index for m in self.entries]


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint, symmetric."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def match_positives(
    dets: Sequence["RawDetection"],
    gts: Sequence[GtObject],
    iou_floor: float = 0.5,
) -> MatchSet:
    """Greedy one-to-one assignment of raw detections to ground truths.

    Repeatedly picks the unmatched (det, gt) pair with the highest IoU at or
    above ``iou_floor``; ties break by (lower detection index, lower gt
    index).  For each pair the detection's confidence for the gt's class is
    recorded alongside the IoU.  Detections and gts must come from the same
    image.  Returns an empty MatchSet when nothing clears the floor.
    """
    candidates = []
    for di, det in enumerate(dets):
        for gi, gt in enumerate(gts):
            v = iou(det.box, gt.box)
            if v >= iou_floor:
                candidates.append((-v, di, gi))
    candidates.sort()

    used_det: set[int] = set()
    used_gt: set[int] = set()
    matches = []
    for neg_iou, di, gi in candidates:
        if di in used_det or gi in used_gt:
            continue
        used_det.add(di)
        used_gt.add(gi)
        score = float(dets[di].class_scores[gts[gi].class_id])
        matches.append(Match(di, gi, -neg_iou, score, gts[gi].class_id))

    matches.sort(key=lambda m: m.detection_index)
    return MatchSet(tuple(matches))


def match_tp(
    dets: Sequence["FinalDetection"],
    gts: Sequence[GtObject],
    iou_thr: float,
) -> MatchSet:
    """COCO-style true-positive matching for a single class.

    Detections are taken in descending score order (ties by lower index);
    each one matches the still-unmatched gt of the same image with the
    highest IoU >= ``iou_thr`` (IoU ties by lower gt index).  Unmatched
    detections are false positives and do not appear in the result.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    used_gt: set[int] = set()
    matches = []
    for di in order:
        det = dets[di]
        best_gi = -1
        best_iou = 0.0
        for gi, gt in enumerate(gts):
            if gi in used_gt or gt.image_id != det.image_id or gt.class_id != det.class_id:
                continue
            v = iou(det.box, gt.box)
            if v >= iou_thr and v > best_iou:
                best_iou = v
                best_gi = gi
        if best_gi >= 0:
            used_gt.add(best_gi)
            matches.append(Match(di, best_gi, best_iou, float(det.score), det.class_id))

    matches.sort(key=lambda m: m.detection_index)
    return MatchSet(tuple(matches))
