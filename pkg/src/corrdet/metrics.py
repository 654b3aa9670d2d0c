"""Correlation measures over detections, PR curves, and COCO-style AP.

Two correlation levels exist:

* image level: Spearman between IoUs and GT-class scores of each image's
  positives (training-style matching on raw detections), averaged over
  images;
* class level: Spearman between IoUs and scores of each class's true
  positives pooled over the whole dataset (evaluation-style matching on
  final detections), averaged over classes.

Groups with fewer than two samples, or with degenerate ranks, are skipped
and counted; the averages cover the rest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .correlation import spearman
from .errors import DegenerateInput, EmptyEvaluation, NoGroundTruth
from .geometry import GtObject, match_positives, match_tp
from .pipeline import FinalDetection, RawDetection

__all__ = [
    "COCO_THRESHOLDS",
    "CorrelationReport",
    "ApResult",
    "beta_img",
    "beta_cls",
    "pr_curve",
    "average_precision",
    "coco_ap",
]

COCO_THRESHOLDS: tuple[float, ...] = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))

_RECALL_GRID = np.arange(101) / 100.0


@dataclass(frozen=True)
class CorrelationReport:
    """Correlation summary; image- and class-level halves fill separately."""

    beta_img: float | None = None
    beta_cls: float | None = None
    per_image: tuple[tuple[int, float], ...] = ()
    per_class: tuple[tuple[int, float], ...] = ()
    skipped_images: int = 0
    skipped_classes: int = 0


@dataclass(frozen=True)
class ApResult:
    """COCO-style AP: per class, per IoU threshold, and averaged.

    per_threshold pairs each threshold with the class-mean AP at it;
    per_class holds one (class_id, per-threshold AP row) entry per
    evaluated class; ap_c is the grand mean.
    """

    ap_c: float
    per_threshold: tuple[tuple[float, float], ...]
    per_class: tuple[tuple[int, tuple[float, ...]], ...]


def beta_img(
    images: Sequence[tuple[Sequence[RawDetection], Sequence[GtObject]]],
    iou_floor: float = 0.5,
) -> CorrelationReport:
    """Mean per-image Spearman between positives' IoUs and GT-class scores.

    Each image contributes one coefficient over its positives (greedy
    one-to-one matching at ``iou_floor``).  Images with fewer than two
    positives or degenerate ranks are skipped and counted.  Raises
    EmptyEvaluation when every image is skipped.
    """
    per_image: list[tuple[int, float]] = []
    skipped = 0
    for idx, (dets, gts) in enumerate(images):
        image_id = gts[0].image_id if len(gts) > 0 else idx
        matches = match_positives(dets, gts, iou_floor)
        if len(matches) < 2:
            skipped += 1
            continue
        try:
            b = spearman(matches.ious(), matches.scores())
        except DegenerateInput:
            skipped += 1
            continue
        per_image.append((image_id, b))

    if not per_image:
        raise EmptyEvaluation(f"no image yielded a correlation ({skipped} skipped)")
    mean = float(np.mean([b for _, b in per_image]))
    return CorrelationReport(beta_img=mean, per_image=tuple(per_image), skipped_images=skipped)


def beta_cls(
    dets: Sequence[FinalDetection],
    gts: Sequence[GtObject],
    tp_iou: float = 0.5,
) -> CorrelationReport:
    """Mean per-class Spearman between TP IoUs and scores, dataset-wide.

    True positives come from COCO-style matching at ``tp_iou`` within each
    class, pooled over all images.  Skip policy mirrors beta_img; raises
    EmptyEvaluation when every class is skipped.
    """
    class_ids = sorted({g.class_id for g in gts} | {d.class_id for d in dets})
    per_class: list[tuple[int, float]] = []
    skipped = 0
    for c in class_ids:
        cdets = [d for d in dets if d.class_id == c]
        cgts = [g for g in gts if g.class_id == c]
        matches = match_tp(cdets, cgts, tp_iou)
        if len(matches) < 2:
            skipped += 1
            continue
        try:
            b = spearman(matches.ious(), matches.scores())
        except DegenerateInput:
            skipped += 1
            continue
        per_class.append((c, b))

    if not per_class:
        raise EmptyEvaluation(f"no class yielded a correlation ({skipped} skipped)")
    mean = float(np.mean([b for _, b in per_class]))
    return CorrelationReport(beta_cls=mean, per_class=tuple(per_class), skipped_classes=skipped)


def pr_curve(
    dets: Sequence[FinalDetection],
    gts: Sequence[GtObject],
    iou_thr: float,
) -> list[tuple[float, float]]:
    """Cumulative (recall, precision) walk over one class's detections.

    Detections are visited in descending score order (ties by lower
    index); TP status comes from COCO-style matching at ``iou_thr``.
    Raises NoGroundTruth when gts is empty.
    """
    if len(gts) == 0:
        raise NoGroundTruth("pr_curve needs at least one ground-truth object")
    tp_indices = set(match_tp(dets, gts, iou_thr).detection_indices())
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    curve: list[tuple[float, float]] = []
    tp = 0
    for k, di in enumerate(order, start=1):
        if di in tp_indices:
            tp += 1
        curve.append((tp / len(gts), tp / k))
    return curve


def average_precision(curve: Sequence[tuple[float, float]]) -> float:
    """101-point interpolated AP of a PR curve.

    Mean over the recall grid {0.00, 0.01, ..., 1.00} of the maximum
    precision among curve points with recall at or above the grid point;
    grid points beyond the final recall contribute zero.
    """
    if len(curve) == 0:
        return 0.0
    recalls = np.asarray([r for r, _ in curve], dtype=np.float64)
    precisions = np.asarray([p for _, p in curve], dtype=np.float64)
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    idx = np.searchsorted(recalls, _RECALL_GRID, side="left")
    valid = idx < recalls.shape[0]
    return float(envelope[idx[valid]].sum() / _RECALL_GRID.shape[0])


def coco_ap(
    dets: Sequence[FinalDetection],
    gts: Sequence[GtObject],
    thresholds: Sequence[float] = COCO_THRESHOLDS,
) -> ApResult:
    """AP per class and IoU threshold, plus the grand mean ap_c.

    Classes without ground truth are excluded; a class with gts but no
    detections scores zero.  Raises EmptyEvaluation when there is no
    ground truth at all.
    """
    class_ids = sorted({g.class_id for g in gts})
    if not class_ids:
        raise EmptyEvaluation("no class has ground-truth objects")

    per_class: list[tuple[int, tuple[float, ...]]] = []
    for c in class_ids:
        cdets = [d for d in dets if d.class_id == c]
        cgts = [g for g in gts if g.class_id == c]
        row = tuple(average_precision(pr_curve(cdets, cgts, t)) for t in thresholds)
        per_class.append((c, row))

    matrix = np.asarray([row for _, row in per_class], dtype=np.float64)
    threshold_means = matrix.mean(axis=0)
    per_threshold = tuple((float(t), float(m)) for t, m in zip(thresholds, threshold_means))
    return ApResult(float(threshold_means.mean()), per_threshold, tuple(per_class))
