"""Detection metrics: IoU, AP/mAP, F1, adapted confusion matrix, and
reality-gap measures.

Two matching schemes coexist deliberately:

* AP / F1 matching is one-to-one: each ground truth can absorb at most
  one detection; duplicates count as false positives.
* The adapted confusion matrix is many-to-one and class-agnostic: each
  confident detection pairs with the highest-IoU ground truth of any
  class, and a ground truth is counted once per paired detection.  The
  extra column holds ground truths no detection paired with; the extra
  row holds detections that paired with nothing.

mAP values in reports and in the gap metrics are percentage points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .labeler import GroundTruthBox


class AnnotationParseError(ValueError):
    """Malformed label / detection text; message names the line."""


@dataclass(frozen=True)
class Detection:
    class_id: int
    confidence: float
    x_center: float
    y_center: float
    width: float
    height: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("detection extents must be positive")


@dataclass(frozen=True)
class PrCurve:
    recalls: tuple[float, ...]
    precisions: tuple[float, ...]
    confidences: tuple[float, ...]


@dataclass
class AdaptedConfusionMatrix:
    """(c+1) x (c+1) counts; index c is "none" on both axes.

    Rows are ground-truth classes, columns predicted classes.  The
    bottom-right diagonal cell is defined to be zero.
    """

    counts: np.ndarray
    conf_threshold: float
    iou_threshold: float

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0] - 1


@dataclass
class EvalReport:
    per_class_ap: dict[int, float]  # percent; classes with >= 1 GT
    map50: float  # percent
    f1_curve: list[tuple[float, float]]  # (conf threshold, F1)
    confusion: AdaptedConfusionMatrix
    classes_without_gt: list[int] = field(default_factory=list)
    per_group: dict[str, float] = field(default_factory=dict)  # group tag -> mAP percent
    g_ml: float | None = None
    g_reality: float | None = None


def _corners(b) -> tuple[float, float, float, float]:
    return (
        b.x_center - b.width / 2,
        b.y_center - b.height / 2,
        b.x_center + b.width / 2,
        b.y_center + b.height / 2,
    )


def iou(a, b) -> float:
    """Intersection over union of two center-format boxes."""
    ax0, ay0, ax1, ay1 = _corners(a)
    bx0, by0, bx1, by1 = _corners(b)
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.width * a.height + b.width * b.height - inter
    # rounding can push the ratio of identical boxes a hair past 1
    return min(1.0, inter / union)


def match_for_ap(
    dets: list[tuple[str, Detection]],
    gts: list[tuple[str, GroundTruthBox]],
    iou_thr: float,
) -> tuple[list[bool], int]:
    """One-to-one greedy matching for a single class over an image set.

    ``dets``/``gts`` are (image_id, box) pairs.  Detections are
    processed in descending confidence (ties keep input order); each
    takes the unmatched same-image GT with highest IoU >= iou_thr (IoU
    ties -> lowest GT index).  Returns per-detection TP flags (aligned
    with the sorted order) and the FN count.
    """
    order = sorted(range(len(dets)), key=lambda i: -dets[i][1].confidence)
    matched: set[int] = set()
    flags: list[bool] = []
    for i in order:
        img, det = dets[i]
        best_j = -1
        best_iou = 0.0
        for j, (gimg, gt) in enumerate(gts):
            if gimg != img or j in matched:
                continue
            v = iou(det, gt)
            if v >= iou_thr and v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0:
            matched.add(best_j)
            flags.append(True)
        else:
            flags.append(False)
    return flags, len(gts) - len(matched)


def average_precision(tp_flags: list[bool], total_gt: int) -> float:
    """All-point interpolated AP from confidence-ordered TP/FP flags."""
    if total_gt < 1:
        raise ValueError("average_precision requires at least one ground truth")
    if not tp_flags:
        return 0.0
    tp = np.cumsum(np.asarray(tp_flags, dtype=np.float64))
    fp = np.cumsum(~np.asarray(tp_flags, dtype=bool))
    recall = tp / total_gt
    precision = tp / (tp + fp)
    # precision envelope: max precision at recall >= r
    env = np.maximum.accumulate(precision[::-1])[::-1]
    ap = 0.0
    prev_r = 0.0
    for r, p in zip(recall, env):
        ap += (r - prev_r) * p
        prev_r = r
    return float(ap)


def mean_ap(per_class_ap: dict[int, float]) -> float:
    if not per_class_ap:
        raise ValueError("mean_ap requires at least one class with ground truth")
    return float(np.mean(list(per_class_ap.values())))


def f1_at(
    dets: list[tuple[str, Detection]],
    gts: list[tuple[str, GroundTruthBox]],
    conf_thr: float,
    iou_thr: float,
) -> float:
    """Micro F1 over all classes at a confidence threshold."""
    kept = [(img, d) for img, d in dets if d.confidence >= conf_thr]
    classes = {d.class_id for _, d in kept} | {g.class_id for _, g in gts}
    tp = fp = fn = 0
    for c in sorted(classes):
        cd = [(img, d) for img, d in kept if d.class_id == c]
        cg = [(img, g) for img, g in gts if g.class_id == c]
        flags, miss = match_for_ap(cd, cg, iou_thr)
        tp += sum(flags)
        fp += len(flags) - sum(flags)
        fn += miss
    if tp == 0:
        return 0.0
    p = tp / (tp + fp)
    r = tp / (tp + fn)
    return 2 * p * r / (p + r)


def adapted_confusion(
    dets: list[tuple[str, Detection]],
    gts: list[tuple[str, GroundTruthBox]],
    num_classes: int,
    conf_thr: float,
    iou_thr: float,
) -> AdaptedConfusionMatrix:
    """Confusion matrix with an extra "none" row and column.

    Pairing is class-agnostic and many-to-one: every detection above the
    confidence threshold pairs with the same-image ground truth of
    highest IoU >= iou_thr regardless of class, and ground truths may be
    reused.  Unpaired detections land in the extra row; ground truths
    with no paired detection land in the extra column.
    """
    c = num_classes
    counts = np.zeros((c + 1, c + 1), dtype=np.int64)
    paired_gts: set[int] = set()
    for img, det in dets:
        if det.confidence < conf_thr:
            continue
        best_j = -1
        best_iou = 0.0
        for j, (gimg, gt) in enumerate(gts):
            if gimg != img:
                continue
            v = iou(det, gt)
            if v >= iou_thr and v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0:
            counts[gts[best_j][1].class_id, det.class_id] += 1
            paired_gts.add(best_j)
        else:
            counts[c, det.class_id] += 1
    for j, (_, gt) in enumerate(gts):
        if j not in paired_gts:
            counts[gt.class_id, c] += 1
    return AdaptedConfusionMatrix(counts, conf_thr, iou_thr)


def g_ml(map_train: float, map_valid: float) -> float:
    """Generalization gap in percentage points."""
    return map_train - map_valid


def g_reality(map_valid: float, map_test: float) -> float:
    """Reality gap in percentage points."""
    return map_valid - map_test


def _parse_lines(text: str, n_fields: int, build):
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != n_fields:
            raise AnnotationParseError(
                f"line {lineno}: expected {n_fields} fields, got {len(parts)}"
            )
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise AnnotationParseError(f"line {lineno}: non-numeric field in {line!r}")
        out.append(build(values))
    return out


def parse_annotations(text: str) -> list[GroundTruthBox]:
    """YOLO label lines: class x_center y_center width height."""
    return _parse_lines(
        text,
        5,
        lambda v: GroundTruthBox(int(v[0]), v[1], v[2], v[3], v[4]),
    )


def parse_detections(text: str) -> list[Detection]:
    """Detection lines: class confidence x_center y_center width height."""
    return _parse_lines(
        text,
        6,
        lambda v: Detection(int(v[0]), v[1], v[2], v[3], v[4], v[5]),
    )


F1_THRESHOLDS = tuple(round(t * 0.05, 2) for t in range(21))


def evaluate_detections(
    dets: list[tuple[str, Detection]],
    gts: list[tuple[str, GroundTruthBox]],
    num_classes: int,
    iou_thr: float = 0.5,
    conf_thr: float = 0.8,
    groups: dict[str, str] | None = None,
) -> EvalReport:
    """Full report over an image set of (image_id, box) records."""

    def class_aps(sub_dets, sub_gts) -> tuple[dict[int, float], list[int]]:
        aps: dict[int, float] = {}
        without: list[int] = []
        gt_classes = {g.class_id for _, g in sub_gts}
        det_classes = {d.class_id for _, d in sub_dets}
        for c in sorted(gt_classes | det_classes):
            cg = [(img, g) for img, g in sub_gts if g.class_id == c]
            if not cg:
                without.append(c)
                continue
            cd = [(img, d) for img, d in sub_dets if d.class_id == c]
            flags, _ = match_for_ap(cd, cg, iou_thr)
            aps[c] = average_precision(flags, len(cg)) * 100.0
        return aps, without

    aps, without = class_aps(dets, gts)
    report = EvalReport(
        per_class_ap=aps,
        map50=mean_ap(aps) if aps else 0.0,
        f1_curve=[(t, f1_at(dets, gts, t, iou_thr)) for t in F1_THRESHOLDS],
        confusion=adapted_confusion(dets, gts, num_classes, conf_thr, iou_thr),
        classes_without_gt=without,
    )
    if groups:
        for tag in sorted(set(groups.values())):
            imgs = {k for k, g in groups.items() if g == tag}
            sub_d = [(i, d) for i, d in dets if i in imgs]
            sub_g = [(i, g) for i, g in gts if i in imgs]
            sub_aps, _ = class_aps(sub_d, sub_g)
            report.per_group[tag] = mean_ap(sub_aps) if sub_aps else 0.0
    return report
