"""Segment-wise F1 at IoU overlap thresholds and frame accuracy.

Matching is greedy in predicted temporal order: each predicted segment takes
the unmatched ground-truth segment of the same class with highest IoU (ties
broken by earlier ground-truth start) and counts as TP when that IoU meets
the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, InvalidSegmentation, ShapeError

DEFAULT_THRESHOLDS = (0.5,)


@dataclass(frozen=True)
class Segment:
    class_id: int
    start: int  # inclusive
    end: int  # exclusive

    def __post_init__(self):
        if self.start >= self.end:
            raise InvalidSegmentation(f"empty segment [{self.start}, {self.end})")
        if self.class_id < 0:
            raise InvalidSegmentation(f"negative class id {self.class_id}")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __iadd__(self, other: "MatchCounts") -> "MatchCounts":
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        self.tn += other.tn
        return self


@dataclass
class EvaluationReport:
    accuracy_pct: float
    f1_pct: dict[float, float]
    per_class_segment_counts: dict[int, int]
    num_frames: int

    def to_dict(self) -> dict:
        return {
            "accuracy_pct": self.accuracy_pct,
            "f1_pct": {f"{t:.2f}": v for t, v in sorted(self.f1_pct.items())},
            "per_class_segment_counts": {
                str(k): v for k, v in sorted(self.per_class_segment_counts.items())
            },
            "num_frames": self.num_frames,
        }


def frames_to_segments(labels) -> list[Segment]:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        return []
    boundaries = np.flatnonzero(labels[1:] != labels[:-1]) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [labels.size]))
    return [
        Segment(int(labels[s]), int(s), int(e)) for s, e in zip(starts, ends)
    ]


def interval_iou(a: Segment, b: Segment) -> float:
    inter = max(0, min(a.end, b.end) - max(a.start, b.start))
    union = a.length + b.length - inter
    return inter / union


def _check_nonoverlapping(segments, name: str) -> None:
    for prev, cur in zip(segments, segments[1:]):
        if cur.start < prev.end:
            raise InvalidSegmentation(f"overlapping segments in {name} list")


def match_segments(pred, gt, threshold: float) -> MatchCounts:
    pred = list(pred)
    gt = list(gt)
    _check_nonoverlapping(pred, "predicted")
    _check_nonoverlapping(gt, "ground-truth")
    matched = [False] * len(gt)
    counts = MatchCounts()
    for p in pred:
        best_iou = -1.0
        best_idx = -1
        for idx, g in enumerate(gt):
            if matched[idx] or g.class_id != p.class_id:
                continue
            iou = interval_iou(p, g)
            if iou > best_iou:
                best_iou = iou
                best_idx = idx
        if best_idx >= 0 and best_iou >= threshold:
            matched[best_idx] = True
            counts.tp += 1
        else:
            counts.fp += 1
    counts.fn = matched.count(False)
    return counts


def f1_from_counts(counts: MatchCounts) -> float:
    denom = 0.5 * (counts.fn + counts.fp) + counts.tp
    if denom == 0:
        return 1.0
    return counts.tp / denom


def segment_f1(pred_labels, gt_labels, threshold: float) -> float:
    pred_labels = np.asarray(pred_labels)
    gt_labels = np.asarray(gt_labels)
    if pred_labels.shape != gt_labels.shape:
        raise ShapeError(
            f"prediction length {pred_labels.shape} vs truth {gt_labels.shape}"
        )
    counts = match_segments(
        frames_to_segments(pred_labels), frames_to_segments(gt_labels), threshold
    )
    return f1_from_counts(counts)


def frame_accuracy(pred_labels, gt_labels) -> float:
    pred_labels = np.asarray(pred_labels)
    gt_labels = np.asarray(gt_labels)
    if pred_labels.size == 0:
        raise EmptyInput("accuracy over zero frames")
    if pred_labels.shape != gt_labels.shape:
        raise ShapeError(
            f"prediction length {pred_labels.shape} vs truth {gt_labels.shape}"
        )
    return float((pred_labels == gt_labels).mean())


def _filter_background(segments, background_class):
    if background_class is None:
        return segments
    return [s for s in segments if s.class_id != background_class]


def evaluate(
    pred_label_lists,
    gt_label_lists,
    thresholds=DEFAULT_THRESHOLDS,
    background_class: int | None = None,
    averaging: str = "micro",
) -> EvaluationReport:
    """Pool accuracy over all frames; F1 per threshold from summed (micro) or
    per-sample averaged (macro) match counts."""
    pred_label_lists = list(pred_label_lists)
    gt_label_lists = list(gt_label_lists)
    if len(pred_label_lists) != len(gt_label_lists):
        raise ShapeError(
            f"{len(pred_label_lists)} prediction streams vs {len(gt_label_lists)} truths"
        )
    if not pred_label_lists:
        raise EmptyInput("no samples to evaluate")
    if averaging not in ("micro", "macro"):
        raise ShapeError(f"unknown averaging mode {averaging!r}")

    correct = 0
    total = 0
    per_class: dict[int, int] = {}
    per_threshold_counts = {t: MatchCounts() for t in thresholds}
    per_threshold_f1s: dict[float, list[float]] = {t: [] for t in thresholds}
    for pred, gt in zip(pred_label_lists, gt_label_lists):
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise ShapeError(
                f"prediction length {pred.shape} vs truth {gt.shape}"
            )
        correct += int((pred == gt).sum())
        total += int(gt.size)
        pred_segs = _filter_background(frames_to_segments(pred), background_class)
        gt_segs = _filter_background(frames_to_segments(gt), background_class)
        for seg in gt_segs:
            per_class[seg.class_id] = per_class.get(seg.class_id, 0) + 1
        for t in thresholds:
            counts = match_segments(pred_segs, gt_segs, t)
            per_threshold_counts[t] += counts
            per_threshold_f1s[t].append(f1_from_counts(counts))

    if total == 0:
        raise EmptyInput("no frames to evaluate")
    if averaging == "micro":
        f1_pct = {t: 100.0 * f1_from_counts(c) for t, c in per_threshold_counts.items()}
    else:
        f1_pct = {
            t: 100.0 * float(np.mean(v)) for t, v in per_threshold_f1s.items()
        }
    return EvaluationReport(
        accuracy_pct=100.0 * correct / total,
        f1_pct=f1_pct,
        per_class_segment_counts=per_class,
        num_frames=total,
    )
