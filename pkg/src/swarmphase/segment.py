"""Phase segmentation of the coarse observable and manifold labeling.

The time axis is split into contiguous segments by a deterministic 1-D
two-means classification of the observable values; runs shorter than a
minimum length are absorbed by the neighboring segment with the closer
mean. Segments whose means agree within a tolerance share a manifold label,
and each labeled segment can be characterized by its own Isomap run.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .manifold import EmbeddingReport, isomap


class SegmentationWarning(UserWarning):
    """Raised when a segment is too small to analyze."""


@dataclass
class Segment:
    """Contiguous run of steps, 1-based inclusive bounds."""

    start: int
    end: int
    mean_value: float
    label: int | None = None

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass
class PhaseSegmentation:
    segments: list[Segment]
    min_length: int
    split_value: float | None
    merge_tolerance: float | None = None

    @property
    def boundaries(self) -> list[int]:
        """Start step of every segment after the first."""
        return [seg.start for seg in self.segments[1:]]

    @property
    def labels(self) -> list[int | None]:
        return [seg.label for seg in self.segments]

    @property
    def n_labels(self) -> int:
        return len({seg.label for seg in self.segments if seg.label is not None})


def two_means_split(values: np.ndarray) -> tuple[float | None, np.ndarray]:
    """Deterministic 1-D two-means classification.

    Centers start at the minimum and maximum, points go to the closer
    center, and centers are recomputed until stable. Returns the midpoint of
    the final centers and the class of every value; a constant series yields
    ``(None, all zeros)``.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("values must be a nonempty 1-D array")
    lo, hi = float(v.min()), float(v.max())
    if lo == hi:
        return None, np.zeros(v.size, dtype=int)
    c0, c1 = lo, hi
    classes = np.zeros(v.size, dtype=int)
    for _ in range(200):
        threshold = 0.5 * (c0 + c1)
        new_classes = (v > threshold).astype(int)
        if not new_classes.any() or new_classes.all():
            break
        if np.array_equal(new_classes, classes):
            classes = new_classes
            break
        classes = new_classes
        c0 = float(v[classes == 0].mean())
        c1 = float(v[classes == 1].mean())
    return 0.5 * (c0 + c1), classes


def _runs(classes: np.ndarray) -> list[list[int]]:
    # [start, end, class] with 0-based inclusive bounds
    runs = []
    start = 0
    for i in range(1, classes.size):
        if classes[i] != classes[i - 1]:
            runs.append([start, i - 1, int(classes[i - 1])])
            start = i
    runs.append([start, classes.size - 1, int(classes[-1])])
    return runs


def segment_series(values: np.ndarray, min_length: int = 10) -> PhaseSegmentation:
    """Partition a series into contiguous segments of like values.

    Runs shorter than ``min_length`` are merged (shortest first, leftmost on
    ties) into the neighboring run whose mean is closer; adjacent runs of
    the same class then coalesce. The result tiles the series exactly.
    """
    v = np.asarray(values, dtype=float)
    if min_length < 1:
        raise ValueError("min_length must be at least 1")
    if v.size < 2 * min_length:
        raise ValueError(f"series of length {v.size} is too short for min_length {min_length}")

    split, classes = two_means_split(v)
    if split is None:
        seg = Segment(start=1, end=v.size, mean_value=float(v.mean()))
        return PhaseSegmentation(segments=[seg], min_length=min_length, split_value=None)

    runs = _runs(classes)
    while len(runs) > 1:
        lengths = [end - start + 1 for start, end, _ in runs]
        i = int(np.argmin(lengths))
        if lengths[i] >= min_length:
            break
        start, end, _ = runs[i]
        run_mean = v[start : end + 1].mean()
        choices = []
        if i > 0:
            s, e, c = runs[i - 1]
            choices.append((abs(v[s : e + 1].mean() - run_mean), c))
        if i < len(runs) - 1:
            s, e, c = runs[i + 1]
            choices.append((abs(v[s : e + 1].mean() - run_mean), c))
        # min with a key keeps the left neighbor on exact ties
        classes[start : end + 1] = min(choices, key=lambda c: c[0])[1]
        runs = _runs(classes)

    segments = [
        Segment(start=s + 1, end=e + 1, mean_value=float(v[s : e + 1].mean()))
        for s, e, _ in runs
    ]
    return PhaseSegmentation(segments=segments, min_length=min_length, split_value=split)


def label_manifolds(segmentation: PhaseSegmentation, tolerance: float = 0.1) -> PhaseSegmentation:
    """Assign manifold labels by greedy agglomeration of segment means.

    A segment joins the first existing label whose representative mean is
    within ``tolerance``; otherwise it founds a new label. Labels are
    numbered from 1 in order of first appearance.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    representatives: list[float] = []
    labeled = []
    for seg in segmentation.segments:
        label = None
        for idx, rep in enumerate(representatives):
            if abs(seg.mean_value - rep) <= tolerance:
                label = idx + 1
                break
        if label is None:
            representatives.append(seg.mean_value)
            label = len(representatives)
        labeled.append(replace(seg, label=label))
    return PhaseSegmentation(
        segments=labeled,
        min_length=segmentation.min_length,
        split_value=segmentation.split_value,
        merge_tolerance=tolerance,
    )


def per_segment_isomap(
    points: np.ndarray,
    segmentation: PhaseSegmentation,
    k: int = 7,
    d_max: int = 10,
    threshold: float = 0.1,
) -> tuple[list[EmbeddingReport | None], EmbeddingReport]:
    """Isomap report per segment plus one for the whole point set.

    ``points`` holds one configuration per step, aligned with the step
    indices of the segmentation. Segments with fewer than 3 configurations
    are skipped with a warning (``None`` in the returned list).
    """
    pts = np.asarray(points, dtype=float)
    reports: list[EmbeddingReport | None] = []
    for seg in segmentation.segments:
        rows = pts[seg.start - 1 : seg.end]
        if rows.shape[0] < 3:
            warnings.warn(
                f"segment {seg.start}-{seg.end} has fewer than 3 configurations; skipped",
                SegmentationWarning,
                stacklevel=2,
            )
            reports.append(None)
            continue
        reports.append(isomap(rows, k=k, d_max=d_max, threshold=threshold))
    full = isomap(pts, k=k, d_max=d_max, threshold=threshold)
    return reports, full
