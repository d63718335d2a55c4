"""The nine primitive merge-resolution types.

A label maps a token conflict's (a, b, o) regions to a concrete resolution
text; ``extract_label`` inverts the mapping for an observed resolution.
Ordinals 1..9 are part of the on-disk dataset schema; 0 marks resolutions
not representable by any label.
"""

from __future__ import annotations

from collections import Counter
from enum import IntEnum
from typing import Iterable

from .textnorm import equivalent

UNREPRESENTABLE = 0


class ResolutionLabel(IntEnum):
    TAKE_A = 1
    TAKE_B = 2
    TAKE_BASE = 3
    CONCAT_AB = 4
    CONCAT_BA = 5
    TAKE_A_EXCL_BASE = 6
    TAKE_B_EXCL_BASE = 7
    CONCAT_AB_EXCL_BASE = 8
    CONCAT_BA_EXCL_BASE = 9

    @property
    def class_index(self) -> int:
        """Zero-based index used on the wire and in model outputs."""
        return int(self) - 1


def _excl_base_lines(region: str, base: str) -> str:
    """Drop region lines whose trimmed text matches a trimmed base line."""
    base_lines = {line.strip() for line in base.splitlines()}
    kept = [
        line
        for line in region.splitlines(keepends=True)
        if line.strip() not in base_lines
    ]
    return "".join(kept)


def apply_label(label: ResolutionLabel, a: str, b: str, o: str) -> str:
    label = ResolutionLabel(label)
    if label is ResolutionLabel.TAKE_A:
        return a
    if label is ResolutionLabel.TAKE_B:
        return b
    if label is ResolutionLabel.TAKE_BASE:
        return o
    if label is ResolutionLabel.CONCAT_AB:
        return a + b
    if label is ResolutionLabel.CONCAT_BA:
        return b + a
    if label is ResolutionLabel.TAKE_A_EXCL_BASE:
        return _excl_base_lines(a, o)
    if label is ResolutionLabel.TAKE_B_EXCL_BASE:
        return _excl_base_lines(b, o)
    if label is ResolutionLabel.CONCAT_AB_EXCL_BASE:
        return _excl_base_lines(a, o) + _excl_base_lines(b, o)
    if label is ResolutionLabel.CONCAT_BA_EXCL_BASE:
        return _excl_base_lines(b, o) + _excl_base_lines(a, o)
    raise ValueError(label)


def extract_label(a: str, b: str, o: str, resolution: str) -> int:
    """Lowest-ordinal label reproducing ``resolution``, or 0 if none does.

    Comparison is whitespace-insensitive (see textnorm); ties between
    labels with colliding outputs go to the lowest ordinal, which keeps
    dataset labeling deterministic.
    """
    for label in ResolutionLabel:
        if equivalent(apply_label(label, a, b, o), resolution):
            return int(label)
    return UNREPRESENTABLE


def label_distribution(labels: Iterable[int]) -> dict:
    """Histogram over the 9 labels plus Unrepresentable, with fractions."""
    counts = Counter(int(v) for v in labels)
    total = sum(counts.values())
    buckets = {}
    for ordinal in [*range(1, 10), UNREPRESENTABLE]:
        name = (
            ResolutionLabel(ordinal).name if ordinal else "UNREPRESENTABLE"
        )
        count = counts.get(ordinal, 0)
        buckets[name] = {
            "ordinal": ordinal,
            "count": count,
            "fraction": count / total if total else 0.0,
        }
    return {"total": total, "labels": buckets}
