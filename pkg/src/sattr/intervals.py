"""Interval arithmetic on (start, end) second pairs.

All functions treat intervals as half-open [start, end) and assume
start < end for every input pair unless stated otherwise.
"""

from __future__ import annotations

Interval = tuple[float, float]


def merge_intervals(intervals: list[Interval], gap_tol: float = 0.0) -> list[Interval]:
    """Union intervals into maximal islands.

    Overlapping or touching intervals always merge; positive gaps merge
    only when strictly smaller than ``gap_tol``.
    """
    if not intervals:
        return []
    out: list[Interval] = []
    for start, end in sorted(intervals):
        if out:
            cur_start, cur_end = out[-1]
            gap = start - cur_end
            if gap <= 0.0 or gap < gap_tol:
                out[-1] = (cur_start, max(cur_end, end))
                continue
        out.append((start, end))
    return out


def clip_intervals(intervals: list[Interval], lo: float, hi: float) -> list[Interval]:
    """Intersect intervals with [lo, hi), dropping empty results."""
    out = []
    for start, end in intervals:
        s, e = max(start, lo), min(end, hi)
        if s < e:
            out.append((s, e))
    return out


def total_duration(intervals: list[Interval]) -> float:
    return sum(end - start for start, end in intervals)


def intersect_two(a: list[Interval], b: list[Interval]) -> list[Interval]:
    """Pairwise intersection of two sorted disjoint interval lists."""
    out: list[Interval] = []
    i = j = 0
    while i < len(a) and j < len(b):
        s = max(a[i][0], b[j][0])
        e = min(a[i][1], b[j][1])
        if s < e:
            out.append((s, e))
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return out


def subtract(a: list[Interval], b: list[Interval]) -> list[Interval]:
    """Remove the (sorted, disjoint) regions in ``b`` from ``a``."""
    out: list[Interval] = []
    for start, end in a:
        cur = start
        for bs, be in b:
            if be <= cur:
                continue
            if bs >= end:
                break
            if bs > cur:
                out.append((cur, bs))
            cur = max(cur, be)
            if cur >= end:
                break
        if cur < end:
            out.append((cur, end))
    return out
