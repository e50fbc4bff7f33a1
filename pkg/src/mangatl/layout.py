"""Geometric page processing: text clustering, box hulls, reading order.

Clustering follows the OPTICS reachability machinery with clusters
extracted at a fixed reachability threshold equal to ``eps`` (the
DBSCAN-equivalent extraction).  Reading order is a recursive cut over
panels: horizontal gaps split top-to-bottom first, vertical gaps split
right-to-left, matching how manga pages are read.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .corpus import BBox, Page, Panel, TextRegion, Volume


class Point2(NamedTuple):
    """Element centroid in pixel coordinates."""

    x: float
    y: float


@dataclass(frozen=True)
class ClusterParams:
    eps: float
    min_pts: int = 2
    min_box: float = 8.0

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")
        if self.min_box < 0:
            raise ValueError("min_box must be >= 0")


@dataclass
class OpticsOrdering:
    """Raw OPTICS output for diagnostics: visit order plus distances."""

    order: list[int]
    reachability: list[float]
    core_distance: list[float]


def _distance_matrix(points: Sequence[Point2]) -> np.ndarray:
    arr = np.asarray([(p[0], p[1]) for p in points], dtype=float)
    diff = arr[:, None, :] - arr[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


def _core_info(dist: np.ndarray, eps: float, min_pts: int):
    n = dist.shape[0]
    neighbor_counts = (dist <= eps).sum(axis=1)  # includes the point itself
    is_core = neighbor_counts >= min_pts
    core_distance = np.full(n, math.inf)
    for i in range(n):
        if is_core[i]:
            core_distance[i] = np.sort(dist[i])[min_pts - 1]
    return is_core, core_distance


def optics_ordering(points: Sequence[Point2], params: ClusterParams) -> OpticsOrdering:
    """Compute the OPTICS visit order and reachability plot.

    Seeds are expanded smallest-reachability first with ties broken by
    lowest point index, so the ordering is deterministic.
    """
    n = len(points)
    if n == 0:
        return OpticsOrdering(order=[], reachability=[], core_distance=[])
    dist = _distance_matrix(points)
    is_core, core_distance = _core_info(dist, params.eps, params.min_pts)

    order: list[int] = []
    reachability = [math.inf] * n
    processed = [False] * n

    def update_seeds(center: int, seeds: list):
        if not is_core[center]:
            return
        for other in range(n):
            if processed[other] or dist[center, other] > params.eps:
                continue
            new_reach = max(core_distance[center], dist[center, other])
            if new_reach < reachability[other]:
                reachability[other] = new_reach
                heapq.heappush(seeds, (new_reach, other))

    for start in range(n):
        if processed[start]:
            continue
        processed[start] = True
        order.append(start)
        seeds: list[tuple[float, int]] = []
        update_seeds(start, seeds)
        while seeds:
            reach, point = heapq.heappop(seeds)
            if processed[point] or reach > reachability[point]:
                continue  # stale heap entry
            processed[point] = True
            order.append(point)
            update_seeds(point, seeds)

    return OpticsOrdering(order=order, reachability=reachability,
                          core_distance=list(core_distance))


def optics_cluster(points: Sequence[Point2],
                   params: ClusterParams) -> tuple[list[list[int]], list[int]]:
    """Cluster point indices at reachability threshold ``eps``.

    Clusters are the eps-connected components of core points; a non-core
    point joins the cluster of the core it is cheapest to reach
    (smallest ``max(core_distance, distance)``, ties broken by lowest
    core index).  Points reachable from no core are noise.  The result
    partitions all indices and is independent of input order up to the
    index labels themselves.
    """
    n = len(points)
    if n == 0:
        return [], []
    dist = _distance_matrix(points)
    is_core, core_distance = _core_info(dist, params.eps, params.min_pts)

    labels = [-1] * n
    next_label = 0
    for i in range(n):
        if not is_core[i] or labels[i] != -1:
            continue
        labels[i] = next_label
        stack = [i]
        while stack:
            current = stack.pop()
            for other in range(n):
                if (is_core[other] and labels[other] == -1
                        and dist[current, other] <= params.eps):
                    labels[other] = next_label
                    stack.append(other)
        next_label += 1

    for i in range(n):
        if is_core[i]:
            continue
        best: tuple[float, int] | None = None
        for core in range(n):
            if not is_core[core] or dist[i, core] > params.eps:
                continue
            reach = max(core_distance[core], dist[i, core])
            if best is None or (reach, core) < best:
                best = (reach, core)
        if best is not None:
            labels[i] = labels[best[1]]

    clusters: dict[int, list[int]] = {}
    noise: list[int] = []
    for i, label in enumerate(labels):
        if label == -1:
            noise.append(i)
        else:
            clusters.setdefault(label, []).append(i)
    ordered = sorted(clusters.values(), key=lambda members: members[0])
    return ordered, noise


def cluster_boxes(clusters: Sequence[Sequence[int]], points: Sequence[Point2],
                  params: ClusterParams) -> list[BBox]:
    """Axis-aligned hull per cluster, dropping boxes too small for text."""
    boxes = []
    for members in clusters:
        xs = [points[i][0] for i in members]
        ys = [points[i][1] for i in members]
        w = max(xs) - min(xs)
        h = max(ys) - min(ys)
        if w <= 0 or h <= 0 or w < params.min_box or h < params.min_box:
            continue
        boxes.append(BBox(min(xs), min(ys), w, h))
    return boxes


@dataclass
class OrderedRegions:
    """Global reading order for one page; a permutation of region ids."""

    order: list[str]
    used_fallback: bool = False


_MERGE_SLACK = 1e-9


def _merged_intervals(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    intervals = sorted(intervals)
    merged = [intervals[0]]
    for start, end in intervals[1:]:
        last_start, last_end = merged[-1]
        if start <= last_end + _MERGE_SLACK:
            merged[-1] = (last_start, max(last_end, end))
        else:
            merged.append((start, end))
    return merged


def _split_groups(panels: list[Panel], axis: str) -> list[list[Panel]] | None:
    """Partition panels at full projection gaps along one axis, or None."""
    if axis == "y":
        spans = [(p.bbox.y, p.bbox.bottom) for p in panels]
    else:
        spans = [(p.bbox.x, p.bbox.right) for p in panels]
    merged = _merged_intervals(spans)
    if len(merged) < 2:
        return None
    groups: list[list[Panel]] = [[] for _ in merged]
    for panel, span in zip(panels, spans):
        for gi, (start, end) in enumerate(merged):
            if start <= span[0] and span[1] <= end + _MERGE_SLACK:
                groups[gi].append(panel)
                break
    if axis == "y":
        # bands come out sorted top to bottom already
        return groups
    return list(reversed(groups))  # columns right to left


def _order_panels(panels: list[Panel]) -> tuple[list[Panel], bool]:
    if len(panels) <= 1:
        return list(panels), False
    bands = _split_groups(panels, "y")
    if bands is not None:
        ordered, fallback = [], False
        for band in bands:
            sub, sub_fb = _order_panels(band)
            ordered.extend(sub)
            fallback = fallback or sub_fb
        return ordered, fallback
    columns = _split_groups(panels, "x")
    if columns is not None:
        ordered, fallback = [], False
        for column in columns:
            sub, sub_fb = _order_panels(column)
            ordered.extend(sub)
            fallback = fallback or sub_fb
        return ordered, fallback
    # Overlapping panels that admit no cut: top-to-bottom rows, then
    # right-to-left, on centers.
    ordered = sorted(panels, key=lambda p: (p.bbox.center[1], -p.bbox.center[0], p.id))
    return ordered, True


def _assign_regions(page: Page, panels: list[Panel]) -> dict[str, list[TextRegion]]:
    assigned: dict[str, list[TextRegion]] = {panel.id: [] for panel in panels}
    for region in page.regions:
        cx, cy = region.bbox.center
        containing = [p for p in panels if p.bbox.contains_point(cx, cy)]
        if containing:
            target = min(containing, key=lambda p: (p.bbox.area, p.id))
        else:
            target = min(panels, key=lambda p: (
                math.dist((cx, cy), p.bbox.center), p.id))
        assigned[target.id].append(region)
    return assigned


def estimate_reading_order(page: Page) -> OrderedRegions:
    """Estimate the order in which the page's regions are read.

    Panels are visited by recursive cuts (horizontal gaps first, top to
    bottom; vertical gaps right to left); within a panel regions sort
    right-to-left then top-to-bottom by center.  Pages without panel
    annotations are treated as one full-page panel.
    """
    if not page.regions:
        return OrderedRegions(order=[])
    panels = list(page.panels)
    if not panels:
        panels = [Panel(id="__page__", bbox=BBox(0, 0, page.width, page.height))]
    ordered_panels, used_fallback = _order_panels(panels)
    assigned = _assign_regions(page, panels)

    order: list[str] = []
    for panel in ordered_panels:
        regions = sorted(assigned[panel.id],
                         key=lambda r: (-r.bbox.center[0], r.bbox.center[1], r.id))
        order.extend(region.id for region in regions)
    return OrderedRegions(order=order, used_fallback=used_fallback)


@dataclass
class OrderReport:
    """Agreement between estimated and annotated reading order."""

    total_regions: int = 0
    mismatched_regions: int = 0
    pages: list[dict] = field(default_factory=list)

    @property
    def disagreement_rate(self) -> float:
        if self.total_regions == 0:
            return 0.0
        return self.mismatched_regions / self.total_regions


def reading_order_report(volume: Volume) -> OrderReport:
    """Compare the estimator against annotated reading_index per page."""
    report = OrderReport()
    for page in volume.pages:
        annotated = [region.id for region in page.regions]
        estimated = estimate_reading_order(page).order
        mismatches = sum(1 for a, b in zip(annotated, estimated) if a != b)
        report.total_regions += len(annotated)
        report.mismatched_regions += mismatches
        report.pages.append({"page": page.index, "regions": len(annotated),
                             "mismatches": mismatches})
    return report
