"""Independent brute-force oracles the implementations are checked against.

Everything here is written straight from first-principles definitions
(plain loops, no numpy, no shared helpers with the package) so that an
agreement test actually means something.
"""

from __future__ import annotations

import math


def chrf_oracle(hypothesis: str, reference: str, max_n: int = 6,
                beta: float = 2.0, strip_whitespace: bool = True) -> float:
    """Character n-gram F-beta by literal enumeration.

    Clipped matches are counted by removing each matched n-gram from a
    copy of the reference's n-gram list; orders without n-grams on both
    sides do not participate in the average.
    """
    if strip_whitespace:
        hypothesis = "".join(ch for ch in hypothesis if not ch.isspace())
        reference = "".join(ch for ch in reference if not ch.isspace())
    if not hypothesis:
        return 0.0
    precisions: list[float] = []
    recalls: list[float] = []
    for n in range(1, max_n + 1):
        hyp_grams = [hypothesis[i:i + n] for i in range(len(hypothesis) - n + 1)]
        ref_grams = [reference[i:i + n] for i in range(len(reference) - n + 1)]
        if not hyp_grams or not ref_grams:
            continue
        pool = list(ref_grams)
        matched = 0
        for gram in hyp_grams:
            if gram in pool:
                pool.remove(gram)
                matched += 1
        precisions.append(matched / len(hyp_grams))
        recalls.append(matched / len(ref_grams))
    if not precisions:
        return 0.0
    precision = sum(precisions) / len(precisions)
    recall = sum(recalls) / len(recalls)
    if precision + recall == 0:
        return 0.0
    beta_sq = beta * beta
    return 100.0 * (1 + beta_sq) * precision * recall / (beta_sq * precision + recall)


def density_cluster_oracle(points, eps: float, min_pts: int):
    """Cluster/noise assignment from the pairwise reachability definitions.

    Core points have at least ``min_pts`` neighbors within ``eps``
    (themselves included); clusters are eps-connected components of
    cores; a non-core point attaches to the core minimizing
    ``max(core_distance(c), d(c, p))`` with ties broken by the lowest
    core index; everything else is noise.
    """
    n = len(points)
    dist = [[math.dist(points[i], points[j]) for j in range(n)] for i in range(n)]
    neighbor_counts = [sum(1 for j in range(n) if dist[i][j] <= eps)
                       for i in range(n)]
    is_core = [neighbor_counts[i] >= min_pts for i in range(n)]
    core_distance = {}
    for i in range(n):
        if is_core[i]:
            core_distance[i] = sorted(dist[i])[min_pts - 1]

    labels: dict[int, int] = {}
    next_label = 0
    for i in range(n):
        if not is_core[i] or i in labels:
            continue
        frontier = [i]
        labels[i] = next_label
        while frontier:
            current = frontier.pop(0)
            for j in range(n):
                if is_core[j] and j not in labels and dist[current][j] <= eps:
                    labels[j] = next_label
                    frontier.append(j)
        next_label += 1

    for i in range(n):
        if is_core[i]:
            continue
        best = None
        for c in range(n):
            if not is_core[c] or dist[i][c] > eps:
                continue
            reach = max(core_distance[c], dist[i][c])
            if best is None or (reach, c) < (best[0], best[1]):
                best = (reach, c)
        if best is not None:
            labels[i] = labels[best[1]]

    grouped: dict[int, list[int]] = {}
    noise = []
    for i in range(n):
        if i in labels:
            grouped.setdefault(labels[i], []).append(i)
        else:
            noise.append(i)
    clusters = sorted((sorted(members) for members in grouped.values()),
                      key=lambda members: members[0])
    return clusters, noise


def hull_boxes_oracle(clusters, points, min_box: float):
    """Literal application of the hull-then-threshold rule."""
    boxes = []
    for members in clusters:
        xs = sorted(points[i][0] for i in members)
        ys = sorted(points[i][1] for i in members)
        w = xs[-1] - xs[0]
        h = ys[-1] - ys[0]
        if w > 0 and h > 0 and w >= min_box and h >= min_box:
            boxes.append((xs[0], ys[0], w, h))
    return boxes
