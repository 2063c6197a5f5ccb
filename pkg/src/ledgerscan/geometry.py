"""Bounding-box arithmetic shared by the OCR, ensemble, and layout stages.

Boxes are (x0, y0, x1, y1) in pixels, origin top-left, half-open is not
assumed: x1/y1 are the far edges used for extent arithmetic.
"""

from __future__ import annotations

BBox = tuple[float, float, float, float]


def bbox_area(b: BBox) -> float:
    return max(0.0, b[2] - b[0]) * max(0.0, b[3] - b[1])


def bbox_union(a: BBox, b: BBox) -> BBox:
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


def bbox_iou(a: BBox, b: BBox) -> float:
    ix0, iy0 = max(a[0], b[0]), max(a[1], b[1])
    ix1, iy1 = min(a[2], b[2]), min(a[3], b[3])
    inter = max(0.0, ix1 - ix0) * max(0.0, iy1 - iy0)
    if inter == 0.0:
        return 0.0
    return inter / (bbox_area(a) + bbox_area(b) - inter)


def y_overlap_ratio(a: BBox, b: BBox) -> float:
    """Vertical intersection over the smaller height; 0 when disjoint or
    either box is degenerate."""
    inter = min(a[3], b[3]) - max(a[1], b[1])
    if inter <= 0:
        return 0.0
    min_h = min(a[3] - a[1], b[3] - b[1])
    if min_h <= 0:
        return 0.0
    return inter / min_h


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def group_by_y_overlap(bboxes: list[BBox], min_ratio: float) -> list[list[int]]:
    """Partition box indices into groups closed under pairwise y-overlap
    >= min_ratio (transitive closure). Groups are ordered by their topmost
    edge, members by x0 then index."""
    n = len(bboxes)
    uf = _UnionFind(n)
    order = sorted(range(n), key=lambda i: (bboxes[i][1], bboxes[i][3]))
    for a in range(n):
        for b in range(a + 1, n):
            i, j = order[a], order[b]
            if bboxes[j][1] >= bboxes[i][3]:
                break
            if y_overlap_ratio(bboxes[i], bboxes[j]) >= min_ratio:
                uf.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    members = []
    for idxs in groups.values():
        idxs.sort(key=lambda i: (bboxes[i][0], i))
        members.append(idxs)
    members.sort(key=lambda idxs: min(bboxes[i][1] for i in idxs))
    return members
