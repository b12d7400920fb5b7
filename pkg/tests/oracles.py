"""Slow, independently written reference implementations."""

from collections import deque

import numpy as np


def point_segment_distance(p, a, b):
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return float(np.linalg.norm(p - (a + t * ab)))


def point_triangle_distance(p, a, b, c):
    """Plane projection when the foot is inside, otherwise nearest edge."""
    n = np.cross(b - a, c - a)
    n = n / np.linalg.norm(n)
    foot = p - np.dot(p - a, n) * n
    # barycentric coordinates of the foot via sub-triangle areas
    area = np.dot(np.cross(b - a, c - a), n)
    w_a = np.dot(np.cross(c - b, foot - b), n) / area
    w_b = np.dot(np.cross(a - c, foot - c), n) / area
    w_c = 1.0 - w_a - w_b
    if min(w_a, w_b, w_c) >= 0:
        return abs(float(np.dot(p - a, n)))
    return min(point_segment_distance(p, a, b), point_segment_distance(p, b, c), point_segment_distance(p, c, a))


def min_distance_brute(points, vertices, triangles):
    best = np.inf
    for p in points:
        for t in triangles:
            best = min(best, point_triangle_distance(p, *vertices[t]))
    return best


def segment_crosses_triangle(o, q, a, b, c, tol=1e-6):
    """Plane intersection followed by a same-side inside test."""
    n = np.cross(b - a, c - a)
    d = q - o
    denom = np.dot(n, d)
    if abs(denom) < 1e-12 * np.linalg.norm(n) * np.linalg.norm(d):
        return False
    t = np.dot(n, a - o) / denom
    if not tol < t < 1 - tol:
        return False
    x = o + t * d
    s1 = np.dot(np.cross(b - a, x - a), n)
    s2 = np.dot(np.cross(c - b, x - b), n)
    s3 = np.dot(np.cross(a - c, x - c), n)
    return (s1 >= 0 and s2 >= 0 and s3 >= 0) or (s1 <= 0 and s2 <= 0 and s3 <= 0)


def flood_fill_labels(grid):
    """4-connected components via BFS, ids in raster order of first pixel."""
    grid = np.asarray(grid, dtype=bool)
    labels = np.zeros(grid.shape, dtype=int)
    nxt = 0
    h, w = grid.shape
    for r in range(h):
        for c in range(w):
            if grid[r, c] and labels[r, c] == 0:
                nxt += 1
                labels[r, c] = nxt
                queue = deque([(r, c)])
                while queue:
                    y, x = queue.popleft()
                    for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < h and 0 <= xx < w and grid[yy, xx] and labels[yy, xx] == 0:
                            labels[yy, xx] = nxt
                            queue.append((yy, xx))
    return labels


def mcc_direct(tp, tn, fp, fn):
    num = tp * tn - fp * fn
    den = ((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)) ** 0.5
    return 0.0 if den == 0 else num / den


def box_grid_points(box, n=13):
    u = np.linspace(-1, 1, n)
    g = np.stack(np.meshgrid(u, u, u, indexing="ij"), axis=-1).reshape(-1, 3)
    return box.center + (g * box.half_extents) @ box.axes
