"""Known boundary geometry of the constrained-sum programs.

Used to judge scans and searches against ground truth: the valid region of
program one is the triangle x >= 0, y >= 0, x + y < 6, and program two
differs from it exactly on the band 6 <= x + y < 7 inside [0, 6)^2.
"""

import math

# triangle edges as segments ((x0, y0), (x1, y1))
TRIANGLE_EDGES = (
    ((0.0, 0.0), (0.0, 6.0)),
    ((0.0, 0.0), (6.0, 0.0)),
    ((0.0, 6.0), (6.0, 0.0)),
)

_EPS = 1e-12


def segment_distance(p, seg) -> float:
    (x0, y0), (x1, y1) = seg
    px, py = p
    dx, dy = x1 - x0, y1 - y0
    t = ((px - x0) * dx + (py - y0) * dy) / (dx * dx + dy * dy)
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (x0 + t * dx), py - (y0 + t * dy))


def boundary_distance(p) -> float:
    """Euclidean distance from ``p`` to the nearest triangle edge."""
    return min(segment_distance(p, s) for s in TRIANGLE_EDGES)


def in_triangle(p) -> bool:
    x, y = p
    return x >= 0 and y >= 0 and x + y < 6


def cell_bounds(center, half_x, half_y):
    x, y = center
    return x - half_x, x + half_x, y - half_y, y + half_y


def cell_touches_boundary(center, half_x, half_y) -> bool:
    """Whether the closed cell rectangle meets a triangle edge."""
    x0, x1, y0, y1 = cell_bounds(center, half_x, half_y)
    # x = 0 for y in [0, 6]
    if x0 <= _EPS and x1 >= -_EPS and y1 >= -_EPS and y0 <= 6 + _EPS:
        return True
    # y = 0 for x in [0, 6]
    if y0 <= _EPS and y1 >= -_EPS and x1 >= -_EPS and x0 <= 6 + _EPS:
        return True
    # x + y = 6 for x in [0, 6]: clip the cell to [0, 6]^2, then test the sum range
    cx0, cx1 = max(x0, 0.0), min(x1, 6.0)
    cy0, cy1 = max(y0, 0.0), min(y1, 6.0)
    if cx0 > cx1 + _EPS or cy0 > cy1 + _EPS:
        return False
    return cx0 + cy0 <= 6 + _EPS and cx1 + cy1 >= 6 - _EPS


def cell_is_interior(center, margin: float = 0.5) -> bool:
    """Cell center strictly inside the triangle and more than ``margin`` from every edge."""
    return in_triangle(center) and boundary_distance(center) > margin


def in_band(p) -> bool:
    """Point in the region where the two programs disagree."""
    x, y = p
    return 0 <= x < 6 and 0 <= y < 6 and 6 <= x + y < 7


def cell_meets_band(center, half_x, half_y) -> bool:
    """Whether the closed cell rectangle meets the closure of the disagreement band."""
    x0, x1, y0, y1 = cell_bounds(center, half_x, half_y)
    cx0, cx1 = max(x0, 0.0), min(x1, 6.0)
    cy0, cy1 = max(y0, 0.0), min(y1, 6.0)
    if cx0 > cx1 + _EPS or cy0 > cy1 + _EPS:
        return False
    return cx1 + cy1 >= 6 - _EPS and cx0 + cy0 <= 7 + _EPS


def grid_boundary_contrast(grid, margin: float = 0.5):
    """(mean quotient on boundary cells, mean on interior cells, ratio)."""
    hx = (grid.config.x_range[1] - grid.config.x_range[0]) / grid.config.resolution / 2
    hy = (grid.config.y_range[1] - grid.config.y_range[0]) / grid.config.resolution / 2
    edge, inner = [], []
    for j, y in enumerate(grid.y_centers):
        for i, x in enumerate(grid.x_centers):
            q = grid.quotients[j, i]
            if math.isnan(q):
                continue
            if cell_touches_boundary((x, y), hx, hy):
                edge.append(q)
            elif cell_is_interior((x, y), margin):
                inner.append(q)
    m_edge = sum(edge) / len(edge) if edge else math.nan
    m_inner = sum(inner) / len(inner) if inner else math.nan
    ratio = m_edge / m_inner if m_inner > 0 else math.inf
    return m_edge, m_inner, ratio


def diff_band_fraction(diff, grid, fraction: float = 0.1) -> float:
    """Share of the top ``fraction`` of non-zero difference cells that meet the band."""
    hx = (grid.config.x_range[1] - grid.config.x_range[0]) / grid.config.resolution / 2
    hy = (grid.config.y_range[1] - grid.config.y_range[0]) / grid.config.resolution / 2
    top = diff.top_fraction_cells(fraction)
    if not top:
        return 0.0
    hits = sum(cell_meets_band((diff.x_centers[i], diff.y_centers[j]), hx, hy) for i, j in top)
    return hits / len(top)
