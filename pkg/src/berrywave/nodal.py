"""Zero-set extraction on sampled grids and the mean nodal length law.

Marching squares with linear interpolation along edges.  Each cell is
classified by the signs of its four corners; ambiguous cells (two opposite
positive corners) are disambiguated by the cell-center value, which for
sampled wave fields comes from the analytic mode sum rather than corner
averaging.  Grid nodes that are exactly zero are nudged to +1e-12 before
classification so the sign pattern is always well defined.

The total length is accumulated per cell in row-major order and reduced
with numpy's fixed-order pairwise summation, so a curve's length does not
depend on how the segment list was assembled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NodalCurve",
    "marching_squares",
    "nodal_length",
    "mean_length_formula",
    "segments_to_csv",
]

_ZERO_NUDGE = 1e-12

# Corner bit layout: 1 = (i, j), 2 = (i+1, j), 4 = (i+1, j+1), 8 = (i, j+1).
# Edge names: S = y fixed low, N = y fixed high, W = x fixed low, E = x fixed high.
_PLAIN_CASES = {
    1: (("W", "S"),),
    2: (("S", "E"),),
    3: (("W", "E"),),
    4: (("E", "N"),),
    6: (("S", "N"),),
    7: (("W", "N"),),
    8: (("N", "W"),),
    9: (("S", "N"),),
    11: (("E", "N"),),
    12: (("W", "E"),),
    13: (("S", "E"),),
    14: (("W", "S"),),
}
# code 5: corners (i,j) and (i+1,j+1) positive; code 10: the other diagonal.
_SADDLE_POS = {5: (("S", "E"), ("W", "N")), 10: (("W", "S"), ("E", "N"))}
_SADDLE_NEG = {5: (("W", "S"), ("E", "N")), 10: (("S", "E"), ("W", "N"))}


@dataclass
class NodalCurve:
    """Extracted zero set: segment endpoints (S, 2, 2) and total length.

    segments[s, 0] and segments[s, 1] are the (x, y) endpoints of segment s,
    listed in row-major cell order.
    """

    segments: np.ndarray
    total_length: float

    def recomputed_length(self):
        if self.segments.size == 0:
            return 0.0
        d = self.segments[:, 1, :] - self.segments[:, 0, :]
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


def _edge_points(v, edge, ii, jj, origin, h):
    """Crossing coordinates on one edge of the cells indexed by (ii, jj)."""
    x0, y0 = origin
    if edge == "S":
        a = v[ii, jj]
        b = v[ii + 1, jj]
        t = a / (a - b)
        return x0 + (ii + t) * h, y0 + jj * h
    if edge == "N":
        a = v[ii, jj + 1]
        b = v[ii + 1, jj + 1]
        t = a / (a - b)
        return x0 + (ii + t) * h, y0 + (jj + 1) * h
    if edge == "W":
        a = v[ii, jj]
        b = v[ii, jj + 1]
        t = a / (a - b)
        return x0 + ii * h, y0 + (jj + t) * h
    # E
    a = v[ii + 1, jj]
    b = v[ii + 1, jj + 1]
    t = a / (a - b)
    return x0 + (ii + 1) * h, y0 + (jj + t) * h


def _gather_segments(v, pairs, ii, jj, origin, h):
    segs = np.empty((ii.size, len(pairs), 2, 2))
    for s, (e0, e1) in enumerate(pairs):
        xa, ya = _edge_points(v, e0, ii, jj, origin, h)
        xb, yb = _edge_points(v, e1, ii, jj, origin, h)
        segs[:, s, 0, 0] = xa
        segs[:, s, 0, 1] = ya
        segs[:, s, 1, 0] = xb
        segs[:, s, 1, 1] = yb
    return segs


def marching_squares(values, spacing, origin=(0.0, 0.0), center_values=None):
    """Trace the zero level set of a sampled scalar field.

    values[i, j] is the sample at (origin[0] + i * spacing,
    origin[1] + j * spacing).  center_values, when given, must hold the
    field at cell centers with shape (n_x - 1, n_y - 1) and is used to
    resolve saddle cells; otherwise the corner average stands in.  Any NaN
    in values raises ValueError.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[0] < 2 or v.shape[1] < 2:
        raise ValueError("values must be a 2-d grid with at least 2 nodes per side")
    if np.isnan(v).any():
        raise ValueError("field values contain NaN")
    v = np.where(v == 0.0, _ZERO_NUDGE, v)
    h = float(spacing)
    if not (np.isfinite(h) and h > 0):
        raise ValueError("spacing must be finite and positive")

    pos = v > 0.0
    codes = (
        pos[:-1, :-1].astype(np.uint8)
        + 2 * pos[1:, :-1].astype(np.uint8)
        + 4 * pos[1:, 1:].astype(np.uint8)
        + 8 * pos[:-1, 1:].astype(np.uint8)
    )
    ncy = codes.shape[1]

    if center_values is not None:
        centers = np.asarray(center_values, dtype=float)
        if centers.shape != codes.shape:
            raise ValueError("center_values must have shape (n_x - 1, n_y - 1)")
    else:
        centers = 0.25 * (v[:-1, :-1] + v[1:, :-1] + v[1:, 1:] + v[:-1, 1:])
    center_pos = np.where(centers == 0.0, _ZERO_NUDGE, centers) > 0.0

    cell_len = np.zeros(codes.shape)
    chunks = []  # (flat cell indices, segments (K, s, 2, 2))

    for code, pairs in _PLAIN_CASES.items():
        ii, jj = np.nonzero(codes == code)
        if ii.size == 0:
            continue
        segs = _gather_segments(v, pairs, ii, jj, origin, h)
        d = segs[:, :, 1, :] - segs[:, :, 0, :]
        cell_len[ii, jj] = np.hypot(d[:, :, 0], d[:, :, 1]).sum(axis=1)
        chunks.append((ii * ncy + jj, segs))

    for code in (5, 10):
        mask = codes == code
        if not mask.any():
            continue
        for branch, table in ((mask & center_pos, _SADDLE_POS), (mask & ~center_pos, _SADDLE_NEG)):
            ii, jj = np.nonzero(branch)
            if ii.size == 0:
                continue
            segs = _gather_segments(v, table[code], ii, jj, origin, h)
            d = segs[:, :, 1, :] - segs[:, :, 0, :]
            cell_len[ii, jj] = np.hypot(d[:, :, 0], d[:, :, 1]).sum(axis=1)
            chunks.append((ii * ncy + jj, segs))

    total = float(np.sum(cell_len))
    if not chunks:
        return NodalCurve(segments=np.empty((0, 2, 2)), total_length=0.0)

    flat = np.concatenate([np.repeat(c[0], c[1].shape[1]) for c in chunks])
    segs = np.concatenate([c[1].reshape(-1, 2, 2) for c in chunks])
    order = np.argsort(flat, kind="stable")
    return NodalCurve(segments=segs[order], total_length=total)


def nodal_length(grid):
    """NodalCurve of a sampled wave field, with saddle cells resolved by the
    analytic cell-center values of the same realization."""
    centers = grid.center_planes()[0]
    return marching_squares(grid.values, grid.spacing, origin=(0.0, 0.0),
                            center_values=centers)


def mean_length_formula(energy, domain):
    """Expected nodal length in the domain: area * (pi / sqrt 2) * sqrt(E)."""
    if not (np.isfinite(energy) and energy > 0):
        raise ValueError("energy must be finite and positive")
    return domain.area * (math.pi / math.sqrt(2.0)) * math.sqrt(energy)


def segments_to_csv(curve, path):
    """Write the curve's segments as CSV rows x0,y0,x1,y1."""
    with open(path, "w", newline="") as f:
        f.write("x0,y0,x1,y1\n")
        for seg in curve.segments:
            cells = (float(seg[0, 0]), float(seg[0, 1]),
                     float(seg[1, 0]), float(seg[1, 1]))
            f.write(",".join(repr(c) for c in cells) + "\n")
