"""Vietoris-Rips filtrations and persistent homology in degrees 0 and 1.

Coefficients are the two-element field. Columns of the boundary matrix are
stored as Python integers (bitmasks over row indices), so the reduction is a
sequence of XORs; the clearing optimization skips columns whose simplex was
already paired as a pivot one dimension up.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .embedding import PointCloud
from .errors import DegenerateGeometryError
from .serialize import write_csv


@dataclass(frozen=True)
class Filtration:
    """Simplices as (vertex tuple, appearance radius), sorted by
    (radius, dimension, lexicographic vertices); that order is total, so the
    pairing computed from it is deterministic."""

    simplices: tuple[tuple[tuple[int, ...], float], ...]
    max_dim: int = 2

    def __post_init__(self):
        radius = {}
        for verts, r in self.simplices:
            radius[verts] = r
            for face in itertools.combinations(verts, len(verts) - 1):
                if len(face) < 1:
                    continue
                if face not in radius:
                    raise ValueError(f"face {face} of {verts} missing or out of order")
                if radius[face] > r + 1e-12:
                    raise ValueError(f"face {face} appears after simplex {verts}")

    def at_radius(self, eps: float) -> list[tuple[int, ...]]:
        return [v for v, r in self.simplices if r <= eps]

    def critical_radii(self) -> np.ndarray:
        return np.unique([r for _, r in self.simplices])


@dataclass(frozen=True)
class PersistenceDiagram:
    """(dim, birth, death) triples; death is math.inf for essential classes."""

    pairs: tuple[tuple[int, float, float], ...]

    def __post_init__(self):
        for d, b, dth in self.pairs:
            if dth < b:
                raise ValueError(f"death {dth} before birth {b} in dim {d}")

    def in_dim(self, dim: int, finite_only: bool = False):
        out = [(b, d) for (k, b, d) in self.pairs if k == dim]
        if finite_only:
            out = [(b, d) for b, d in out if math.isfinite(d)]
        return out

    def betti(self, dim: int, eps: float) -> int:
        """Rank of H_dim at radius eps: pairs born by eps and not yet dead."""
        return sum(1 for b, d in self.in_dim(dim) if b <= eps < d)

    def to_csv(self, path) -> None:
        rows = [(d, b, "inf" if math.isinf(dd) else dd) for (d, b, dd) in self.pairs]
        write_csv(path, ("dim", "birth", "death"), rows)


def rips_filtration(cloud: PointCloud | np.ndarray, eps_max: float, max_dim: int = 2) -> Filtration:
    """Vertices at radius 0, edges at their length, triangles at their longest edge."""
    if eps_max <= 0:
        raise ValueError("eps_max must be positive")
    if max_dim != 2:
        raise ValueError("only max_dim=2 is supported")
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    n = len(pts)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    simplices: list[tuple[tuple[int, ...], float]] = [((i,), 0.0) for i in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        if dist[i, j] <= eps_max:
            simplices.append(((i, j), float(dist[i, j])))
    for i, j, k in itertools.combinations(range(n), 3):
        r = float(max(dist[i, j], dist[i, k], dist[j, k]))
        if r <= eps_max:
            simplices.append(((i, j, k), r))
    simplices.sort(key=lambda sr: (sr[1], len(sr[0]), sr[0]))
    return Filtration(simplices=tuple(simplices))


def compute_persistence(filt: Filtration) -> PersistenceDiagram:
    """Standard column reduction over GF(2) with clearing.

    Dimensions are processed top-down; when a dim-k column pairs with a dim-(k-1)
    pivot, the pivot's own column is cleared (it is necessarily a cycle).
    """
    simplices = filt.simplices
    index = {verts: i for i, (verts, _) in enumerate(simplices)}
    radius = [r for _, r in simplices]
    dim_of = [len(v) - 1 for v, _ in simplices]

    boundary: list[int] = []
    for verts, _ in simplices:
        col = 0
        if len(verts) > 1:
            for drop in range(len(verts)):
                face = verts[:drop] + verts[drop + 1 :]
                col ^= 1 << index[face]
        boundary.append(col)

    low_to_col: dict[int, int] = {}
    pair_of: dict[int, int] = {}
    cleared: set[int] = set()
    for dim in (2, 1):
        for j in range(len(simplices)):
            if dim_of[j] != dim or j in cleared:
                continue
            col = boundary[j]
            while col:
                low = col.bit_length() - 1
                other = low_to_col.get(low)
                if other is None:
                    break
                col ^= boundary[other]
            boundary[j] = col
            if col:
                low = col.bit_length() - 1
                low_to_col[low] = j
                pair_of[low] = j
                cleared.add(low)

    pairs: list[tuple[int, float, float]] = []
    paired_as_death = set(pair_of.values())
    for i in range(len(simplices)):
        if i in pair_of:
            j = pair_of[i]
            pairs.append((dim_of[i], radius[i], radius[j]))
        elif i not in paired_as_death and dim_of[i] < 2:
            pairs.append((dim_of[i], radius[i], math.inf))
    pairs.sort()
    return PersistenceDiagram(pairs=tuple(pairs))


def max_h1_persistence(diag: PersistenceDiagram, *, normalize_by: float | None = None) -> float:
    """Largest finite (death - birth) in degree 1, optionally divided by the
    cloud diameter; 0 when no finite degree-1 pair exists."""
    finite = diag.in_dim(1, finite_only=True)
    if not finite:
        return 0.0
    best = max(d - b for b, d in finite)
    if normalize_by is not None:
        best /= normalize_by
    return float(best)


def circular_coordinates(cloud: PointCloud | np.ndarray) -> np.ndarray:
    """Angle per point from the top-2 principal components (atan2 of the
    projections), in [0, 2pi)."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    centered = pts - pts.mean(axis=0)
    _, svals, vecs = np.linalg.svd(centered, full_matrices=False)
    if len(svals) < 2 or svals[1] < 1e-12 * max(svals[0], 1e-300):
        raise DegenerateGeometryError("cloud is collinear; no planar projection")
    proj = centered @ vecs[:2].T
    return np.mod(np.arctan2(proj[:, 1], proj[:, 0]), 2 * np.pi)
