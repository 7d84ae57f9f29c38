"""Representative-point selection balancing density, loop topology, and
geometric diversity.

A greedy topological stage maximizes a composite gain (angular-histogram
entropy, geodesic spread, density entropy, collision penalty); a global stage
then adds density-weighted farthest points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .embedding import PointCloud
from .errors import DegenerateBandwidthError, SelectionInfeasibleError
from .persistence import PersistenceDiagram, circular_coordinates


@dataclass(frozen=True)
class SelectionConfig:
    k: int = 7
    r: float = 0.6  # fraction of k reserved for the topological stage
    alpha: float = 1.5  # density exponent; also the Renyi entropy order
    knn_k: int = 10
    bins: int = 12  # angular histogram bins
    lambdas: tuple[float, float, float, float] = (1.0, 1.0, 0.5, 2.0)
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.r < 1.0):
            raise ValueError("r must be in (0,1)")
        k_topo = int(self.k * self.r)
        if not (1 <= k_topo <= self.k):
            raise ValueError("need 1 <= floor(k*r) <= k")
        if self.bins < 4:
            raise ValueError("need at least 4 angular bins")
        if self.alpha <= 1.0:
            raise ValueError("alpha must exceed 1")
        if any(l < 0 for l in self.lambdas):
            raise ValueError("lambdas must be nonnegative")

    @property
    def k_topo(self) -> int:
        return int(self.k * self.r)

    @property
    def k_global(self) -> int:
        return self.k - self.k_topo


@dataclass(frozen=True)
class RepresentativeSet:
    indices: tuple[int, ...]
    provenance: tuple[str, ...]  # topo | global, per index
    weights: np.ndarray = field(repr=False)  # density weights of the full cloud
    angles: np.ndarray = field(repr=False)
    config: SelectionConfig = field(repr=False, default=SelectionConfig())
    no_loop: bool = False

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("representative indices must be distinct")

    def coords(self, cloud: PointCloud) -> np.ndarray:
        return cloud.points[list(self.indices)]

    def to_json(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        obj = {
            "indices": list(self.indices),
            "provenance": list(self.provenance),
            "angles": [float(self.angles[i]) for i in self.indices],
            "no_loop": self.no_loop,
            "config": {
                "k": self.config.k,
                "r": self.config.r,
                "alpha": self.config.alpha,
                "knn_k": self.config.knn_k,
                "bins": self.config.bins,
                "lambdas": list(self.config.lambdas),
                "seed": self.config.seed,
            },
        }
        Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def density_weights(cloud: PointCloud | np.ndarray, alpha: float) -> np.ndarray:
    """Gaussian-kernel density with bandwidth at the 10th percentile of
    pairwise distances; weights are rho^(alpha-1), normalized to sum 1."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    n, m = pts.shape
    if n < 2:
        raise ValueError("need at least 2 points")
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = (diff**2).sum(axis=-1)
    h = float(np.quantile(np.sqrt(d2[np.triu_indices(n, k=1)]), 0.10))
    if h == 0.0:
        raise DegenerateBandwidthError("10th-percentile bandwidth is zero")
    rho = np.exp(-d2 / (2 * h * h)).sum(axis=1) / (n * h**m)
    w = rho ** (alpha - 1.0)
    return w / w.sum()


def candidate_set(
    cloud: PointCloud | np.ndarray, diag: PersistenceDiagram
) -> tuple[np.ndarray, bool]:
    """Indices whose neighbor count at the loop mid-scale is moderate.

    Returns (indices, no_loop). With no finite H1 pair the whole index set is
    returned flagged; an empty candidate set raises with a hint to relax the
    thresholds.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    n = len(pts)
    finite = diag.in_dim(1, finite_only=True)
    if not finite:
        return np.arange(n), True
    b, d = max(finite, key=lambda bd: bd[1] - bd[0])
    r_mid = 0.5 * (b + d)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    nu = (dist < r_mid).sum(axis=1) - 1  # exclude self
    n_min = int(0.02 * n)
    n_max = max(n_min + 5, int(0.10 * n))
    keep = np.where((nu > n_min) & (nu < n_max))[0]
    if len(keep) == 0:
        raise SelectionInfeasibleError(
            f"no candidate satisfies {n_min} < nu < {n_max}; relax the thresholds"
        )
    return keep, False


def renyi_entropy(p: np.ndarray, alpha: float) -> float:
    """Renyi entropy of order alpha of a (sub)distribution, in nats."""
    p = np.asarray(p, dtype=float)
    total = p.sum()
    if total <= 0:
        return 0.0
    p = p[p > 0] / total
    if abs(alpha - 1.0) < 1e-9:
        return float(-(p * np.log(p)).sum())
    return float(np.log((p**alpha).sum()) / (1.0 - alpha))


def _knn_geodesics(pts: np.ndarray, knn_k: int, sources: list[int]) -> np.ndarray:
    """Shortest-path distances from sources via the symmetrized KNN graph.

    Unreachable vertices come back as +inf (cross-component distances are
    infinite by convention).
    """
    n = len(pts)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    k = min(knn_k + 1, n)
    nn = np.argsort(dist, axis=1, kind="stable")[:, 1:k]
    rows = np.repeat(np.arange(n), nn.shape[1])
    cols = nn.ravel()
    vals = dist[rows, cols]
    g = csr_matrix((vals, (rows, cols)), shape=(n, n))
    g = g.maximum(g.T)
    return dijkstra(g, directed=False, indices=sources)


def select_topological(
    cloud: PointCloud | np.ndarray,
    candidates: np.ndarray,
    weights: np.ndarray,
    angles: np.ndarray,
    cfg: SelectionConfig,
) -> list[int]:
    """Greedy selection of floor(k*r) points maximizing the composite gain.

    Gain of candidate j given the current set S:
      lam_theta * (Renyi entropy gain of the angular histogram)
      + lam_D * min geodesic distance to S on the KNN graph
      + lam_d * Renyi entropy of the density weights of S + {j}
      - lam_c * (count of selected angles within dtheta_min of theta_j)
    Ties break toward the lowest index.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    cand = sorted(int(i) for i in candidates)
    if not cand:
        raise SelectionInfeasibleError("empty candidate set")
    lam_theta, lam_D, lam_d, lam_c = cfg.lambdas
    k_topo = cfg.k_topo
    dtheta_min = 2 * np.pi / (1.35 * k_topo)
    bin_edges = np.linspace(0, 2 * np.pi, cfg.bins + 1)

    start = max(cand, key=lambda i: (weights[i], -i))
    selected = [start]

    hist = np.zeros(cfg.bins)
    hist[min(np.searchsorted(bin_edges, angles[start], side="right") - 1, cfg.bins - 1)] += 1

    geo = _knn_geodesics(pts, cfg.knn_k, [start])[0]
    min_geo = geo.copy()

    while len(selected) < k_topo:
        base_h = renyi_entropy(hist, cfg.alpha)
        best_j, best_gain = None, -np.inf
        chosen = set(selected)
        for j in cand:
            if j in chosen:
                continue
            gain = 0.0
            if lam_theta:
                b = min(np.searchsorted(bin_edges, angles[j], side="right") - 1, cfg.bins - 1)
                hist[b] += 1
                gain += lam_theta * (renyi_entropy(hist, cfg.alpha) - base_h)
                hist[b] -= 1
            if lam_D:
                gain += lam_D * min_geo[j]
            if lam_d:
                gain += lam_d * renyi_entropy(weights[selected + [j]], cfg.alpha)
            if lam_c:
                dth = np.abs(angles[np.array(selected)] - angles[j])
                dth = np.minimum(dth, 2 * np.pi - dth)
                gain -= lam_c * float((dth < dtheta_min).sum())
            if gain > best_gain:
                best_gain, best_j = gain, j
        selected.append(best_j)
        b = min(np.searchsorted(bin_edges, angles[best_j], side="right") - 1, cfg.bins - 1)
        hist[b] += 1
        min_geo = np.minimum(min_geo, _knn_geodesics(pts, cfg.knn_k, [best_j])[0])
    return selected


def select_global(
    cloud: PointCloud | np.ndarray,
    weights: np.ndarray,
    already: list[int],
    k_global: int,
) -> list[int]:
    """Iteratively add argmax of w_j * (1 + d_min(x_j)) with d_min recomputed
    against the growing selected set; ties break toward the lowest index."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    n = len(pts)
    selected = list(already)
    out: list[int] = []
    if k_global == 0:
        return out
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))
    d_min = dist[:, selected].min(axis=1) if selected else np.full(n, np.inf)
    for _ in range(k_global):
        score = weights * (1.0 + d_min)
        score[selected + out] = -np.inf
        j = int(score.argmax())  # argmax returns the first (lowest) index on ties
        out.append(j)
        d_min = np.minimum(d_min, dist[:, j])
    return out


def loop_angles(pts: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Angular coordinate around the dominant loop for every point.

    The planar projection is fit on the mid-scale candidate subset (the points
    crowding the loop itself) so the atan2 angle winds around that loop rather
    than around the global principal plane; the projection is then applied to
    the whole cloud.
    """
    sub = pts[candidates]
    if len(sub) < 3:
        return circular_coordinates(pts)
    center = sub.mean(axis=0)
    _, svals, vecs = np.linalg.svd(sub - center, full_matrices=False)
    if len(svals) < 2 or svals[1] < 1e-12 * max(svals[0], 1e-300):
        return circular_coordinates(pts)
    proj = (pts - center) @ vecs[:2].T
    return np.mod(np.arctan2(proj[:, 1], proj[:, 0]), 2 * np.pi)


def select_representatives(
    cloud: PointCloud | np.ndarray,
    diag: PersistenceDiagram,
    cfg: SelectionConfig,
) -> RepresentativeSet:
    """Full two-stage selection: topological candidates then global coverage."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    weights = density_weights(pts, cfg.alpha)
    cand, no_loop = candidate_set(pts, diag)
    angles = loop_angles(pts, cand)
    topo = select_topological(pts, cand, weights, angles, cfg)
    glob = select_global(pts, weights, topo, cfg.k_global)
    indices = tuple(topo + glob)
    prov = tuple(["topo"] * len(topo) + ["global"] * len(glob))
    return RepresentativeSet(
        indices=indices,
        provenance=prov,
        weights=weights,
        angles=angles,
        config=cfg,
        no_loop=no_loop,
    )
