"""Connected topology-expressive graphs and their oriented incidence matrices.

The edge set is the union of a minimum spanning tree, an epsilon-neighborhood
layer, optional ring edges from angle-sorted order, and greedy patch edges
that guarantee a single component. Orientation is by increasing vertex index
and incidence entries are exact integers.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .serialize import write_csv

Edge = tuple[int, int]


@dataclass(frozen=True)
class TopoGraph:
    coords: np.ndarray  # k x m
    edges: tuple[Edge, ...]  # ordered pairs i < j, sorted
    provenance: tuple[str, ...]  # one of mst | eps | ring | patch, per edge
    triangles: tuple[tuple[int, int, int], ...]
    B1: np.ndarray = field(repr=False)  # |V| x |E|, entries in {0, +-1}
    B2: np.ndarray = field(repr=False)  # |E| x |T|

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def cycle_rank(self) -> int:
        """beta1 of the 1-skeleton: |E| - |V| + 1 for a connected graph."""
        return len(self.edges) - self.n_vertices + 1

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {i: set() for i in range(self.n_vertices)}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=int)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def ring_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e, p in zip(self.edges, self.provenance) if p == "ring")

    def to_json(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        obj = {
            "coords": self.coords.tolist(),
            "edges": [list(e) for e in self.edges],
            "provenance": list(self.provenance),
            "triangles": [list(t) for t in self.triangles],
        }
        Path(path).write_text(json.dumps(obj, indent=2) + "\n")

    def incidence_to_csv(self, b1_path, b2_path) -> None:
        write_csv(b1_path, tuple(f"e{k}" for k in range(len(self.edges))), self.B1)
        write_csv(b2_path, tuple(f"t{k}" for k in range(len(self.triangles))), self.B2)


def _mst_edges(dist: np.ndarray) -> list[Edge]:
    """Kruskal with deterministic tie-break by (length, i, j)."""
    n = len(dist)
    candidates = sorted(
        ((float(dist[i, j]), i, j) for i, j in itertools.combinations(range(n), 2))
    )
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    out: list[Edge] = []
    for _, i, j in candidates:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            out.append((i, j))
            if len(out) == n - 1:
                break
    return out


def _components(n: int, edges: set[Edge]) -> list[list[int]]:
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


def build_edges(
    coords: np.ndarray,
    angles: np.ndarray | None = None,
    use_ring: bool = True,
    eps_quantile: float = 0.3,
    ring_vertices: np.ndarray | None = None,
) -> tuple[tuple[Edge, ...], tuple[str, ...]]:
    """Union of MST, epsilon-graph, optional ring closure, and patch edges.

    The ring connects ring_vertices (default: all vertices) in angle-sorted
    order with wrap-around. Duplicate edges keep the provenance of the first
    layer that produced them (mst, eps, ring, patch in that priority).
    """
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    if n < 3:
        raise ValueError("need at least 3 vertices")
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=-1))

    layers: list[tuple[str, list[Edge]]] = []
    layers.append(("mst", _mst_edges(dist)))

    pair_d = dist[np.triu_indices(n, k=1)]
    eps = float(np.quantile(pair_d, eps_quantile))
    layers.append(
        ("eps", [(i, j) for i, j in itertools.combinations(range(n), 2) if dist[i, j] < eps])
    )

    if use_ring and angles is not None:
        ring_idx = np.arange(n) if ring_vertices is None else np.asarray(ring_vertices, dtype=int)
        if len(ring_idx) >= 3:
            order = ring_idx[np.argsort(angles[ring_idx], kind="stable")]
            ring: list[Edge] = []
            for k in range(len(order)):
                a, b = int(order[k]), int(order[(k + 1) % len(order)])
                if a != b:
                    ring.append((min(a, b), max(a, b)))
            layers.append(("ring", ring))

    edge_prov: dict[Edge, str] = {}
    for name, edges in layers:
        for e in edges:
            edge_prov.setdefault(e, name)

    while True:
        comps = _components(n, set(edge_prov))
        if len(comps) == 1:
            break
        ca, cb = comps[0], comps[1]
        best = min(
            ((float(dist[i, j]), i, j) for i in ca for j in cb),
        )
        _, i, j = best
        edge_prov.setdefault((min(i, j), max(i, j)), "patch")

    ordered = sorted(edge_prov)
    return tuple(ordered), tuple(edge_prov[e] for e in ordered)


def enumerate_triangles(
    edges: tuple[Edge, ...], mode: str = "all_3_cliques"
) -> tuple[tuple[int, int, int], ...]:
    """mode 'none' gives a pure graph (B2 = 0); 'all_3_cliques' fills every
    vertex triple whose three edges are present."""
    if mode == "none":
        return ()
    if mode != "all_3_cliques":
        raise ValueError("mode must be 'none' or 'all_3_cliques'")
    es = set(edges)
    verts = sorted({v for e in edges for v in e})
    tris = []
    for a, b, c in itertools.combinations(verts, 3):
        if (a, b) in es and (a, c) in es and (b, c) in es:
            tris.append((a, b, c))
    return tuple(tris)


def incidence_matrices(
    n_vertices: int,
    edges: tuple[Edge, ...],
    triangles: tuple[tuple[int, int, int], ...],
) -> tuple[np.ndarray, np.ndarray]:
    """Oriented incidence matrices with orientation by increasing vertex index.

    B1 has -1 at the smaller endpoint and +1 at the larger; B2 carries the
    induced boundary signs (+1, -1, +1) on edges (a,b), (a,c), (b,c) of a
    triangle (a,b,c). B1 @ B2 = 0 is verified before returning.
    """
    eidx = {e: k for k, e in enumerate(edges)}
    B1 = np.zeros((n_vertices, len(edges)), dtype=int)
    for k, (i, j) in enumerate(edges):
        if not i < j:
            raise ValueError(f"edge {(i, j)} not in i<j order")
        B1[i, k] = -1
        B1[j, k] = 1
    B2 = np.zeros((len(edges), len(triangles)), dtype=int)
    for t, (a, b, c) in enumerate(triangles):
        B2[eidx[(a, b)], t] = 1
        B2[eidx[(a, c)], t] = -1
        B2[eidx[(b, c)], t] = 1
    if triangles and np.any(B1 @ B2 != 0):
        raise AssertionError("orientation bug: B1 @ B2 != 0")
    return B1, B2


def build_graph(
    coords: np.ndarray,
    angles: np.ndarray | None = None,
    use_ring: bool = True,
    eps_quantile: float = 0.3,
    triangle_mode: str = "all_3_cliques",
    ring_vertices: np.ndarray | None = None,
) -> TopoGraph:
    edges, prov = build_edges(coords, angles, use_ring, eps_quantile, ring_vertices)
    tris = enumerate_triangles(edges, triangle_mode)
    B1, B2 = incidence_matrices(len(coords), edges, tris)
    return TopoGraph(
        coords=np.asarray(coords, dtype=float),
        edges=edges,
        provenance=prov,
        triangles=tris,
        B1=B1,
        B2=B2,
    )


def graph_from_edges(n_vertices: int, edges, triangle_mode: str = "all_3_cliques") -> TopoGraph:
    """Graph on abstract vertices (coords default to a unit circle layout)."""
    edges = tuple(sorted((min(a, b), max(a, b)) for a, b in edges))
    tris = enumerate_triangles(edges, triangle_mode)
    B1, B2 = incidence_matrices(n_vertices, edges, tris)
    theta = 2 * np.pi * np.arange(n_vertices) / max(n_vertices, 1)
    coords = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return TopoGraph(
        coords=coords,
        edges=edges,
        provenance=tuple("mst" for _ in edges),
        triangles=tris,
        B1=B1,
        B2=B2,
    )
