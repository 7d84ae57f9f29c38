import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topospec.errors import DegenerateGeometryError
from topospec.fixtures import FIVE_POINT_BETTI1, FIVE_POINT_CLOUD, FIVE_POINT_RADII
from topospec.persistence import (
    circular_coordinates,
    compute_persistence,
    max_h1_persistence,
    rips_filtration,
)


def brute_betti(points: np.ndarray, eps: float, dim: int) -> int:
    """Independent oracle: Betti number at one radius from boundary ranks."""
    n = len(points)
    d = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(-1))
    edges = [e for e in itertools.combinations(range(n), 2) if d[e] <= eps]
    eset = set(edges)
    tris = [
        t
        for t in itertools.combinations(range(n), 3)
        if all(tuple(sorted(p)) in eset for p in itertools.combinations(t, 2))
    ]
    B1 = np.zeros((n, len(edges)))
    for k, (i, j) in enumerate(edges):
        B1[i, k], B1[j, k] = -1, 1
    eidx = {e: k for k, e in enumerate(edges)}
    B2 = np.zeros((len(edges), len(tris)))
    for k, (a, b, c) in enumerate(tris):
        B2[eidx[(a, b)], k] = 1
        B2[eidx[(a, c)], k] = -1
        B2[eidx[(b, c)], k] = 1
    r1 = np.linalg.matrix_rank(B1) if edges else 0
    r2 = np.linalg.matrix_rank(B2) if tris else 0
    if dim == 0:
        return n - r1
    return len(edges) - r1 - r2


def test_two_points():
    filt = rips_filtration(np.array([[0.0, 0.0], [1.0, 0.0]]), eps_max=2.0)
    assert [s for s in filt.simplices] == [((0,), 0.0), ((1,), 0.0), ((0, 1), 1.0)]


def test_unit_square_filtration(unit_square):
    filt = rips_filtration(unit_square, eps_max=1.5)
    edges = [(v, r) for v, r in filt.simplices if len(v) == 2]
    tris = [(v, r) for v, r in filt.simplices if len(v) == 3]
    sides = [e for e in edges if abs(e[1] - 1.0) < 1e-12]
    diags = [e for e in edges if abs(e[1] - math.sqrt(2)) < 1e-12]
    assert len(sides) == 4 and len(diags) == 2
    assert len(tris) == 4
    assert all(abs(r - math.sqrt(2)) < 1e-12 for _, r in tris)


def test_five_point_counts():
    pts = FIVE_POINT_CLOUD
    filt = rips_filtration(pts, eps_max=2.0)
    at = filt.at_radius(0.8)
    v = sum(1 for s in at if len(s) == 1)
    e = sum(1 for s in at if len(s) == 2)
    t = sum(1 for s in at if len(s) == 3)
    assert (v, e, t) == (5, 4, 0)
    diag = compute_persistence(filt)
    assert diag.betti(0, 0.8) == 2  # square component + isolated apex
    for eps, b1 in zip(FIVE_POINT_RADII, FIVE_POINT_BETTI1):
        assert diag.betti(1, eps) == b1


def test_equilateral_triangle_zero_persistence():
    s = 1.0
    pts = np.array([[0, 0], [s, 0], [s / 2, s * math.sqrt(3) / 2]])
    diag = compute_persistence(rips_filtration(pts, eps_max=2.0))
    pairs = diag.in_dim(1)
    assert len(pairs) == 1
    b, d = pairs[0]
    assert b == pytest.approx(s) and d == pytest.approx(s)
    assert diag.betti(1, s) == 0
    assert diag.betti(1, 1.5) == 0


def test_unit_square_pair(unit_square):
    diag = compute_persistence(rips_filtration(unit_square, eps_max=2.0))
    finite = [(b, d) for b, d in diag.in_dim(1, finite_only=True) if d > b]
    assert len(finite) == 1
    b, d = finite[0]
    assert b == pytest.approx(1.0)
    assert d == pytest.approx(math.sqrt(2))
    assert max_h1_persistence(diag) == pytest.approx(math.sqrt(2) - 1.0)


def test_h0_infinite_bars_count_components(unit_square):
    # below the side length everything is disconnected: 4 components
    diag = compute_persistence(rips_filtration(unit_square, eps_max=0.5))
    inf_bars = [1 for b, d in diag.in_dim(0) if math.isinf(d)]
    assert len(inf_bars) == 4


def test_max_persistence_trivial_cases():
    from topospec.persistence import PersistenceDiagram

    assert max_h1_persistence(PersistenceDiagram(pairs=())) == 0.0
    diag = PersistenceDiagram(pairs=((1, 2.0, 5.0),))
    assert max_h1_persistence(diag) == 3.0


@given(seed=st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_reduction_matches_brute_force(seed):
    # all complexes on <= 6 points: diagram Betti curve == rank computation
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    pts = rng.uniform(0, 1, size=(n, 2))
    diam = float(np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)).max())
    filt = rips_filtration(pts, eps_max=diam * 1.001)
    diag = compute_persistence(filt)
    for eps in filt.critical_radii():
        for dim in (0, 1):
            assert diag.betti(dim, eps) == brute_betti(pts, eps, dim), (eps, dim)


def test_stability_under_jitter():
    rng = np.random.default_rng(42)
    pts = rng.uniform(0, 1, size=(10, 2))
    diam = float(np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)).max())
    delta = 0.009 * diam
    jit = pts + rng.uniform(-delta / math.sqrt(2), delta / math.sqrt(2), size=pts.shape)
    d0 = compute_persistence(rips_filtration(pts, eps_max=3 * diam))
    d1 = compute_persistence(rips_filtration(jit, eps_max=3 * diam))
    for dim in (0, 1):
        a = sorted(d0.in_dim(dim, finite_only=True))
        b = sorted(d1.in_dim(dim, finite_only=True))
        assert len(a) == len(b)
        for (b0, dd0), (b1, dd1) in zip(a, b):
            assert abs(b0 - b1) <= 2 * delta + 1e-12
            assert abs(dd0 - dd1) <= 2 * delta + 1e-12


def test_filtration_order_is_deterministic():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 1, size=(8, 3))
    f1 = rips_filtration(pts, eps_max=2.0)
    f2 = rips_filtration(pts.copy(), eps_max=2.0)
    assert f1.simplices == f2.simplices


def test_circular_coordinates_on_circle():
    theta = np.linspace(0, 2 * math.pi, 40, endpoint=False)
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    ang = circular_coordinates(pts)
    # monotonically ordered around the circle up to rotation/reflection
    diffs = np.diff(np.unwrap(ang))
    assert np.all(diffs > 0) or np.all(diffs < 0)


def test_circular_coordinates_translation_invariant():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(30, 3))
    ang0 = circular_coordinates(pts)
    ang1 = circular_coordinates(pts + np.array([5.0, -3.0, 2.0]))
    assert np.allclose(ang0, ang1, atol=1e-9)


def test_circular_coordinates_collinear_raises():
    pts = np.stack([np.arange(10.0), 2 * np.arange(10.0)], axis=1)
    with pytest.raises(DegenerateGeometryError):
        circular_coordinates(pts)


def test_circular_coordinates_lorenz_wing_coverage(lorenz_cloud):
    # one-wing segment still wraps all 8 angular bins
    pts = lorenz_cloud.points
    wing = pts[pts[:, 0] > 0]
    ang = circular_coordinates(wing)
    hist, _ = np.histogram(ang, bins=8, range=(0, 2 * math.pi))
    assert np.all(hist > 0)


def test_diagram_csv(tmp_path, unit_square):
    diag = compute_persistence(rips_filtration(unit_square, eps_max=2.0))
    diag.to_csv(tmp_path / "diag.csv")
    text = (tmp_path / "diag.csv").read_text()
    assert text.splitlines()[0] == "dim,birth,death"
    assert "inf" in text
