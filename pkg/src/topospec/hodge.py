"""Hodge Laplacians, spectra, projectors, persistent Laplacians, and the
gap-persistence bound checker.

All eigensolves are dense symmetric decompositions; desk-scale complexes stay
well under a few hundred simplices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import PointCloud
from .persistence import Filtration, compute_persistence, rips_filtration
from .serialize import write_csv

DEFAULT_TAU0_REL = 1e-8  # kernel tolerance relative to the largest eigenvalue


@dataclass(frozen=True)
class HodgeSpectrum:
    eigenvalues: np.ndarray  # ascending
    tau0: float
    beta_k: int
    gap: float | None  # first eigenvalue above tau0, absent if none

    def to_csv(self, path) -> None:
        write_csv(path, ("index", "eigenvalue"), list(enumerate(self.eigenvalues)))


@dataclass(frozen=True)
class PersistentLaplacian:
    source: float
    target: float
    matrix: np.ndarray

    def __post_init__(self):
        if self.target < self.source:
            raise ValueError("target radius must be >= source radius")
        m = self.matrix
        if m.size and np.abs(m - m.T).max() > 1e-9:
            raise ValueError("persistent Laplacian must be Hermitian")
        if m.size and np.linalg.eigvalsh(m).min() < -1e-8:
            raise ValueError("persistent Laplacian must be PSD")


def laplacian_k(B_k: np.ndarray | None, B_k1: np.ndarray | None) -> np.ndarray:
    """L_k = B_k^T B_k + B_{k+1} B_{k+1}^T; either side may be absent at the
    ends of the complex."""
    if B_k is None and B_k1 is None:
        raise ValueError("need at least one incidence matrix")
    down = None if B_k is None else np.asarray(B_k).T @ np.asarray(B_k)
    up = None if B_k1 is None else np.asarray(B_k1) @ np.asarray(B_k1).T
    if down is not None and up is not None:
        if down.shape != up.shape:
            raise ValueError(f"dimension mismatch: down {down.shape}, up {up.shape}")
        return down + up
    return down if down is not None else up


def spectrum(L: np.ndarray, tau0: float | None = None) -> HodgeSpectrum:
    """Dense symmetric eigendecomposition with kernel count and first gap.

    tau0 defaults to 1e-8 relative to the largest eigenvalue magnitude.
    """
    L = np.asarray(L, dtype=float)
    if L.size == 0:
        return HodgeSpectrum(eigenvalues=np.zeros(0), tau0=0.0, beta_k=0, gap=None)
    if np.abs(L - L.T).max() > 1e-9 * max(1.0, np.abs(L).max()):
        raise ValueError("input matrix is not symmetric")
    ev = np.linalg.eigvalsh((L + L.T) / 2.0)
    if tau0 is None:
        scale = max(float(np.abs(ev).max()), 1.0)
        tau0 = DEFAULT_TAU0_REL * scale
    beta = int(np.sum(ev <= tau0))
    above = ev[ev > tau0]
    gap = float(above[0]) if len(above) else None
    return HodgeSpectrum(eigenvalues=ev, tau0=float(tau0), beta_k=beta, gap=gap)


def hodge_projectors(
    B_k: np.ndarray | None, B_k1: np.ndarray | None, dim: int | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(P_grad, P_harm, P_curl) on k-chains via Moore-Penrose pseudoinverses."""
    if B_k is not None:
        dim = np.asarray(B_k).shape[1]
    elif B_k1 is not None:
        dim = np.asarray(B_k1).shape[0]
    elif dim is None:
        raise ValueError("need an incidence matrix or an explicit dimension")
    ident = np.eye(dim)
    if B_k is None:
        P_grad = np.zeros((dim, dim))
    else:
        Bk = np.asarray(B_k, dtype=float)
        P_grad = Bk.T @ np.linalg.pinv(Bk @ Bk.T) @ Bk
    if B_k1 is None:
        P_curl = np.zeros((dim, dim))
    else:
        Bk1 = np.asarray(B_k1, dtype=float)
        P_curl = Bk1 @ np.linalg.pinv(Bk1.T @ Bk1) @ Bk1.T
    P_harm = ident - P_grad - P_curl
    return P_grad, P_harm, P_curl


# ---------------------------------------------------------------------------
# simplicial complexes at fixed radius (clique-free, straight from filtration)
# ---------------------------------------------------------------------------


def boundary_matrix(
    simp_k: list[tuple[int, ...]], simp_km1: list[tuple[int, ...]]
) -> np.ndarray:
    """Signed boundary with the orientation induced by sorted vertex order."""
    idx = {s: i for i, s in enumerate(simp_km1)}
    B = np.zeros((len(simp_km1), len(simp_k)), dtype=float)
    for j, s in enumerate(simp_k):
        for pos in range(len(s)):
            face = s[:pos] + s[pos + 1 :]
            B[idx[face], j] = (-1.0) ** pos
    return B


def complex_at(filt: Filtration, eps: float) -> dict[int, list[tuple[int, ...]]]:
    """Simplices of each dimension present at radius eps, in sorted order."""
    out: dict[int, list[tuple[int, ...]]] = {0: [], 1: [], 2: []}
    for verts, r in filt.simplices:
        if r <= eps:
            out[len(verts) - 1].append(verts)
    for k in out:
        out[k].sort()
    return out


def laplacian_at(filt: Filtration, eps: float, p: int) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Dense p-Laplacian of the complex at radius eps, with its p-simplex basis."""
    cx = complex_at(filt, eps)
    simp_p = cx[p]
    if not simp_p:
        return np.zeros((0, 0)), simp_p
    L = np.zeros((len(simp_p), len(simp_p)))
    if p >= 1 and cx[p - 1]:
        Bp = boundary_matrix(simp_p, cx[p - 1])
        L += Bp.T @ Bp
    if p + 1 <= 2 and cx[p + 1]:
        Bp1 = boundary_matrix(cx[p + 1], simp_p)
        L += Bp1 @ Bp1.T
    return L, simp_p


def betti_at(filt: Filtration, eps: float, p: int, tau0: float | None = None) -> int:
    L, simp_p = laplacian_at(filt, eps, p)
    if not simp_p:
        return 0
    return spectrum(L, tau0).beta_k


# ---------------------------------------------------------------------------
# persistent Laplacian via Schur complement
# ---------------------------------------------------------------------------


def persistent_laplacian(filt: Filtration, s: float, t: float, p: int) -> PersistentLaplacian:
    """Persistent p-Laplacian between the complexes at radii s <= t.

    The up-part is the Schur complement of the K_t up-Laplacian onto the K_s
    p-chain block (eliminating p-chains new at t, with a pseudoinverse when
    the elimination block is singular); the down-part is that of K_s.
    """
    if t < s:
        raise ValueError("need s <= t")
    cx_s = complex_at(filt, s)
    cx_t = complex_at(filt, t)
    simp_s = cx_s[p]
    simp_t = cx_t[p]
    ns = len(simp_s)
    old = [i for i, sp in enumerate(simp_t) if sp in set(simp_s)]
    if len(old) != ns:
        raise ValueError("K_s is not a subcomplex of K_t")
    new = [i for i in range(len(simp_t)) if i not in set(old)]

    if p + 1 <= 2 and cx_t[p + 1]:
        Bp1 = boundary_matrix(cx_t[p + 1], simp_t)
        up_t = Bp1 @ Bp1.T
    else:
        up_t = np.zeros((len(simp_t), len(simp_t)))
    A = up_t[np.ix_(old, old)]
    if new:
        Bblk = up_t[np.ix_(old, new)]
        C = up_t[np.ix_(new, new)]
        up_pers = A - Bblk @ np.linalg.pinv(C) @ Bblk.T
    else:
        up_pers = A

    if p >= 1 and cx_s[p - 1] and ns:
        Bp_s = boundary_matrix(simp_s, cx_s[p - 1])
        down_s = Bp_s.T @ Bp_s
    else:
        down_s = np.zeros((ns, ns))
    mat = up_pers + down_s
    return PersistentLaplacian(source=s, target=t, matrix=(mat + mat.T) / 2.0)


# ---------------------------------------------------------------------------
# gap-persistence bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    birth: float
    death: float
    lipschitz: float
    d_p_max_cofacets: int  # max p-simplices over a (p-1)-simplex at K_death
    d_p_max_faces: int  # faces per p-simplex (p+1 when any p-simplex exists)
    lambda_at_birth: float  # smallest eigenvalue above tau0 of Delta_p(K_birth)
    lhs: float
    rhs: float
    slack: float
    holds: bool

    def as_dict(self) -> dict:
        return {
            "birth": self.birth,
            "death": self.death,
            "lipschitz": self.lipschitz,
            "d_p_max_cofacets": self.d_p_max_cofacets,
            "d_p_max_faces": self.d_p_max_faces,
            "lambda_at_birth": self.lambda_at_birth,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "holds": self.holds,
        }


def _padded_norm_diff(La: np.ndarray, basis_a, Lb: np.ndarray, basis_b) -> float:
    """Spectral norm of the difference, embedding the smaller chain space
    into the larger one with zero blocks."""
    all_basis = sorted(set(basis_a) | set(basis_b))
    idx = {s: i for i, s in enumerate(all_basis)}
    n = len(all_basis)
    Pa = np.zeros((n, n))
    Pb = np.zeros((n, n))
    ia = [idx[s] for s in basis_a]
    ib = [idx[s] for s in basis_b]
    if basis_a:
        Pa[np.ix_(ia, ia)] = La
    if basis_b:
        Pb[np.ix_(ib, ib)] = Lb
    if n == 0:
        return 0.0
    return float(np.linalg.norm(Pb - Pa, ord=2))


def empirical_lipschitz(filt: Filtration, b: float, d: float, p: int) -> float:
    """Max over consecutive critical radii in [b, d] of
    ||Delta_p(K_{t+}) - Delta_p(K_t)||_2 / (t+ - t)."""
    radii = [r for r in filt.critical_radii() if b - 1e-12 <= r <= d + 1e-12]
    best = 0.0
    for r0, r1 in zip(radii, radii[1:]):
        if r1 - r0 <= 1e-15:
            continue
        L0, s0 = laplacian_at(filt, r0, p)
        L1, s1 = laplacian_at(filt, r1, p)
        best = max(best, _padded_norm_diff(L0, s0, L1, s1) / (r1 - r0))
    return best


def _d_p_max(filt: Filtration, eps: float, p: int) -> tuple[int, int]:
    """Both readings of d_{p,max} at radius eps: (max cofacet count over
    (p-1)-simplices, faces per p-simplex)."""
    cx = complex_at(filt, eps)
    simp_p = cx[p]
    simp_pm1 = cx[p - 1] if p >= 1 else []
    faces = (p + 1) if simp_p else 0
    counts: dict[tuple[int, ...], int] = {s: 0 for s in simp_pm1}
    for s in simp_p:
        for pos in range(len(s)):
            face = s[:pos] + s[pos + 1 :]
            if face in counts:
                counts[face] += 1
    cofacets = max(counts.values()) if counts else 0
    return cofacets, faces


def verify_gap_persistence_bound(
    cloud: PointCloud | np.ndarray, p: int = 1, eps_max: float | None = None
) -> list[BoundReport]:
    """Check L~ (d-b) + (p+1) d_{p,max} >= lambda_{beta_p + 1}(Delta_p(K_b))
    for every finite H_p pair of the cloud's Rips filtration.

    d_{p,max} is evaluated at the death radius under both wordings (cofacet
    count and face count); the larger enters the bound and both are reported.
    lambda at birth is the smallest eigenvalue above the kernel tolerance.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if len(pts) > 12:
        raise ValueError("bound checker is limited to clouds of <= 12 points")
    if eps_max is None:
        diff = pts[:, None, :] - pts[None, :, :]
        eps_max = float(np.sqrt((diff**2).sum(axis=-1)).max()) * 1.0001
        eps_max = max(eps_max, 1e-12)  # degenerate single-point clouds
    filt = rips_filtration(pts, eps_max=eps_max)
    diag = compute_persistence(filt)
    reports: list[BoundReport] = []
    for b, d in diag.in_dim(p, finite_only=True):
        L_b, simp_b = laplacian_at(filt, b, p)
        spec_b = spectrum(L_b) if simp_b else None
        lam = spec_b.gap if spec_b is not None and spec_b.gap is not None else 0.0
        lip = empirical_lipschitz(filt, b, d, p) if d > b else 0.0
        cof, fac = _d_p_max(filt, d, p)
        dmax = max(cof, fac)
        lhs = lip * (d - b) + (p + 1) * dmax
        rhs = lam
        reports.append(
            BoundReport(
                birth=b,
                death=d,
                lipschitz=lip,
                d_p_max_cofacets=cof,
                d_p_max_faces=fac,
                lambda_at_birth=rhs,
                lhs=lhs,
                rhs=rhs,
                slack=lhs - rhs,
                holds=lhs >= rhs - 1e-9,
            )
        )
    return reports
