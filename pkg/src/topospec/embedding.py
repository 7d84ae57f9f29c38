"""Delay-coordinate embedding and (tau, m) selection heuristics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, ZeroVarianceError
from .serialize import write_csv

MI_BINS = 32  # equal-width bins for the auto-mutual-information histogram
FNN_RATIO = 15.0  # Kennel distance-ratio threshold
FNN_ATOL = 2.0  # Kennel loneliness threshold (relative to series scale)


@dataclass(frozen=True)
class EmbeddingConfig:
    tau: int
    m: int
    observable: str = "x"
    normalize: bool = True

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if self.observable not in ("x", "y", "z"):
            raise ValueError("observable must be one of x, y, z")


@dataclass(frozen=True)
class PointCloud:
    """N x m matrix of embedded points; the metric is Euclidean throughout."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite entries")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def distances(self) -> np.ndarray:
        diff = self.points[:, None, :] - self.points[None, :, :]
        return np.sqrt((diff**2).sum(axis=-1))

    def diameter(self) -> float:
        return float(self.distances().max())

    def to_csv(self, path) -> None:
        write_csv(path, tuple(f"c{i}" for i in range(self.dim)), self.points)


@dataclass(frozen=True)
class TauChoice:
    tau: int
    method: str  # mi_min | mi_floor | acf_1e | max_lag
    warned: bool = False
    mi_curve: np.ndarray | None = field(default=None, compare=False)


@dataclass(frozen=True)
class DimChoice:
    m: int
    fnn_fractions: tuple[float, ...]
    warned: bool = False


def delay_embed(series: np.ndarray, cfg: EmbeddingConfig) -> PointCloud:
    """Row k is [s(k), s(k+tau), ..., s(k+(m-1)tau)].

    With normalize=True each column is rescaled to unit variance after
    construction; constant columns raise ZeroVarianceError rather than
    dividing by zero (disable normalization for constant signals).
    """
    s = np.asarray(series, dtype=float)
    span = (cfg.m - 1) * cfg.tau
    if len(s) <= span:
        raise InsufficientDataError(
            f"series length {len(s)} too short; need > {span} for m={cfg.m}, tau={cfg.tau}"
        )
    n = len(s) - span
    cols = [s[j * cfg.tau : j * cfg.tau + n] for j in range(cfg.m)]
    pts = np.stack(cols, axis=1)
    if cfg.normalize:
        sd = pts.std(axis=0)
        if np.any(sd == 0):
            raise ZeroVarianceError("constant coordinate under unit-variance normalization")
        pts = pts / sd
    return PointCloud(points=pts)


def mutual_information(s: np.ndarray, lag: int, bins: int = MI_BINS) -> float:
    """Histogram estimate of I(s_t; s_{t+lag}) in nats, bias-corrected."""
    a, b = s[:-lag], s[lag:]
    lo, hi = float(s.min()), float(s.max())
    joint, _, _ = np.histogram2d(a, b, bins=bins, range=[[lo, hi], [lo, hi]])
    n = joint.sum()
    pj = joint / n
    pa = pj.sum(axis=1)
    pb = pj.sum(axis=0)
    nz = pj > 0
    mi = float((pj[nz] * np.log(pj[nz] / np.outer(pa, pb)[nz])).sum())
    # Miller-Madow: positive bias of the plug-in estimate is ~(K-1)/(2n) per entropy
    bias = (np.count_nonzero(pj) - np.count_nonzero(pa) - np.count_nonzero(pb) + 1) / (2 * n)
    return mi - bias


def autocorrelation(s: np.ndarray, lag: int) -> float:
    a = s - s.mean()
    denom = float((a * a).sum())
    if denom == 0:
        return 1.0
    return float((a[:-lag] * a[lag:]).sum() / denom)


def _first_mi_valley(mi: np.ndarray, rel_tol: float = 0.02) -> int | None:
    """Center lag (1-based) of the first significant valley of the MI curve.

    Moves smaller than rel_tol times the curve range count as flat, so a
    plateau (e.g. a pure sinusoid's quarter-period basin) resolves to its
    center instead of a bin-noise argmin, and monotone curves yield None.
    """
    delta = rel_tol * float(mi.max() - mi.min())
    if delta == 0.0:
        return None
    descended = False
    valley_start = None
    level = mi[0]
    for k in range(1, len(mi)):
        step = mi[k] - level
        if step < -delta:
            descended = True
            valley_start = k
            level = mi[k]
        elif step > delta:
            if descended and valley_start is not None:
                return (valley_start + k - 1) // 2 + 1  # center, 1-based lags
            level = mi[k]
        elif mi[k] < level:
            level = mi[k]  # drift downward inside flat stretches
    return None


def choose_tau(series: np.ndarray, max_lag: int, *, mi_floor: float = 0.05) -> TauChoice:
    """Delay from the first minimum of the auto-mutual information.

    A flat-bottomed first valley resolves to its center lag. Falls back to
    the 1/e decorrelation lag when the MI curve has no interior minimum; if
    the autocorrelation never drops below 1/e, returns max_lag with a warning
    flag. A series whose lag-1 MI is already below mi_floor carries no usable
    dependence and gets tau=1 directly.
    """
    s = np.asarray(series, dtype=float)
    if max_lag >= len(s) / 4:
        raise ValueError("max_lag must be < length/4")
    mi = np.array([mutual_information(s, lag) for lag in range(1, max_lag + 1)])
    if mi[0] <= mi_floor:
        return TauChoice(tau=1, method="mi_floor", mi_curve=mi)
    valley = _first_mi_valley(mi)
    if valley is not None:
        return TauChoice(tau=valley, method="mi_min", mi_curve=mi)
    for lag in range(1, max_lag + 1):
        if autocorrelation(s, lag) < 1.0 / np.e:
            return TauChoice(tau=lag, method="acf_1e", mi_curve=mi)
    return TauChoice(tau=max_lag, method="max_lag", warned=True, mi_curve=mi)


def _fnn_fraction(s: np.ndarray, tau: int, m: int, subsample: int) -> float:
    """Kennel false-nearest-neighbor fraction going from dimension m to m+1."""
    span_next = m * tau
    n = len(s) - span_next
    if n < 10:
        raise InsufficientDataError(f"series too short for FNN at m={m}, tau={tau}")
    emb = np.stack([s[j * tau : j * tau + n] for j in range(m)], axis=1)
    nxt = s[m * tau : m * tau + n]
    idx = np.arange(n)
    if n > subsample:
        idx = np.linspace(0, n - 1, subsample).astype(int)
    pts = emb[idx]
    diff = pts[:, None, :] - emb[None, :, :]
    d2 = (diff**2).sum(axis=-1)
    d2[np.arange(len(idx)), idx] = np.inf
    nn = d2.argmin(axis=1)
    rm = np.sqrt(d2[np.arange(len(idx)), nn])
    scale = s.std()
    extra = np.abs(nxt[idx] - nxt[nn])
    valid = rm > 1e-8 * scale  # duplicates would divide rounding noise
    ratio_false = extra[valid] / rm[valid] > FNN_RATIO
    lonely = np.sqrt(rm[valid] ** 2 + extra[valid] ** 2) / scale > FNN_ATOL
    false = ratio_false | lonely
    return float(false.sum() / max(valid.sum(), 1))


def choose_m(
    series: np.ndarray,
    tau: int,
    m_max: int,
    fnn_threshold: float = 0.01,
    *,
    subsample: int = 1500,
) -> DimChoice:
    """Smallest m <= m_max whose false-nearest-neighbor fraction is below threshold.

    Returns m_max with a warning flag when the fraction never stabilizes
    (e.g. i.i.d. noise).
    """
    if m_max < 2:
        raise ValueError("m_max must be >= 2")
    s = np.asarray(series, dtype=float)
    fracs = []
    for m in range(1, m_max + 1):
        f = _fnn_fraction(s, tau, m, subsample)
        fracs.append(f)
        if f < fnn_threshold and m >= 2:
            return DimChoice(m=m, fnn_fractions=tuple(fracs))
    return DimChoice(m=m_max, fnn_fractions=tuple(fracs), warned=True)
