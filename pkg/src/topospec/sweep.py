"""Rayleigh-parameter sweep: per-rho pipeline runs, the six diagnostics, and
cross-indicator correlations."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import savgol_filter
from scipy.stats import pearsonr, spearmanr

from . import dynamics, embedding, persistence, probe, selection, spectro, topograph
from .errors import UndefinedEntropyError
from .hodge import laplacian_k
from .serialize import digest_text


def spectral_entropy(series: spectro.CorrelatorSeries) -> float:
    """Shannon entropy of the normalized Hann periodogram on the canonical grid."""
    _, power = spectro.periodogram(series)
    total = power.sum()
    if total <= 0:
        raise UndefinedEntropyError("zero total spectral power")
    p = power / total
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def curvature(e0: np.ndarray, drho: float) -> np.ndarray:
    """Second difference (E0(r+d) - 2 E0(r) + E0(r-d)) / d^2; endpoints are NaN."""
    e0 = np.asarray(e0, dtype=float)
    out = np.full_like(e0, np.nan)
    out[1:-1] = (e0[2:] - 2 * e0[1:-1] + e0[:-2]) / drho**2
    return out


def fidelity(v0: np.ndarray, v1: np.ndarray) -> float:
    """|<v0|v1>| for unit vectors; 2-D inputs are treated as orthonormal bases
    of degenerate ground spaces and compared through the largest principal
    angle (the smallest singular value of the overlap block)."""
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    if v0.ndim == 1:
        v0 = v0[:, None]
    if v1.ndim == 1:
        v1 = v1[:, None]
    d = min(v0.shape[1], v1.shape[1])
    overlap = v0[:, :d].T @ v1[:, :d]
    svals = np.linalg.svd(overlap, compute_uv=False)
    return float(np.clip(svals.min() if len(svals) else 0.0, 0.0, 1.0))


@dataclass(frozen=True)
class SweepConfig:
    # trajectory
    dt: float = 0.01
    t_trans: float = 20.0
    t_total: float = 170.0
    x0: tuple[float, float, float] = (1.0, 1.0, 1.0)
    observable: str = "x"
    # embedding (frozen across rho; tau=None resolves once on the first point;
    # the default pins the canonical-regime mutual-information choice)
    tau: int | None = 15
    m: int = 3
    cloud_stride: int | None = None  # defaults to tau
    n_fps: int = 64
    # selection
    k: int = 7
    r: float = 0.6
    alpha_sel: float = 1.5
    knn_k: int = 10
    bins: int = 12
    lambdas: tuple[float, float, float, float] = (1.0, 1.0, 0.5, 2.0)
    seed: int = 0
    # graph
    use_ring: bool = True
    eps_quantile: float = 0.3
    triangle_mode: str = "all_3_cliques"
    # spectroscopy
    m_samples: int = 256
    dt_corr: float = 0.25
    alpha_scale: float | None = None  # None = calibrate once from the sweep
    mode: str = "exact"  # exact | hadamard
    shots: int = 0
    # lyapunov
    lyap_t_total: float = 400.0
    lyap_dt: float = 0.005
    lyap_renorm: int = 20

    def digest(self) -> str:
        fields = sorted(self.__dataclass_fields__)
        text = "\n".join(f"{k} = {getattr(self, k)}" for k in fields)
        return digest_text(text)


@dataclass(frozen=True)
class SweepRecord:
    rho: float
    h_spec: float | None = None
    f_curvature: float | None = None
    fidelity_to_next: float | None = None
    lambda_max: float | None = None
    ell_max_h1: float | None = None
    gamma: float | None = None
    delta1_susy_sim: float | None = None
    beta1_hat: int | None = None
    seed: int = 0
    config_digest: str = ""
    failed_stage: str | None = None

    def as_row(self) -> tuple:
        return (
            self.rho,
            self.h_spec,
            self.f_curvature,
            self.fidelity_to_next,
            self.lambda_max,
            self.ell_max_h1,
            self.gamma,
            self.delta1_susy_sim,
            self.beta1_hat,
            self.seed,
            self.config_digest,
            self.failed_stage or "",
        )

    @staticmethod
    def header() -> tuple[str, ...]:
        return (
            "rho",
            "h_spec",
            "f_curvature",
            "fidelity_to_next",
            "lambda_max",
            "ell_max_h1",
            "gamma",
            "delta1_susy_sim",
            "beta1_hat",
            "seed",
            "config_digest",
            "failed_stage",
        )


@dataclass
class _StageResult:
    rho: float
    ell_max: float | None = None
    l1: np.ndarray | None = None
    graph: topograph.TopoGraph | None = None
    lambda_max: float | None = None
    failed_stage: str | None = None


def _pipeline_stage(rho: float, cfg: SweepConfig, tau: int) -> _StageResult:
    """Trajectory -> embedding -> persistence -> selection -> graph -> L1."""
    res = _StageResult(rho=rho)
    try:
        params = dynamics.LorenzParams(rho=rho)
        traj = dynamics.integrate(params, cfg.x0, cfg.dt, cfg.t_trans, cfg.t_total)
        series = traj.observable(cfg.observable)
    except Exception:
        res.failed_stage = "dynamics"
        return res
    try:
        emb = embedding.delay_embed(
            series, embedding.EmbeddingConfig(tau=tau, m=cfg.m, observable=cfg.observable)
        )
        stride = cfg.cloud_stride or tau
        cloud = embedding.PointCloud(emb.points[::stride])
    except Exception:
        res.failed_stage = "embedding"
        return res
    try:
        fps_idx = _farthest_point_indices(cloud.points, cfg.n_fps, cfg.seed)
        fps_pts = cloud.points[fps_idx]
        diam = embedding.PointCloud(fps_pts).diameter()
        filt = persistence.rips_filtration(fps_pts, eps_max=diam * 1.0001)
        diag = persistence.compute_persistence(filt)
        res.ell_max = persistence.max_h1_persistence(diag)
    except Exception:
        res.failed_stage = "persistence"
        return res
    try:
        sel_cfg = selection.SelectionConfig(
            k=cfg.k,
            r=cfg.r,
            alpha=cfg.alpha_sel,
            knn_k=cfg.knn_k,
            bins=cfg.bins,
            lambdas=cfg.lambdas,
            seed=cfg.seed,
        )
        reps = selection.select_representatives(cloud, diag, sel_cfg)
        coords = reps.coords(cloud)
    except Exception:
        res.failed_stage = "selection"
        return res
    try:
        # loop-localized angles carried over from selection; the ring closes
        # over the topological representatives only
        angles = reps.angles[list(reps.indices)]
        ring_v = np.array([i for i, p in enumerate(reps.provenance) if p == "topo"])
        graph = topograph.build_graph(
            coords,
            angles,
            use_ring=cfg.use_ring,
            eps_quantile=cfg.eps_quantile,
            triangle_mode=cfg.triangle_mode,
            ring_vertices=ring_v,
        )
        res.graph = graph
        res.l1 = laplacian_k(graph.B1, graph.B2 if len(graph.triangles) else None)
    except Exception:
        res.failed_stage = "graph"
        return res
    try:
        lyap = dynamics.lyapunov_max(
            params, cfg.x0, cfg.lyap_dt, cfg.lyap_t_total, cfg.lyap_renorm
        )
        res.lambda_max = lyap.lambda_max
    except Exception:
        res.failed_stage = "lyapunov"
    return res


def _farthest_point_indices(pts: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Deterministic farthest-point subsample (start at the seed-th index mod N)."""
    n_pts = len(pts)
    if n >= n_pts:
        return np.arange(n_pts)
    start = seed % n_pts
    chosen = [start]
    diff = pts[:, None, :] - pts[None, :, :] if n_pts <= 2000 else None
    if diff is not None:
        dist = np.sqrt((diff**2).sum(axis=-1))
        d_min = dist[:, start].copy()
        for _ in range(n - 1):
            nxt = int(d_min.argmax())
            chosen.append(nxt)
            d_min = np.minimum(d_min, dist[:, nxt])
    else:
        d_min = np.linalg.norm(pts - pts[start], axis=1)
        for _ in range(n - 1):
            nxt = int(d_min.argmax())
            chosen.append(nxt)
            d_min = np.minimum(d_min, np.linalg.norm(pts - pts[nxt], axis=1))
    return np.array(sorted(chosen))


def _resolve_tau(grid: list[float], cfg: SweepConfig) -> int:
    if cfg.tau is not None:
        return cfg.tau
    params = dynamics.LorenzParams(rho=grid[0])
    traj = dynamics.integrate(params, cfg.x0, cfg.dt, cfg.t_trans, cfg.t_total)
    series = traj.observable(cfg.observable)
    choice = embedding.choose_tau(series, max_lag=min(100, len(series) // 5))
    return choice.tau


def run_sweep(grid: list[float], cfg: SweepConfig) -> tuple[list[SweepRecord], dict]:
    """Run the frozen-config pipeline at every rho and correlate the
    topological persistence with the estimated spectral gap.

    Stage failures mark the record and the sweep continues. Identical configs
    produce identical records.
    """
    if not grid:
        return [], {"n_pairs": 0, "pearson_r": None, "spearman_rho": None}
    grid = sorted(grid)
    digest = cfg.digest()
    tau = _resolve_tau(grid, cfg)
    stages = [_pipeline_stage(rho, cfg, tau) for rho in grid]

    alpha = cfg.alpha_scale
    if alpha is None:
        # one calibration for the whole sweep; the circuit route guards
        # aliasing with the looser Gershgorin bound, so scale to that in
        # hadamard mode
        bound = 1.0
        for st in stages:
            if st.l1 is None:
                continue
            if cfg.mode == "hadamard":
                from .susy import onehot_hamiltonian

                bound = max(bound, onehot_hamiltonian(st.l1).gershgorin_bound())
            else:
                bound = max(bound, float(np.abs(np.linalg.eigvalsh(st.l1)).max()))
        alpha = max(bound * cfg.dt_corr / (0.8 * math.pi), 1e-12)

    t_grid = cfg.dt_corr * np.arange(cfg.m_samples)
    records: list[SweepRecord] = []
    e0_list: list[float] = []
    ground_spaces: list[np.ndarray | None] = []
    for st in stages:
        if st.l1 is None:
            records.append(
                SweepRecord(rho=st.rho, seed=cfg.seed, config_digest=digest, failed_stage=st.failed_stage)
            )
            e0_list.append(np.nan)
            ground_spaces.append(None)
            continue
        l1 = st.l1
        evals, evecs = np.linalg.eigh(l1 / alpha)
        e0 = float(evals[0])
        gamma = float(evals[1] - evals[0]) if len(evals) > 1 else None
        tau0 = 1e-8 * max(1.0, float(np.abs(evals).max()))
        kernel = evecs[:, evals <= tau0]
        ground_spaces.append(kernel if kernel.shape[1] else evecs[:, :1])
        e0_list.append(e0)

        n_edges = l1.shape[0]
        basis = np.eye(n_edges)
        weights = probe.diagonal_ensemble_weights(l1, basis)
        try:
            if cfg.mode == "exact":
                series = spectro.correlator_exact(
                    l1, None, t_grid, alpha=alpha, ensemble_weights=weights
                )
            else:
                from .susy import onehot_hamiltonian

                ham = onehot_hamiltonian(l1)
                psi = probe.w_state_vector(n_edges)
                series = spectro.correlator_hadamard(
                    ham, psi, t_grid, shots=cfg.shots, alpha=alpha, seed=cfg.seed
                )
            est = spectro.estimate(
                series,
                spectro.EstimateConfig(ensemble_dim=n_edges),
            )
            h_spec = spectral_entropy(series)
        except Exception:
            records.append(
                SweepRecord(
                    rho=st.rho,
                    lambda_max=st.lambda_max,
                    ell_max_h1=st.ell_max,
                    seed=cfg.seed,
                    config_digest=digest,
                    failed_stage="spectro",
                )
            )
            continue
        records.append(
            SweepRecord(
                rho=st.rho,
                h_spec=h_spec,
                lambda_max=st.lambda_max,
                ell_max_h1=st.ell_max,
                gamma=gamma,
                delta1_susy_sim=est.gap_hat,
                beta1_hat=est.beta1_hat,
                seed=cfg.seed,
                config_digest=digest,
                failed_stage=st.failed_stage,
            )
        )

    e0 = np.array(e0_list)
    if len(grid) >= 3 and np.isfinite(e0).all():
        drho = grid[1] - grid[0]
        curv = curvature(e0, drho)
    else:
        curv = np.full(len(grid), np.nan)
    fids = []
    for i in range(len(grid)):
        if i + 1 < len(grid) and ground_spaces[i] is not None and ground_spaces[i + 1] is not None:
            if ground_spaces[i].shape[0] == ground_spaces[i + 1].shape[0]:
                fids.append(fidelity(ground_spaces[i], ground_spaces[i + 1]))
            else:
                fids.append(None)
        else:
            fids.append(None)
    records = [
        replace(
            rec,
            f_curvature=None if math.isnan(curv[i]) else float(curv[i]),
            fidelity_to_next=fids[i],
        )
        for i, rec in enumerate(records)
    ]

    report = correlation_report(records, seed=cfg.seed)
    return records, report


def correlation_report(records: list[SweepRecord], seed: int = 0, n_perm: int = 2000) -> dict:
    """Pearson and Spearman between ell_max_H1 and the estimated gap, with
    permutation p-values and a pair-resampling bootstrap CI.

    Degenerate (constant) columns yield absent correlations rather than NaN.
    """
    pairs = [
        (r.ell_max_h1, r.delta1_susy_sim)
        for r in records
        if r.ell_max_h1 is not None and r.delta1_susy_sim is not None
    ]
    out: dict = {"n_pairs": len(pairs)}
    if len(pairs) < 3:
        out["pearson_r"] = None
        out["spearman_rho"] = None
        return out
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        out["pearson_r"] = None
        out["spearman_rho"] = None
        out["note"] = "constant diagnostic; correlation undefined"
        return out
    r = float(pearsonr(x, y).statistic)
    rho_s = float(spearmanr(x, y).statistic)
    rng = np.random.default_rng(seed)
    perm_r = np.empty(n_perm)
    perm_s = np.empty(n_perm)
    for i in range(n_perm):
        yp = rng.permutation(y)
        perm_r[i] = pearsonr(x, yp).statistic
        perm_s[i] = spearmanr(x, yp).statistic
    out["pearson_r"] = r
    out["spearman_rho"] = rho_s
    out["pearson_p_perm"] = float((np.abs(perm_r) >= abs(r)).mean())
    out["spearman_p_perm"] = float((np.abs(perm_s) >= abs(rho_s)).mean())
    boots = []
    for _ in range(1000):
        idx = rng.integers(0, len(x), len(x))
        if np.ptp(x[idx]) == 0 or np.ptp(y[idx]) == 0:
            continue
        boots.append(pearsonr(x[idx], y[idx]).statistic)
    if boots:
        lo, hi = np.percentile(boots, [2.5, 97.5])
        out["pearson_ci"] = [float(lo), float(hi)]
    return out


def smoothed_columns(records: list[SweepRecord]) -> dict[str, np.ndarray]:
    """Savitzky-Golay (window 5, order 2) smoothed copies of the exported
    observables; raw columns are never smoothed."""
    cols = {}
    for name in ("h_spec", "ell_max_h1", "gamma", "delta1_susy_sim", "lambda_max"):
        vals = np.array(
            [getattr(r, name) if getattr(r, name) is not None else np.nan for r in records]
        )
        if np.isfinite(vals).all() and len(vals) >= 5:
            cols[name + "_smooth"] = savgol_filter(vals, 5, 2)
        else:
            cols[name + "_smooth"] = vals
    return cols
