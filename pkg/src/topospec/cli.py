"""Command-line orchestration: run configs, seeds, and artifact emission.

Configs are flat ordered ``section.key = value`` documents; the sha-256
digest of the canonicalized text is stamped into every output. Exit codes:
0 pass, 1 assertion failure, 2 config error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, dynamics, embedding, persistence, probe, selection, spectro, sweep, topograph
from .errors import ConfigError, TopospecError
from .fixtures import FIVE_POINT_BETTI1, FIVE_POINT_CLOUD, FIVE_POINT_RADII
from .hodge import laplacian_k, spectrum, verify_gap_persistence_bound
from .qcompile import baseline_qpe_cost
from .serialize import digest_text, write_csv, write_json
from .susy import onehot_hamiltonian, susy_hamiltonian, verify_block_equivalence
from .sweep import SweepConfig, run_sweep


@dataclass
class RunConfig:
    """Declarative parameters for every stage plus run-level switches."""

    seed: int = 0
    out: str = "runs/out"
    mode: str = "exact"  # exact | hadamard
    shots: int = 0
    sweep: SweepConfig = None  # type: ignore[assignment]
    probe_spec: probe.ProbeSpec = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.sweep is None:
            self.sweep = SweepConfig(seed=self.seed, mode=self.mode, shots=self.shots)
        if self.probe_spec is None:
            self.probe_spec = probe.ProbeSpec()
        if self.mode not in ("exact", "hadamard"):
            raise ConfigError(f"unknown mode {self.mode}")

    def digest(self) -> str:
        return digest_text(self.canonical_text())

    def canonical_text(self) -> str:
        lines = [
            f"run.seed = {self.seed}",
            f"run.mode = {self.mode}",
            f"run.shots = {self.shots}",
        ]
        for f in sorted(fields(probe.ProbeSpec), key=lambda f: f.name):
            lines.append(f"probe.{f.name} = {getattr(self.probe_spec, f.name)}")
        for f in sorted(fields(SweepConfig), key=lambda f: f.name):
            lines.append(f"sweep.{f.name} = {getattr(self.sweep, f.name)}")
        return "\n".join(lines)


_SWEEP_FIELDS = {f.name: f for f in fields(SweepConfig)}
_PROBE_FIELDS = {f.name: f for f in fields(probe.ProbeSpec)}


def _parse_value(raw: str):
    raw = raw.strip()
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    if raw.lower() in ("none", ""):
        return None
    if raw.startswith("(") or raw.startswith("["):
        inner = raw.strip("()[]")
        return tuple(_parse_value(p) for p in inner.split(",") if p.strip())
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Flat ``section.key = value`` file; unknown keys are rejected."""
    run_kv: dict = {}
    sweep_kv: dict = {}
    probe_kv: dict = {}
    if path:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, raw = (p.strip() for p in line.split("=", 1))
            val = _parse_value(raw)
            if key.startswith("sweep."):
                name = key[len("sweep.") :]
                if name not in _SWEEP_FIELDS:
                    raise ConfigError(f"line {lineno}: unknown key {key}")
                sweep_kv[name] = val
            elif key.startswith("probe."):
                name = key[len("probe.") :]
                if name not in _PROBE_FIELDS:
                    raise ConfigError(f"line {lineno}: unknown key {key}")
                probe_kv[name] = val
            elif key.startswith("run."):
                name = key[len("run.") :]
                if name not in ("seed", "out", "mode", "shots"):
                    raise ConfigError(f"line {lineno}: unknown key {key}")
                run_kv[name] = val
            else:
                raise ConfigError(f"line {lineno}: unknown section in {key}")
    if overrides:
        run_kv.update({k: v for k, v in overrides.items() if v is not None})
    seed = int(run_kv.get("seed", 0))
    mode = run_kv.get("mode", "exact")
    shots = int(run_kv.get("shots", 0))
    sweep_kv.setdefault("seed", seed)
    sweep_kv.setdefault("mode", mode)
    sweep_kv.setdefault("shots", shots)
    if "x0" in sweep_kv and sweep_kv["x0"] is not None:
        sweep_kv["x0"] = tuple(float(v) for v in sweep_kv["x0"])
    if "lambdas" in sweep_kv and sweep_kv["lambdas"] is not None:
        sweep_kv["lambdas"] = tuple(float(v) for v in sweep_kv["lambdas"])
    try:
        probe_spec = probe.ProbeSpec(**probe_kv)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = RunConfig(
        seed=seed,
        out=str(run_kv.get("out", "runs/out")),
        mode=mode,
        shots=shots,
        sweep=SweepConfig(**sweep_kv),
        probe_spec=probe_spec,
    )
    return cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_validate_fivepoint(cfg: RunConfig, eta: float = 0.05) -> int:
    """Run the committed five-point fixture across its three radii; assert the
    Betti sequence and the radius-0.8 gap against the classical eigenvalues."""
    out = Path(cfg.out)
    digest = cfg.digest()
    pts = FIVE_POINT_CLOUD
    m_samples, dt = 256, 0.25
    t_grid = dt * np.arange(m_samples)
    results = []
    all_pass = True

    alpha = 1.0
    for eps in FIVE_POINT_RADII:
        l1, edges = _fivepoint_l1(pts, eps)
        bound = float(np.abs(np.linalg.eigvalsh(l1)).max())
        alpha = max(alpha, bound * dt / (0.8 * math.pi))

    for eps, beta_expect in zip(FIVE_POINT_RADII, FIVE_POINT_BETTI1):
        l1, edges = _fivepoint_l1(pts, eps)
        classical = spectrum(l1)
        weights = probe.diagonal_ensemble_weights(l1, np.eye(len(edges)))
        series = spectro.correlator_exact(l1, None, t_grid, alpha=alpha, ensemble_weights=weights)
        est = spectro.estimate(series, spectro.EstimateConfig(ensemble_dim=len(edges)))
        gap_ok = True
        if classical.gap is not None and est.gap_hat is not None:
            gap_ok = abs(est.gap_hat - classical.gap) / classical.gap <= eta
        elif (classical.gap is None) != (est.gap_hat is None):
            gap_ok = False
        beta_ok = est.beta1_hat == beta_expect == classical.beta_k
        all_pass &= gap_ok and beta_ok
        results.append(
            {
                "eps": eps,
                "beta1_expected": beta_expect,
                "beta1_classical": classical.beta_k,
                "beta1_hat": est.beta1_hat,
                "gap_classical": classical.gap,
                "gap_hat": est.gap_hat,
                "zero_mode_ratio": est.zero_mode_ratio,
                "pass": bool(gap_ok and beta_ok),
            }
        )
        write_csv(
            out / f"fivepoint_spectrum_eps{eps}.csv",
            ("omega", "power"),
            zip(*spectro.periodogram(series)),
        )
        series.to_csv(out / f"fivepoint_correlator_eps{eps}.csv")
    write_json(
        out / "fivepoint_report.json",
        {"digest": digest, "version": __version__, "eta": eta, "results": results},
    )
    for r in results:
        print(
            f"eps={r['eps']}: beta1 {r['beta1_hat']} (expect {r['beta1_expected']}), "
            f"gap {r['gap_hat']} vs {r['gap_classical']} -> {'PASS' if r['pass'] else 'FAIL'}"
        )
    return 0 if all_pass else 1


def _fivepoint_l1(pts: np.ndarray, eps: float):
    n = len(pts)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    edges = tuple(
        (i, j) for i, j in itertools.combinations(range(n), 2) if d[i, j] <= eps
    )
    es = set(edges)
    tris = tuple(
        t
        for t in itertools.combinations(range(n), 3)
        if all(tuple(sorted(p)) in es for p in itertools.combinations(t, 2))
        and max(d[t[0], t[1]], d[t[0], t[2]], d[t[1], t[2]]) <= eps
    )
    B1, B2 = topograph.incidence_matrices(n, edges, tris)
    return laplacian_k(B1, B2 if tris else None), edges


def _run_is_complete(out: Path, digest: str, grid: list[float]) -> bool:
    """True when a previous run with the same digest already covers the grid.

    The phase-to-energy calibration couples all grid points, so resumption is
    all-or-nothing: a complete matching run is skipped verbatim, anything
    else is recomputed.
    """
    rec_path = out / "sweep_records.csv"
    man_path = out / "manifest.json"
    if not rec_path.exists() or not man_path.exists():
        return False
    try:
        manifest = json.loads(man_path.read_text())
    except json.JSONDecodeError:
        return False
    if manifest.get("digest") != digest:
        return False
    have = {line.split(",", 1)[0] for line in rec_path.read_text().splitlines()[1:]}
    from .serialize import fmt

    return {fmt(r) for r in grid} <= have


def _hardware_correlation(records, hardware_csv: str) -> dict:
    """Join imported hardware gap values on rho and correlate with the
    classical persistence and the simulator gap (import slot only; there is
    no execution path to a device)."""
    from scipy.stats import pearsonr

    hw: dict[float, float] = {}
    lines = Path(hardware_csv).read_text().splitlines()
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) >= 2 and parts[1].strip():
            hw[float(parts[0])] = float(parts[1])
    joined = [
        (r.ell_max_h1, r.delta1_susy_sim, hw[r.rho])
        for r in records
        if r.rho in hw and r.ell_max_h1 is not None and r.delta1_susy_sim is not None
    ]
    out: dict = {"n_joined": len(joined)}
    if len(joined) >= 3:
        ell = [j[0] for j in joined]
        sim = [j[1] for j in joined]
        dev = [j[2] for j in joined]
        if len(set(dev)) > 1:
            out["pearson_h1_hw"] = float(pearsonr(ell, dev).statistic)
            out["pearson_sim_hw"] = float(pearsonr(sim, dev).statistic)
            out["mae_sim_hw"] = float(np.mean(np.abs(np.array(sim) - np.array(dev))))
    return out


def cmd_sweep(cfg: RunConfig, grid: list[float], hardware_csv: str | None = None) -> int:
    out = Path(cfg.out)
    if not grid:
        print("warning: empty grid, nothing to do")
        write_csv(out / "sweep_records.csv", sweep.SweepRecord.header(), [])
        write_json(out / "sweep_correlations.json", {"n_pairs": 0})
        return 0
    digest = cfg.digest()
    if _run_is_complete(out, digest, grid):
        print("sweep already complete for this config digest; skipping")
        return 0
    records, report = run_sweep(grid, cfg.sweep)
    write_csv(out / "sweep_records.csv", sweep.SweepRecord.header(), [r.as_row() for r in records])
    smooth = sweep.smoothed_columns(records)
    write_csv(
        out / "sweep_smoothed.csv",
        ("rho",) + tuple(smooth),
        [
            (records[i].rho,) + tuple(float(smooth[c][i]) for c in smooth)
            for i in range(len(records))
        ],
    )
    if hardware_csv:
        report = {**report, "hardware": _hardware_correlation(records, hardware_csv)}
    write_json(out / "sweep_correlations.json", report)
    write_json(
        out / "manifest.json",
        {"digest": digest, "version": __version__, "grid": list(grid), "seed": cfg.seed, "mode": cfg.mode},
    )
    for r in records:
        status = r.failed_stage or "ok"
        print(f"rho={r.rho}: ell_max={r.ell_max_h1}, gap={r.delta1_susy_sim} [{status}]")
    print(f"pearson r = {report.get('pearson_r')}")
    failed = [r for r in records if r.failed_stage]
    return 1 if failed else 0


def cmd_bound_check(cfg: RunConfig, n_clouds: int, n_points: int) -> int:
    if n_points > 12:
        raise ConfigError("bound check limited to clouds of <= 12 points")
    rng = np.random.default_rng(cfg.seed)
    out = Path(cfg.out)
    rows = []
    violations = 0
    checked = 0
    for c in range(n_clouds):
        pts = rng.uniform(0, 1, size=(n_points, 3))
        for rep in verify_gap_persistence_bound(pts, p=1):
            checked += 1
            if not rep.holds:
                violations += 1
            rows.append(
                (
                    c,
                    rep.birth,
                    rep.death,
                    rep.lipschitz,
                    rep.d_p_max_cofacets,
                    rep.d_p_max_faces,
                    rep.lambda_at_birth,
                    rep.lhs,
                    rep.rhs,
                    rep.slack,
                    rep.holds,
                )
            )
    write_csv(
        out / "bound_check.csv",
        (
            "cloud",
            "birth",
            "death",
            "lipschitz",
            "d_p_max_cofacets",
            "d_p_max_faces",
            "lambda_at_birth",
            "lhs",
            "rhs",
            "slack",
            "holds",
        ),
        rows,
    )
    write_json(
        out / "bound_summary.json",
        {
            "digest": cfg.digest(),
            "version": __version__,
            "clouds": n_clouds,
            "points": n_points,
            "pairs_checked": checked,
            "violations": violations,
        },
    )
    print(f"checked {checked} H1 pairs over {n_clouds} clouds: {violations} violations")
    return 0 if violations == 0 else 1


def cmd_compile_report(cfg: RunConfig, phase_bits: int = 6, grid_rho: float = 40.0) -> int:
    """Compile-versus-baseline gate accounting on the pipeline's edge-register
    instance at one rho."""
    out = Path(cfg.out)
    records, _ = run_sweep([grid_rho], cfg.sweep)
    rec = records[0]
    if rec.failed_stage:
        print(f"pipeline failed at stage {rec.failed_stage}")
        return 1
    stage = sweep._pipeline_stage(grid_rho, cfg.sweep, sweep._resolve_tau([grid_rho], cfg.sweep))
    ham = onehot_hamiltonian(stage.l1)
    stats = baseline_qpe_cost(ham, phase_bits)
    write_json(
        out / "compile_report.json",
        {"digest": cfg.digest(), "version": __version__, **stats.as_dict()},
    )
    print(
        f"compiled 2q = {stats.two_qubit_count}, baseline = {stats.baseline_two_qubit_count}, "
        f"ratio = {stats.ratio:.1f}"
    )
    return 0


def cmd_lorenz(cfg: RunConfig, rho: float) -> int:
    out = Path(cfg.out)
    sw = cfg.sweep
    traj = dynamics.integrate(
        dynamics.LorenzParams(rho=rho), sw.x0, sw.dt, sw.t_trans, sw.t_total
    )
    traj.to_csv(out / f"lorenz_rho{rho}.csv")
    lyap = dynamics.lyapunov_max(
        dynamics.LorenzParams(rho=rho), sw.x0, sw.lyap_dt, sw.lyap_t_total, sw.lyap_renorm
    )
    write_json(
        out / f"lyapunov_rho{rho}.json",
        {"digest": cfg.digest(), "version": __version__, "rho": rho, "lambda_max": lyap.lambda_max},
    )
    print(f"rho={rho}: lambda_max = {lyap.lambda_max:.4f}")
    return 0


def _embedded_cloud(cfg: RunConfig, rho: float):
    sw = cfg.sweep
    traj = dynamics.integrate(
        dynamics.LorenzParams(rho=rho), sw.x0, sw.dt, sw.t_trans, sw.t_total
    )
    series = traj.observable(sw.observable)
    tau = sw.tau or embedding.choose_tau(series, max_lag=min(100, len(series) // 5)).tau
    emb = embedding.delay_embed(
        series, embedding.EmbeddingConfig(tau=tau, m=sw.m, observable=sw.observable)
    )
    cloud = embedding.PointCloud(emb.points[:: (sw.cloud_stride or tau)])
    return cloud, tau


def cmd_embed(cfg: RunConfig, rho: float) -> int:
    out = Path(cfg.out)
    cloud, tau = _embedded_cloud(cfg, rho)
    cloud.to_csv(out / f"cloud_rho{rho}.csv")
    print(f"rho={rho}: tau={tau}, cloud {cloud.n} x {cloud.dim}")
    return 0


def cmd_ph(cfg: RunConfig, rho: float) -> int:
    out = Path(cfg.out)
    cloud, _ = _embedded_cloud(cfg, rho)
    idx = sweep._farthest_point_indices(cloud.points, cfg.sweep.n_fps, cfg.seed)
    pts = cloud.points[idx]
    diam = embedding.PointCloud(pts).diameter()
    diag = persistence.compute_persistence(
        persistence.rips_filtration(pts, eps_max=diam * 1.0001)
    )
    diag.to_csv(out / f"diagram_rho{rho}.csv")
    print(f"rho={rho}: ell_max_H1 = {persistence.max_h1_persistence(diag):.4f}")
    return 0


def cmd_select(cfg: RunConfig, rho: float) -> int:
    out = Path(cfg.out)
    sw = cfg.sweep
    cloud, _ = _embedded_cloud(cfg, rho)
    idx = sweep._farthest_point_indices(cloud.points, sw.n_fps, cfg.seed)
    pts = cloud.points[idx]
    diam = embedding.PointCloud(pts).diameter()
    diag = persistence.compute_persistence(
        persistence.rips_filtration(pts, eps_max=diam * 1.0001)
    )
    reps = selection.select_representatives(
        cloud,
        diag,
        selection.SelectionConfig(
            k=sw.k, r=sw.r, alpha=sw.alpha_sel, knn_k=sw.knn_k, bins=sw.bins,
            lambdas=sw.lambdas, seed=sw.seed,
        ),
    )
    reps.to_json(out / f"representatives_rho{rho}.json")
    print(f"rho={rho}: selected {list(reps.indices)}")
    return 0


def cmd_graph(cfg: RunConfig, rho: float) -> int:
    out = Path(cfg.out)
    stage = sweep._pipeline_stage(rho, cfg.sweep, sweep._resolve_tau([rho], cfg.sweep))
    if stage.graph is None:
        print(f"pipeline failed at {stage.failed_stage}")
        return 1
    stage.graph.to_json(out / f"graph_rho{rho}.json")
    stage.graph.incidence_to_csv(out / f"b1_rho{rho}.csv", out / f"b2_rho{rho}.csv")
    print(
        f"rho={rho}: |V|={stage.graph.n_vertices}, |E|={len(stage.graph.edges)}, "
        f"|T|={len(stage.graph.triangles)}, beta1={stage.graph.cycle_rank}"
    )
    return 0


def cmd_susy(cfg: RunConfig, rho: float) -> int:
    out = Path(cfg.out)
    stage = sweep._pipeline_stage(rho, cfg.sweep, sweep._resolve_tau([rho], cfg.sweep))
    if stage.graph is None:
        print(f"pipeline failed at {stage.failed_stage}")
        return 1
    ham = susy_hamiltonian(stage.graph)
    ham.to_jsonl(out / f"susy_rho{rho}.jsonl")
    rep = verify_block_equivalence(stage.graph, k_max=3)
    write_json(
        out / f"susy_equivalence_rho{rho}.json",
        {"digest": cfg.digest(), "version": __version__, "passed": rep.passed, "max_deviation": rep.max_deviation},
    )
    print(f"rho={rho}: {len(ham.terms)} terms, block equivalence {'PASS' if rep.passed else 'FAIL'}")
    return 0 if rep.passed else 1


def cmd_qpe(cfg: RunConfig, rho: float) -> int:
    """Spectroscopy of the rho instance: edge-register Laplacian readout by
    default, or the full SUSY Hamiltonian under a Dicke-weighted probe."""
    out = Path(cfg.out)
    sw = cfg.sweep
    spec = cfg.probe_spec
    stage = sweep._pipeline_stage(rho, cfg.sweep, sweep._resolve_tau([rho], cfg.sweep))
    if stage.l1 is None:
        print(f"pipeline failed at {stage.failed_stage}")
        return 1
    l1 = stage.l1
    n_edges = l1.shape[0]
    t_grid = sw.dt_corr * np.arange(sw.m_samples)
    probe_kind = spec.kind

    if spec.kind == "dicke_weighted":
        graph = stage.graph
        coords = graph.coords
        from topospec.embedding import PointCloud
        from topospec.persistence import compute_persistence, rips_filtration

        diam = PointCloud(coords).diameter()
        diag = compute_persistence(rips_filtration(coords, eps_max=diam * 1.0001))
        weights = probe.dicke_weights(graph, diag, spec.alpha_bias, spec.beta_bias, spec.eta)
        ham = susy_hamiltonian(graph)
        hdense = ham.dense()
        psi = probe.dicke_state(graph.n_vertices, weights).astype(complex)
        bound = float(np.abs(np.linalg.eigvalsh(hdense)).max())
        alpha = max(1e-12, bound * sw.dt_corr / (0.8 * math.pi))
        if cfg.mode == "hadamard":
            alpha = max(alpha, ham.gershgorin_bound() * sw.dt_corr / (0.8 * math.pi))
        probe.state_to_csv(out / f"qpe_probe_rho{rho}.csv", psi)
        if cfg.mode == "hadamard":
            series = spectro.correlator_hadamard(
                ham, psi, t_grid, shots=cfg.shots, alpha=alpha, seed=cfg.seed
            )
        elif spec.dephase_samples > 0:
            vals = probe.dephase_average(
                hdense, psi, t_grid / alpha, spec.dephase_samples, seed=cfg.seed
            )
            series = spectro.CorrelatorSeries(
                dt=sw.dt_corr, values=vals, shots=0, alpha_scale=alpha
            )
        else:
            series = spectro.correlator_exact(hdense, psi, t_grid, alpha=alpha)
        dim = None
    else:
        bound = float(np.abs(np.linalg.eigvalsh(l1)).max())
        alpha = max(1e-12, bound * sw.dt_corr / (0.8 * math.pi))
        if cfg.mode == "hadamard":
            ham = onehot_hamiltonian(l1)
            # the circuit route guards aliasing with the Gershgorin bound
            alpha = max(alpha, ham.gershgorin_bound() * sw.dt_corr / (0.8 * math.pi))
            psi = probe.w_state_vector(n_edges)
            probe.state_to_csv(out / f"qpe_probe_rho{rho}.csv", psi)
            series = spectro.correlator_hadamard(
                ham, psi, t_grid, shots=cfg.shots, alpha=alpha, seed=cfg.seed
            )
            probe_kind = "w_state"
        else:
            weights = probe.diagonal_ensemble_weights(l1, np.eye(n_edges))
            probe.state_to_csv(
                out / f"qpe_probe_rho{rho}.csv", probe.uniform_edge_state(n_edges)
            )
            series = spectro.correlator_exact(
                l1, None, t_grid, alpha=alpha, ensemble_weights=weights
            )
            probe_kind = "uniform_edge_dephased"
        dim = n_edges
    est = spectro.estimate(series, spectro.EstimateConfig(ensemble_dim=dim), bootstrap=True)
    series.to_csv(out / f"qpe_correlator_rho{rho}.csv")
    write_csv(out / f"qpe_spectrum_rho{rho}.csv", ("omega", "power"), zip(*spectro.periodogram(series)))
    write_json(
        out / f"qpe_estimate_rho{rho}.json",
        {
            "digest": cfg.digest(),
            "version": __version__,
            "probe": probe_kind,
            "mode": cfg.mode,
            **est.as_dict(),
        },
    )
    print(f"rho={rho}: beta1_hat={est.beta1_hat}, gap_hat={est.gap_hat}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _float_grid(spec_str: str) -> list[float]:
    if ":" in spec_str:
        lo, hi, step = (float(p) for p in spec_str.split(":"))
        n = int(round((hi - lo) / step)) + 1
        return [lo + i * step for i in range(n)]
    return [float(p) for p in spec_str.split(",") if p.strip()]


def main(argv: list[str] | None = None) -> int:
    # SUPPRESS keeps a subcommand's unprovided options from clobbering values
    # parsed before the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--mode", choices=("exact", "hadamard"), default=argparse.SUPPRESS)
    common.add_argument("--shots", type=int, default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="topospec", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate-fivepoint", parents=[common]).add_argument(
        "--eta", type=float, default=0.05
    )
    p = sub.add_parser("sweep", parents=[common])
    p.add_argument("--grid", default="36:42:1", help="lo:hi:step or comma list")
    p.add_argument("--hardware-csv", default=None, help="rho,gap pairs to correlate")
    p = sub.add_parser("bound-check", parents=[common])
    p.add_argument("--clouds", type=int, default=200)
    p.add_argument("--points", type=int, default=8)
    p = sub.add_parser("compile-report", parents=[common])
    p.add_argument("--phase-bits", type=int, default=6)
    p.add_argument("--rho", type=float, default=40.0)
    for name in ("lorenz", "embed", "ph", "select", "graph", "susy", "qpe"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--rho", type=float, default=28.0)

    args = parser.parse_args(argv)
    opt = vars(args)
    try:
        cfg = load_config(
            opt.get("config"),
            {k: opt.get(k) for k in ("seed", "out", "mode", "shots")},
        )
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "validate-fivepoint":
            return cmd_validate_fivepoint(cfg, eta=args.eta)
        if args.command == "sweep":
            return cmd_sweep(cfg, _float_grid(args.grid), args.hardware_csv)
        if args.command == "bound-check":
            return cmd_bound_check(cfg, args.clouds, args.points)
        if args.command == "compile-report":
            return cmd_compile_report(cfg, args.phase_bits, args.rho)
        if args.command == "lorenz":
            return cmd_lorenz(cfg, args.rho)
        if args.command == "embed":
            return cmd_embed(cfg, args.rho)
        if args.command == "ph":
            return cmd_ph(cfg, args.rho)
        if args.command == "select":
            return cmd_select(cfg, args.rho)
        if args.command == "graph":
            return cmd_graph(cfg, args.rho)
        if args.command == "susy":
            return cmd_susy(cfg, args.rho)
        if args.command == "qpe":
            return cmd_qpe(cfg, args.rho)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TopospecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
