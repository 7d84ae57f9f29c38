"""Probe states: uniform edge superposition, W/Dicke layers, topology-weighted
Dicke mixing, and randomized-phase dephasing for mixed-state emulation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TopospecError
from .persistence import PersistenceDiagram, max_h1_persistence
from .qcompile import Circuit, Gate, simulate
from .topograph import TopoGraph


@dataclass(frozen=True)
class ProbeSpec:
    kind: str = "uniform_edge"  # uniform_edge | w_state | dicke_weighted
    alpha_bias: float = 0.0
    beta_bias: float = 0.0
    eta: float = 0.0
    dephase_samples: int = 0

    def __post_init__(self):
        if self.kind not in ("uniform_edge", "w_state", "dicke_weighted"):
            raise ValueError(f"unknown probe kind {self.kind}")
        if min(self.alpha_bias, self.beta_bias, self.eta) < 0:
            raise ValueError("bias parameters must be nonnegative")


def uniform_edge_state(E: int) -> np.ndarray:
    """Equal real amplitudes 1/sqrt(E) over the E edge-basis states."""
    if E < 1:
        raise TopospecError("empty complex: no edges to superpose")
    return np.full(E, 1.0 / math.sqrt(E))


def dicke_weights(
    graph: TopoGraph,
    diag: PersistenceDiagram,
    alpha_bias: float,
    beta_bias: float,
    eta: float,
) -> np.ndarray:
    """Sector weights w_k, k = 0..n, biased by ring-edge endpoint labels and
    the degree histogram, then scaled by (1 + eta * max H1 persistence) and
    normalized so the squared weights sum to 1.

    The endpoint sums index sectors by vertex label and the degree sums by
    degree value, both taken literally; k therefore ranges over 0..n.
    """
    n = graph.n_vertices
    w = np.ones(n + 1)
    for (u, v) in graph.ring_edges():
        w[u] += alpha_bias
        w[v] += alpha_bias
    for d in graph.degrees():
        if d <= n:
            w[d] += beta_bias
    lam = max_h1_persistence(diag)
    w = (1.0 + eta * lam) * w
    return w / math.sqrt(float((w**2).sum()))


def dicke_state(n: int, weights: np.ndarray) -> np.ndarray:
    """Normalized sum_k w_k |D_k^(n)> as a dense 2^n vector.

    Exact amplitude initialization stands in for variational loading; each
    weight-k sector gets amplitude w_k / sqrt(C(n,k)) on its basis states.
    """
    if len(weights) != n + 1:
        raise ValueError("need one weight per excitation sector (n+1 values)")
    psi = np.zeros(1 << n)
    for idx in range(1 << n):
        k = bin(idx).count("1")
        psi[idx] = weights[k] / math.sqrt(math.comb(n, k))
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValueError("all sector weights are zero")
    return psi / nrm


def _ry(theta: float, q: int) -> list[Gate]:
    """RY from the fixed gate set: RZ(pi/2) RX(theta) RZ(-pi/2)."""
    return [
        Gate("RZ", target=q, theta=-math.pi / 2),
        Gate("RX", target=q, theta=theta),
        Gate("RZ", target=q, theta=math.pi / 2),
    ]


def _cry(theta: float, control: int, target: int) -> list[Gate]:
    """Controlled-RY via the two-CNOT decomposition."""
    gates = _ry(theta / 2, target)
    gates.append(Gate("CNOT", target=target, control=control))
    gates += _ry(-theta / 2, target)
    gates.append(Gate("CNOT", target=target, control=control))
    return gates


def w_state_circuit(n: int) -> Circuit:
    """Linear-depth preparation of the single-excitation Dicke state from
    |10...0>: a chain of controlled rotations splitting the amplitude evenly,
    each followed by a CNOT that moves the excitation marker."""
    if n < 1:
        raise ValueError("need at least one qubit")
    gates: list[Gate] = [Gate("X", target=0)]
    for i in range(n - 1):
        theta = 2 * math.acos(1.0 / math.sqrt(n - i))
        gates += _cry(theta, control=i, target=i + 1)
        gates.append(Gate("CNOT", target=i, control=i + 1))
    return Circuit(n_qubits=n, gates=tuple(gates), metadata={"prepares": "w_state"})


def w_state_vector(n: int) -> np.ndarray:
    circ = w_state_circuit(n)
    init = np.zeros(1 << n, dtype=complex)
    init[0] = 1.0
    return simulate(circ, init)


def dephase_average(
    hmat: np.ndarray,
    probe: np.ndarray,
    t_grid: np.ndarray,
    samples: int,
    seed: int = 0,
    excited_sets: list[tuple[int, ...]] | None = None,
    n_phase_qubits: int | None = None,
) -> np.ndarray:
    """Average the exact correlator over random single-qubit Z-phase draws.

    Each draw multiplies basis state S by exp(-i sum_{q in S} phi_q); cross
    terms between distinct basis states average to zero, so the mean
    converges to the diagonal-ensemble trace. Without an excited-set map the
    phases are drawn independently per basis component (same limit).
    """
    if samples < 1:
        raise ValueError("need at least one dephasing sample")
    rng = np.random.default_rng(seed)
    evals, evecs = np.linalg.eigh(hmat)
    acc = np.zeros(len(t_grid), dtype=complex)
    dim = len(probe)
    for _ in range(samples):
        if excited_sets is not None:
            nq = n_phase_qubits or (max((max(s, default=0) for s in excited_sets)) + 1)
            phi = rng.uniform(0, 2 * math.pi, size=nq)
            phases = np.array([np.exp(-1j * sum(phi[q] for q in s)) for s in excited_sets])
        else:
            phases = np.exp(-1j * rng.uniform(0, 2 * math.pi, size=dim))
        psi = probe * phases
        psi = psi / np.linalg.norm(psi)
        amps = np.abs(evecs.conj().T @ psi) ** 2
        acc += (amps[None, :] * np.exp(-1j * np.outer(t_grid, evals))).sum(axis=1)
    return acc / samples


def diagonal_ensemble_weights(hmat: np.ndarray, basis_states: np.ndarray) -> np.ndarray:
    """Exact dephasing limit: eigenweights a_j = mean_k |<E_j|k>|^2 over the
    given ensemble of (column) basis vectors."""
    _, evecs = np.linalg.eigh(hmat)
    overlaps = np.abs(evecs.conj().T @ basis_states) ** 2
    return overlaps.mean(axis=1)


def sector_basis_indices(n: int, excited_sets: list[tuple[int, ...]]) -> list[int]:
    """Computational-basis indices of the given excited-qubit sets."""
    return [sum(1 << q for q in s) for s in excited_sets]


def embed_sector_state(n: int, excited_sets: list[tuple[int, ...]], amplitudes: np.ndarray) -> np.ndarray:
    """Lift a sector-space vector into the full 2^n qubit space."""
    if len(excited_sets) != len(amplitudes):
        raise ValueError("one amplitude per basis set required")
    psi = np.zeros(1 << n, dtype=complex)
    for s, a in zip(excited_sets, amplitudes):
        psi[sum(1 << q for q in s)] = a
    return psi


def onehot_sets(n: int) -> list[tuple[int, ...]]:
    return [(q,) for q in range(n)]


def state_to_csv(path, amplitudes: np.ndarray) -> None:
    """Dump prepared-state amplitudes for debugging."""
    from .serialize import write_csv

    amps = np.asarray(amplitudes, dtype=complex)
    rows = [(k, a.real, a.imag) for k, a in enumerate(amps)]
    write_csv(path, ("basis_index", "re", "im"), rows)
