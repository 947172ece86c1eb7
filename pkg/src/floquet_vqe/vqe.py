"""Ground-state search for the open XXZ chain with ADAM-driven VQE."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import Regime
from .diagnostics import entropy_of_amplitudes
from .errors import ContractViolation, NonFiniteError
from .gradients import ANSATZ_KINDS, regime_label, sample_instance
from .parallel import instance_seed, ordered_map
from .simulator import DENSE_MAX_QUBITS, PauliHamiltonian, _check_qubit_count, adjoint_sweep


@dataclass(frozen=True)
class XxzSpec:
    """``H = -J sum (X_i X_{i+1} + Y_i Y_{i+1}) + Delta sum Z_i Z_{i+1}`` on an open chain."""

    num_qubits: int
    J: float = 1.0
    Delta: float = 1.0

    def __post_init__(self):
        if self.num_qubits < 2:
            raise ContractViolation(f"the XXZ chain needs >= 2 qubits, got {self.num_qubits}")
        if not (np.isfinite(self.J) and np.isfinite(self.Delta)):
            raise ContractViolation("XXZ couplings must be finite")


def build_xxz(spec: XxzSpec) -> PauliHamiltonian:
    n = spec.num_qubits
    terms = []
    for i in range(n - 1):
        for pauli, coeff in (("X", -spec.J), ("Y", -spec.J), ("Z", spec.Delta)):
            word = ["I"] * n
            word[i] = word[i + 1] = pauli
            terms.append((float(coeff), "".join(word)))
    return PauliHamiltonian(n, tuple(terms))


def exact_ground_energy(hamiltonian: PauliHamiltonian) -> float:
    """Smallest eigenvalue by dense diagonalization.

    Hamiltonians with an even number of Y factors in every term are real
    symmetric, which halves the memory of the eigensolver.
    """
    _check_qubit_count(hamiltonian.num_qubits, DENSE_MAX_QUBITS)
    mat = hamiltonian.to_matrix()
    if all(word.count("Y") % 2 == 0 for _, word in hamiltonian.terms):
        mat = np.ascontiguousarray(mat.real)
    return float(np.linalg.eigvalsh(mat)[0])


@dataclass
class AdamState:
    num_params: int
    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: np.ndarray = field(default=None)
    second_moment: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.first_moment is None:
            self.first_moment = np.zeros(self.num_params)
        if self.second_moment is None:
            self.second_moment = np.zeros(self.num_params)
        if self.first_moment.shape != (self.num_params,) or self.second_moment.shape != (self.num_params,):
            raise ContractViolation("ADAM moments must match num_params")


def adam_step(state: AdamState, params, grad, learning_rate: float | None = None) -> np.ndarray:
    """One bias-corrected ADAM update; mutates ``state`` and returns new parameters.

    ``learning_rate`` overrides the state's base rate for this step only.
    """
    params = np.asarray(params, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if params.shape != (state.num_params,) or grad.shape != (state.num_params,):
        raise ContractViolation(
            f"expected {state.num_params} parameters and gradients, got {params.shape} and {grad.shape}")
    if not np.all(np.isfinite(grad)):
        bad = np.flatnonzero(~np.isfinite(grad))
        raise NonFiniteError(f"non-finite gradient at step {state.step_count + 1}, slots {bad[:8].tolist()}")
    eta = state.learning_rate if learning_rate is None else learning_rate
    state.step_count += 1
    state.first_moment = state.beta1 * state.first_moment + (1 - state.beta1) * grad
    state.second_moment = state.beta2 * state.second_moment + (1 - state.beta2) * grad**2
    m_hat = state.first_moment / (1 - state.beta1**state.step_count)
    v_hat = state.second_moment / (1 - state.beta2**state.step_count)
    return params - eta * m_hat / (np.sqrt(v_hat) + state.eps)


def cosine_rate(base: float, iteration: int, num_iterations: int) -> float:
    """Cosine decay from ``base`` to 0 across the run."""
    if num_iterations <= 0:
        return base
    return 0.5 * base * (1 + np.cos(np.pi * iteration / num_iterations))


@dataclass
class OptimRun:
    regime: str
    iterations: np.ndarray
    mean_cost: np.ndarray
    cost_variance: np.ndarray
    mean_entropy: np.ndarray
    entropy_variance: np.ndarray
    num_instances: int
    exact_ground_energy: float
    seed: int


@dataclass(frozen=True)
class VqeSettings:
    ansatz_kind: str
    num_qubits: int
    depth_blocks: int
    regime: Regime | None
    hamiltonian: PauliHamiltonian
    num_iterations: int
    learning_rate: float = 0.05
    cosine: bool = False
    tied: bool = False


def optimize_instance(settings: VqeSettings, circuit, params: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ADAM loop for one instance; returns (costs, half-chain entropies, final params).

    Entry ``t`` of the traces is measured before update ``t + 1``, so a run
    of ``num_iterations`` steps yields ``num_iterations + 1`` points.
    """
    n = settings.num_qubits
    steps = settings.num_iterations
    adam = AdamState(circuit.num_params, settings.learning_rate)
    costs = np.empty(steps + 1)
    entropies = np.empty(steps + 1)
    for t in range(steps + 1):
        e, gate_grads, final = adjoint_sweep(circuit, circuit.gate_angles(params), settings.hamiltonian)
        costs[t] = e[0]
        entropies[t] = entropy_of_amplitudes(final[:, 0], n, n // 2)
        if t == steps:
            break
        rate = cosine_rate(settings.learning_rate, t, steps) if settings.cosine else None
        params = adam_step(adam, params, circuit.gates_to_slots(gate_grads)[:, 0], rate)
    return costs, entropies, params


def _vqe_task(task) -> tuple[np.ndarray, np.ndarray]:
    settings, seed, index = task
    circuit, params = sample_instance(settings.ansatz_kind, settings.num_qubits, settings.depth_blocks,
                                      settings.regime, instance_seed(seed, index), settings.tied)
    try:
        costs, entropies, _ = optimize_instance(settings, circuit, params)
    except NonFiniteError as exc:
        raise NonFiniteError(f"instance {index}: {exc}") from exc
    return costs, entropies


def run_vqe(ansatz_kind: str, num_qubits: int, depth_blocks: int, regime: Regime | None,
            xxz_spec: XxzSpec, num_iterations: int = 200, num_instances: int = 100,
            master_seed: int = 0, workers: int = 1, learning_rate: float = 0.05,
            cosine: bool = False, tied: bool = False) -> OptimRun:
    """Optimize ``num_instances`` random initializations and aggregate per iteration.

    Variances across instances use the population (``ddof=0``) convention.
    """
    if ansatz_kind not in ANSATZ_KINDS:
        raise ContractViolation(f"unknown ansatz kind {ansatz_kind!r}")
    if num_iterations < 0 or num_instances < 1:
        raise ContractViolation("num_iterations must be >= 0 and num_instances >= 1")
    if xxz_spec.num_qubits != num_qubits:
        raise ContractViolation("XXZ spec and ansatz disagree on the qubit count")
    if num_qubits % 2:
        raise ContractViolation(f"half-chain entropy needs an even qubit count, got {num_qubits}")
    hamiltonian = build_xxz(xxz_spec)
    ground = exact_ground_energy(hamiltonian)
    settings = VqeSettings(ansatz_kind, num_qubits, depth_blocks, regime, hamiltonian,
                           num_iterations, learning_rate, cosine, tied)
    results = ordered_map(_vqe_task, [(settings, master_seed, i) for i in range(num_instances)], workers)
    costs = np.array([r[0] for r in results])
    entropies = np.array([r[1] for r in results])
    return OptimRun(regime_label(ansatz_kind, regime), np.arange(num_iterations + 1),
                    costs.mean(axis=0), costs.var(axis=0), entropies.mean(axis=0),
                    entropies.var(axis=0), num_instances, ground, master_seed)
