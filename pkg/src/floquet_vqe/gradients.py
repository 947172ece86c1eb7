"""Exact cost gradients and ensemble gradient-variance estimates.

The adjoint sweep is the production path.  Parameter-shift and central
finite differences exist to cross-check it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import (Regime, build_hea_circuit, build_mbl_circuit, sample_hea_params,
                     sample_mbl_params)
from .errors import ConfigurationError, ContractViolation
from .parallel import instance_seed, ordered_map
from .simulator import Circuit, PauliHamiltonian, adjoint_sweep, energies

# columns per batched energy evaluation are capped to keep blocks near this size
_BATCH_BYTES = 64 * 2**20

ANSATZ_KINDS = ("mbl", "hea")


@dataclass
class GradientResult:
    energy: float
    grad: np.ndarray


@dataclass
class VarianceRecord:
    num_qubits: int
    depth_blocks: int
    regime: str
    param_index: int
    num_instances: int
    variance: float
    mean: float
    seed: int


def _finite_params(circuit: Circuit, params) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (circuit.num_params,):
        raise ContractViolation(
            f"expected {circuit.num_params} parameters, got shape {params.shape}")
    if not np.all(np.isfinite(params)):
        raise ContractViolation("parameters must be finite")
    return params


def _check_hamiltonian(circuit: Circuit, hamiltonian: PauliHamiltonian) -> None:
    if circuit.num_qubits != hamiltonian.num_qubits:
        raise ContractViolation(
            f"circuit has {circuit.num_qubits} qubits, Hamiltonian {hamiltonian.num_qubits}")


def adjoint_gradient(circuit: Circuit, params, hamiltonian: PauliHamiltonian) -> GradientResult:
    """Energy and full gradient from one forward and one backward sweep."""
    params = _finite_params(circuit, params)
    _check_hamiltonian(circuit, hamiltonian)
    e, gate_grads, _ = adjoint_sweep(circuit, circuit.gate_angles(params), hamiltonian)
    return GradientResult(float(e[0]), circuit.gates_to_slots(gate_grads)[:, 0])


def _batched_energies(circuit: Circuit, angle_sets: np.ndarray,
                      hamiltonian: PauliHamiltonian) -> np.ndarray:
    """Energies for each column of ``(num_gates, K)`` angle sets, in chunks."""
    per_col = 16 * 2**circuit.num_qubits
    chunk = max(1, _BATCH_BYTES // per_col)
    out = np.empty(angle_sets.shape[1])
    for start in range(0, angle_sets.shape[1], chunk):
        cols = np.ascontiguousarray(angle_sets[:, start:start + chunk])
        out[start:start + chunk] = energies(circuit, cols, hamiltonian)
    return out


def _shift_terms(circuit: Circuit, params: np.ndarray, slots) -> tuple[np.ndarray, list]:
    base = circuit.gate_angles(params)
    cols = []
    owners = []
    for slot in slots:
        for g in np.flatnonzero(circuit._slots == slot):
            for sign in (1.0, -1.0):
                shifted = base.copy()
                shifted[g] += sign * np.pi / 2
                cols.append(shifted)
            owners.append((slot, circuit.gates[g].scale))
    if not cols:
        return np.zeros((base.size, 0)), owners
    return np.stack(cols, axis=1), owners


def parameter_shift_gradients(circuit: Circuit, params, hamiltonian: PauliHamiltonian,
                              slots=None) -> np.ndarray:
    """Two-term shift rule for every requested slot.

    Each occurrence of a slot is shifted on its own by ``+-pi/2`` in gate
    angle, and the occurrences' ``scale/2 * (E+ - E-)`` terms are summed.
    """
    params = _finite_params(circuit, params)
    _check_hamiltonian(circuit, hamiltonian)
    slots = range(circuit.num_params) if slots is None else list(slots)
    for slot in slots:
        if not 0 <= slot < circuit.num_params:
            raise ContractViolation(f"slot {slot} outside {circuit.num_params} parameters")
    angle_sets, owners = _shift_terms(circuit, params, slots)
    values = _batched_energies(circuit, angle_sets, hamiltonian)
    lookup = {slot: i for i, slot in enumerate(slots)}
    grad = np.zeros(len(slots))
    for k, (slot, scale) in enumerate(owners):
        grad[lookup[slot]] += scale * (values[2 * k] - values[2 * k + 1]) / 2
    return grad


def parameter_shift_gradient(circuit: Circuit, params, hamiltonian: PauliHamiltonian,
                             slot: int) -> float:
    return float(parameter_shift_gradients(circuit, params, hamiltonian, [slot])[0])


def finite_difference_gradient(circuit: Circuit, params, hamiltonian: PauliHamiltonian,
                               step: float = 1e-5) -> np.ndarray:
    """Central differences ``(E(p + step e_k) - E(p - step e_k)) / (2 step)``."""
    if not step > 0:
        raise ContractViolation("step must be positive")
    params = _finite_params(circuit, params)
    _check_hamiltonian(circuit, hamiltonian)
    n = circuit.num_params
    shifted = np.repeat(params[:, None], 2 * n, axis=1)
    shifted[np.arange(n), 2 * np.arange(n)] += step
    shifted[np.arange(n), 2 * np.arange(n) + 1] -= step
    values = _batched_energies(circuit, circuit.gate_angles(shifted), hamiltonian)
    return (values[0::2] - values[1::2]) / (2 * step)


def sample_instance(ansatz_kind: str, num_qubits: int, depth_blocks: int, regime: Regime | None,
                    seed, tied: bool = False) -> tuple[Circuit, np.ndarray]:
    """Circuit and initial parameters for one ensemble member."""
    if ansatz_kind == "mbl":
        if regime is None:
            raise ConfigurationError("the Floquet ansatz needs a regime")
        circuit = _mbl_circuit(num_qubits, depth_blocks)
        params = sample_mbl_params(num_qubits, depth_blocks, regime, seed, tied=tied).to_vector()
        return circuit, params
    if ansatz_kind == "hea":
        if not isinstance(seed, np.random.SeedSequence):
            seed = np.random.SeedSequence(seed)
        axis_seq, param_seq = seed.spawn(2)
        circuit = build_hea_circuit(num_qubits, depth_blocks, axis_seq)
        return circuit, sample_hea_params(circuit.num_params, param_seq)
    raise ConfigurationError(f"unknown ansatz kind {ansatz_kind!r}; expected one of {ANSATZ_KINDS}")


_CIRCUIT_CACHE: dict[tuple[int, int], Circuit] = {}


def _mbl_circuit(num_qubits: int, depth_blocks: int) -> Circuit:
    key = (num_qubits, depth_blocks)
    if key not in _CIRCUIT_CACHE:
        if len(_CIRCUIT_CACHE) > 32:
            _CIRCUIT_CACHE.clear()
        _CIRCUIT_CACHE[key] = build_mbl_circuit(num_qubits, depth_blocks)
    return _CIRCUIT_CACHE[key]


def default_param_index(ansatz_kind: str, num_qubits: int, depth_blocks: int) -> int:
    """First Floquet ZZ coupling whose gradient is not identically zero.

    From |0...0>, every gate of the first block's diagonal layer acts on a Z
    eigenstate, so its couplings only shift the global phase and their
    gradients vanish for every draw.  The first coupling of the second block
    is the earliest informative one.  For the hardware-efficient ansatz this
    is slot 0.
    """
    if ansatz_kind == "mbl" and depth_blocks >= 2:
        return 3 * num_qubits - 1
    return 0


def regime_label(ansatz_kind: str, regime: Regime | None) -> str:
    return "HEA" if ansatz_kind == "hea" else regime.label


def _variance_task(task) -> float:
    ansatz_kind, n, depth, regime, hamiltonian, param_index, seed, index, tied = task
    circuit, params = sample_instance(ansatz_kind, n, depth, regime, instance_seed(seed, index), tied)
    _, gate_grads, _ = adjoint_sweep(circuit, circuit.gate_angles(params), hamiltonian)
    return float(circuit.gates_to_slots(gate_grads)[param_index, 0])


def instance_gradients(ansatz_kind: str, num_qubits: int, depth_blocks: int, regime: Regime | None,
                       hamiltonian: PauliHamiltonian, param_index: int, num_instances: int,
                       master_seed: int, workers: int = 1, tied: bool = False) -> np.ndarray:
    """``dE/dtheta[param_index]`` for each ensemble member, in instance order."""
    tasks = [(ansatz_kind, num_qubits, depth_blocks, regime, hamiltonian, param_index,
              master_seed, i, tied) for i in range(num_instances)]
    return np.array(ordered_map(_variance_task, tasks, workers))


def gradient_variance(ansatz_kind: str, num_qubits: int, depth_blocks: int, regime: Regime | None,
                      hamiltonian: PauliHamiltonian, param_index: int = 0,
                      num_instances: int = 200, master_seed: int = 0, workers: int = 1,
                      tied: bool = False) -> VarianceRecord:
    """Unbiased sample variance of one gradient component over random initializations.

    ``param_index`` 0 is the first ZZ coupling of the first Floquet block, or
    the first rotation of the first hardware-efficient layer.
    """
    if num_instances < 2:
        raise ContractViolation("num_instances must be >= 2")
    if ansatz_kind not in ANSATZ_KINDS:
        raise ConfigurationError(f"unknown ansatz kind {ansatz_kind!r}")
    grads = instance_gradients(ansatz_kind, num_qubits, depth_blocks, regime, hamiltonian,
                               param_index, num_instances, master_seed, workers, tied)
    return VarianceRecord(num_qubits, depth_blocks, regime_label(ansatz_kind, regime), param_index,
                          num_instances, float(np.var(grads, ddof=1)), float(np.mean(grads)),
                          master_seed)
