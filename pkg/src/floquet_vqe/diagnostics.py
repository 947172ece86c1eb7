"""Entanglement entropy and out-of-time-ordered correlators.

Both quantities classify circuits: localized (PM, DTC) dynamics keep the
half-chain entropy bounded and the OTOC of distant operators near one, while
thermalizing dynamics drive the entropy toward ``N/2`` bits and the OTOC to 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .ansatz import Regime
from .errors import ContractViolation, ResourceLimitError
from .gradients import ANSATZ_KINDS, regime_label, sample_instance
from .parallel import instance_seed, ordered_map
from .simulator import (DENSE_MAX_QUBITS, Circuit, StateVector, _check_params, _kernels,
                        haar_random_states, run_block, run_program, zero_block)

# basis columns evaluated together by the exact OTOC
_OTOC_CHUNK_BYTES = 32 * 2**20


class OtocMethod(enum.Enum):
    EXACT = "EXACT"
    STOCHASTIC = "STOCHASTIC"


@dataclass
class EntropyTrace:
    num_qubits: int
    regime: str
    depths: np.ndarray
    mean_entropy: np.ndarray
    std_entropy: np.ndarray
    num_instances: int
    seed: int


@dataclass
class OtocTrace:
    num_qubits: int
    regime: str
    depths: np.ndarray
    mean_otoc: np.ndarray
    stderr: np.ndarray
    num_instances: int
    method: OtocMethod
    seed: int


def entropy_of_amplitudes(amplitudes: np.ndarray, num_qubits: int, cut: int) -> float:
    """Entropy in bits between qubits ``[0, cut)`` and ``[cut, N)``."""
    if not 1 <= cut <= num_qubits - 1:
        raise ContractViolation(f"cut must lie in [1, {num_qubits - 1}], got {cut}")
    # row index = high qubits, column index = the low `cut` qubits
    mat = np.asarray(amplitudes).reshape(2 ** (num_qubits - cut), 2**cut)
    sv = np.linalg.svd(mat, compute_uv=False)
    p = sv**2
    # squared singular values below round-off carry no entropy
    p = p[p > 1e-15]
    p = p / p.sum()
    return max(0.0, float(-np.sum(p * np.log2(p))))


def von_neumann_entropy(state: StateVector, cut: int) -> float:
    """Bipartite von Neumann entropy (bits) of a pure state."""
    return entropy_of_amplitudes(state.amplitudes, state.num_qubits, cut)


def _check_even(num_qubits: int) -> None:
    if num_qubits % 2:
        raise ContractViolation(f"half-chain entropy needs an even qubit count, got {num_qubits}")


def _entropy_task(task) -> np.ndarray:
    ansatz_kind, n, max_depth, regime, seed, index, tied = task
    circuit, params = sample_instance(ansatz_kind, n, max_depth, regime, instance_seed(seed, index), tied)
    angles = circuit.gate_angles(params)[:, None]
    block = zero_block(n)
    out = np.zeros(max_depth + 1)
    for d in range(max_depth):
        run_block(circuit, block, angles, d)
        out[d + 1] = entropy_of_amplitudes(block[:, 0], n, n // 2)
    return out


def entropy_growth(ansatz_kind: str, num_qubits: int, regime: Regime | None, max_depth: int,
                   num_instances: int, master_seed: int = 0, workers: int = 1,
                   tied: bool = False) -> EntropyTrace:
    """Half-chain entropy after each block for depths ``0..max_depth``."""
    _check_even(num_qubits)
    if max_depth < 1:
        raise ContractViolation("max_depth must be >= 1")
    if num_instances < 1:
        raise ContractViolation("num_instances must be >= 1")
    tasks = [(ansatz_kind, num_qubits, max_depth, regime, master_seed, i, tied)
             for i in range(num_instances)]
    values = np.array(ordered_map(_entropy_task, tasks, workers))
    return EntropyTrace(num_qubits, regime_label(ansatz_kind, regime), np.arange(max_depth + 1),
                        values.mean(axis=0), values.std(axis=0), num_instances, master_seed)


def _pauli_code(op: str) -> int:
    try:
        return {"X": 1, "Y": 2, "Z": 3}[op.upper()]
    except (KeyError, AttributeError):
        raise ContractViolation(f"OTOC operators must be X, Y or Z, got {op!r}") from None


def _apply_pauli(block: np.ndarray, qubit: int, code: int) -> None:
    m = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]],
                 dtype=np.complex128)[code - 1][None].copy()
    _kernels.apply_1q(block, qubit, m)


def _otoc_columns(circuit: Circuit, angles: np.ndarray, block: np.ndarray, site_i: int,
                  site_j: int, code_i: int, code_j: int) -> np.ndarray:
    """``<phi| U^dag t_i U t_j U^dag t_i U t_j |phi>`` for each column ``phi``."""
    program = circuit.program
    work = block.copy()
    for _ in range(2):
        _apply_pauli(work, site_j, code_j)
        run_program(program, work, angles)
        _apply_pauli(work, site_i, code_i)
        run_program(program, work, angles, inverse=True)
    return np.einsum("ib,ib->b", block.conj(), work)


def _check_sites(circuit: Circuit, site_i: int, site_j: int) -> None:
    for s in (site_i, site_j):
        if not 0 <= s < circuit.num_qubits:
            raise ContractViolation(f"site {s} outside {circuit.num_qubits} qubits")


def otoc_exact(circuit: Circuit, params, site_i: int, site_j: int,
               op_i: str = "X", op_j: str = "X") -> float:
    """Infinite-temperature OTOC summed over every basis state."""
    n = circuit.num_qubits
    if n > DENSE_MAX_QUBITS:
        raise ResourceLimitError(
            f"exact OTOC is capped at {DENSE_MAX_QUBITS} qubits (got {n}); use otoc_stochastic")
    _check_sites(circuit, site_i, site_j)
    angles = circuit.gate_angles(_check_params(circuit, params))[:, None]
    dim = 2**n
    chunk = max(1, _OTOC_CHUNK_BYTES // (16 * dim))
    total = 0j
    for start in range(0, dim, chunk):
        cols = np.zeros((dim, min(chunk, dim - start)), dtype=np.complex128)
        cols[np.arange(start, start + cols.shape[1]), np.arange(cols.shape[1])] = 1.0
        total += _otoc_columns(circuit, angles, cols, site_i, site_j,
                               _pauli_code(op_i), _pauli_code(op_j)).sum()
    value = total / dim
    if abs(value.imag) > 1e-8:
        raise FloatingPointError(f"OTOC has imaginary residue {value.imag:.3g}")
    return float(value.real)


def otoc_stochastic(circuit: Circuit, params, site_i: int, site_j: int, op_i: str = "X",
                    op_j: str = "X", num_samples: int = 100, rng_seed=0) -> tuple[float, float]:
    """Haar-state estimate of the OTOC; returns (mean, standard error)."""
    if num_samples < 2:
        raise ContractViolation("num_samples must be >= 2")
    _check_sites(circuit, site_i, site_j)
    angles = circuit.gate_angles(_check_params(circuit, params))[:, None]
    rng = np.random.default_rng(rng_seed)
    n = circuit.num_qubits
    chunk = max(1, _OTOC_CHUNK_BYTES // (16 * 2**n))
    samples = []
    for start in range(0, num_samples, chunk):
        states = haar_random_states(n, min(chunk, num_samples - start), rng)
        samples.append(_otoc_columns(circuit, angles, states, site_i, site_j,
                                     _pauli_code(op_i), _pauli_code(op_j)).real)
    values = np.concatenate(samples)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(num_samples))


def _pauli_matrix_action(mat: np.ndarray, qubit: int, code: int, side: str) -> np.ndarray:
    """``P_q @ mat`` (side 'left') or ``mat @ P_q`` (side 'right') without forming P."""
    idx = np.arange(mat.shape[0])
    bit = (idx >> qubit) & 1
    if code == 3:
        diag = 1.0 - 2.0 * bit
        return mat * diag[:, None] if side == "left" else mat * diag[None, :]
    # P|c> = phase(c) |c ^ 2**qubit>
    flip = idx ^ (1 << qubit)
    phase = np.ones(idx.size) if code == 1 else 1j * (1.0 - 2.0 * bit)
    if side == "left":
        return phase[flip][:, None] * mat[flip]
    return mat[:, flip] * phase[None, :]


def _otoc_depth_task(task) -> np.ndarray:
    ansatz_kind, n, max_depth, regime, seed, index, tied, code_i, code_j = task
    circuit, params = sample_instance(ansatz_kind, n, max_depth, regime, instance_seed(seed, index), tied)
    angles = circuit.gate_angles(params)[:, None]
    unitary = np.eye(2**n, dtype=np.complex128)
    out = np.ones(max_depth + 1)
    site_i, site_j = 0, n - 1
    for d in range(max_depth):
        run_block(circuit, unitary, angles, d)
        out[d + 1] = _otoc_from_unitary(unitary, site_i, site_j, code_i, code_j)
    return out


def _otoc_from_unitary(unitary: np.ndarray, site_i: int, site_j: int, code_i: int,
                       code_j: int) -> float:
    """``Tr[W t_j W t_j] / 2**n`` with ``W = U^dag t_i U``."""
    w = unitary.conj().T @ _pauli_matrix_action(unitary, site_i, code_i, "left")
    wj = _pauli_matrix_action(_pauli_matrix_action(w, site_j, code_j, "left"), site_j, code_j, "right")
    return float(np.einsum("ij,ji->", w, wj).real / unitary.shape[0])


def _otoc_stochastic_task(task) -> np.ndarray:
    ansatz_kind, n, max_depth, regime, seed, index, tied, code_i, code_j, samples = task
    circuit, params = sample_instance(ansatz_kind, n, max_depth, regime, instance_seed(seed, index), tied)
    rng = np.random.default_rng([seed, index, 1])
    out = np.ones(max_depth + 1)
    for d in range(1, max_depth + 1):
        out[d], _ = otoc_stochastic(_prefix_circuit(circuit, d), params, 0, n - 1,
                                    "XYZ"[code_i - 1], "XYZ"[code_j - 1], samples, rng)
    return out


def _prefix_circuit(circuit: Circuit, depth: int) -> Circuit:
    stop = circuit.block_gate_range(depth - 1)[1]
    gates = circuit.gates[:stop]
    used = max((g.param_slot for g in gates if g.param_slot is not None), default=-1) + 1
    return Circuit(circuit.num_qubits, gates, used, depth, circuit.block_starts[:depth])


def otoc_trace(ansatz_kind: str, num_qubits: int, regime: Regime | None, max_depth: int,
               num_instances: int, master_seed: int = 0, method: OtocMethod | str | None = None,
               num_samples: int = 100, workers: int = 1, tied: bool = False,
               op_i: str = "X", op_j: str = "X") -> OtocTrace:
    """OTOC between the first and last qubit versus depth, averaged over instances.

    The exact method updates one dense unitary block by block, so each
    instance costs ``max_depth`` small matrix products.  The stochastic method
    (the default above the dense cap) re-simulates each prefix on Haar states.
    """
    if ansatz_kind not in ANSATZ_KINDS:
        raise ContractViolation(f"unknown ansatz kind {ansatz_kind!r}")
    if max_depth < 1 or num_instances < 1:
        raise ContractViolation("max_depth and num_instances must be >= 1")
    if method is None:
        method = OtocMethod.EXACT if num_qubits <= DENSE_MAX_QUBITS else OtocMethod.STOCHASTIC
    method = OtocMethod(method)
    codes = (_pauli_code(op_i), _pauli_code(op_j))
    if method is OtocMethod.EXACT:
        if num_qubits > DENSE_MAX_QUBITS:
            raise ResourceLimitError(
                f"exact OTOC is capped at {DENSE_MAX_QUBITS} qubits (got {num_qubits}); "
                "use the STOCHASTIC method (otoc_stochastic)")
        tasks = [(ansatz_kind, num_qubits, max_depth, regime, master_seed, i, tied, *codes)
                 for i in range(num_instances)]
        values = np.array(ordered_map(_otoc_depth_task, tasks, workers))
    else:
        tasks = [(ansatz_kind, num_qubits, max_depth, regime, master_seed, i, tied, *codes,
                  num_samples) for i in range(num_instances)]
        values = np.array(ordered_map(_otoc_stochastic_task, tasks, workers))
    if num_instances > 1:
        stderr = values.std(axis=0, ddof=1) / np.sqrt(num_instances)
    else:
        stderr = np.zeros(max_depth + 1)
    return OtocTrace(num_qubits, regime_label(ansatz_kind, regime), np.arange(max_depth + 1),
                     values.mean(axis=0), stderr, num_instances, method, master_seed)
