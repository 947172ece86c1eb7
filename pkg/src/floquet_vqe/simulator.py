"""Exact statevector simulation of parameterized qubit circuits.

Conventions used throughout the package:

* qubit 0 is the least significant bit of a computational-basis index;
* rotations use half angles, ``RX(a) = exp(-i a X / 2)`` and
  ``RZZ(a) = exp(-i a Z(x)Z / 2)``, where a gate's angle is
  ``scale * params[param_slot]``;
* Pauli words are indexed by qubit, ``word[k]`` acts on qubit ``k``.

Internally every state is held as a ``(2**n, B)`` block so that batches of
states (basis columns for dense unitaries, Haar samples, finite-difference
shifts) share the same kernels as single states.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable

import numpy as np

from . import _kernels
from .errors import ContractViolation, ResourceLimitError

MAX_QUBITS = 20
DENSE_MAX_QUBITS = 12
# keep per-op checkpoints for the adjoint sweep while they fit in this budget
_CHECKPOINT_BYTES = 256 * 2**20

PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


class GateKind(enum.Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    RZZ = "RZZ"
    CNOT = "CNOT"
    FIXED_X = "FIXED_X"
    FIXED_SINGLE_QUBIT_UNITARY = "FIXED_SINGLE_QUBIT_UNITARY"

    @property
    def parameterized(self) -> bool:
        return self in _PARAMETERIZED

    @property
    def arity(self) -> int:
        return 2 if self in (GateKind.RZZ, GateKind.CNOT) else 1


_PARAMETERIZED = frozenset({GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.RZZ})
_DIAGONAL = frozenset({GateKind.RZ, GateKind.RZZ})
_ROTATION_GENERATOR = {GateKind.RX: "X", GateKind.RY: "Y", GateKind.RZ: "Z"}


@dataclass(frozen=True)
class Gate:
    """One circuit operation.

    Parameterized kinds read ``scale * params[param_slot]`` as their angle.
    ``matrix`` holds the row-major entries of a 2x2 unitary and is only used
    by ``FIXED_SINGLE_QUBIT_UNITARY``.
    """

    kind: GateKind
    targets: tuple[int, ...]
    param_slot: int | None = None
    scale: float = 1.0
    matrix: tuple[complex, complex, complex, complex] | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.targets) != self.kind.arity:
            raise ContractViolation(
                f"{self.kind.value} takes {self.kind.arity} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ContractViolation(f"repeated target in {self.targets}")
        if min(self.targets) < 0:
            raise ContractViolation(f"negative qubit index in {self.targets}")
        if self.kind.parameterized:
            if self.param_slot is None or self.param_slot < 0:
                raise ContractViolation(f"{self.kind.value} needs a parameter slot")
            if not np.isfinite(self.scale):
                raise ContractViolation("gate scale must be finite")
        elif self.param_slot is not None:
            raise ContractViolation(f"{self.kind.value} is fixed and takes no parameter slot")
        if self.kind is GateKind.FIXED_SINGLE_QUBIT_UNITARY:
            if self.matrix is None or len(self.matrix) != 4:
                raise ContractViolation("fixed unitary needs four matrix entries")
            m = np.asarray(self.matrix, dtype=np.complex128).reshape(2, 2)
            if not np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12):
                raise ContractViolation("fixed single-qubit matrix is not unitary")
            object.__setattr__(self, "matrix", tuple(complex(v) for v in self.matrix))

    @property
    def generator(self) -> str | None:
        """Pauli word of the rotation generator on ``targets``, e.g. ``"ZZ"``."""
        if self.kind is GateKind.RZZ:
            return "ZZ"
        return _ROTATION_GENERATOR.get(self.kind)

    def local_unitary(self, angle: float = 0.0) -> np.ndarray:
        """Matrix on the gate's own targets (first target = least significant bit)."""
        if self.kind in _ROTATION_GENERATOR:
            p = PAULI[_ROTATION_GENERATOR[self.kind]]
            return np.cos(angle / 2) * PAULI["I"] - 1j * np.sin(angle / 2) * p
        if self.kind is GateKind.RZZ:
            zz = np.diag([1.0, -1.0, -1.0, 1.0]).astype(np.complex128)
            return np.cos(angle / 2) * np.eye(4) - 1j * np.sin(angle / 2) * zz
        if self.kind is GateKind.CNOT:
            # basis index = control + 2 * target
            return np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]],
                            dtype=np.complex128)
        if self.kind is GateKind.FIXED_X:
            return PAULI["X"].copy()
        return np.asarray(self.matrix, dtype=np.complex128).reshape(2, 2)


def rx(qubit: int, slot: int, scale: float = 1.0) -> Gate:
    return Gate(GateKind.RX, (qubit,), slot, scale)


def ry(qubit: int, slot: int, scale: float = 1.0) -> Gate:
    return Gate(GateKind.RY, (qubit,), slot, scale)


def rz(qubit: int, slot: int, scale: float = 1.0) -> Gate:
    return Gate(GateKind.RZ, (qubit,), slot, scale)


def rzz(q0: int, q1: int, slot: int, scale: float = 1.0) -> Gate:
    return Gate(GateKind.RZZ, (q0, q1), slot, scale)


def cnot(control: int, target: int) -> Gate:
    return Gate(GateKind.CNOT, (control, target))


# --------------------------------------------------------------------------- #
# states


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ContractViolation(
                f"expected {2**self.num_qubits} amplitudes for {self.num_qubits} qubits, "
                f"got shape {self.amplitudes.shape}")

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "StateVector":
        amps = np.array(amplitudes, dtype=np.complex128).ravel()
        n = int(round(np.log2(amps.size))) if amps.size else -1
        if n < 1 or 2**n != amps.size:
            raise ContractViolation(f"amplitude count {amps.size} is not a power of two >= 2")
        if normalize:
            amps /= np.linalg.norm(amps)
        return cls(n, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def _block(self) -> np.ndarray:
        return self.amplitudes.reshape(-1, 1)


def _check_qubit_count(num_qubits: int, cap: int = MAX_QUBITS) -> None:
    if num_qubits < 1:
        raise ContractViolation(f"num_qubits must be >= 1, got {num_qubits}")
    if num_qubits > cap:
        raise ResourceLimitError(
            f"{num_qubits} qubits requested, cap is {cap} for this operation")


def new_zero_state(num_qubits: int) -> StateVector:
    """|0...0> on ``num_qubits`` qubits."""
    _check_qubit_count(num_qubits)
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def haar_random_states(num_qubits: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``(2**n, count)`` block of Haar-random pure states (normalized complex Gaussians)."""
    dim = 2**num_qubits
    block = rng.standard_normal((dim, count)) + 1j * rng.standard_normal((dim, count))
    block /= np.linalg.norm(block, axis=0)
    return np.ascontiguousarray(block)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugating ``a``."""
    if a.num_qubits != b.num_qubits:
        raise ContractViolation(f"qubit counts differ: {a.num_qubits} vs {b.num_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


# --------------------------------------------------------------------------- #
# Hamiltonians


@dataclass(frozen=True)
class PauliHamiltonian:
    """Real-weighted sum of Pauli words; build with :meth:`from_terms` to merge duplicates."""

    num_qubits: int
    terms: tuple[tuple[float, str], ...]

    def __post_init__(self):
        terms = tuple((float(c), str(w).upper()) for c, w in self.terms)
        object.__setattr__(self, "terms", terms)
        seen = set()
        for c, w in terms:
            if len(w) != self.num_qubits or set(w) - set("IXYZ"):
                raise ContractViolation(f"bad Pauli word {w!r} for {self.num_qubits} qubits")
            if not np.isfinite(c):
                raise ContractViolation(f"coefficient of {w} is not finite")
            if w in seen:
                raise ContractViolation(f"duplicate Pauli word {w}; use from_terms to merge")
            seen.add(w)

    @classmethod
    def from_terms(cls, num_qubits: int, terms: Iterable[tuple[float, str]]) -> "PauliHamiltonian":
        merged: dict[str, float] = {}
        for c, w in terms:
            w = str(w).upper()
            merged[w] = merged.get(w, 0.0) + float(c)
        return cls(num_qubits, tuple((c, w) for w, c in merged.items() if c != 0.0))

    def __len__(self):
        return len(self.terms)

    @cached_property
    def _groups(self) -> list[tuple[int, np.ndarray]]:
        """Terms grouped by X-flip mask: ``P|i> = w(i) |i ^ xmask>``."""
        dim = 2**self.num_qubits
        idx = np.arange(dim)
        groups: dict[int, np.ndarray] = {}
        for coeff, word in self.terms:
            xmask = zmask = ny = 0
            for q, p in enumerate(word):
                if p in "XY":
                    xmask |= 1 << q
                if p in "ZY":
                    zmask |= 1 << q
                ny += p == "Y"
            parity = (np.bitwise_count(idx & zmask) & 1).astype(np.int64) if zmask else 0
            w = coeff * (1j**ny) * (1 - 2 * parity)
            groups[xmask] = groups.get(xmask, 0) + w * np.ones(dim, dtype=np.complex128)
        return sorted(groups.items())

    def apply(self, block: np.ndarray) -> np.ndarray:
        """H applied to a ``(2**n, B)`` block."""
        idx = np.arange(block.shape[0])
        out = np.zeros_like(block)
        for xmask, w in self._groups:
            term = w[:, None] * block
            out += term if xmask == 0 else term[idx ^ xmask]
        return out

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix (N <= dense cap)."""
        _check_qubit_count(self.num_qubits, DENSE_MAX_QUBITS)
        dim = 2**self.num_qubits
        idx = np.arange(dim)
        mat = np.zeros((dim, dim), dtype=np.complex128)
        for xmask, w in self._groups:
            mat[idx ^ xmask, idx] += w
        return mat


def expectation(state: StateVector, hamiltonian: PauliHamiltonian) -> float:
    """<psi|H|psi> as a real number."""
    if state.num_qubits != hamiltonian.num_qubits:
        raise ContractViolation(
            f"state has {state.num_qubits} qubits, Hamiltonian {hamiltonian.num_qubits}")
    value = complex(np.vdot(state.amplitudes, hamiltonian.apply(state._block())[:, 0]))
    scale = max(1.0, sum(abs(c) for c, _ in hamiltonian.terms))
    if abs(value.imag) > 1e-10 * scale:
        raise ContractViolation(f"expectation has imaginary residue {value.imag:.3e}")
    return value.real


# --------------------------------------------------------------------------- #
# circuits


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list with a parameter table of ``num_params`` slots.

    ``block_starts[d]`` is the index of the first gate of repeated block ``d``.
    """

    num_qubits: int
    gates: tuple[Gate, ...]
    num_params: int
    depth_blocks: int = 1
    block_starts: tuple[int, ...] | None = None
    _slots: np.ndarray = field(init=False, repr=False, compare=False)
    _scales: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        _check_qubit_count(self.num_qubits)
        if self.depth_blocks < 0:
            raise ContractViolation("depth_blocks must be >= 0")
        starts = self.block_starts
        if starts is None:
            starts = (0,) * min(self.depth_blocks, 1) if self.depth_blocks <= 1 else None
            if starts is None:
                raise ContractViolation("block_starts required when depth_blocks > 1")
        starts = tuple(int(s) for s in starts)
        if len(starts) != self.depth_blocks or list(starts) != sorted(starts) or (
                starts and (starts[0] != 0 or starts[-1] > len(gates))):
            raise ContractViolation(f"invalid block_starts {starts}")
        object.__setattr__(self, "block_starts", starts)
        used = set()
        for g in gates:
            if max(g.targets) >= self.num_qubits:
                raise ContractViolation(
                    f"{g.kind.value} target {g.targets} outside {self.num_qubits} qubits")
            if g.param_slot is not None:
                if g.param_slot >= self.num_params:
                    raise ContractViolation(
                        f"slot {g.param_slot} outside {self.num_params} parameters")
                used.add(g.param_slot)
        if len(used) != self.num_params:
            raise ContractViolation(
                f"slots {sorted(set(range(self.num_params)) - used)} are never referenced")
        slots = np.array([-1 if g.param_slot is None else g.param_slot for g in gates], dtype=np.int64)
        scales = np.array([g.scale if g.kind.parameterized else 0.0 for g in gates])
        object.__setattr__(self, "_slots", slots)
        object.__setattr__(self, "_scales", scales)

    def gate_angles(self, params) -> np.ndarray:
        """Per-gate angles ``scale * params[slot]`` (0 for fixed gates).

        ``params`` may be 1-D or ``(num_params, B)`` for a batch of parameter sets.
        """
        params = np.asarray(params, dtype=np.float64)
        if params.shape[0] < self.num_params:
            raise ContractViolation(
                f"circuit needs {self.num_params} parameters, got {params.shape[0]}")
        if not self.gates or self.num_params == 0:
            return np.zeros((len(self.gates),) + params.shape[1:])
        taken = params[np.maximum(self._slots, 0)]
        scales = self._scales if params.ndim == 1 else self._scales[:, None]
        return np.where(self._slots.reshape((-1,) + (1,) * (params.ndim - 1)) >= 0,
                        scales * taken, 0.0)

    def gates_to_slots(self, gate_grads: np.ndarray) -> np.ndarray:
        """Chain-rule reduction of per-gate angle derivatives onto slots."""
        out = np.zeros((self.num_params,) + gate_grads.shape[1:])
        mask = self._slots >= 0
        scales = self._scales[mask].reshape((-1,) + (1,) * (gate_grads.ndim - 1))
        np.add.at(out, self._slots[mask], scales * gate_grads[mask])
        return out

    def block_gate_range(self, block: int) -> tuple[int, int]:
        stop = self.block_starts[block + 1] if block + 1 < self.depth_blocks else len(self.gates)
        return self.block_starts[block], stop

    @cached_property
    def program(self) -> "_Program":
        return _Program(self)


class _Op:
    __slots__ = ("kind", "gates", "qubits", "hi", "lo", "gens", "matrix")

    def __init__(self, kind, gates, qubits=(), hi=None, lo=None, gens=None, matrix=None):
        self.kind = kind
        self.gates = gates
        self.qubits = qubits
        self.hi = hi
        self.lo = lo
        self.gens = gens
        self.matrix = matrix


@lru_cache(maxsize=8)
def _diagonal_signs(num_qubits: int, generators: tuple[tuple[int, ...], ...]) -> np.ndarray:
    """Row k holds the +-1 eigenvalues of the Z-string on qubits ``generators[k]``."""
    idx = np.arange(2**num_qubits)
    signs = np.empty((len(generators), idx.size))
    for k, qubits in enumerate(generators):
        mask = sum(1 << q for q in qubits)
        signs[k] = 1.0 - 2.0 * (np.bitwise_count(idx & mask) & 1)
    signs.setflags(write=False)
    return signs


class _Program:
    """Circuit lowered to kernel calls.

    Within a block, maximal runs of mutually commuting rotations are fused into
    one diagonal op (RZ, RZZ) plus one layer op (RX, RY on distinct qubits).
    """

    def __init__(self, circuit: Circuit):
        self.num_qubits = circuit.num_qubits
        self.num_gates = len(circuit.gates)
        self.ops: list[_Op] = []
        self.block_ops: list[tuple[int, int]] = []
        bounds = [circuit.block_gate_range(d) for d in range(circuit.depth_blocks)]
        for start, stop in bounds or [(0, len(circuit.gates))]:
            first = len(self.ops)
            diag: list[int] = []
            rots: list[int] = []
            diag_qubits: set[int] = set()
            rot_qubits: set[int] = set()
            for gi in range(start, stop):
                gate = circuit.gates[gi]
                qs = set(gate.targets)
                if gate.kind in _DIAGONAL:
                    if qs & rot_qubits:
                        self._flush(circuit, diag, rots)
                        diag, rots, diag_qubits, rot_qubits = [], [], set(), set()
                    diag.append(gi)
                    diag_qubits |= qs
                elif gate.kind.parameterized:
                    if qs & (rot_qubits | diag_qubits):
                        self._flush(circuit, diag, rots)
                        diag, rots, diag_qubits, rot_qubits = [], [], set(), set()
                    rots.append(gi)
                    rot_qubits |= qs
                else:
                    self._flush(circuit, diag, rots)
                    diag, rots, diag_qubits, rot_qubits = [], [], set(), set()
                    self.ops.append(self._fixed(gi, gate))
            self._flush(circuit, diag, rots)
            self.block_ops.append((first, len(self.ops)))
        if circuit.depth_blocks == 0:
            self.block_ops = []

    def _flush(self, circuit: Circuit, diag: list[int], rots: list[int]) -> None:
        if diag:
            targets = [sorted(circuit.gates[g].targets) for g in diag]
            self.ops.append(_Op(
                "diag", np.array(diag),
                hi=np.array([t[-1] for t in targets], dtype=np.int64),
                lo=np.array([t[0] if len(t) == 2 else -1 for t in targets], dtype=np.int64)))
        if rots:
            gates = [circuit.gates[g] for g in rots]
            self.ops.append(_Op(
                "layer", np.array(rots),
                qubits=np.array([g.targets[0] for g in gates], dtype=np.int64),
                gens=np.array(["IXYZ".index(g.generator) for g in gates], dtype=np.int64)))

    @staticmethod
    def _fixed(gi: int, gate: Gate) -> _Op:
        if gate.kind is GateKind.CNOT:
            return _Op("cnot", gi, gate.targets)
        return _Op("fixed", gi, gate.targets, matrix=gate.local_unitary()[None].copy())


def _apply_op(op: _Op, block: np.ndarray, angles: np.ndarray, inverse: bool = False,
              phase: np.ndarray | None = None) -> np.ndarray | None:
    """Apply one op in place; ``angles`` is ``(num_gates, A)`` with A in {1, B}.

    Diagonal ops return their phase table, which can be passed back in to
    skip recomputing it.
    """
    sign = -1.0 if inverse else 1.0
    if op.kind == "diag":
        if phase is None:
            phase = _kernels.diagonal_phases(block.shape[0].bit_length() - 1, op.hi, op.lo,
                                             np.ascontiguousarray(angles[op.gates]))
        _kernels.apply_phases(block, phase, inverse)
        return phase
    elif op.kind == "layer":
        _kernels.apply_layer(block, op.qubits, op.gens, angles[op.gates], sign)
    elif op.kind == "cnot":
        _kernels.apply_cnot(block, op.qubits[0], op.qubits[1])
    else:
        m = op.matrix.conj().transpose(0, 2, 1).copy() if inverse else op.matrix
        _kernels.apply_1q(block, op.qubits[0], m)
    return None


def _as_angle_block(angles: np.ndarray) -> np.ndarray:
    return angles[:, None] if angles.ndim == 1 else angles


def run_program(program: _Program, block: np.ndarray, angles: np.ndarray,
                ops: range | None = None, inverse: bool = False) -> np.ndarray:
    """Apply (a range of) the program to ``block`` in place and return it."""
    angles = _as_angle_block(angles)
    seq = range(len(program.ops)) if ops is None else ops
    if inverse:
        for k in reversed(seq):
            _apply_op(program.ops[k], block, angles, inverse=True)
    else:
        for k in seq:
            _apply_op(program.ops[k], block, angles)
    return block


def run_block(circuit: Circuit, block: np.ndarray, angles: np.ndarray, d: int) -> np.ndarray:
    """Apply repeated block ``d`` of ``circuit`` in place."""
    program = circuit.program
    start, stop = program.block_ops[d]
    return run_program(program, block, angles, range(start, stop))


def zero_block(num_qubits: int, batch: int = 1) -> np.ndarray:
    block = np.zeros((2**num_qubits, batch), dtype=np.complex128)
    block[0] = 1.0
    return block


def _check_params(circuit: Circuit, params) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64)
    if params.shape[0] < circuit.num_params:
        raise ContractViolation(
            f"circuit needs {circuit.num_params} parameters, got {params.shape[0]}")
    return params


def apply_gate(state: StateVector, gate: Gate, params=()) -> StateVector:
    """Apply one gate to ``state`` in place and return it."""
    if max(gate.targets) >= state.num_qubits:
        raise ContractViolation(
            f"{gate.kind.value} target {gate.targets} outside {state.num_qubits} qubits")
    angle = 0.0
    if gate.kind.parameterized:
        params = np.asarray(params, dtype=np.float64)
        if gate.param_slot >= params.shape[0]:
            raise ContractViolation(f"no parameter for slot {gate.param_slot}")
        angle = gate.scale * params[gate.param_slot]
    block = state._block()
    if gate.kind in _DIAGONAL:
        signs = _diagonal_signs(state.num_qubits, (gate.targets,))[0]
        block *= np.exp(-0.5j * angle * signs)[:, None]
    elif gate.kind is GateKind.CNOT:
        _kernels.apply_cnot(block, *gate.targets)
    else:
        m = gate.local_unitary(angle)[None].copy()
        _kernels.apply_1q(block, gate.targets[0], m)
    return state


def apply_circuit(state: StateVector, circuit: Circuit, params) -> StateVector:
    """Apply every gate of ``circuit`` to ``state`` in place and return it."""
    if state.num_qubits != circuit.num_qubits:
        raise ContractViolation(
            f"state has {state.num_qubits} qubits, circuit {circuit.num_qubits}")
    params = _check_params(circuit, params)
    run_program(circuit.program, state._block(), circuit.gate_angles(params))
    return state


def simulate(circuit: Circuit, params) -> StateVector:
    """U(params)|0...0>."""
    return apply_circuit(new_zero_state(circuit.num_qubits), circuit, params)


def dense_unitary(circuit: Circuit, params) -> np.ndarray:
    """Full ``2**n x 2**n`` circuit unitary, built column by column from basis states."""
    _check_qubit_count(circuit.num_qubits, DENSE_MAX_QUBITS)
    params = _check_params(circuit, params)
    block = np.eye(2**circuit.num_qubits, dtype=np.complex128)
    return run_program(circuit.program, block, circuit.gate_angles(params))


def energies(circuit: Circuit, angles: np.ndarray, hamiltonian: PauliHamiltonian) -> np.ndarray:
    """Cost for each column of a ``(num_gates, B)`` block of gate angles."""
    angles = _as_angle_block(angles)
    block = zero_block(circuit.num_qubits, angles.shape[1])
    run_program(circuit.program, block, angles)
    return np.einsum("ib,ib->b", block.conj(), hamiltonian.apply(block)).real


def energy(circuit: Circuit, params, hamiltonian: PauliHamiltonian) -> float:
    """E(params) = <0|U^dag H U|0>."""
    params = _check_params(circuit, params)
    return float(energies(circuit, circuit.gate_angles(params), hamiltonian)[0])


def adjoint_sweep(circuit: Circuit, angles: np.ndarray, hamiltonian: PauliHamiltonian,
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Energy, per-gate angle derivatives and final states by reverse-mode sweep.

    ``angles`` is ``(num_gates,)`` or ``(num_gates, B)``; each column is an
    independent circuit instance started from |0...0>.  For a gate
    ``exp(-i a P / 2)`` the derivative is ``Im <lam|P|psi>`` with ``psi`` the
    state just after the gate and ``lam`` the back-propagated ``H psi_final``.
    """
    program = circuit.program
    angles = _as_angle_block(angles)
    batch = angles.shape[1]
    block = zero_block(circuit.num_qubits, batch)
    nops = len(program.ops)
    keep = block.nbytes * (nops + 1) <= _CHECKPOINT_BYTES
    n_diag = sum(op.kind == "diag" for op in program.ops)
    keep_phases = block.nbytes * n_diag <= _CHECKPOINT_BYTES
    checkpoints = []
    phases = []
    for op in program.ops:
        if keep:
            checkpoints.append(block.copy())
        phase = _apply_op(op, block, angles)
        phases.append(phase if keep_phases else None)
    final = block.copy()
    lam = hamiltonian.apply(block)
    energy_values = np.einsum("ib,ib->b", block.conj(), lam).real
    psi = block
    grads = np.zeros((program.num_gates, batch))
    for k in range(nops - 1, -1, -1):
        op = program.ops[k]
        if op.kind == "diag":
            grads[op.gates] = _kernels.diagonal_gradients(lam, psi, op.hi, op.lo)
        elif op.kind == "layer":
            grads[op.gates] = _kernels.im_overlap_layer(lam, psi, op.qubits, op.gens)
        phase = _apply_op(op, lam, angles, inverse=True, phase=phases[k])
        if keep:
            psi = checkpoints[k]
        else:
            _apply_op(op, psi, angles, inverse=True, phase=phase)
    return energy_values, grads, final
