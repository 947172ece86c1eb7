"""Circuit families: the kicked-Ising Floquet block and the hardware-efficient baseline.

One Floquet block on an open chain of ``n`` qubits is::

    exp(-i/2 * sum_i g_i X_i) exp(-i/2 * (sum_i 2 J_i Z_i Z_{i+1} + sum_i h_i Z_i))

realized as RZZ(2 J) on every bond, then RZ(h) and RX(g) on every site.
Slots are laid out block by block as ``[J_0..J_{n-2}, h_0..h_{n-1}, g_0..g_{n-1}]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .simulator import Circuit, Gate, GateKind, cnot, rx, rz, rzz

PI = np.pi

J_RANGE = (-1.5 * PI, -0.5 * PI)
H_RANGE = (-PI, PI)
PM_WINDOW = (0.0, 0.2 * PI)
DTC_WINDOW = (0.84 * PI, PI)
THERMAL_G = 0.5 * PI

LABELS = ("PM", "THERMAL", "DTC", "CUSTOM")


@dataclass(frozen=True)
class Regime:
    """Sampling intervals (radians) for the couplings ``J``, fields ``h`` and kicks ``g``.

    An interval with equal ends is a point value.  ``g_left_open`` samples
    ``g`` from ``(g_low, g_high]`` instead of ``[g_low, g_high)``.
    """

    label: str
    g_low: float
    g_high: float
    J_low: float = J_RANGE[0]
    J_high: float = J_RANGE[1]
    h_low: float = H_RANGE[0]
    h_high: float = H_RANGE[1]
    g_left_open: bool = False

    def __post_init__(self):
        if self.label not in LABELS:
            raise ConfigurationError(f"unknown regime label {self.label!r}; expected one of {LABELS}")
        for name in ("g", "J", "h"):
            lo, hi = getattr(self, f"{name}_low"), getattr(self, f"{name}_high")
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ContractViolation(f"{name} interval [{lo}, {hi}] is invalid")
        g_lo, g_hi = self.g_low, self.g_high
        if self.label == "PM":
            ok = PM_WINDOW[0] <= g_lo and g_hi <= PM_WINDOW[1] and (g_lo > 0 or self.g_left_open)
        elif self.label == "DTC":
            ok = DTC_WINDOW[0] <= g_lo and g_hi <= DTC_WINDOW[1] and g_lo < DTC_WINDOW[1]
        elif self.label == "THERMAL":
            ok = PM_WINDOW[1] < g_lo and g_hi < DTC_WINDOW[0]
        else:
            ok = True
        if not ok:
            raise ContractViolation(
                f"kick range [{g_lo / PI:.4g}pi, {g_hi / PI:.4g}pi] lies outside the {self.label} window")

    @classmethod
    def pm(cls) -> "Regime":
        """Paramagnetic window, g in (0, 0.2 pi]."""
        return cls("PM", *PM_WINDOW, g_left_open=True)

    @classmethod
    def dtc(cls) -> "Regime":
        """Time-crystal window, g in [0.84 pi, pi)."""
        return cls("DTC", *DTC_WINDOW)

    @classmethod
    def thermal(cls, g: float = THERMAL_G, width: float = 0.0) -> "Regime":
        return cls("THERMAL", g - width / 2, g + width / 2)

    @classmethod
    def fixed_kick(cls, label: str, g: float) -> "Regime":
        """Regime whose kicks all equal ``g`` (disorder only in J and h)."""
        return cls(label, g, g)

    @property
    def g_is_point(self) -> bool:
        return self.g_low == self.g_high

    def describe(self) -> str:
        if self.g_is_point:
            return f"{self.label}(g={self.g_low / PI:.4g}pi)"
        left = "(" if self.g_left_open else "["
        return f"{self.label}(g in {left}{self.g_low / PI:.4g}pi, {self.g_high / PI:.4g}pi))"


def regime_from_label(label: str) -> Regime:
    """Built-in regime for ``pm``, ``thermal`` or ``dtc`` (case-insensitive)."""
    key = label.strip().upper()
    if key == "PM":
        return Regime.pm()
    if key == "DTC":
        return Regime.dtc()
    if key == "THERMAL":
        return Regime.thermal()
    raise ConfigurationError(f"unknown regime label {label!r}")


@dataclass(frozen=True)
class MblParams:
    """Per-block couplings, fields and kicks, each flattened block-major."""

    num_qubits: int
    depth_blocks: int
    J: np.ndarray
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        n, d = self.num_qubits, self.depth_blocks
        for name, size in (("J", (n - 1) * d), ("h", n * d), ("g", n * d)):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (size,):
                raise ContractViolation(f"{name} must have {size} entries, got {arr.shape}")
            object.__setattr__(self, name, arr)

    def to_vector(self) -> np.ndarray:
        n, d = self.num_qubits, self.depth_blocks
        return np.concatenate([
            self.J.reshape(d, n - 1), self.h.reshape(d, n), self.g.reshape(d, n)], axis=1).ravel()

    @classmethod
    def from_vector(cls, num_qubits: int, depth_blocks: int, vector) -> "MblParams":
        n = num_qubits
        blocks = np.asarray(vector, dtype=np.float64).reshape(depth_blocks, 3 * n - 1)
        return cls(n, depth_blocks, blocks[:, : n - 1].ravel(),
                   blocks[:, n - 1: 2 * n - 1].ravel(), blocks[:, 2 * n - 1:].ravel())


def mbl_slots_per_block(num_qubits: int) -> int:
    return 3 * num_qubits - 1


def build_mbl_circuit(num_qubits: int, depth_blocks: int) -> Circuit:
    if num_qubits < 2:
        raise ContractViolation(f"the Floquet chain needs >= 2 qubits, got {num_qubits}")
    if depth_blocks < 1:
        raise ContractViolation(f"depth_blocks must be >= 1, got {depth_blocks}")
    n = num_qubits
    per_block = mbl_slots_per_block(n)
    gates: list[Gate] = []
    starts = []
    for d in range(depth_blocks):
        base = d * per_block
        starts.append(len(gates))
        gates += [rzz(i, i + 1, base + i, scale=2.0) for i in range(n - 1)]
        gates += [rz(i, base + n - 1 + i) for i in range(n)]
        gates += [rx(i, base + 2 * n - 1 + i) for i in range(n)]
    return Circuit(n, tuple(gates), depth_blocks * per_block, depth_blocks, tuple(starts))


def _uniform(rng: np.random.Generator, lo: float, hi: float, size: int,
             left_open: bool = False) -> np.ndarray:
    u = rng.random(size)
    if left_open:
        return hi - (hi - lo) * u
    return lo + (hi - lo) * u


def sample_mbl_params(num_qubits: int, depth_blocks: int, regime: Regime, rng_seed,
                      tied: bool = False) -> MblParams:
    """I.i.d. uniform draws from the regime intervals.

    ``tied`` draws a single block and repeats it, giving a strictly periodic
    Floquet circuit; otherwise every block gets its own disorder.
    """
    rng = np.random.default_rng(rng_seed)
    n = num_qubits
    reps = 1 if tied else depth_blocks
    J = _uniform(rng, regime.J_low, regime.J_high, (n - 1) * reps)
    h = _uniform(rng, regime.h_low, regime.h_high, n * reps)
    g = _uniform(rng, regime.g_low, regime.g_high, n * reps, regime.g_left_open)
    if tied:
        J, h, g = (np.tile(a, depth_blocks) for a in (J, h, g))
    return MblParams(n, depth_blocks, J, h, g)


_AXIS_KINDS = (GateKind.RX, GateKind.RY, GateKind.RZ)


def build_hea_circuit(num_qubits: int, depth_layers: int, axis_seed) -> Circuit:
    """Layers of random-axis single-qubit rotations followed by a CNOT ladder."""
    if num_qubits < 2:
        raise ContractViolation(f"the hardware-efficient ansatz needs >= 2 qubits, got {num_qubits}")
    if depth_layers < 1:
        raise ContractViolation(f"depth_layers must be >= 1, got {depth_layers}")
    axes = np.random.default_rng(axis_seed).integers(0, 3, size=(depth_layers, num_qubits))
    gates: list[Gate] = []
    starts = []
    for d in range(depth_layers):
        starts.append(len(gates))
        gates += [Gate(_AXIS_KINDS[a], (q,), d * num_qubits + q) for q, a in enumerate(axes[d])]
        gates += [cnot(q, q + 1) for q in range(num_qubits - 1)]
    return Circuit(num_qubits, tuple(gates), depth_layers * num_qubits, depth_layers, tuple(starts))


def sample_hea_params(num_slots: int, rng_seed) -> np.ndarray:
    if num_slots < 1:
        raise ContractViolation("num_slots must be >= 1")
    return np.random.default_rng(rng_seed).uniform(0.0, 2 * PI, num_slots)
