"""Floquet many-body-localized ansatz for variational ground-state search.

Submodules:

* ``simulator``: statevector kernels, circuits and Pauli Hamiltonians
* ``ansatz``: Floquet kicked-Ising blocks, the hardware-efficient baseline, regimes
* ``gradients``: adjoint, parameter-shift and finite-difference gradients, variance ensembles
* ``diagnostics``: half-chain entropy and OTOCs
* ``vqe``: XXZ Hamiltonian, exact ground energy, ADAM loop
* ``cli``: the ``floquet-vqe`` command
"""

from .ansatz import (MblParams, Regime, build_hea_circuit, build_mbl_circuit, regime_from_label,
                     sample_hea_params, sample_mbl_params)
from .diagnostics import (EntropyTrace, OtocMethod, OtocTrace, entropy_growth, otoc_exact,
                          otoc_stochastic, otoc_trace, von_neumann_entropy)
from .errors import ConfigurationError, ContractViolation, NonFiniteError, ResourceLimitError
from .gradients import (GradientResult, VarianceRecord, adjoint_gradient, finite_difference_gradient,
                        gradient_variance, parameter_shift_gradient, parameter_shift_gradients)
from .simulator import (Circuit, Gate, GateKind, PauliHamiltonian, StateVector, apply_circuit,
                        apply_gate, dense_unitary, energy, expectation, inner_product,
                        new_zero_state, simulate)
from .vqe import (AdamState, OptimRun, XxzSpec, adam_step, build_xxz, exact_ground_energy,
                  run_vqe)

__version__ = "0.1.0"

__all__ = [
    "AdamState", "Circuit", "ConfigurationError", "ContractViolation", "EntropyTrace", "Gate",
    "GateKind", "GradientResult", "MblParams", "NonFiniteError", "OptimRun", "OtocMethod",
    "OtocTrace", "PauliHamiltonian", "Regime", "ResourceLimitError", "StateVector",
    "VarianceRecord", "XxzSpec", "adam_step", "adjoint_gradient", "apply_circuit", "apply_gate",
    "build_hea_circuit", "build_mbl_circuit", "build_xxz", "dense_unitary", "energy",
    "entropy_growth", "exact_ground_energy", "expectation", "finite_difference_gradient",
    "gradient_variance", "inner_product", "new_zero_state", "otoc_exact", "otoc_stochastic",
    "otoc_trace", "parameter_shift_gradient", "parameter_shift_gradients", "regime_from_label",
    "run_vqe", "sample_hea_params", "sample_mbl_params", "simulate", "von_neumann_entropy",
]
