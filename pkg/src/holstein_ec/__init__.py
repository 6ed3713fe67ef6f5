"""Holstein polaron ground states by eigenvector-continuation lattice stitching."""
from .basis import BasisConfig, BasisState, basis_size, index_of, state_of
from .hamiltonian import (LatticeSpec, SegmentSpec, SparseOperator, build_segment_hamiltonian,
                          coupling_lambda, g_for_lambda, strong_coupling_energy)
from .solver import ConvergenceError, EigenResult, dense_lowest_eigenpair, lowest_eigenpair
from .stitching import (EcResult, EcRun, EffectiveProblem, SegmentState, SolverConfig,
                        build_effective_problem, cross_matrix_element, ec_ground_energy,
                        generate_segments, overlap, solve_generalized)
from .vqe import (AnsatzConfig, OptimizerConfig, PauliExpansion, VqeOutcome, VqeSettings,
                  ansatz_state, ec_vqe_ground_energy, expectation, pad_to_qubits,
                  pauli_decompose, qubits_for_full, qubits_for_segment, vqe_minimize)

__version__ = "0.1.0"
