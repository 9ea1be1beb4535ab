"""Finite-dimensional Wigner's-friend scenarios and consistent histories."""
from .errors import (ConsistencyError, ContractError, DimensionError, DimensionLimitError,
                     DocumentError, HistoryLimitError, ImpossibleOutcomeError, QFriendError,
                     ScenarioError)
from .histories import (HistoryFramework, additivity_residual, chain_operator,
                        decoherence_functional, framework_conflict, history_probability,
                        is_consistent)
from .measurement import (DephasingSpec, Pdi, born, dephase, luders, measure_to_ensemble,
                          pdi_from_observable, pdis_compatible)
from .scenario import (BUILTINS, Scenario, build_report, builtin, detect_inconsistency,
                       evolve_perspective, predict, sample_runs)
from .states import (DensityOperator, MixedEnsemble, Observable, PureState, bell_observable,
                     bell_state, ensemble_to_density, lift, pauli_theta, total_spin_squared)

__version__ = "0.1.0"
