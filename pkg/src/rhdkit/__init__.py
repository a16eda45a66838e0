"""rhdkit: PCP finite volume HWENO toolkit for special relativistic hydrodynamics."""

from .config import KxrcfConfig, RecoveryConfig, SchemeConfig, WenoParams
from .errors import (ConfigError, DomainError, EigensystemError,
                     InadmissibleStateError, RhdError, StepFailure)
from .state import (AdmissibilityReport, ConservedState, EigenSystem, EosParams,
                    PrimitiveState, admissibility, eigensystem, flux,
                    max_signal_speed, prim_to_cons)
from .recovery import (Method, RecoveryOutcome, Termination, finish_recovery,
                       phi_residual, quartic_coeffs, bracket_points,
                       recover_analytical, recover_hybrid, recover_nr1,
                       recover_nr2, recover_oracle_bisection)

__version__ = "0.1.0"
