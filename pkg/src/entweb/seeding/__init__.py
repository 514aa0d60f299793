"""Optical seeding of W (and Dicke) states from cavity-QED nodes."""

from .cavity import (CavityParams, UnsupportedRegimeError, alpha_beta,
                     evolve_conditional, excited_norm, node_propagator)
from .network import (PERMISSIVE, STRICT_DISTINCT, CannotCorrectError,
                      ClickEvent, ClickRecord, DetectorNetwork, PhaseCorrection,
                      accept_pattern, canonical_pattern, detector_matrix,
                      pattern_key, pattern_probabilities, phase_correction)
from .trajectory import (BisectionError, InvariantViolation, ProtocolConfig,
                         ProtocolSequencingError, TrajectoryResult,
                         build_initial_state, flip, flip_and_excite,
                         herald_state,
                         pattern_success_probability, run_trajectory,
                         sample_and_apply_jump, seed_success_formula,
                         target_state)
from .estimate import SeedingEstimate, estimate_success
