# -*- coding: utf-8 -*-

__version__ = '0.1.0'

from .errors import (CommSearchError, ConfigError, DegenerateInputError, DegenerateWeightError, DomainError,
                     NumericFailure, SamplerFailure)
from .policies import (AsymptoticPolicy, InteractionPolicy, JointSolution, Regime, ScaledCosts, TiltedPolicy,
                       TiltedRegime, TiltedSolution)
from .directional import (MarginalMoments, kappa_from_rho, kl_asymptotic, kl_divergence, log_partition,
                          marginal_cdf, marginal_moments, marginal_pdf, rho_from_kappa)
from .sampling import (AlignmentSample, FullInteraction, RngStream, sample_alignment_tuple, sample_full_interaction,
                       sample_orthogonal_uniform, sample_tilted_interaction, sample_w)
from .asymptotic import (alpha_from_n, joint_gain, map_to_finite, rate_function, solve_comm_only, solve_joint,
                         solve_search_only, switching_threshold, utility_frontier, weighted_solve)
from .tilted import (expected_max_orthogonal, optimal_tilt, optimal_tilt_finite, solve_tilted,
                     tilt_utility_asymptotic, tilted_payoff_finite)
from .finite_sim import (GapMode, GapReport, PayoffEstimate, SimConfig, estimate_max_utility, optimize_policy,
                         payoff, performance_gap, weighted_payoff)
from .harness import ExperimentConfig, ExperimentKind, ResultTable, emit_switching_curve, run
