"""Numerical toolkit for the exact-growth Trudinger-Moser inequality on the plane."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .growth import GSpec, satisfies_boundedness, satisfies_compactness, tail_at_infinity, tail_at_zero
from .radial import (RadialProfile, dirichlet_energy, g_functional, log_g_functional,
                     log_linear_replacement, mass, normalized, pointwise_radial_bound)
from .witnesses import (WitnessParams, WitnessReport, make_concentration_sequence, make_log_cap,
                        make_moser, make_plateau, make_rescaled, moser_mass, plateau_sequence)
from .extremal import (DiscreteSequence, ExtremalSolution, brute_force_mu_d, mu_d_asymptotic_ratio,
                       radial_tm_check, radial_tm_survey, reduce_profile_to_sequence, solve_mu_d,
                       solve_mu_lattice)
from .certificate import DyadicCertificate, build_certificate, check_chain, empirical_red_sum_constant
from .groundstate import (GroundStateResult, NonlinearityF, critical_mass_scan, find_ground_state,
                          shoot)
from .verify import SupRatioReport, holder_bridge_check, sup_ratio_search, taylor_moment_check
