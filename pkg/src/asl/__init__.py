"""Spectral laboratory for non-diffusive active scalar equations on the torus."""
from .symbols import MultiplierSymbol, check_identities, ipm_symbol, make_symbol, mg_symbol
from .spectral import GevreyParams, SpectralField, gevrey_norm, l2_norm, sobolev_norm
from .conditions import MG_SEQUENCE, SIPM_SEQUENCE, verify_conditions
from .eigensolver import (build_recursion, continued_fraction_F, sigma_growth_sweep, solve_sigma,
                          synthesize_eigenfunction, tridiagonal_oracle)
from .simulator import SimConfig, growth_experiment, linearized_rhs, nonlinear_rhs, run

__version__ = "0.1.0"
