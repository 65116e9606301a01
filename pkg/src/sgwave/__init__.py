"""Numerical toolkit for stochastic wave maps driven by a fractional Brownian
sheet in 1+1 dimensions: spectral grids, Littlewood-Paley norms, null
coordinates, sheet sampling, the inverse wave operator and a cutoff Picard
solver with gluing of local solutions."""

__version__ = "0.1.0"

from .spectral import CARTESIAN, NULL, Field2, Grid2, Spectrum2, dft2, idft2, load_field, save_field
from .lp import DyadicPartition, NormSpec, besov_norm, build_partition, hyperbolic_norm, mixed_norm, norm
from .null_coords import from_null, isomorphism_ratio, to_null
from .fbs import FbsSample, HurstPair, sample_ensemble, sample_sheet
from .geometry import ChristoffelTable, DiffusionCoeff, nonlinearity
from .cutoffs import CutoffPair
from .wave_ops import (InitialData, dalembert_inverse_lp, dalembert_inverse_quadrature, homogeneous_solution,
                       stochastic_convolution)
from .solver import (LocalSolution, PicardState, SolverConfig, choose_lambda, glue_solutions, picard_solve,
                     rescale_solution, residual, solve_local, theta_map)
