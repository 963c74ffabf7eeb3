"""Conditional-copula estimation with doubly smoothed local-linear margins.

Submodules:
  kernels   compact polynomial kernels, smoothed indicator, moment weights
  loclin    smoothed local-linear conditional CDF: fit, derivatives, inverse
  ranks     pseudo-observations and the empirical (conditional) copula
  gaussref  trivariate-Gaussian reference model and the limit variance
  harness   seeded Monte Carlo experiments and CSV plumbing
"""

from .kernels import BIWEIGHT, TRIWEIGHT, Kernel, KernelFamily, SmoothedIndicator
from .loclin import Bandwidths, ConditionalCdfFit, DegenerateDesign, NoCrossing
from .ranks import PseudoObservations, StepEcdf, ecdf, empirical_copula, pseudo_obs
from .gaussref import (
    GaussianCopulaSpec,
    GaussianMargin,
    gaussian_copula,
    limit_sigma,
    partial_correlation,
    sample_copula_triples,
)
from .harness import ExperimentConfig, ReplicationRecord, run_replication

__version__ = "0.1.0"
