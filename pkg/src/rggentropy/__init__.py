"""Shannon entropy of random geometric graph ensembles."""

from .exact_small import exact_entropy, exact_maximizer, exact_pbar, exact_probabilities
from .geometry import Bernoulli, Geometry, Kind, Tabulated, TruncatedGaussian, Uniform
from .graphs import GraphDistribution, LabeledGraph, Method
from .limit import converges_to_er, covariance_model, gaussian_limit_distribution, kurtosis
from .mc_entropy import EntropyEstimate, entropy_curve, estimate_entropy
from .sampling import EnsembleSpec, Hard, Rayleigh

__version__ = "0.1.0"

__all__ = [
    "Bernoulli", "EnsembleSpec", "EntropyEstimate", "Geometry", "GraphDistribution", "Hard", "Kind",
    "LabeledGraph", "Method", "Rayleigh", "Tabulated", "TruncatedGaussian", "Uniform", "converges_to_er",
    "covariance_model", "entropy_curve", "estimate_entropy", "exact_entropy", "exact_maximizer", "exact_pbar",
    "exact_probabilities", "gaussian_limit_distribution", "kurtosis", "__version__",
]
