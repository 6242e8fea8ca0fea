from .generators import GeneratorSpec, generate_deak_like, probe_recourse
from .lemma import FAMILIES, ZERO, Geometric, lemma_prox_harness
from .rates import RateFit, fit_loglog, rate_experiment
from .replications import ReplicationTable, covers, run_replications
from .truth import GroundTruth, ground_truth

__all__ = [
    "FAMILIES",
    "ZERO",
    "Geometric",
    "GeneratorSpec",
    "GroundTruth",
    "RateFit",
    "ReplicationTable",
    "covers",
    "fit_loglog",
    "generate_deak_like",
    "ground_truth",
    "lemma_prox_harness",
    "probe_recourse",
    "rate_experiment",
    "run_replications",
]
