"""RBM training on Bars-and-Stripes with interchangeable negative-statistics
estimators: classical Gibbs chains, simulated forward quantum annealing and
simulated reverse (semantic) annealing, plus exact small-instance oracles."""

__version__ = "0.1.0"

from .annealer import (AnnealSchedule, EmulatorConfig, SampleBatch,
                       forward_sample, make_schedule, reverse_sample)
from .bas import BasDataset, clamp_mask, generate_bas
from .chimera import (ChimeraGraph, Embedding, PhysicalProblem, PhysicalSample,
                      default_graph, embed_rbm, identity_embedding,
                      lower_problem, resolve_chains)
from .errors import (ConfigError, ContractViolation, EmbeddingError,
                     IntractableError)
from .ising import (IsingProblem, binary_to_spin, ising_energy, spin_to_binary,
                    to_ising)
from .metrics import (delta_probability, energy_histogram, log_likelihood_av,
                      reconstruction_score, reconstruction_score_exact)
from .rbm import (BinaryConfig, PairStatistics, RbmParams, conditional, energy,
                  exact_log_partition, exact_model_statistics, gibbs_chain,
                  load_rbm, positive_statistics, save_rbm)
from .training import (InitSpec, TrainConfig, TrainHistory, init_rbm,
                       negative_statistics, train, update_step)

__all__ = [name for name in dir() if not name.startswith("_")]
