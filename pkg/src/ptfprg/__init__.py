"""Pseudorandom generators for halfspaces, polynomial threshold functions,
monotone branching programs and spherical caps, with exact and sampled
fooling measurements."""
from .generators import (DerandSpec, GeneratorSpec, SphereSpec, derand_generate, derand_params,
                         hadamard_transform, main_generate, profile_params, sphere_generate,
                         sphere_params)
from .robp import (BranchingProgram, MonotoneOrder, NotMonotone, acceptance_prob, evaluate,
                   halfspace_to_robp, is_monotone, robp_prg, sandwich)
from .sample_spaces import (HashFamilySpec, Seed, SignSpaceSpec, almost_kwise_sample,
                            almost_kwise_space, balance_check, balanced_hash_family,
                            exact_kwise_space, hash_eval, kwise_sample, pairwise_hash_family)
from .stats import (EmpiricalCDF, FoolingReport, berry_esseen_bound, fooling_error, ks_distance,
                    lemma_checks, normal_cdf)
from .threshold import (PTF, CapExceeded, Halfspace, MultilinearPolynomial, chow_parameters,
                        critical_index, exact_bias, influence, is_regular)

__version__ = "0.1.0"
