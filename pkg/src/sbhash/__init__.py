"""Sampled sub-block Toeplitz hashing with GEAT finite-size security for BBM92."""

from .bitstring import BitString
from .errors import DimensionError, DomainError, InfeasibleError, ParameterError
from .toeplitz import (BlockingParams, ToeplitzSeed, blocked_toeplitz_hash, cycle_estimate,
                       toeplitz_hash)
from .sampling import SamplingPlan, assign_subblocks, block_limit, sift_partition
from .geat import GeatInput, MinTradeoff, geat_full_bound, geat_simplified_bound
from .bbm92 import (Bbm92Params, Scenario, ScenarioKind, key_length, optimize_px,
                    secrecy_for_length, solve_key_length, solve_secrecy)

__version__ = "0.1.0"
