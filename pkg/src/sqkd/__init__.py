"""Key-rate analysis and simulation of a two-way semi-quantum key distribution protocol."""

from .attack import AttackPair, depolarizing_attack, identity_attack, observables, random_attack
from .bb84cad import CadConfig, cad_error, cad_rate, cad_threshold
from .errors import DegenerateAttackError, DomainError, EstimationError, InfeasibleError, SqkdError
from .estimate import ChannelStatistics, Mode, symmetric_stats
from .keyrate import ChannelFamily, key_rate, noise_threshold
from .loss import LossConfig, lossy_key_rate, max_distance
from .simulate import ProtocolConfig, run_protocol

__version__ = "0.1.0"
