"""Key rate over lossy fiber and the maximal distillation distance.

Worst case: every vacuum event hands Eve the key bit, so the loss-less
entropy bound is scaled by ``1 - p_l``; Alice accepts a vacuum on the return
path as a match, which raises the raw-key error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InfeasibleError
from .estimate import Mode, symmetric_stats
from .keyrate import key_rate
from .qmath import binary_entropy, shannon_entropy
from .search import bisect_boundary

DEFAULT_ALPHA = 0.25
DISTANCE_WIDTH = 0.01
# max_distance when there is no attenuation and the loss-less rate is positive
NO_ATTENUATION_LIMIT = math.inf


def loss_probability(alpha: float, d: float) -> float:
    """Single-channel photon loss probability 1 - 10^(-alpha d / 10)."""
    if alpha < 0.0 or d < 0.0:
        raise DomainError(f"attenuation and distance must be non-negative, got ({alpha}, {d})")
    return -math.expm1(-alpha * d / 10.0 * math.log(10.0))


@dataclass(frozen=True)
class LossConfig:
    q: float
    q_x: float
    d: float = 0.0
    alpha: float = DEFAULT_ALPHA
    mode: Mode = Mode.MODE3

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        for name, v in (("Q", self.q), ("Q_X", self.q_x)):
            if not 0.0 <= v <= 0.5:
                raise DomainError(f"{name} = {v!r} outside [0, 0.5]")

    @property
    def p_l(self) -> float:
        return loss_probability(self.alpha, self.d)


def lossy_key_probabilities(q: float, p_l: float) -> tuple[float, float, float, float]:
    """(p~00, p~01, p~10, p~11) of the raw-key pair under loss."""
    agree = (1.0 - q) ** 2 * (1.0 - p_l) + p_l * (1.0 - q)
    differ = q * q * (1.0 - p_l) + p_l * q
    m = 2.0 * (agree + differ)
    return agree / m, differ / m, differ / m, agree / m


def lossy_h_a_given_b(q: float, p_l: float) -> float:
    p00, p01, p10, p11 = lossy_key_probabilities(q, p_l)
    return shannon_entropy((p00, p01, p10, p11)) - binary_entropy(p00 + p10)


def lossless_entropy_bound(q: float, q_x: float, mode) -> float:
    return key_rate(mode, symmetric_stats(q, q, q_x, mode)).s_ae_lower


def lossy_key_rate_at(q: float, q_x: float, p_l: float, mode=Mode.MODE3) -> float:
    if not 0.0 <= p_l <= 1.0:
        raise DomainError(f"loss probability {p_l!r} outside [0, 1]")
    return (1.0 - p_l) * lossless_entropy_bound(q, q_x, mode) - lossy_h_a_given_b(q, p_l)


def lossy_key_rate(cfg: LossConfig) -> float:
    """(1 - p_l) S(A|E)_bound - H~(A|B) for the configured fiber length."""
    return lossy_key_rate_at(cfg.q, cfg.q_x, cfg.p_l, cfg.mode)


def max_distance(q: float, q_x: float, alpha: float = DEFAULT_ALPHA, mode=Mode.MODE3,
                 width: float = DISTANCE_WIDTH) -> float:
    """Longest fiber (km) with a positive lossy key rate.

    Returns 0 when the loss-less rate is not positive and
    ``NO_ATTENUATION_LIMIT`` when ``alpha`` is 0.
    """
    mode = Mode.parse(mode)
    if alpha < 0.0:
        raise DomainError(f"attenuation must be non-negative, got {alpha}")
    try:
        s_bound = lossless_entropy_bound(q, q_x, mode)
    except InfeasibleError:
        return 0.0

    def positive(d: float) -> bool:
        p_l = loss_probability(alpha, d)
        return (1.0 - p_l) * s_bound - lossy_h_a_given_b(q, p_l) > 0.0

    if not positive(0.0):
        return 0.0
    if alpha == 0.0:
        return NO_ATTENUATION_LIMIT
    hi = 1.0
    while positive(hi):
        hi *= 2.0
        if hi > 1e6:
            return NO_ATTENUATION_LIMIT
    return bisect_boundary(positive, 0.0, hi, width)


def distance_rows(q: float, q_x: float, alpha: float, mode, distances):
    """Rows (mode, Q, Q_X, alpha, d, p_l, rate)."""
    mode = Mode.parse(mode)
    s_bound = lossless_entropy_bound(q, q_x, mode)
    for d in distances:
        p_l = loss_probability(alpha, float(d))
        rate = (1.0 - p_l) * s_bound - lossy_h_a_given_b(q, p_l)
        yield (int(mode), q, q_x, alpha, float(d), p_l, rate)
