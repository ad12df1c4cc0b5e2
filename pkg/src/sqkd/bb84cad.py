"""BB84 with repetition-code classical advantage distillation (CAD).

Reference curves for comparing the two-way protocol against one-way BB84
(four-state and six-state) post-processed with block size ``C``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .qmath import binary_entropy
from .search import bisect_boundary, scan_minimize

FOUR_STATE = "four-state"
SIX_STATE = "six-state"
BASIS_MODES = (FOUR_STATE, SIX_STATE)
LAMBDA4_POINTS = 1001
THRESHOLD_WIDTH = 1e-5
SERIES_CUTOFF = 1e-3
# beyond this, e_C and L_eq^C underflow near the threshold
MAX_BLOCK = 500


def parse_basis(value) -> str:
    text = str(value).lower()
    if text in ("4", "four", FOUR_STATE, "xz"):
        return FOUR_STATE
    if text in ("6", "six", SIX_STATE, "xyz"):
        return SIX_STATE
    raise DomainError(f"unknown basis mode {value!r}")


@dataclass(frozen=True)
class CadConfig:
    c: int
    basis_mode: str
    q: float

    def __post_init__(self):
        if int(self.c) != self.c or not 1 <= self.c <= MAX_BLOCK:
            raise DomainError(f"block size must be an integer in [1, {MAX_BLOCK}], got {self.c!r}")
        if not (0.0 <= self.q <= 0.5):
            raise DomainError(f"Q = {self.q!r} outside [0, 0.5]")
        object.__setattr__(self, "basis_mode", parse_basis(self.basis_mode))


@dataclass(frozen=True)
class CadReport:
    e_c: float
    rate: float
    effective_rate: float
    entropy: float
    lambda4_worst: float
    raw_rate: float


def ipow(x: float, n: int) -> float:
    """x**n for integer n >= 0 by repeated squaring (x*x exactly for n = 2)."""
    result, base = 1.0, x
    while n:
        if n & 1:
            result *= base
        n >>= 1
        if n:
            base *= base
    return result


def cad_error(c: int, q: float) -> float:
    """Error rate of the distilled key: Q^C / (Q^C + (1-Q)^C)."""
    if c < 1 or not (0.0 <= q <= 0.5):
        raise DomainError(f"cad_error needs C >= 1 and Q in [0, 0.5], got ({c}, {q})")
    if q == 0.0:
        return 0.0
    a, b = ipow(q, c), ipow(1.0 - q, c)
    if a + b > 0.0:
        return a / (a + b)
    # both powers underflowed: e = t / (1 + t) with t = (Q / (1-Q))^C
    t = math.exp(c * (math.log(q) - math.log1p(-q)))
    return t / (1.0 + t)


def cad_acceptance(c: int, q: float) -> float:
    return ipow(1.0 - q, c) + ipow(q, c)


def _one_minus_h_half(y: np.ndarray) -> np.ndarray:
    """1 - h((1-y)/2) = ((1+y) log2(1+y) + (1-y) log2(1-y)) / 2, cancellation-free."""
    y = np.clip(np.abs(np.asarray(y, dtype=float)), 0.0, 1.0)
    out = np.ones_like(y)
    big = (y >= SERIES_CUTOFF) & (y < 1.0)
    yb = y[big]
    out[big] = 0.5 * ((1.0 + yb) * np.log1p(yb) + (1.0 - yb) * np.log1p(-yb)) / math.log(2.0)
    small = y < SERIES_CUTOFF
    y2 = y[small] ** 2
    # sum_k y^(2k) / (2k (2k-1) ln 2), truncated after y^8
    out[small] = y2 * (1 / 2 + y2 * (1 / 12 + y2 * (1 / 30 + y2 / 56))) / math.log(2.0)
    return out


def _kept_terms(cfg: CadConfig, lambda4: np.ndarray) -> np.ndarray:
    """(1-e_C) [1 - h((1-L_eq^C)/2)] + e_C [1 - h((1-L_diff^C)/2)], i.e. S(A|E)."""
    q, c = cfg.q, cfg.c
    e_c = cad_error(c, q)
    lambda4 = np.asarray(lambda4, dtype=float)
    if cfg.basis_mode == SIX_STATE:
        l_eq = np.full_like(lambda4, (1.0 - 2.0 * q) / (1.0 - q))
        l_diff = np.zeros_like(lambda4)
    else:
        l_eq = (1.0 - 3.0 * q + 2.0 * lambda4) / (1.0 - q)
        # the e_C prefactor vanishes at Q = 0, so define L_diff = 0 there
        l_diff = np.abs(q - 2.0 * lambda4) / q if q > 0.0 else np.zeros_like(lambda4)
    return (1.0 - e_c) * _one_minus_h_half(l_eq ** c) + e_c * _one_minus_h_half(l_diff ** c)


def cad_rate(cfg: CadConfig) -> CadReport:
    """Key rate, Eve's uncertainty and worst-case lambda4 for BB84[C].

    Six-state is evaluated directly; four-state is minimised over
    ``lambda4`` in ``[0, Q]``. ``rate`` is clamped at zero while
    ``raw_rate`` keeps the sign for threshold searches.
    """
    e_c = cad_error(cfg.c, cfg.q)
    if cfg.basis_mode == SIX_STATE or cfg.q == 0.0:
        lam4 = 0.0
        entropy = float(_kept_terms(cfg, np.array([0.0]))[0])
    else:
        lam4, entropy = scan_minimize(lambda x: _kept_terms(cfg, x), 0.0, cfg.q,
                                      points=LAMBDA4_POINTS, tol=1e-12)
    raw = entropy - binary_entropy(e_c)
    rate = max(raw, 0.0)
    eff = cad_acceptance(cfg.c, cfg.q) * rate / cfg.c
    return CadReport(e_c=e_c, rate=rate, effective_rate=eff, entropy=entropy,
                     lambda4_worst=lam4, raw_rate=raw)


def cad_effective_rate(cfg: CadConfig, two_channels: bool = False) -> float:
    """(1/C) p_acc r, doubled when BB84 runs independently on both channels."""
    r = cad_rate(cfg).effective_rate
    return 2.0 * r if two_channels else r


def cad_threshold(c: int, basis_mode, width: float = THRESHOLD_WIDTH) -> float:
    """Largest Q with a positive BB84[C] key rate."""
    basis_mode = parse_basis(basis_mode)
    if not 1 <= c <= MAX_BLOCK:
        raise DomainError(f"block size must be in [1, {MAX_BLOCK}], got {c}")

    def positive(q: float) -> bool:
        return cad_rate(CadConfig(c, basis_mode, q)).raw_rate > 0.0

    if positive(0.5):
        return 0.5
    return bisect_boundary(positive, 0.0, 0.5, width)


def comparison_rows(c: int, basis_mode, qs, two_channels: bool = False):
    """Rows (protocol_tag, C, Q, rate, effective_rate, entropy)."""
    basis_mode = parse_basis(basis_mode)
    tag = ("BB84-XYZ" if basis_mode == SIX_STATE else "BB84-XZ") + f"[{c}]"
    for q in qs:
        cfg = CadConfig(c, basis_mode, float(q))
        rep = cad_rate(cfg)
        eff = 2.0 * rep.effective_rate if two_channels else rep.effective_rate
        yield (tag, c, cfg.q, rep.rate, eff, rep.entropy)
