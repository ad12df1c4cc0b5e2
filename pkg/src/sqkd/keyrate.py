"""Devetak-Winter key-rate lower bound for the two-way protocol.

The conditional entropy bound is minimised over the single free inner
product Lambda_2, with Lambda_1 = lambda_sum - Lambda_2 and both confined to
their Cauchy-Schwarz discs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InfeasibleError
from .estimate import (ChannelStatistics, InnerProductBounds, Mode, Norms,
                       bounds_for, norms_from_stats, symmetric_stats)
from .qmath import binary_entropy, binary_entropy_vec, shannon_entropy
from .search import bisect_boundary, scan_minimize

SCAN_POINTS = 2001
REFINE_TOL = 1e-10
THRESHOLD_WIDTH = 1e-5
THRESHOLD_FLOOR = 1e-6
KINDS = ("independent", "dependent", "custom")


@dataclass(frozen=True)
class ChannelFamily:
    """Symmetric two-way channel: per-channel Z error ``q`` and the reflected
    X/Y error ``q_x`` implied by ``kind``."""

    kind: str
    q: float
    q_x: float

    @classmethod
    def make(cls, kind: str, q: float, q_x: Optional[float] = None) -> "ChannelFamily":
        if kind == "independent":
            derived = 2.0 * q * (1.0 - q)
        elif kind == "dependent":
            derived = q
        elif kind == "custom":
            if q_x is None:
                raise DomainError("custom channel needs an explicit Q_X")
            derived = q_x
        else:
            raise DomainError(f"unknown channel kind {kind!r}")
        if q_x is not None and kind != "custom" and abs(q_x - derived) > 1e-12:
            raise DomainError(f"Q_X = {q_x} contradicts {kind} channel (expected {derived})")
        return cls(kind, q, derived)

    def stats(self, mode=Mode.MODE3) -> ChannelStatistics:
        return symmetric_stats(self.q, self.q, self.q_x, mode)


@dataclass(frozen=True)
class KeyRateReport:
    mode: Mode
    s_ae_lower: float
    h_ab: float
    rate: float
    effective_rate: float
    p_acc: float
    lambda2_worst: float
    lambda1_worst: float
    key_error: float
    bounds: InnerProductBounds


def key_probabilities(norms: Norms) -> tuple[float, float, float, float]:
    """(p00, p01, p10, p11) of the raw-key pair (Alice bit, Bob bit)."""
    n2 = 2.0 * norms.N
    return (norms.n00_0 / n2, norms.n11_0 / n2, norms.n02_1 / n2, norms.n13_1 / n2)


def h_a_given_b(norms: Norms, n: Optional[float] = None) -> float:
    n = norms.N if n is None else n
    if not n > 0.0:
        raise DomainError(f"normalisation N must be positive, got {n!r}")
    n2 = 2.0 * n
    p00, p01, p10, p11 = (norms.n00_0 / n2, norms.n11_0 / n2,
                          norms.n02_1 / n2, norms.n13_1 / n2)
    return shannon_entropy((p00, p01, p10, p11)) - binary_entropy(p00 + p10)


def raw_key_error(norms: Norms) -> float:
    """Probability that Alice's and Bob's raw-key bits differ."""
    bad = norms.n11_0 + norms.n02_1
    return bad / ((norms.n00_0 + norms.n13_1) + bad)


def key_error(q: float) -> float:
    """Raw-key error of the symmetric channel with per-channel Z error ``q``."""
    return raw_key_error(norms_from_stats(symmetric_stats(q, q, 0.0, Mode.MODE2)))


def _pair_term(n_a: float, n_b: float, big_n: float, lam_re: np.ndarray) -> np.ndarray:
    """Contribution of one pair of the pairwise entropy bound as a function of its real inner product."""
    s = n_a + n_b
    if s <= 0.0:
        return np.zeros_like(lam_re)
    lam = 0.5 * (1.0 + np.sqrt((n_a - n_b) ** 2 + 4.0 * lam_re * lam_re) / s)
    lam = np.clip(lam, 0.5, 1.0)
    return (s / (2.0 * big_n)) * (binary_entropy(n_a / s) - binary_entropy_vec(lam))


def entropy_objective(bounds: InnerProductBounds, lambda_sum: Optional[float] = None):
    """Vectorised S(A|E) bound as a function of Lambda_2."""
    nm = bounds.norms
    big_n = nm.N
    total = bounds.lambda_sum if lambda_sum is None else lambda_sum

    def f(l2):
        l2 = np.asarray(l2, dtype=float)
        return (_pair_term(nm.n00_0, nm.n13_1, big_n, total - l2)
                + _pair_term(nm.n11_0, nm.n02_1, big_n, l2))

    return f


def lambda2_interval(bounds: InnerProductBounds, total: Optional[float] = None,
                     slack: float = 1e-12) -> tuple[float, float]:
    total = bounds.lambda_sum if total is None else total
    lo = max(-bounds.cs2, total - bounds.cs1)
    hi = min(bounds.cs2, total + bounds.cs1)
    if lo > hi + slack:
        raise InfeasibleError(
            f"no Lambda_2 satisfies |Lambda_2| <= {bounds.cs2:.6g} and "
            f"|{total:.6g} - Lambda_2| <= {bounds.cs1:.6g}")
    return lo, max(lo, hi)


def _minimize_fixed_sum(bounds: InnerProductBounds, total: float) -> tuple[float, float]:
    lo, hi = lambda2_interval(bounds, total)
    return scan_minimize(entropy_objective(bounds, total), lo, hi,
                         points=SCAN_POINTS, tol=REFINE_TOL)


def entropy_lower_bound(bounds: InnerProductBounds,
                        sum_at_least: bool = False) -> tuple[float, float, float]:
    """Worst-case S(A|E) bound; returns ``(value, lambda2, lambda1)``.

    By default Lambda_1 + Lambda_2 is pinned to ``bounds.lambda_sum``. With
    ``sum_at_least`` (meaningful only for the MODE-2 lower bound) the sum may
    take any feasible value above it and the bound is minimised over both.
    """
    if not sum_at_least or bounds.lambda_sum_is_exact:
        l2, val = _minimize_fixed_sum(bounds, bounds.lambda_sum)
        return max(val, 0.0), l2, bounds.lambda_sum - l2
    top = bounds.cs1 + bounds.cs2
    lo = bounds.lambda_sum
    if lo > top + 1e-12:
        raise InfeasibleError("Lambda sum lower bound exceeds the Cauchy-Schwarz cap")

    def outer(totals):
        return np.array([_minimize_fixed_sum(bounds, float(t))[1] for t in np.atleast_1d(totals)])

    s_best, _ = scan_minimize(outer, lo, max(lo, top), points=101, tol=1e-8)
    l2, val = _minimize_fixed_sum(bounds, s_best)
    return max(val, 0.0), l2, s_best - l2


def key_rate(mode, stats: ChannelStatistics, p_acc: Optional[float] = None,
             sum_at_least: bool = False) -> KeyRateReport:
    """Key rate r = S(A|E)_bound - H(A|B) and effective rate p_acc * r / 2.

    ``p_acc`` defaults to the probability that a Z/Z measure-and-resend round
    is accepted, which is the normalisation N of the key state.
    """
    mode = Mode.parse(mode)
    bounds = bounds_for(mode, stats)
    nm = bounds.norms
    if not nm.N > 0.0:
        raise DomainError("no accepted key rounds: N = 0")
    s_lower, l2, l1 = entropy_lower_bound(bounds, sum_at_least=sum_at_least)
    h_ab = h_a_given_b(nm)
    rate = s_lower - h_ab
    p = nm.N if p_acc is None else p_acc
    return KeyRateReport(
        mode=mode, s_ae_lower=s_lower, h_ab=h_ab, rate=rate,
        effective_rate=0.5 * p * rate, p_acc=p, lambda2_worst=l2, lambda1_worst=l1,
        key_error=raw_key_error(nm), bounds=bounds,
    )


def channel_rate(mode, family: ChannelFamily, **kw) -> KeyRateReport:
    return key_rate(mode, family.stats(mode), **kw)


def noise_threshold(mode, kind: str, width: float = THRESHOLD_WIDTH, **kw) -> float:
    """Largest per-channel Z error with a positive key rate on ``[0, 0.5]``."""
    mode = Mode.parse(mode)
    if kind not in ("independent", "dependent"):
        raise DomainError(f"threshold needs an independent or dependent channel, got {kind!r}")

    def positive(q: float) -> bool:
        try:
            return channel_rate(mode, ChannelFamily.make(kind, q), **kw).rate > 0.0
        except InfeasibleError:
            return False

    if not positive(THRESHOLD_FLOOR):
        raise DomainError(f"key rate not positive even at Q = {THRESHOLD_FLOOR}")
    if positive(0.5):
        return 0.5
    return bisect_boundary(positive, THRESHOLD_FLOOR, 0.5, width)


def sweep_rows(mode, kind: str, qs, q_x=None):
    """Rows (mode, kind, Q, Q_X, s_ae_lower, h_ab, rate, effective_rate, lambda2_worst)."""
    mode = Mode.parse(mode)
    for q in qs:
        fam = ChannelFamily.make(kind, float(q), q_x)
        try:
            r = channel_rate(mode, fam)
            yield (int(mode), kind, fam.q, fam.q_x, r.s_ae_lower, r.h_ab, r.rate,
                   r.effective_rate, r.lambda2_worst)
        except InfeasibleError:
            yield (int(mode), kind, fam.q, fam.q_x, math.nan, math.nan, math.nan,
                   math.nan, math.nan)
