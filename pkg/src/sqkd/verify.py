"""Oracle checks: every estimation identity compared against exact inner products."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attack import AttackPair, eve_vectors, exact_conditional_entropy, key_state, observables, random_attack
from .estimate import Mode, mode2_bounds, mode3_bounds, norms_from_stats, reflect_g03, swap_q
from .qmath import theorem1_bound

IDENTITY_TOL = 1e-9


def _ip(a, b) -> complex:
    return complex(np.vdot(a, b))


def oracle_quantities(attack: AttackPair) -> dict:
    """Inner products the estimators are supposed to recover, computed directly."""
    ev = eve_vectors(attack)
    r, g = ev.ret, ev.g
    out = {}
    for b, (x, y) in (("0", (0, 2)), ("1", (1, 3))):
        i = int(b)
        a0, a1 = r[(i, x, 0)], r[(i, x, 1)]
        b0, b1 = r[(i, y, 0)], r[(i, y, 1)]
        out[f"im_a_{b}"] = _ip(a0, a1).imag
        out[f"im_b_{b}"] = _ip(b0, b1).imag
        out[f"im_00_{b}"] = _ip(a0, b0).imag
        out[f"im_11_{b}"] = _ip(a1, b1).imag
        out[f"q_{b}"] = _ip(a0, b1).real + _ip(a1, b0).real
        out[f"diff_{b}"] = _ip(a0, b1).real - _ip(a1, b0).real
        out[f"cross_{b}"] = _ip(a0, b1).real
    out["lambda1"] = _ip(r[(0, 0, 0)], r[(1, 3, 1)]).real
    out["lambda2"] = _ip(r[(1, 1, 0)], r[(0, 2, 1)]).real
    out["g03"] = _ip(g[0], g[3]).real
    return out


def _estimated_imaginary_parts(stats, norms, b: str) -> dict:
    j = stats.joint
    if b == "0":
        na0, nb0, na1, nb1 = norms.n00_0, norms.n02_0, norms.n00_1, norms.n02_1
    else:
        na0, nb0, na1, nb1 = norms.n11_0, norms.n13_0, norms.n11_1, norms.n13_1
    p0, p1 = stats.ab("0", b), stats.ab("1", b)
    im_a = j("0", b, "0Y") - 0.5 * p0
    im_b = j("1", b, "0Y") - 0.5 * p1
    im_00 = 0.5 * (na0 + nb0) - j("0Y", b, "0")
    im_11 = 0.5 * (na1 + nb1) - j("0Y", b, "1")
    diff = 0.5 * (4.0 * j("0Y", b, "0Y") - p0 - p1) - (im_a - im_00) - (im_b - im_11)
    return {f"im_a_{b}": im_a, f"im_b_{b}": im_b, f"im_00_{b}": im_00,
            f"im_11_{b}": im_11, f"diff_{b}": diff}


@dataclass
class AttackCheck:
    """Residuals of one attack; ``residuals`` are absolute differences, and
    ``soundness`` entries are signed excesses that must not be positive."""

    residuals: dict = field(default_factory=dict)
    soundness: dict = field(default_factory=dict)

    def worst(self) -> float:
        vals = list(self.residuals.values()) + [max(v, 0.0) for v in self.soundness.values()]
        return max(vals) if vals else 0.0

    def failures(self, tol: float = IDENTITY_TOL) -> list[str]:
        bad = [k for k, v in self.residuals.items() if not v <= tol]
        bad += [k for k, v in self.soundness.items() if not v <= tol]
        return bad


def check_attack(attack: AttackPair) -> AttackCheck:
    truth = oracle_quantities(attack)
    stats = observables(attack, Mode.MODE3)
    norms = norms_from_stats(stats)
    chk = AttackCheck()
    res = chk.residuals
    for b in ("0", "1"):
        for name, v in _estimated_imaginary_parts(stats, norms, b).items():
            res[name] = abs(v - truth[name])
    q1, q2 = swap_q(stats)
    res["q_0"] = abs(q1 - truth["q_0"])
    res["q_1"] = abs(q2 - truth["q_1"])
    res["g03_observed"] = abs(reflect_g03(stats) - truth["g03"])
    res["g03_expansion"] = abs(truth["g03"] - (truth["lambda1"] + truth["lambda2"]
                                               + truth["cross_0"] + truth["cross_1"]))
    b3 = mode3_bounds(stats)
    true_sum = truth["lambda1"] + truth["lambda2"]
    res["lambda_sum"] = abs(b3.raw_lambda_sum - true_sum)
    for b, est in zip(("0", "1"), b3.cross_re):
        res[f"cross_{b}"] = abs(est - truth[f"cross_{b}"])
    chk.soundness["mode2_lower_bound"] = mode2_bounds(stats).raw_lambda_sum - true_sum
    ks = key_state(attack)
    chk.soundness["pair_bound"] = theorem1_bound(ks.cq()) - exact_conditional_entropy(attack)
    return chk


@dataclass
class FuzzReport:
    n: int
    seed: int
    d_e: int
    worst: dict
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def fuzz(n: int, seed: int, d_e: int = 4, tol: float = IDENTITY_TOL) -> FuzzReport:
    """Check ``n`` random attacks seeded ``seed, seed+1, ...``."""
    worst: dict = {}
    failures = []
    for s in range(seed, seed + n):
        chk = check_attack(random_attack(d_e, s))
        for k, v in {**chk.residuals, **chk.soundness}.items():
            worst[k] = max(worst.get(k, -np.inf), v)
        failures.extend((s, name) for name in chk.failures(tol))
    return FuzzReport(n=n, seed=seed, d_e=d_e, worst=worst, failures=failures)
