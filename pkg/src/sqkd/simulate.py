"""Iteration-level Monte Carlo of the two-way protocol under a collective attack.

Each iteration's measurement outcomes are drawn from their exact conditional
distributions, obtained from the attack by state collapse, so the sampler is
exact rather than approximate. The run is split into fixed-size shards with
seeds spawned from the master seed; the result does not depend on how many
worker processes execute the shards.
"""

from __future__ import annotations

import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .attack import QUBIT, AttackPair, _project
from .errors import DomainError
from .estimate import BASES, BOB, ChannelStatistics, Mode, prepared_for

SHARD_SIZE = 1 << 17
WORKERS_ENV = "SQKD_WORKERS"

PREP_LABELS = ("0", "1", "+", "0Y")
ACTION_LABELS = ("0", "1", "R")
BASIS_LABELS = ("Z", "X", "Y")
_N_COUNTS = 4 * 3 * 3 * 2 * 2 * 2


@dataclass(frozen=True)
class ProtocolConfig:
    mode: Mode = Mode.MODE3
    p: float = 0.9
    q: float = 0.9
    iterations: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        for name, v in (("p", self.p), ("q", self.q)):
            if not 0.0 < v < 1.0:
                raise DomainError(f"{name} = {v!r} must lie strictly inside (0, 1)")
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise DomainError(f"iterations must be a positive integer, got {self.iterations!r}")

    def basis_probs(self) -> np.ndarray:
        """P(Z), P(X), P(Y) for both of Alice's basis choices."""
        rest = 1.0 - self.p
        if self.mode is Mode.MODE2:
            return np.array([self.p, rest, 0.0])
        return np.array([self.p, rest / 2.0, rest / 2.0])


@dataclass
class SimulationOutcome:
    """Raw keys plus the tally of every iteration.

    ``counts`` maps ``(prepared, bob, alice_basis, alice_outcome, accept, test)``
    to the number of iterations, where ``bob`` is ``"0"``/``"1"`` after a
    measurement or ``"R"`` after a reflection.
    """

    config: ProtocolConfig
    raw_key_a: np.ndarray
    raw_key_b: np.ndarray
    counts: dict

    @property
    def empirical(self) -> ChannelStatistics:
        return empirical_statistics(self)

    @property
    def key_length(self) -> int:
        return int(self.raw_key_a.size)

    def key_disagreement(self) -> float:
        if self.raw_key_a.size == 0:
            return float("nan")
        return float(np.mean(self.raw_key_a != self.raw_key_b))


def branch_tables(attack: AttackPair) -> tuple[np.ndarray, np.ndarray]:
    """Exact sampling tables.

    ``p_bob[i]`` is P(Bob reads 1 | prepared i). ``p_alice[i, a, b]`` is
    P(Alice reads the second state of basis b | prepared i, Bob action a),
    with a in (measured 0, measured 1, reflected).
    """
    d = attack.d_e
    p_bob = np.zeros(4)
    p_alice = np.full((4, 3, 3), 0.5)
    for ii, i in enumerate(PREP_LABELS):
        psi = attack.forward(QUBIT[i])
        backs = []
        for jj, j in enumerate(BOB):
            eve = _project(psi, j, d)
            pj = float(np.vdot(eve, eve).real)
            if jj == 1:
                p_bob[ii] = pj
            # a null branch is never sampled; leave its row at 1/2
            backs.append(attack.u_r @ np.kron(QUBIT[j], eve / np.sqrt(pj)) if pj > 0.0 else None)
        backs.append(attack.u_r @ psi)
        for aa, back in enumerate(backs):
            if back is None:
                continue
            for bb, basis in enumerate(BASIS_LABELS):
                lo, hi = (_project(back, k, d) for k in BASES[basis])
                w_lo, w_hi = float(np.vdot(lo, lo).real), float(np.vdot(hi, hi).real)
                p_alice[ii, aa, bb] = w_hi / (w_lo + w_hi)
    return np.clip(p_bob, 0.0, 1.0), np.clip(p_alice, 0.0, 1.0)


def _count_index(prep, action, basis, bit, accept, test):
    return ((((prep * 3 + action) * 3 + basis) * 2 + bit) * 2 + accept) * 2 + test


def _run_shard(args):
    cfg, p_bob, p_alice, n, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    probs = cfg.basis_probs()
    b_a = rng.choice(3, size=n, p=probs)
    k_a = rng.integers(0, 2, size=n)
    # Z sends |k_A>, X sends |+>, Y sends |0_Y>
    prep = np.where(b_a == 0, k_a, b_a + 1)
    measure = rng.random(n) < cfg.p
    k_b = (rng.random(n) < p_bob[prep]).astype(np.int64)
    action = np.where(measure, k_b, 2)
    b_a2 = rng.choice(3, size=n, p=probs)
    m_bit = (rng.random(n) < p_alice[prep, action, b_a2]).astype(np.int64)
    accept = ((b_a == 0) & (b_a2 == 0) & (m_bit == k_a)).astype(np.int64)
    test = (rng.random(n) >= cfg.q).astype(np.int64)
    key = (accept == 1) & (test == 0) & measure
    idx = _count_index(prep, action, b_a2, m_bit, accept, test)
    counts = np.bincount(idx, minlength=_N_COUNTS)
    return counts, k_a[key].astype(np.uint8), k_b[key].astype(np.uint8)


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def run_protocol(cfg: ProtocolConfig, attack: AttackPair, workers: int | None = None) -> SimulationOutcome:
    """Simulate ``cfg.iterations`` rounds; deterministic for a given seed."""
    p_bob, p_alice = branch_tables(attack)
    sizes = [SHARD_SIZE] * (cfg.iterations // SHARD_SIZE)
    if cfg.iterations % SHARD_SIZE:
        sizes.append(cfg.iterations % SHARD_SIZE)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    jobs = [(cfg, p_bob, p_alice, n, s) for n, s in zip(sizes, seeds)]
    workers = _workers() if workers is None else max(1, workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_shard, jobs))
    else:
        parts = [_run_shard(j) for j in jobs]
    total = np.sum([c for c, _, _ in parts], axis=0)
    key_a = np.concatenate([a for _, a, _ in parts])
    key_b = np.concatenate([b for _, _, b in parts])
    counts = {}
    for flat in np.flatnonzero(total):
        rest, test = divmod(int(flat), 2)
        rest, accept = divmod(rest, 2)
        rest, bit = divmod(rest, 2)
        rest, basis = divmod(rest, 3)
        prep, action = divmod(rest, 3)
        b = BASIS_LABELS[basis]
        counts[(PREP_LABELS[prep], ACTION_LABELS[action], b, BASES[b][bit], accept, test)] = int(total[flat])
    return SimulationOutcome(cfg, key_a, key_b, counts)


def statistics_counts(outcome: SimulationOutcome) -> dict:
    """Counts of the iterations disclosed for parameter estimation.

    Key-distillation rounds are withheld. Dropping every untested Z/Z
    measure-and-resend round, accepted or not, keeps the estimators unbiased
    because the test flag is independent of everything else.
    """
    out = {}
    for key, n in outcome.counts.items():
        i, a, b, _, _, test = key
        zz_measured = i in BOB and a != "R" and b == "Z"
        if test == 1 or not zz_measured:
            out[key] = out.get(key, 0) + n
    return out


def row_tallies(outcome: SimulationOutcome) -> dict:
    """``(successes, trials)`` behind every populated empirical row.

    Keys are ``("AB", i, j)``, ``("AA", i, j, k)`` and ``("R", i, k)``.
    """
    mode = outcome.config.mode
    tally: dict = {}
    for (i, a, b, k, _, _), n in statistics_counts(outcome).items():
        tally[(i, a, b, k)] = tally.get((i, a, b, k), 0) + n
    bases = BASIS_LABELS if mode is Mode.MODE3 else BASIS_LABELS[:2]
    out = {}
    for i in prepared_for(mode):
        by_action = {a: sum(v for (ii, aa, _, _), v in tally.items() if ii == i and aa == a)
                     for a in ACTION_LABELS}
        measured = by_action["0"] + by_action["1"]
        if measured:
            for j in BOB:
                out[("AB", i, j)] = (by_action[j], measured)
        for a in ACTION_LABELS:
            for b in bases:
                row = [tally.get((i, a, b, k), 0) for k in BASES[b]]
                tot = sum(row)
                if not tot:
                    continue
                for k, c in zip(BASES[b], row):
                    out[("R", i, k) if a == "R" else ("AA", i, a, k)] = (c, tot)
    return out


def empirical_statistics(outcome: SimulationOutcome) -> ChannelStatistics:
    """Ratio estimators for every row; rows never conditioned on are absent."""
    st = ChannelStatistics(mode=outcome.config.mode)
    for key, (c, n) in row_tallies(outcome).items():
        if key[0] == "AB":
            st.p_ab[key[1:]] = c / n
        elif key[0] == "R":
            st.p_reflect[key[1:]] = c / n
        else:
            st.p_aa[key[1:]] = c / n
    return st


def key_to_hex(bits: np.ndarray) -> str:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def outcome_to_csv(outcome: SimulationOutcome) -> str:
    """Counts table with the configuration and hex raw keys in ``#`` header lines."""
    cfg = outcome.config
    buf = io.StringIO()
    buf.write(f"# seed={cfg.seed} mode={int(cfg.mode)} p={cfg.p!r} q={cfg.q!r} iterations={cfg.iterations}\n")
    buf.write(f"# key_length={outcome.key_length}\n")
    buf.write(f"# raw_key_a={key_to_hex(outcome.raw_key_a)}\n")
    buf.write(f"# raw_key_b={key_to_hex(outcome.raw_key_b)}\n")
    buf.write("prepared,bob,alice_basis,alice_outcome,accept,test,count\n")
    for key in sorted(outcome.counts):
        i, a, b, k, acc, test = key
        buf.write(f"{i},{a},{b},{k},{acc},{test},{outcome.counts[key]}\n")
    return buf.getvalue()


def expected_key_fraction(cfg: ProtocolConfig, attack: AttackPair) -> float:
    """Exact probability that one iteration is a key-distillation iteration."""
    p_bob, p_alice = branch_tables(attack)
    acc = 0.0
    for i in (0, 1):
        for j in (0, 1):
            pj = p_bob[i] if j else 1.0 - p_bob[i]
            p_match = p_alice[i, j, 0] if i else 1.0 - p_alice[i, j, 0]
            acc += 0.5 * pj * p_match
    return cfg.p ** 3 * cfg.q * acc
