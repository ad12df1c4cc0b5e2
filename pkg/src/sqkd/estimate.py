"""Parameter estimation: observable channel statistics to inner-product
constraints on Eve's attack.

Labels follow the protocol: Alice prepares one of ``"0", "1", "+", "0Y"``;
Bob either measures and resends (outcome ``"0"`` or ``"1"``) or reflects
(``"R"``); Alice finally measures one of ``"0", "1", "+", "-", "0Y", "1Y"``.

Naming of Eve vectors: ``e^k_{i,j}`` is the component of ``U_R |i, e_j>``
with the returning qubit in ``|k>``; its squared norm is stored as ``nij_k``.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import DomainError, EstimationError

PREPARED = ("0", "1", "+", "0Y")
BOB = ("0", "1")
ALICE = ("0", "1", "+", "-", "0Y", "1Y")
BASES = {"Z": ("0", "1"), "X": ("+", "-"), "Y": ("0Y", "1Y")}
BASIS_OF = {k: b for b, ks in BASES.items() for k in ks}

ROW_TOL = 1e-9
ZERO_WEIGHT = 1e-12


class Mode(enum.IntEnum):
    MODE2 = 2
    MODE3 = 3

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, Mode):
            return value
        text = str(value).upper().replace("-", "").replace("MODE", "")
        try:
            return cls(int(text))
        except ValueError:
            raise DomainError(f"unknown mode {value!r}") from None


def prepared_for(mode: Mode) -> tuple[str, ...]:
    return PREPARED if mode is Mode.MODE3 else PREPARED[:3]


def alice_for(mode: Mode) -> tuple[str, ...]:
    return ALICE if mode is Mode.MODE3 else ALICE[:4]


@dataclass
class ChannelStatistics:
    """Observable probabilities of one protocol iteration.

    ``p_ab[(i, j)]``: Bob sees ``j`` given Alice sent ``i`` and Bob measured.
    ``p_aa[(i, j, k)]``: Alice sees ``k`` given she sent ``i`` and Bob
    measured ``j``. ``p_reflect[(i, k)]``: Alice sees ``k`` given she sent
    ``i`` and Bob reflected. A missing key means the row is undefined
    (its conditioning event had probability zero, or was never sampled).
    """

    p_ab: dict = field(default_factory=dict)
    p_aa: dict = field(default_factory=dict)
    p_reflect: dict = field(default_factory=dict)
    mode: Mode = Mode.MODE3

    def ab(self, i: str, j: str) -> float:
        try:
            return self.p_ab[(i, j)]
        except KeyError:
            raise EstimationError(f"missing statistic p_AB[{i},{j}]") from None

    def aa(self, i: str, j: str, k: str) -> float:
        try:
            return self.p_aa[(i, j, k)]
        except KeyError:
            raise EstimationError(f"missing statistic p_AA[{i},{j},{k}]") from None

    def reflect(self, i: str, k: str) -> float:
        try:
            return self.p_reflect[(i, k)]
        except KeyError:
            raise EstimationError(f"missing statistic p_AA[{i},R,{k}]") from None

    def joint(self, i: str, j: str, k: str) -> float:
        """p_ab[i,j] * p_aa[i,j,k]; zero when the conditioning event is null."""
        pj = self.ab(i, j)
        if (i, j, k) not in self.p_aa and pj <= ZERO_WEIGHT:
            return 0.0
        return pj * self.aa(i, j, k)

    def validate(self, tol: float = ROW_TOL) -> None:
        """Raise DomainError unless every present row is a distribution."""
        for table in (self.p_ab, self.p_aa, self.p_reflect):
            for key, v in table.items():
                if not (-tol <= v <= 1.0 + tol):
                    raise DomainError(f"statistic {key} = {v!r} outside [0, 1]")
        for i in PREPARED:
            if (i, "0") in self.p_ab or (i, "1") in self.p_ab:
                s = self.p_ab.get((i, "0"), 0.0) + self.p_ab.get((i, "1"), 0.0)
                if abs(s - 1.0) > tol:
                    raise DomainError(f"p_AB[{i},*] sums to {s!r}")
            for j in BOB + ("R",):
                for outs in BASES.values():
                    if j == "R":
                        vals = [self.p_reflect.get((i, k)) for k in outs]
                    else:
                        vals = [self.p_aa.get((i, j, k)) for k in outs]
                    if all(v is None for v in vals):
                        continue
                    if any(v is None for v in vals):
                        raise DomainError(f"half-populated row for {i},{j},{outs}")
                    if abs(sum(vals) - 1.0) > tol:
                        raise DomainError(f"row {i},{j},{outs} sums to {sum(vals)!r}")

    def rows(self):
        """Flat ``(path, prepared, bob, alice, probability)`` tuples."""
        for (i, j), v in self.p_ab.items():
            yield ("AB", i, j, "", v)
        for (i, j, k), v in self.p_aa.items():
            yield ("AA", i, j, k, v)
        for (i, k), v in self.p_reflect.items():
            yield ("AA", i, "R", k, v)


def _check_prob(name: str, v: float) -> None:
    if not (0.0 <= v <= 0.5):
        raise DomainError(f"{name} = {v!r} outside [0, 0.5]")


def symmetric_stats(q_f: float, q_r: float, q_x: float, mode=Mode.MODE3) -> ChannelStatistics:
    """Statistics of a symmetric two-way channel.

    Z errors are ``q_f`` forward and ``q_r`` on the return path; a reflected
    qubit is flipped with probability ``q_x`` in whichever basis it was
    prepared and measured; every mismatched-basis event has probability 1/2.
    """
    mode = Mode.parse(mode)
    for name, v in (("Q_F", q_f), ("Q_R", q_r), ("Q_X", q_x)):
        _check_prob(name, v)
    prep = prepared_for(mode)
    outs = alice_for(mode)
    st = ChannelStatistics(mode=mode)
    for i in prep:
        for j in BOB:
            if i in BOB:
                st.p_ab[(i, j)] = 1.0 - q_f if i == j else q_f
            else:
                st.p_ab[(i, j)] = 0.5
            for k in outs:
                if k in BOB:
                    st.p_aa[(i, j, k)] = 1.0 - q_r if k == j else q_r
                else:
                    st.p_aa[(i, j, k)] = 0.5
        for k in outs:
            if BASIS_OF[k] != BASIS_OF[i]:
                st.p_reflect[(i, k)] = 0.5
            else:
                st.p_reflect[(i, k)] = 1.0 - q_x if k == i else q_x
    return st


@dataclass(frozen=True)
class Norms:
    """The eight squared norms <e^k_{i,j}|e^k_{i,j}> entering the key state."""

    n00_0: float
    n13_1: float
    n11_0: float
    n02_1: float
    n00_1: float
    n13_0: float
    n11_1: float
    n02_0: float

    @property
    def N(self) -> float:
        """Probability that Alice's final Z result matches what she sent."""
        return 0.5 * (self.n00_0 + self.n11_0 + self.n13_1 + self.n02_1)


def norms_from_stats(stats: ChannelStatistics) -> Norms:
    j = stats.joint
    return Norms(
        n00_0=j("0", "0", "0"), n13_1=j("1", "1", "1"),
        n11_0=j("0", "1", "0"), n02_1=j("1", "0", "1"),
        n00_1=j("0", "0", "1"), n13_0=j("1", "1", "0"),
        n11_1=j("0", "1", "1"), n02_0=j("1", "0", "0"),
    )


@dataclass(frozen=True)
class InnerProductBounds:
    """Constraints on Lambda_1 = Re<e^0_{0,0}|e^1_{1,3}> and
    Lambda_2 = Re<e^0_{1,1}|e^1_{0,2}>.

    ``lambda_sum`` is the value (MODE-3) or lower bound (MODE-2) of
    Lambda_1 + Lambda_2 after clipping to ``[-(cs1+cs2), cs1+cs2]``;
    ``raw_lambda_sum`` is the unclipped estimate.
    """

    norms: Norms
    lambda_sum: float
    lambda_sum_is_exact: bool
    cs1: float
    cs2: float
    q1: float
    q2: float
    cross_re: Optional[tuple[Optional[float], Optional[float]]] = None
    raw_lambda_sum: float = math.nan
    clipped: bool = False


def swap_q(stats: ChannelStatistics) -> tuple[float, float]:
    """q1 = Re<e^0_{00}|e^1_{02}> + Re<e^1_{00}|e^0_{02}>, q2 likewise for Bob's 1."""
    out = []
    for b in BOB:
        out.append(2.0 * stats.joint("+", b, "+") - stats.ab("+", b)
                   + 0.5 * stats.ab("0", b) - stats.joint("0", b, "+")
                   + 0.5 * stats.ab("1", b) - stats.joint("1", b, "+"))
    return out[0], out[1]


def _finish(norms: Norms, raw: float, exact: bool, q1: float, q2: float,
            cross=None) -> InnerProductBounds:
    cs1 = math.sqrt(norms.n00_0 * norms.n13_1)
    cs2 = math.sqrt(norms.n11_0 * norms.n02_1)
    cap = cs1 + cs2
    value = min(max(raw, -cap), cap)
    return InnerProductBounds(
        norms=norms, lambda_sum=value, lambda_sum_is_exact=exact,
        cs1=cs1, cs2=cs2, q1=q1, q2=q2, cross_re=cross,
        raw_lambda_sum=raw, clipped=abs(value - raw) > 1e-12,
    )


def mode2_bounds(stats: ChannelStatistics) -> InnerProductBounds:
    """Lower bound on Lambda_1 + Lambda_2 from Z and X statistics only."""
    norms = norms_from_stats(stats)
    q1, q2 = swap_q(stats)
    q_x = stats.reflect("+", "-")
    cross_cap = math.sqrt(norms.n00_1 * norms.n13_0) + math.sqrt(norms.n11_1 * norms.n02_0)
    raw = 2.0 - 2.0 * q_x - (q1 + q2 + stats.reflect("0", "+") + stats.reflect("1", "+")
                             + cross_cap)
    return _finish(norms, raw, False, q1, q2)


def reflect_g03(stats: ChannelStatistics) -> float:
    """Re<g0|g3> of the reflected-path attack V = U_R U_F, from observables."""
    r = stats.reflect
    return (1.0 - r("+", "-") - r("0Y", "1Y")
            - 0.5 * (r("0", "+") + r("1", "+") + r("0", "0Y") + r("1", "0Y") - 2.0))


def _block_cross(stats: ChannelStatistics, norms: Norms, b: str, q: float) -> float:
    """Re<e^0_{b,x}|e^1_{b,y}> for Bob outcome b: (x, y) = (0, 2) or (1, 3).

    Combines the Y-basis return statistics (which fix the difference of the
    two swapped cross terms) with ``q`` (which fixes their sum).
    """
    j = stats.joint
    if b == "0":
        na0, nb0, na1, nb1 = norms.n00_0, norms.n02_0, norms.n00_1, norms.n02_1
    else:
        na0, nb0, na1, nb1 = norms.n11_0, norms.n13_0, norms.n11_1, norms.n13_1
    p0, p1 = stats.ab("0", b), stats.ab("1", b)
    im_a = j("0", b, "0Y") - 0.5 * p0          # Im<e^0_a|e^1_a>
    im_b = j("1", b, "0Y") - 0.5 * p1          # Im<e^0_b|e^1_b>
    im_00 = 0.5 * (na0 + nb0) - j("0Y", b, "0")  # Im<e^0_a|e^0_b>
    im_11 = 0.5 * (na1 + nb1) - j("0Y", b, "1")  # Im<e^1_a|e^1_b>
    diff = (0.5 * (4.0 * j("0Y", b, "0Y") - p0 - p1)
            - (im_a - im_00) - (im_b - im_11))
    return 0.5 * (q + diff)


def mode3_bounds(stats: ChannelStatistics) -> InnerProductBounds:
    """Exact Lambda_1 + Lambda_2 using the additional Y-basis statistics.

    Falls back to Cauchy-Schwarz for a block whose Y rows are unavailable,
    and to :func:`mode2_bounds` when the reflected Y statistics are missing.
    """
    if Mode.parse(stats.mode) is not Mode.MODE3:
        raise EstimationError("MODE-3 bounds need Y-basis statistics (mode tag is MODE2)")
    norms = norms_from_stats(stats)
    q1, q2 = swap_q(stats)
    try:
        g03 = reflect_g03(stats)
    except EstimationError:
        if not any(k[0] == "0Y" for k in stats.p_reflect):
            raise
        return mode2_bounds(stats)
    exact = True
    cross = []
    caps = (math.sqrt(norms.n00_0 * norms.n02_1), math.sqrt(norms.n11_0 * norms.n13_1))
    for b, q, cap in (("0", q1, caps[0]), ("1", q2, caps[1])):
        try:
            cross.append(_block_cross(stats, norms, b, q))
        except EstimationError:
            cross.append(None)
            exact = False
    raw = g03 - sum(c if c is not None else cap for c, cap in zip(cross, caps))
    return _finish(norms, raw, exact, q1, q2, tuple(cross))


def bounds_for(mode, stats: ChannelStatistics) -> InnerProductBounds:
    return mode3_bounds(stats) if Mode.parse(mode) is Mode.MODE3 else mode2_bounds(stats)


# CSV interchange: one row per statistic.
CSV_FIELDS = ("path", "prepared", "bob", "alice", "probability")


def stats_to_csv(stats: ChannelStatistics) -> str:
    buf = io.StringIO()
    buf.write(f"# mode={Mode.parse(stats.mode).name}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for path, i, j, k, v in stats.rows():
        w.writerow((path, i, j, k, repr(float(v))))
    return buf.getvalue()


def stats_from_csv(text: str) -> ChannelStatistics:
    lines = text.splitlines()
    mode = Mode.MODE3
    body = []
    for line in lines:
        if line.startswith("#"):
            tag = line[1:].strip()
            if tag.startswith("mode="):
                mode = Mode.parse(tag[5:])
        elif line.strip():
            body.append(line)
    st = ChannelStatistics(mode=mode)
    for row in csv.DictReader(body):
        v = float(row["probability"])
        i, j, k = row["prepared"], row["bob"], row["alice"]
        if row["path"] == "AB":
            st.p_ab[(i, j)] = v
        elif row["path"] == "AA" and j == "R":
            st.p_reflect[(i, k)] = v
        elif row["path"] == "AA":
            st.p_aa[(i, j, k)] = v
        else:
            raise DomainError(f"unknown path tag {row['path']!r}")
    return st


def save_stats(stats: ChannelStatistics, path) -> None:
    Path(path).write_text(stats_to_csv(stats))


def load_stats(path) -> ChannelStatistics:
    return stats_from_csv(Path(path).read_text())
