"""Exact finite-dimensional model of a collective attack (U_F, U_R).

State vectors on transit qubit (x) Eve's memory are stored qubit-major: index
``t * d_E + e``. Everything here is exact linear algebra; it serves as the
oracle that the observable-only estimates are checked against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import null_space

from .errors import DegenerateAttackError, DomainError
from .estimate import BOB, ChannelStatistics, Mode, alice_for, prepared_for
from .qmath import CqDecomposition, conditional_entropy_cq, unitary_residual

UNITARY_TOL = 1e-10
CHI_TOL = 1e-12
NULL_EVENT = 1e-12
MAX_DIM = 16

_S = np.sqrt(0.5)
QUBIT = {
    "0": np.array([1.0, 0.0], dtype=complex),
    "1": np.array([0.0, 1.0], dtype=complex),
    "+": np.array([_S, _S], dtype=complex),
    "-": np.array([_S, -_S], dtype=complex),
    "0Y": np.array([_S, 1j * _S], dtype=complex),
    "1Y": np.array([_S, -1j * _S], dtype=complex),
}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AttackPair:
    """Eve's forward and return unitaries and her initial ancilla state."""

    d_e: int
    u_f: np.ndarray
    u_r: np.ndarray
    chi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u_f", _frozen(self.u_f))
        object.__setattr__(self, "u_r", _frozen(self.u_r))
        object.__setattr__(self, "chi", _frozen(self.chi))
        n = 2 * self.d_e
        if self.d_e < 1:
            raise DomainError(f"ancilla dimension must be positive, got {self.d_e}")
        for name, u in (("U_F", self.u_f), ("U_R", self.u_r)):
            if u.shape != (n, n):
                raise DomainError(f"{name} has shape {u.shape}, expected {(n, n)}")
            if unitary_residual(u) > UNITARY_TOL:
                raise DomainError(f"{name} is not unitary (residual {unitary_residual(u):.3g})")
        if self.chi.shape != (self.d_e,):
            raise DomainError(f"chi has shape {self.chi.shape}, expected {(self.d_e,)}")
        if abs(np.linalg.norm(self.chi) - 1.0) > CHI_TOL:
            raise DomainError("chi is not a unit vector")

    def forward(self, qubit: np.ndarray, eve: np.ndarray | None = None) -> np.ndarray:
        return self.u_f @ np.kron(qubit, self.chi if eve is None else eve)

    def to_json(self) -> str:
        def pairs(a):
            return [[float(z.real), float(z.imag)] for z in np.ravel(a)]
        return json.dumps({"d_E": self.d_e, "chi": pairs(self.chi),
                           "U_F": pairs(self.u_f), "U_R": pairs(self.u_r)})

    @classmethod
    def from_json(cls, text: str) -> "AttackPair":
        doc = json.loads(text)
        d = int(doc["d_E"])

        def arr(key, shape):
            flat = np.array([complex(re, im) for re, im in doc[key]])
            if flat.size != int(np.prod(shape)):
                raise DomainError(f"{key} has {flat.size} entries, expected {np.prod(shape)}")
            return flat.reshape(shape)

        return cls(d, arr("U_F", (2 * d, 2 * d)), arr("U_R", (2 * d, 2 * d)), arr("chi", (d,)))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "AttackPair":
        return cls.from_json(Path(path).read_text())


def _split(psi: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    return psi[:d], psi[d:]


def _project(psi: np.ndarray, k: str, d: int) -> np.ndarray:
    """Eve-space vector left after projecting the qubit onto |k>."""
    return QUBIT[k].conj() @ psi.reshape(2, d)


@dataclass(frozen=True)
class EveVectors:
    """``e[j]`` from U_F|i,chi>, ``ret[(i, j, k)]`` = e^k_{i,j}, ``g`` from U_R U_F."""

    e: tuple
    ret: dict
    g: tuple


def eve_vectors(attack: AttackPair) -> EveVectors:
    d = attack.d_e
    e0, e1 = _split(attack.forward(QUBIT["0"]), d)
    e2, e3 = _split(attack.forward(QUBIT["1"]), d)
    e = (e0, e1, e2, e3)
    ret = {}
    for i in (0, 1):
        for j in range(4):
            lo, hi = _split(attack.u_r @ np.kron(QUBIT[str(i)], e[j]), d)
            ret[(i, j, 0)], ret[(i, j, 1)] = lo, hi
    g = (ret[(0, 0, 0)] + ret[(1, 1, 0)], ret[(0, 0, 1)] + ret[(1, 1, 1)],
         ret[(0, 2, 0)] + ret[(1, 3, 0)], ret[(0, 2, 1)] + ret[(1, 3, 1)])
    return EveVectors(e=e, ret=ret, g=g)


def _prob(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def observables(attack: AttackPair, mode=Mode.MODE3) -> ChannelStatistics:
    """Every observable statistic of the attack, by exact state evolution.

    Rows whose conditioning event has probability below 1e-12 are left out.
    """
    mode = Mode.parse(mode)
    d = attack.d_e
    st = ChannelStatistics(mode=mode)
    outs = alice_for(mode)
    for i in prepared_for(mode):
        psi = attack.forward(QUBIT[i])
        for j in BOB:
            eve = _project(psi, j, d)
            p = _prob(eve)
            st.p_ab[(i, j)] = p
            if p < NULL_EVENT:
                continue
            back = attack.u_r @ np.kron(QUBIT[j], eve / np.sqrt(p))
            for k in outs:
                st.p_aa[(i, j, k)] = _prob(_project(back, k, d))
        back = attack.u_r @ psi
        for k in outs:
            st.p_reflect[(i, k)] = _prob(_project(back, k, d))
    return st


@dataclass(frozen=True)
class KeyState:
    """Eve's conditional vectors on key-distillation iterations.

    Pairs are ``(e^0_{0,0}, e^1_{1,3})`` and ``(e^0_{1,1}, e^1_{0,2})``;
    ``N`` is the acceptance probability of a Z/Z measure-and-resend round.
    """

    pairs: tuple
    N: float

    def cq(self) -> CqDecomposition:
        (a, b), (c, e) = self.pairs
        return CqDecomposition(zero=(a, c), one=(b, e), norm=2.0 * self.N)


def key_state(attack: AttackPair) -> KeyState:
    ev = eve_vectors(attack)
    r = ev.ret
    pairs = ((r[(0, 0, 0)], r[(1, 3, 1)]), (r[(1, 1, 0)], r[(0, 2, 1)]))
    n = 0.5 * sum(_prob(v) for pair in pairs for v in pair)
    if n < NULL_EVENT:
        raise DegenerateAttackError("no key-distillation iteration survives this attack")
    return KeyState(pairs=pairs, N=n)


def exact_conditional_entropy(attack: AttackPair) -> float:
    """S(A|E) of the post-selected key state, computed exactly."""
    return conditional_entropy_cq(key_state(attack).cq())


def identity_attack(d_e: int = 2) -> AttackPair:
    chi = np.zeros(d_e, dtype=complex)
    chi[0] = 1.0
    eye = np.eye(2 * d_e, dtype=complex)
    return AttackPair(d_e, eye, eye, chi)


_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def depolarizing_dilation(q: float) -> np.ndarray:
    """8x8 unitary on qubit (x) C^4 realising rho -> (1-2q) rho + q I
    when the ancilla starts in |0>."""
    p = 2.0 * q
    weights = (1.0 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p)
    # isometry columns: |psi> -> sum_m K_m |psi> (x) |m>
    iso = np.zeros((8, 2), dtype=complex)
    for m, (w, pauli) in enumerate(zip(weights, _PAULI)):
        k = np.sqrt(w) * pauli
        for t in range(2):
            for t_out in range(2):
                iso[t_out * 4 + m, t] += k[t_out, t]
    rest = null_space(iso.conj().T)
    u = np.zeros((8, 8), dtype=complex)
    fill = iter(range(rest.shape[1]))
    for t in range(2):
        for e in range(4):
            col = t * 4 + e
            u[:, col] = iso[:, t] if e == 0 else rest[:, next(fill)]
    return u


def depolarizing_attack(q: float) -> AttackPair:
    """Independent depolarizing noise of strength ``q`` on each channel.

    Eve's memory is two fresh 4-dimensional sub-ancillas (forward, return),
    so ``d_E = 16``; U_F touches only the first and U_R only the second.
    """
    if not (0.0 <= q <= 0.5):
        raise DomainError(f"depolarizing strength {q!r} outside [0, 0.5]")
    w = depolarizing_dilation(q).reshape(2, 4, 2, 4)
    eye4 = np.eye(4)
    # indices: (t_out, f_out, r_out, t_in, f_in, r_in)
    u_f = np.einsum("afbg,rs->afrbgs", w, eye4).reshape(32, 32)
    u_r = np.einsum("arbs,fg->afrbgs", w, eye4).reshape(32, 32)
    chi = np.zeros(16, dtype=complex)
    chi[0] = 1.0
    return AttackPair(16, u_f, u_r, chi)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_attack(d_e: int, seed: int) -> AttackPair:
    """Haar-random (U_F, U_R) on qubit (x) C^d_e, deterministic per seed."""
    if not (2 <= d_e <= MAX_DIM):
        raise DomainError(f"ancilla dimension {d_e} outside [2, {MAX_DIM}]")
    rng = np.random.default_rng(seed)
    u_f = haar_unitary(2 * d_e, rng)
    u_r = haar_unitary(2 * d_e, rng)
    chi = np.zeros(d_e, dtype=complex)
    chi[0] = 1.0
    return AttackPair(d_e, u_f, u_r, chi)
