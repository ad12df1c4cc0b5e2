"""Small dense complex linear algebra and entropy primitives.

All logarithms are base 2. Matrices are plain ``numpy`` complex arrays; the
dimensions involved never exceed a few dozen, so everything is computed by
dense eigendecomposition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

CLAMP_TOL = 1e-12
NORM_TOL = 1e-9
EIG_TOL = 1e-9


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2 (1-x), with 0 log 0 = 0."""
    if not (-CLAMP_TOL <= x <= 1.0 + CLAMP_TOL):
        raise DomainError(f"binary entropy argument {x!r} outside [0, 1]")
    x = min(max(x, 0.0), 1.0)
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x))


def binary_entropy_vec(x: np.ndarray) -> np.ndarray:
    """Vectorised h(x); inputs are clipped to [0, 1] without checking."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    out = np.zeros_like(x)
    m = (x > 0.0) & (x < 1.0)
    xm = x[m]
    out[m] = -xm * np.log2(xm) - (1.0 - xm) * np.log2(1.0 - xm)
    return out


def shannon_entropy(dist: Sequence[float]) -> float:
    p = np.asarray(dist, dtype=float)
    total = float(p.sum())
    if abs(total - 1.0) > NORM_TOL:
        raise DomainError(f"distribution not normalised (sum = {total!r})")
    if np.any(p < -CLAMP_TOL):
        raise DomainError(f"negative probability in {p.tolist()!r}")
    p = p[p > 0.0]
    return float(-(p * np.log2(p)).sum())


def hermitian_residual(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def unitary_residual(u: np.ndarray) -> float:
    """max |U^dagger U - I| entrywise."""
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def entropy_of_spectrum(eigs: np.ndarray) -> float:
    eigs = np.asarray(eigs, dtype=float)
    if np.any(eigs < -EIG_TOL):
        raise DomainError(f"eigenvalue {eigs.min()!r} below -{EIG_TOL}")
    eigs = eigs[eigs > 0.0]
    return float(-(eigs * np.log2(eigs)).sum())


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S(rho) = -tr(rho log2 rho) for a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DomainError(f"density matrix must be square, got shape {rho.shape}")
    if hermitian_residual(rho) > NORM_TOL:
        raise DomainError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > NORM_TOL:
        raise DomainError(f"density matrix trace {tr!r} != 1")
    return entropy_of_spectrum(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))


@dataclass(frozen=True)
class CqDecomposition:
    """Classical-quantum state (1/N) sum_a |a><a| (x) sum_i |E_i^a><E_i^a|.

    ``zero`` and ``one`` hold the (sub-normalised, possibly non-orthogonal)
    Eve vectors attached to classical values 0 and 1. The pairwise bound
    matches ``zero[i]`` with ``one[i]``.
    """

    zero: tuple[np.ndarray, ...]
    one: tuple[np.ndarray, ...]
    norm: float

    def __post_init__(self):
        if not self.norm > 0.0:
            raise DomainError(f"normalisation must be positive, got {self.norm!r}")


def _lambda(n0: float, n1: float, re: float) -> float:
    s = n0 + n1
    lam = 0.5 * (1.0 + np.sqrt((n0 - n1) ** 2 + 4.0 * re * re) / s)
    return float(min(max(lam, 0.5), 1.0))


def theorem1_bound(blocks: CqDecomposition) -> float:
    """Lower bound on S(A|E) from pairwise norms and real inner products."""
    if not blocks.norm > 0.0:
        raise DomainError("normalisation must be positive")
    total = 0.0
    for v0, v1 in zip(blocks.zero, blocks.one):
        n0 = float(np.vdot(v0, v0).real)
        n1 = float(np.vdot(v1, v1).real)
        s = n0 + n1
        if s <= 0.0:
            continue
        lam = _lambda(n0, n1, float(np.vdot(v0, v1).real))
        total += (s / blocks.norm) * (binary_entropy(n0 / s) - binary_entropy(lam))
    return max(total, 0.0)


def cq_density(blocks: CqDecomposition) -> np.ndarray:
    """Literal density operator on A (x) E, A-major ordering."""
    vecs = list(blocks.zero) + list(blocks.one)
    d = len(vecs[0])
    rho = np.zeros((2 * d, 2 * d), dtype=complex)
    for a, group in enumerate((blocks.zero, blocks.one)):
        sl = slice(a * d, (a + 1) * d)
        for v in group:
            v = np.asarray(v, dtype=complex)
            rho[sl, sl] += np.outer(v, v.conj())
    return rho / blocks.norm


def partial_trace_first(rho: np.ndarray, d_first: int) -> np.ndarray:
    d = rho.shape[0] // d_first
    return np.einsum("aiaj->ij", rho.reshape(d_first, d, d_first, d))


def conditional_entropy_cq(blocks: CqDecomposition) -> float:
    """Exact S(A|E) = S(AE) - S(E) of the cq state, by eigendecomposition."""
    rho = cq_density(blocks)
    return von_neumann_entropy(rho) - von_neumann_entropy(partial_trace_first(rho, 2))
