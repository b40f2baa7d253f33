"""Mixed tensor lifts, moment operators and the t-design distance delta.

Vectorization convention shared across the package: ``vec(A)`` is the
row-major flattening ``sum A_ij e_i (x) e_j``, so that
``(L (x) conj(L)) vec(A) = vec(L A L^H)``.  The lift of ``U`` places the
unconjugated factors first and the conjugated ones last.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator

from .gates import GateSet
from .haar_ref import permutations
from .numerics import (DENSE_CAP, NORM_TOL, apply_factors, check_cap, kron_all,
                       spectral_norm)

MAX_HAAR_T = 6
GRAM_CUTOFF = 1e-12
AT_ONE_TOL = 1e-6


def lift_factors(u: np.ndarray, t1: int, t2: int) -> list[np.ndarray]:
    u = np.asarray(u, dtype=complex)
    return [u] * t1 + [u.conj()] * t2


@dataclass(frozen=True)
class MixedLift:
    t1: int
    t2: int
    matrix: np.ndarray


def mixed_lift(u, t1: int, t2: int, cap: int = DENSE_CAP) -> MixedLift:
    """``U^{(x)t1} (x) conj(U)^{(x)t2}`` as a dense matrix."""
    if t1 < 0 or t2 < 0 or t1 + t2 < 1:
        raise ValueError("need t1, t2 >= 0 with t1 + t2 >= 1")
    return MixedLift(t1, t2, kron_all(lift_factors(u, t1, t2), cap))


@dataclass(frozen=True)
class MomentOperator:
    t: int
    matrix: np.ndarray
    source: str  # "gateset", "haar", "word" or "group"


def moment_operator(s: GateSet, t: int, cap: int = DENSE_CAP) -> MomentOperator:
    """Average of ``U^{(x)t} (x) conj(U)^{(x)t}`` over the uniform measure on ``s``."""
    check_cap(s.d ** (2 * t), cap)
    acc = sum(mixed_lift(u, t, t, cap).matrix for u in s.matrices)
    return MomentOperator(t, acc / len(s), "gateset")


def average_operator(mats, t: int) -> LinearOperator:
    """Matrix-free moment operator of the uniform measure on ``mats``."""
    mats = [np.asarray(m, dtype=complex) for m in mats]
    n = mats[0].shape[0] ** (2 * t)
    fwd = [lift_factors(u, t, t) for u in mats]
    adj = [lift_factors(u.conj().T, t, t) for u in mats]

    def mv(v):
        return sum(apply_factors(f, v) for f in fwd) / len(mats)

    def rmv(v):
        return sum(apply_factors(f, v) for f in adj) / len(mats)

    return LinearOperator((n, n), matvec=mv, rmatvec=rmv, matmat=mv, rmatmat=rmv,
                          dtype=complex)


def permutation_vectors(d: int, t: int) -> np.ndarray:
    """Columns ``vec(P_s)`` for every ``s`` in ``S_t`` (lexicographic order)."""
    D = d ** t
    perms = permutations(t)
    cols = np.arange(D)
    digits = np.array(np.unravel_index(cols, (d,) * t))  # t x D
    out = np.zeros((D * D, len(perms)))
    for k, perm in enumerate(perms):
        # P_s sends the basis state with digits j to the one with digits j[s]
        rows = np.ravel_multi_index(digits[perm], (d,) * t)
        out[rows * D + cols, k] = 1.0
    return out


@lru_cache(maxsize=16)
def haar_basis(d: int, t: int) -> np.ndarray:
    """Orthonormal basis of the Haar-invariant subspace of ``(C^d)^{(x)2t}``.

    Built from the permutation vectors and the pseudo-inverse square root of
    their Gram matrix ``d^{cycles(s^-1 r)}``.
    """
    if not 1 <= t <= MAX_HAAR_T:
        raise ValueError(f"t must be in 1..{MAX_HAAR_T}")
    check_cap(d ** (2 * t), DENSE_CAP)
    v = permutation_vectors(d, t)
    gram = v.T @ v
    w, q = scipy.linalg.eigh(gram)
    keep = w > GRAM_CUTOFF * w[-1]
    basis = v @ (q[:, keep] / np.sqrt(w[keep]))
    basis.setflags(write=False)
    return basis


def haar_projector_operator(d: int, t: int) -> LinearOperator:
    b = haar_basis(d, t)
    n = b.shape[0]

    def mv(x):
        return b @ (b.T @ x)

    return LinearOperator((n, n), matvec=mv, rmatvec=mv, matmat=mv, rmatmat=mv,
                          dtype=complex)


def haar_moment_operator(d: int, t: int) -> MomentOperator:
    """Orthogonal projector onto span{vec(P_s)} = the Haar moment operator."""
    b = haar_basis(d, t)
    return MomentOperator(t, (b @ b.T).astype(complex), "haar")


@dataclass(frozen=True)
class DeltaEstimate:
    value: float
    error: float

    @property
    def at_one(self) -> bool:
        return abs(1.0 - self.value) <= AT_ONE_TOL

    def as_dict(self) -> dict:
        return {"delta": self.value, "error": self.error, "atOne": self.at_one}


def _clamp(value: float, err: float, tol: float) -> float:
    if value > 1.0 and value - 1.0 <= max(tol, err):
        return 1.0
    return value


def delta_of_operator(moment: LinearOperator | np.ndarray, d: int, t: int,
                      tol: float = NORM_TOL, seed: int = 0) -> DeltaEstimate:
    """``||moment - T_haar||`` for an explicit or matrix-free moment operator."""
    proj = haar_projector_operator(d, t)
    if isinstance(moment, np.ndarray):
        m = moment
        moment = LinearOperator(m.shape, matvec=lambda x: m @ x,
                                rmatvec=lambda x: m.conj().T @ x, dtype=complex)
    diff = moment - proj
    value, err = spectral_norm(diff, tol=tol, seed=seed)
    return DeltaEstimate(_clamp(value, err, tol), err)


def delta_of_unitaries(mats, d: int, t: int, tol: float = NORM_TOL,
                       seed: int = 0) -> DeltaEstimate:
    check_cap(d ** (2 * t), DENSE_CAP)
    return delta_of_operator(average_operator(mats, t), d, t, tol, seed)


def delta(s: GateSet, t: int, tol: float = NORM_TOL, seed: int = 0) -> DeltaEstimate:
    """Distance of the uniform measure on ``s`` from a unitary ``t``-design."""
    return delta_of_unitaries(s.matrices, s.d, t, tol, seed)


def word_moment(s: GateSet, t: int, l: int, cap: int = DENSE_CAP) -> MomentOperator:
    """Moment operator of the ``l``-fold convolution of the uniform measure on ``s``.

    Enumerates all ``|s|^l`` words ``g_1 ... g_l``; the lift is multiplicative,
    so the result must agree with the ``l``-th power of ``moment_operator``.
    """
    if l < 1:
        raise ValueError("l must be positive")
    check_cap(s.d ** (2 * t), cap)
    words = [np.eye(s.d, dtype=complex)]
    for _ in range(l):
        words = [w @ g for w in words for g in s.matrices]
    acc = sum(mixed_lift(w, t, t, cap).matrix for w in words)
    return MomentOperator(t, acc / len(words), "word")

