"""Commutant dimensions of lifted gate sets.

For the lift ``L_g = g^{(x)t1} (x) conj(g)^{(x)t2}`` of side ``D = d^{t1+t2}``,
``X`` commutes with ``L_g`` iff ``(L_g (x) I - I (x) L_g^T) vec(X) = 0``.
The dense backend takes the rank of that stacked system; the matrix-free
backend counts the fixed points of the mixed-unitary channel
``X -> mean_g L_g X L_g^H`` over ``S`` and its adjoints.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import enum
import logging
import time

import numpy as np
import scipy.linalg

from .gates import GateSet, projectively_equal
from .haar_ref import MAX_N, haar_commutant_dim
from .moments import lift_factors
from .numerics import (DENSE_CAP, REL_TOL, apply_factors, check_cap, fuse_factors,
                       gram_rank_report, kron_all, nullspace_from_gram, orthonormalize)

log = logging.getLogger(__name__)

GAP_TOL = 1e-3
BUDGET = 500
DEGREE = 8
PROBES = 16


class Backend(str, enum.Enum):
    DENSE = "dense"
    MATRIX_FREE = "matrixfree"


class Certainty(str, enum.Enum):
    CERTIFIED = "CERTIFIED"
    UNCERTAIN = "UNCERTAIN"


@dataclass
class CommutantResult:
    dimension: int
    certainty: Certainty
    gap_ratio: float
    backend: Backend
    info: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.certainty is Certainty.CERTIFIED


@dataclass(frozen=True)
class CommutantQuery:
    gate_set: GateSet
    t1: int
    t2: int
    backend: str = "auto"
    rel_tol: float = REL_TOL
    gap_tol: float = GAP_TOL
    budget: int = BUDGET
    seed: int = 0

    def __post_init__(self):
        if self.t1 < 0 or self.t2 < 0 or self.t1 + self.t2 < 1:
            raise ValueError("need t1, t2 >= 0 and t1 + t2 >= 1")

    @property
    def side(self) -> int:
        return self.gate_set.d ** (self.t1 + self.t2)


def _lift(u: np.ndarray, t1: int, t2: int) -> np.ndarray:
    return kron_all(lift_factors(u, t1, t2))


def commutator_gram(s: GateSet, t1: int, t2: int, cap: int = DENSE_CAP) -> np.ndarray:
    """Gram matrix ``M^H M`` of the stacked commutator system.

    For unitary ``L`` each block satisfies
    ``M_g^H M_g = 2 I - K_g - K_g^H`` with ``K_g = L_g (x) conj(L_g)``, so the
    Gram is assembled without forming the stack.
    """
    D = s.d ** (t1 + t2)
    n = D * D
    check_cap(n, cap)
    gram = np.zeros((n, n), dtype=complex)
    gates = s.non_identity()
    for g in gates:
        lift = _lift(g, t1, t2)
        k = np.kron(lift, lift.conj())
        gram -= k
        gram -= k.conj().T
        del k
    gram[np.diag_indices(n)] += 2.0 * len(gates)
    return gram


def commutator_stack(s: GateSet, t1: int, t2: int, cap: int = DENSE_CAP) -> np.ndarray:
    """The stacked system ``[L_g (x) I - I (x) L_g^T]`` over non-identity gates."""
    D = s.d ** (t1 + t2)
    check_cap(D * D, cap)
    eye = np.eye(D)
    blocks = []
    for g in s.non_identity():
        lift = _lift(g, t1, t2)
        blocks.append(np.kron(lift, eye) - np.kron(eye, lift.T))
    if not blocks:
        return np.zeros((0, D * D), dtype=complex)
    return np.vstack(blocks)


def commutant_dim_dense(s: GateSet, t1: int, t2: int, rel_tol: float = REL_TOL,
                        cap: int = DENSE_CAP) -> CommutantResult:
    D = s.d ** (t1 + t2)
    n = D * D
    check_cap(n, cap)
    if not s.non_identity():
        return CommutantResult(n, Certainty.CERTIFIED, float("inf"), Backend.DENSE,
                               {"rank": 0})
    started = time.perf_counter()
    report = gram_rank_report(commutator_gram(s, t1, t2, cap), rel_tol, overwrite=True)
    certainty = Certainty.CERTIFIED if report.certified else Certainty.UNCERTAIN
    info = {"rank": report.rank, "unknowns": n, "seconds": time.perf_counter() - started}
    log.debug("dense commutant (%d,%d): rank %d of %d, gap %.3e", t1, t2,
              report.rank, n, report.gap_ratio)
    return CommutantResult(n - report.rank, certainty, report.gap_ratio, Backend.DENSE, info)


def commutant_basis(s: GateSet, t1: int, t2: int, rel_tol: float = REL_TOL,
                    cap: int = DENSE_CAP) -> list[np.ndarray]:
    """Orthonormal (Hilbert-Schmidt) basis of the commutant, from the dense kernel."""
    D = s.d ** (t1 + t2)
    if not s.non_identity():
        return [e.reshape(D, D) for e in np.eye(D * D, dtype=complex)]
    kernel = nullspace_from_gram(commutator_gram(s, t1, t2, cap), rel_tol)
    return [kernel[:, k].reshape(D, D) for k in range(kernel.shape[1])]


def _channel(mats, t1: int, t2: int):
    """``X -> mean_g L_g X L_g^H`` on vec(X), batched over columns."""
    identity = 0
    factor_lists = []
    eye = np.eye(mats[0].shape[0])
    for g in mats:
        if projectively_equal(eye, g):
            identity += 1
            continue
        row = lift_factors(g, t1, t2)
        factor_lists.append(fuse_factors(row + [f.conj() for f in row]))
    total = len(mats)

    def apply(x: np.ndarray) -> np.ndarray:
        out = identity * x
        for fs in factor_lists:
            out = out + apply_factors(fs, x)
        return out / total

    return apply


def _chebyshev(phi, q: np.ndarray, degree: int, upper: float) -> np.ndarray:
    """``T_m`` of ``phi`` rescaled so ``[-1, upper]`` maps to ``[-1, 1]``, applied to ``q``.

    Eigenvalues in ``[-1, upper]`` stay bounded by 1 while the eigenvalue 1
    grows like ``cosh(m * acosh((3 - upper) / (1 + upper)))``.
    """
    c, e = (upper - 1.0) / 2, (upper + 1.0) / 2
    prev, cur = q, (phi(q) - c * q) / e
    for _ in range(degree - 1):
        prev, cur = cur, 2 * (phi(cur) - c * cur) / e - prev
    return cur


def commutant_dim_matrixfree(s: GateSet, t1: int, t2: int, gap_tol: float = GAP_TOL,
                             budget: int = BUDGET, seed: int = 0,
                             block: int | None = None, degree: int = DEGREE,
                             res_tol: float | None = None) -> CommutantResult:
    """Fixed-point count of the symmetrized lifted channel by filtered subspace iteration.

    ``Phi`` averages over ``S`` and its adjoints, so it is Hermitian for the
    Hilbert-Schmidt inner product with spectrum in ``[-1, 1]`` and its
    eigenvalue-1 space is the commutant.  Each sweep applies a degree-``degree``
    Chebyshev filter that damps ``[-1, b]``, with ``b`` the current estimate of
    the largest non-fixed eigenvalue, then a Rayleigh-Ritz step.  Ritz values
    above ``1 - gap_tol`` are counted as fixed.  The count is CERTIFIED once
    the counted Ritz pairs have residual at most ``res_tol`` (default
    ``gap_tol * 1e-3``), the next Ritz value plus its residual stays below
    ``1 - gap_tol / 2``, and the count is positive and unchanged since the
    previous sweep.  Every fixed direction is amplified by the same factor, so
    once the counted pairs are accurate a missed one would already sit above
    the threshold; the identity always commutes, so a zero count only means
    nothing has converged yet.  Otherwise the result is UNCERTAIN after
    ``budget`` sweeps.  The block grows when every Ritz value is counted.
    """
    k = t1 + t2
    d = s.d
    D = d ** k
    n = D * D
    if res_tol is None:
        res_tol = gap_tol * 1e-3
    mats = s.symmetrized()
    if len(mats) == 1 or not s.non_identity():
        return CommutantResult(n, Certainty.CERTIFIED, float("inf"), Backend.MATRIX_FREE,
                               {"iterations": 0})
    phi = _channel(mats, t1, t2)
    if block is None:
        expected = haar_commutant_dim(d, t1, t2) if k <= MAX_N else 1
        block = expected + PROBES
    block = min(block, n)
    rng = np.random.default_rng(seed)

    def randn(cols):
        return rng.standard_normal((n, cols)) + 1j * rng.standard_normal((n, cols))

    q = orthonormalize(randn(block))
    upper = 0.0
    last_count = None
    count, gap_ratio, worst = 0, 0.0, np.inf
    started = time.perf_counter()
    for it in range(1, budget + 1):
        q = orthonormalize(_chebyshev(phi, q, degree, upper))
        w = phi(q)
        h = q.conj().T @ w
        theta, y = scipy.linalg.eigh((h + h.conj().T) / 2)
        theta, y = theta[::-1], y[:, ::-1]
        q, w = q @ y, w @ y
        res = np.linalg.norm(w - q * theta, axis=0)
        count = int(np.count_nonzero(theta > 1.0 - gap_tol))
        if count >= q.shape[1] - 1 and q.shape[1] < n:
            grow = min(q.shape[1], n - q.shape[1])
            log.debug("matrix-free block saturated at %d; growing by %d", count, grow)
            q = orthonormalize(np.hstack([q, randn(grow)]))
            last_count = None
            continue
        worst = float(res[:count].max()) if count else 0.0
        if count < q.shape[1]:
            gap_ratio = ((1.0 - theta[count]) / max(1.0 - theta[count - 1], 1e-300)
                         if count else float("inf"))
            separated = theta[count] + res[count] < 1.0 - gap_tol / 2
            upper = float(np.clip(theta[count], 0.0, 1.0 - gap_tol))
        else:
            gap_ratio, separated = float("inf"), True
        if count and worst <= res_tol and separated and count == last_count:
            info = {"iterations": it, "block": q.shape[1], "maxResidual": worst,
                    "nextRitz": float(theta[count]) if count < len(theta) else None,
                    "seconds": time.perf_counter() - started}
            return CommutantResult(count, Certainty.CERTIFIED, gap_ratio,
                                   Backend.MATRIX_FREE, info)
        last_count = count
    log.warning("matrix-free commutant did not converge in %d sweeps", budget)
    return CommutantResult(count, Certainty.UNCERTAIN, gap_ratio, Backend.MATRIX_FREE,
                           {"iterations": budget, "block": q.shape[1], "maxResidual": worst,
                            "seconds": time.perf_counter() - started})


def select_backend(d: int, t1: int, t2: int, backend: str = "auto") -> Backend:
    if backend != "auto":
        return Backend(backend)
    side = (d ** (t1 + t2)) ** 2
    return Backend.DENSE if d <= 3 and side <= DENSE_CAP else Backend.MATRIX_FREE


def commutant_dim(q: CommutantQuery) -> CommutantResult:
    backend = select_backend(q.gate_set.d, q.t1, q.t2, q.backend)
    if backend is Backend.DENSE:
        return commutant_dim_dense(q.gate_set, q.t1, q.t2, q.rel_tol)
    return commutant_dim_matrixfree(q.gate_set, q.t1, q.t2, q.gap_tol, q.budget, q.seed)


def partial_transpose(x: np.ndarray, t: int, n: int, d: int) -> np.ndarray:
    """Transpose the last ``n`` of ``t`` tensor factors of an operator on ``(C^d)^{(x)t}``."""
    x = np.asarray(x)
    D = d ** t
    if x.shape != (D, D):
        raise ValueError(f"expected a {D}x{D} matrix, got {x.shape}")
    if not 0 <= n <= t:
        raise ValueError("need 0 <= n <= t")
    m = t - n
    axes = (list(range(m)) + list(range(t + m, 2 * t))
            + list(range(t, t + m)) + list(range(m, t)))
    return x.reshape((d,) * (2 * t)).transpose(axes).reshape(D, D)


@dataclass
class NecessaryCondition:
    holds: bool
    dimension: int
    target: int
    certainty: Certainty


def necessary_condition(s: GateSet, backend: str = "auto", **kw) -> NecessaryCondition:
    """``dim C(S^{1,1}) == 2``: the adjoint action stays irreducible."""
    res = commutant_dim(CommutantQuery(s, 1, 1, backend=backend, **kw))
    return NecessaryCondition(res.dimension == 2, res.dimension, 2, res.certainty)
