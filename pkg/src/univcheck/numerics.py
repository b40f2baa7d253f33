"""Dense complex kernels, spectral norm and certified numerical rank.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``.  Operators
that are too large to form explicitly are passed around as
``scipy.sparse.linalg.LinearOperator`` instances.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
import logging
import math

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, aslinearoperator, eigsh

log = logging.getLogger(__name__)

DENSE_CAP = 20_000
REL_TOL = 1e-10
NORM_TOL = 1e-9
CERTIFIED_GAP = 1e4


class SizeCapError(ValueError):
    """A dense object would exceed ``DENSE_CAP`` per side; use the matrix-free path."""


class NonConvergenceError(RuntimeError):
    pass


def as_matrix(a) -> np.ndarray:
    """Validate and convert to a finite complex 2-D array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def check_cap(side: int, cap: int = DENSE_CAP) -> None:
    if side > cap:
        raise SizeCapError(
            f"dense side {side} exceeds cap {cap}; use the matrix-free backend"
        )


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def kron(a, b, cap: int = DENSE_CAP) -> np.ndarray:
    """Kronecker product; the left factor owns the most significant index."""
    a, b = as_matrix(a), as_matrix(b)
    check_cap(max(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]), cap)
    return np.kron(a, b)


def kron_all(mats, cap: int = DENSE_CAP) -> np.ndarray:
    mats = list(mats)
    side = math.prod(m.shape[0] for m in mats)
    check_cap(side, cap)
    return reduce(np.kron, mats)


def apply_factors(factors, v: np.ndarray) -> np.ndarray:
    """Apply ``kron(*factors)`` to ``v`` without forming the product.

    ``v`` has shape ``(N,)`` or ``(N, p)`` with ``N`` the product of the
    factor sizes; extra columns are treated as a batch.
    """
    x = v.reshape(-1)
    left, right = 1, v.size
    for f in factors:
        m = f.shape[0]
        right //= m
        x = np.matmul(f, x.reshape(left, m, right))
        left *= m
    return x.reshape(v.shape)


def fuse_factors(factors, max_side: int = 16) -> list[np.ndarray]:
    """Merge neighbouring factors into Kronecker blocks of side at most ``max_side``."""
    out = []
    for f in factors:
        if out and out[-1].shape[0] * f.shape[0] <= max_side:
            out[-1] = np.kron(out[-1], f)
        else:
            out.append(np.asarray(f))
    return out


def orthonormalize(x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the column span (Cholesky QR twice, Householder fallback)."""
    q = x
    try:
        for _ in range(2):
            r = np.linalg.cholesky(q.conj().T @ q)
            q = scipy.linalg.solve_triangular(r.conj(), q.T, lower=True).T
    except np.linalg.LinAlgError:
        q, _ = np.linalg.qr(x)
    return q


def spectral_norm(a, tol: float = NORM_TOL, max_iter: int = 20_000,
                  restarts: int = 3, seed: int = 0) -> tuple[float, float]:
    """Largest singular value by Lanczos (ARPACK) on the Gram operator ``a^H a``.

    Returns ``(sigma, err)``.  ``err`` bounds the distance from ``sigma`` to
    a singular value of ``a`` using the Rayleigh residual of ``a^H a``.
    Each attempt starts from a fresh random vector with ``max_iter`` restart
    cycles; after ``restarts`` failed retries a ``NonConvergenceError`` is
    raised.  Lanczos copes with the clustered top singular values that stall
    plain power iteration.
    """
    op = aslinearoperator(a)
    n = op.shape[1]
    rng = np.random.default_rng(seed)
    gram = LinearOperator((n, n), matvec=lambda x: op.rmatvec(op.matvec(x)),
                          dtype=complex)
    best = 0.0
    for attempt in range(restarts + 1):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        if not op.matvec(v).any():
            # a random vector is annihilated only by the zero operator
            return 0.0, 0.0
        if n <= 2:
            dense = np.column_stack([gram.matvec(e) for e in np.eye(n, dtype=complex)])
            v = np.linalg.eigh(dense)[1][:, -1]
        else:
            try:
                v = eigsh(gram, k=1, which="LA", v0=v, ncv=min(n, 32), tol=0,
                          maxiter=max_iter)[1][:, 0]
            except ArpackNoConvergence:
                log.debug("Lanczos did not converge (attempt %d)", attempt)
                continue
        v /= np.linalg.norm(v)
        w = op.matvec(v)
        s = float(np.linalg.norm(w))
        r = float(np.linalg.norm(op.rmatvec(w) - s * s * v))
        # sigma^2 lies within r of s^2: |sigma - s| <= min(r / 2s, sqrt(r))
        err = min(r / (2.0 * s), math.sqrt(r)) if s > 0 else math.sqrt(r)
        best = max(best, s)
        if err <= tol:
            return s, err
        log.debug("Lanczos residual %.3g above tolerance (attempt %d)", err, attempt)
    raise NonConvergenceError(f"spectral norm did not converge (best sigma {best:.12g})")


@dataclass(frozen=True)
class RankReport:
    rank: int
    gap_ratio: float
    singular_values: np.ndarray

    @property
    def certified(self) -> bool:
        return self.gap_ratio >= CERTIFIED_GAP


def _report(sv: np.ndarray, rank: int) -> RankReport:
    sv = np.sort(np.clip(sv, 0.0, None))[::-1]
    if rank == 0 or rank == len(sv):
        gap = math.inf
    else:
        low = sv[rank]
        gap = math.inf if low == 0.0 else float(sv[rank - 1] / low)
    return RankReport(rank, gap, sv)


def numerical_rank(a, rel_tol: float = REL_TOL) -> RankReport:
    """Count singular values above ``rel_tol * sigma_max`` (LAPACK SVD)."""
    a = as_matrix(a)
    try:
        sv = scipy.linalg.svd(a, compute_uv=False, check_finite=False)
    except np.linalg.LinAlgError:
        sv = scipy.linalg.svd(a, compute_uv=False, lapack_driver="gesvd")
    if sv.size == 0 or sv[0] == 0.0:
        return _report(sv, 0)
    return _report(sv, int(np.count_nonzero(sv > rel_tol * sv[0])))


def gram_rank_report(gram: np.ndarray, rel_tol: float = REL_TOL,
                     overwrite: bool = False) -> RankReport:
    """Rank of ``A`` computed from its Hermitian Gram matrix ``G = A^H A``.

    ``rel_tol`` applies to the eigenvalues of ``G`` (that is, to squared
    singular values): the rounding floor of this route sits near
    ``sqrt(eps) * sigma_max`` in singular-value terms, so thresholding the
    square roots at ``1e-10`` would count noise as rank.
    """
    w = scipy.linalg.eigh(gram, eigvals_only=True, overwrite_a=overwrite,
                          check_finite=False)
    w = np.clip(w[::-1], 0.0, None)
    if w.size == 0 or w[0] == 0.0:
        return _report(np.sqrt(w), 0)
    rank = int(np.count_nonzero(w > rel_tol * w[0]))
    return _report(np.sqrt(w), rank)


def nullspace_from_gram(gram: np.ndarray, rel_tol: float = REL_TOL) -> np.ndarray:
    """Orthonormal columns spanning the numerical kernel of a PSD Gram matrix."""
    w, q = scipy.linalg.eigh(gram, check_finite=False)
    top = max(w[-1], 0.0)
    return q[:, w <= rel_tol * top] if top > 0 else q


def operator(matvec, rmatvec, n: int) -> LinearOperator:
    return LinearOperator((n, n), matvec=matvec, rmatvec=rmatvec, dtype=np.complex128)
