"""Exact Haar-side reference dimensions.

The commutant of ``{U^{(x)t1} (x) conj(U)^{(x)t2} : U in U(d)}`` has the
same dimension as the span of the ``n = t1 + t2`` tensor-factor permutation
operators on ``(C^d)^{(x)n}``.  That dimension is the rank of the Gram
matrix ``G[s, r] = tr(P_s^H P_r) = d^{cycles(s^-1 r)}``, computed here
exactly over two large prime fields.
"""
from __future__ import annotations

from collections import Counter
from functools import lru_cache
import itertools
import math

import numpy as np
from sympy import nextprime

MAX_N = 7
PRIME_FLOOR = 2 ** 40
_SPLIT = 21  # primes stay below 2**42 so split products fit in int64
_PRIME_CEIL = 2 ** 42


class PrimeDisagreement(RuntimeError):
    pass


def permutations(n: int) -> np.ndarray:
    """All permutations of ``range(n)`` in lexicographic order, one per row."""
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)


def cycle_count(perm) -> int:
    seen = [False] * len(perm)
    count = 0
    for start in range(len(perm)):
        if not seen[start]:
            count += 1
            i = start
            while not seen[i]:
                seen[i] = True
                i = perm[i]
    return count


def _perm_index(perms: np.ndarray) -> np.ndarray:
    """Lexicographic rank of each row (Lehmer code)."""
    n = perms.shape[-1]
    idx = np.zeros(perms.shape[:-1], dtype=np.int64)
    for i in range(n):
        smaller = (perms[..., i + 1:] < perms[..., i:i + 1]).sum(axis=-1)
        idx = idx * (n - i) + smaller
    return idx


@lru_cache(maxsize=None)
def gram_cycles(n: int) -> np.ndarray:
    """Matrix of ``cycles(s^-1 r)`` over ``S_n`` in lexicographic order."""
    perms = permutations(n)
    inverse = np.argsort(perms, axis=1)
    cyc = np.array([cycle_count(p) for p in perms], dtype=np.int8)
    # (s^-1 r)(i) = s^-1(r(i))
    idx = np.empty((len(perms), len(perms)), dtype=np.int64)
    for a in range(len(perms)):
        idx[a] = _perm_index(inverse[a][perms])
    out = cyc[idx]
    out.setflags(write=False)
    return out


def gram_matrix(n: int, d: int) -> np.ndarray:
    """Integer Gram matrix ``d^{cycles(s^-1 r)}`` (object dtype if it overflows int64)."""
    cyc = gram_cycles(n)
    if d ** n < 2 ** 62:
        return np.int64(d) ** cyc.astype(np.int64)
    powers = np.array([d ** c for c in range(n + 1)], dtype=object)
    return powers[cyc]


def _mulmod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    hi = b >> _SPLIT
    lo = b & ((1 << _SPLIT) - 1)
    return ((((a * hi) % p) << _SPLIT) % p + (a * lo) % p) % p


def rank_mod_p(a: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over GF(p), ``p < 2**42``."""
    if not p < _PRIME_CEIL:
        raise ValueError("prime too large for int64 split multiplication")
    m = np.array([[int(x) % p for x in row] for row in a], dtype=np.int64) \
        if a.dtype == object else np.mod(a, p).astype(np.int64)
    rows, cols = m.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            m[[r, piv]] = m[[piv, r]]
        inv = pow(int(m[r, c]), -1, p)
        pivot_row = _mulmod(m[r, c:], np.int64(inv), p)
        m[r, c:] = pivot_row
        below = m[r + 1:, c].copy()
        hit = np.flatnonzero(below)
        if hit.size:
            sub = m[r + 1 + hit, c:]
            sub -= _mulmod(below[hit, None], pivot_row[None, :], p)
            sub %= p
            m[r + 1 + hit, c:] = sub
        r += 1
    return r


@lru_cache(maxsize=None)
def _primes(count: int) -> tuple[int, ...]:
    out, p = [], PRIME_FLOOR
    for _ in range(count):
        p = int(nextprime(p))
        out.append(p)
    return tuple(out)


@lru_cache(maxsize=None)
def gram_rank(n: int, d: int, attempts: int = 4) -> int:
    """Exact rank of the ``S_n`` permutation-operator Gram matrix at dimension ``d``.

    Two primes above ``2**40`` must agree; on disagreement a fresh pair is
    tried, up to ``attempts`` pairs.
    """
    if not 1 <= n <= MAX_N:
        raise ValueError(f"n must be in 1..{MAX_N}, got {n}")
    if d < 1:
        raise ValueError("d must be positive")
    g = gram_matrix(n, d)
    primes = _primes(2 * attempts)
    seen = []
    for k in range(attempts):
        r1 = rank_mod_p(g, primes[2 * k])
        r2 = rank_mod_p(g, primes[2 * k + 1])
        if r1 == r2:
            return r1
        seen.append((r1, r2))
    raise PrimeDisagreement(f"modular ranks disagree for n={n}, d={d}: {seen}")


def target_dimension(d: int) -> tuple[int, int]:
    """``(t, dim C(U(d)^{t,t}))`` used by the universality check."""
    if d < 2:
        raise ValueError("d must be at least 2")
    if d == 2:
        return 3, 132
    if d == 3:
        return 2, 23
    return 2, math.factorial(4)


def haar_commutant_dim(d: int, t1: int, t2: int) -> int:
    """Dimension of the commutant of the full unitary group's ``(t1, t2)`` lift."""
    n = t1 + t2
    if t1 < 0 or t2 < 0 or n < 1:
        raise ValueError("need t1, t2 >= 0 and t1 + t2 >= 1")
    if n > MAX_N:
        raise ValueError(f"t1 + t2 must be at most {MAX_N}")
    return gram_rank(n, d)


def _cg(l: int, k: int):
    """Labels ``nu`` (twice the spin) in ``pi_l (x) pi_k``."""
    return range(abs(l - k), l + k + 1, 2)


def su2_decompose(t: int) -> dict[int, int]:
    """Multiplicities of ``pi_nu`` in ``(pi_2 + 1)^{(x)t}`` by iterated Clebsch-Gordan."""
    if not 1 <= t <= 8:
        raise ValueError("t must be in 1..8")
    mult = Counter({0: 1})
    for _ in range(t):
        nxt = Counter()
        for nu, m in mult.items():
            for factor in (2, 0):
                for out in _cg(nu, factor):
                    nxt[out] += m
        mult = nxt
    return dict(sorted(mult.items(), reverse=True))


SU3_TRIVIAL = (0, 0)


def su3_reference() -> dict[tuple[int, int], int]:
    """Irreducible content of ``U^{(x)2} (x) conj(U)^{(x)2}`` for ``U(3)``, labels ``(l1, l2)``."""
    return {(4, 2): 1, (3, 0): 1, (3, 3): 1, (2, 1): 4, SU3_TRIVIAL: 2}


def square_sum(mult: dict) -> int:
    return sum(m * m for m in mult.values())


def selftest() -> dict[str, bool]:
    """Startup identities tying the hard-coded constants to independent computations."""
    checks = {}
    for d in (2, 3, 4):
        t, dim = target_dimension(d)
        checks[f"target(d={d}) == gram_rank({2 * t},{d})"] = dim == gram_rank(2 * t, d)
    checks["su2 t=3 square sum == gram_rank(6,2)"] = square_sum(su2_decompose(3)) == gram_rank(6, 2)
    checks["su3 square sum == gram_rank(4,3)"] = square_sum(su3_reference()) == gram_rank(4, 3)
    return checks
