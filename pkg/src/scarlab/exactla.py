"""Exact nullspaces of integer matrices.

Two independent routes:

* :func:`bareiss_kernel` - fraction-free (Bareiss) elimination over Python
  integers. Quadratic memory, cubic time with growing integers; meant for
  small matrices and as a cross-check.
* :func:`integer_kernel` - one elimination modulo a prime fixes the pivot
  columns, p-adic (Dixon) lifting solves the pivot block to high precision
  and rational reconstruction recovers the reduced-echelon kernel basis.
  The result is certified: every vector is checked to satisfy ``A v = 0``
  in exact integer arithmetic, and the rank modulo a prime can never exceed
  the rank over the rationals, so the kernel dimension is exact.

Both return the kernel basis in reduced form (one vector per free column, the
free variable set to one, others zero), rescaled to coprime integers, so the
two routes agree entry by entry.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt, lcm

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import ConsistencyError

def _primes_below(limit, count):
    out = []
    n = limit - 1
    while len(out) < count:
        if n % 2 and all(n % d for d in range(3, isqrt(n) + 1, 2)):
            out.append(n)
        n -= 1
    return tuple(out)


# the elimination kernels rely on p < 2**25 to keep row updates in int64
PRIMES = _primes_below(2**25, 24)


@dataclass(frozen=True)
class KernelResult:
    """Exact nullspace: ``rank``, ``free`` columns and integer ``vectors``.

    ``vectors`` is a list of Python-int lists (one per free column).
    """

    shape: tuple
    rank: int
    free: tuple
    vectors: list
    primes_used: int = 0

    @property
    def dimension(self):
        return self.shape[1] - self.rank


def _normalise(vec):
    """Clear denominators and divide out the content; first nonzero positive."""
    den = 1
    for x in vec:
        den = lcm(den, x.denominator)
    ints = [int(x * den) for x in vec]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return ints
    ints = [x // g for x in ints]
    lead = next(x for x in ints if x)
    return [-x for x in ints] if lead < 0 else ints


def bareiss_kernel(A):
    """Nullspace of a small integer matrix by fraction-free elimination."""
    M = [[int(x) for x in row] for row in np.asarray(A)]
    n = len(M)
    m = len(M[0]) if n else 0
    prev = 1
    r = 0
    pivots = []
    for c in range(m):
        if r == n:
            break
        piv = next((i for i in range(r, n) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        pc = M[r][c]
        for i in range(r + 1, n):
            a = M[i][c]
            row_i = M[i]
            row_r = M[r]
            # Bareiss step: the division by the previous pivot is exact
            M[i] = [(pc * row_i[j] - a * row_r[j]) // prev for j in range(m)]
        prev = pc
        pivots.append(c)
        r += 1
    free = [c for c in range(m) if c not in set(pivots)]
    vectors = []
    for f in free:
        x = [Fraction(0)] * m
        x[f] = Fraction(1)
        for k in range(r - 1, -1, -1):
            c = pivots[k]
            s = sum((Fraction(M[k][j]) * x[j] for j in range(c + 1, m) if M[k][j]), Fraction(0))
            x[c] = -s / M[k][c]
        vectors.append(_normalise(x))
    return KernelResult((n, m), r, tuple(free), vectors, 0)


def _rational_reconstruct(a, mod):
    """Smallest a = num/den (mod ``mod``) with |num|, den <= sqrt(mod/2)."""
    bound = isqrt(mod // 2)
    r0, r1 = mod, a % mod
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    if s1 < 0:
        s1, r1 = -s1, -r1
    if gcd(r1, s1) != 1:
        return None
    return Fraction(r1, s1)


def _exact_matvec_is_zero(A, vec):
    """True when ``A @ vec == 0`` exactly (A sparse integer, vec Python ints)."""
    biggest = max((abs(x) for x in vec), default=0)
    amax = int(abs(A).max()) if A.nnz else 0
    row_nnz = int(np.diff(A.indptr).max()) if A.shape[0] else 0
    if biggest * amax * max(row_nnz, 1) < 2**62:
        v = np.array(vec, dtype=np.int64)
        return not np.any(A @ v)
    v = np.array(vec, dtype=object)
    coo = A.tocoo()
    acc = [0] * A.shape[0]
    for i, j, a in zip(coo.row, coo.col, coo.data):
        acc[i] += int(a) * v[j]
    return not any(acc)


def _reconstruct_vectors(X, mod, free, pivots, m):
    """Rational reconstruction of lifted pivot values; None if not yet possible.

    A running common denominator turns most entries into a modular product
    plus a range check; full reconstruction runs only when that fails.
    """
    bound = isqrt(mod // 2)
    half = mod // 2
    vectors = []
    for fi, f in enumerate(free):
        x = [Fraction(0)] * m
        x[f] = Fraction(1)
        den = 1
        for k, c in enumerate(pivots):
            val = int(X[k, fi])
            num = (val * den) % mod
            if num > half:
                num -= mod
            if abs(num) <= bound:
                x[c] = Fraction(num, den)
                continue
            frac = _rational_reconstruct(val, mod)
            if frac is None:
                return None
            x[c] = frac
            den = lcm(den, frac.denominator)
            if den > bound:
                return None
        vectors.append(_normalise(x))
    return vectors


def _probe(X, mod):
    """Cheap test: can the last lifted entry already be reconstructed?"""
    return _rational_reconstruct(int(X[-1, -1]), mod) is not None


def integer_kernel(A, prime=PRIMES[0], max_lifts=400):
    """Certified integer nullspace of a sparse or dense integer matrix.

    One elimination modulo ``prime`` fixes the pivot structure; the pivot
    block is then solved over the rationals by p-adic (Dixon) lifting and
    rational reconstruction.
    """
    A = sp.csr_matrix(A)
    if A.nnz and not np.all(A.data == np.round(A.data)):
        raise ValueError("integer_kernel needs an integer matrix; rescale rational entries first")
    A = A.astype(np.int64)
    n, m = A.shape
    p = int(prime)
    work = np.ascontiguousarray(A.toarray() % p)
    pivots, rowid, diag = kernels.mod_factor(work, p)
    r = int(pivots.shape[0])
    pivot_list = [int(c) for c in pivots]
    free = [c for c in range(m) if c not in set(pivot_list)]
    if not free:
        return KernelResult((n, m), r, (), [], 1)
    if r == 0:
        if A.count_nonzero():
            raise ConsistencyError(f"all entries vanish modulo {p}; choose another prime")
        return KernelResult((n, m), 0, tuple(free), [[int(i == f) for i in range(m)] for f in free], 1)
    rows = rowid[:r]
    S = A[rows][:, pivots].tocsr()
    rhs = -(A[rows][:, free].toarray())
    X = np.zeros((r, len(free)), dtype=object)
    mod = 1
    check_at = 2
    for step in range(1, max_lifts + 1):
        Xi = kernels.mod_solve(work, pivots, diag, np.ascontiguousarray(rhs), p)
        X += Xi.astype(object) * mod
        mod *= p
        # exact division: S @ Xi == rhs (mod p) by construction
        rhs = (rhs - S @ Xi) // p
        if step == check_at or step == max_lifts:
            check_at = int(check_at * 1.5) + 1
            if not _probe(X, mod):
                continue
            vectors = _reconstruct_vectors(X, mod, free, pivot_list, m)
            if vectors is not None and all(_exact_matvec_is_zero(A, v) for v in vectors):
                return KernelResult((n, m), r, tuple(free), vectors, step)
    raise ConsistencyError(f"integer kernel did not stabilise within {max_lifts} lifting steps")


def modular_rank(A, p=PRIMES[0]):
    """Rank over GF(p); a lower bound for the rank over the rationals."""
    dense = np.ascontiguousarray(sp.csr_matrix(A).astype(np.int64).toarray() % p)
    pivots, _, _ = kernels.mod_factor(dense, p)
    return int(len(pivots))
