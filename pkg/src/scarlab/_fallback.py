"""Pure numpy implementations of the hot kernels.

Every function here has a twin with the same signature in the compiled
``_core`` extension. Both backends must produce identical results; the
test-suite runs each kernel through both when the extension is present.
"""

import numpy as np

MODE_H = 0
MODE_PLUS = 1
MODE_MINUS = 2


def _site_masks(states, L, pbc, i):
    """Boolean mask of states whose neighbours of site ``i`` are both empty."""
    ok = np.ones(states.shape[0], dtype=bool)
    if pbc:
        neigh = {(i - 1) % L, (i + 1) % L} - {i}
    else:
        neigh = {j for j in (i - 1, i + 1) if 0 <= j < L}
    for j in neigh:
        ok &= ((states >> j) & 1) == 0
    return ok


def flip_matvec(states, ranks, lookup, fib, L, pbc, mode, v, out):
    """Accumulate ``out += A @ v`` for A in {H, H+, H-} built from bit flips.

    ``ranks`` holds the open-chain rank of every basis state and ``lookup``
    maps open-chain ranks back to basis ordinals. Flipping site ``i`` shifts
    the rank by exactly ``fib[i + 2]``.
    """
    for i in range(L):
        ok = _site_masks(states, L, pbc, i)
        occupied = ((states >> i) & 1) == 1
        if mode == MODE_H:
            src = np.flatnonzero(ok)
        else:
            # H+ removes excitations on even sites, adds them on odd sites
            want_occupied = (i % 2 == 0) == (mode == MODE_PLUS)
            src = np.flatnonzero(ok & (occupied == want_occupied))
        if src.size == 0:
            continue
        step = np.where(occupied[src], -fib[i + 2], fib[i + 2])
        dst = lookup[ranks[src] + step]
        # for a fixed site the flip is a bijection, so no duplicate targets
        out[dst] += v[src]
    return out


def _reverse_bits(x, L):
    y = np.zeros_like(x)
    for i in range(L):
        y |= ((x >> i) & 1) << (L - 1 - i)
    return y


def orbit_canonical(states, L, inversion):
    """Return (rep, shift, refl) with ``state == T**shift I**refl rep``.

    ``rep`` is the smallest integer in the orbit of each state under
    translations (and inversion when requested).
    """
    mask = np.int64((1 << L) - 1)
    best = states.copy()
    shift = np.zeros(states.shape[0], dtype=np.int64)
    refl = np.zeros(states.shape[0], dtype=np.int8)
    rev = _reverse_bits(states, L) if inversion else None
    for m in range(L):
        if m:
            y = ((states >> m) | (states << (L - m))) & mask
            sel = y < best
            best[sel] = y[sel]
            shift[sel] = m
            refl[sel] = 0
        if inversion:
            z = ((rev >> m) | (rev << (L - m))) & mask if m else rev
            sel = z < best
            best[sel] = z[sel]
            shift[sel] = (-m) % L
            refl[sel] = 1
    return best, shift, refl



def mod_factor(A, p):
    """In-place elimination of ``A`` over GF(p), recording the row operations.

    On return the pivot rows hold the normalised echelon form (unit pivots)
    and every eliminated entry holds its multiplier. Returns
    ``(pivots, rowid, diag)``: pivot columns, the original index of every
    row after swapping, and the pivot values before normalisation. ``p`` must
    stay below 2**25.
    """
    n, m = A.shape
    nz = A != 0
    row_end = np.where(nz.any(axis=1), m - np.argmax(nz[:, ::-1], axis=1), 0)
    rowid = np.arange(n, dtype=np.int64)
    pivots, diag = [], []
    r = 0
    for c in range(m):
        if r == n:
            break
        cand = np.flatnonzero(A[r:, c])
        if cand.size == 0:
            continue
        piv = r + cand[0]
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
            row_end[[r, piv]] = row_end[[piv, r]]
            rowid[[r, piv]] = rowid[[piv, r]]
        e = row_end[r]
        d = int(A[r, c])
        A[r, c:e] = (A[r, c:e] * pow(d, p - 2, p)) % p
        rows = r + 1 + np.flatnonzero(A[r + 1:, c])
        if rows.size:
            f = A[rows, c].copy()
            A[rows, c:e] = (A[rows, c:e] - f[:, None] * A[r, c:e]) % p
            A[rows, c] = f
            row_end[rows] = np.maximum(row_end[rows], e)
        pivots.append(c)
        diag.append(d)
        r += 1
    return np.array(pivots, dtype=np.int64), rowid, np.array(diag, dtype=np.int64)


def mod_solve(A, pivots, diag, B, p):
    """Solve ``S X = B`` over GF(p), S the pivot block factored by mod_factor."""
    r = pivots.shape[0]
    if r >= 8192:
        raise ValueError("mod_solve fallback supports at most 8191 pivots")
    Lblk = A[:r][:, pivots]
    Y = np.zeros_like(B)
    for k in range(r):
        acc = Lblk[k, :k] @ Y[:k] if k else 0
        Y[k] = ((B[k] - acc) % p) * pow(int(diag[k]), p - 2, p) % p
    X = np.zeros_like(B)
    for k in range(r - 1, -1, -1):
        acc = Lblk[k, k + 1:] @ X[k + 1:] if k + 1 < r else 0
        X[k] = (Y[k] - acc) % p
    return X
