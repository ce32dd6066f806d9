"""Constrained Hilbert space of the Fibonacci (PXP) chain.

Configurations are packed into integers: bit ``i`` is site ``i`` and a set bit
means the site is excited. No two neighbouring sites may be excited; with
periodic boundaries sites ``0`` and ``L - 1`` are neighbours too.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

PBC = "pbc"
OBC = "obc"

MIN_LENGTH = 2
MAX_LENGTH = 32

PATTERNS = ("z2", "z2p", "z3", "z4", "zero")


def fibonacci(n):
    """Fibonacci number with F(1) = F(2) = 1 and F(0) = 0."""
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


@lru_cache(maxsize=None)
def fibonacci_table(n):
    """Array ``F[0..n]`` as int64."""
    return np.array([fibonacci(k) for k in range(n + 1)], dtype=np.int64)


def expected_dimension(L, boundary):
    if boundary == PBC:
        return fibonacci(L - 1) + fibonacci(L + 1)
    return fibonacci(L + 2)


def _check_boundary(boundary):
    if boundary not in (PBC, OBC):
        raise ValueError(f"boundary must be 'pbc' or 'obc', got {boundary!r}")


def _check_length(L):
    if not isinstance(L, (int, np.integer)) or not MIN_LENGTH <= L <= MAX_LENGTH:
        raise ValueError(f"length must be an integer in [{MIN_LENGTH}, {MAX_LENGTH}], got {L!r}")


@lru_cache(maxsize=8)
def _open_chain_states(L):
    # valid strings of length n: top bit clear (any valid n-1 string)
    # or top bit set over a valid n-2 string; concatenation stays sorted
    prev2 = np.zeros(1, dtype=np.int64)
    prev1 = np.array([0, 1], dtype=np.int64)
    if L == 0:
        return prev2
    for n in range(2, L + 1):
        prev2, prev1 = prev1, np.concatenate([prev1, prev2 | (1 << (n - 1))])
    prev1.setflags(write=False)
    return prev1


def open_chain_rank(states):
    """Position of each state among all valid open-chain strings (any length).

    The rank is additive over set bits: bit ``i`` contributes ``F(i + 2)``.
    """
    states = np.asarray(states, dtype=np.int64)
    fib = fibonacci_table(MAX_LENGTH + 2)
    rank = np.zeros(states.shape, dtype=np.int64)
    for i in range(MAX_LENGTH):
        rank += ((states >> i) & 1) * fib[i + 2]
    return rank


def z2_mask(L):
    """|Z2>: excitations on even sites 0, 2, 4, ..."""
    return sum(1 << i for i in range(0, L, 2))


def popcount(x):
    return np.bitwise_count(np.asarray(x, dtype=np.int64).astype(np.uint64)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class ConstrainedBasis:
    """Sorted list of allowed configurations for a chain of ``length`` sites.

    Attributes
    ----------
    length, boundary
        Chain size and ``"pbc"`` / ``"obc"``.
    states
        Allowed configurations in ascending integer order (int64).
    ranks
        Open-chain rank of each state (see :func:`open_chain_rank`).
    lookup
        Maps an open-chain rank to the ordinal in ``states`` (``-1`` if the
        configuration is not in this basis).
    hamming
        Distance of every state from |Z2>.
    """

    length: int
    boundary: str
    states: np.ndarray = field(repr=False)
    ranks: np.ndarray = field(repr=False)
    lookup: np.ndarray = field(repr=False)
    hamming: np.ndarray = field(repr=False)

    @property
    def dimension(self):
        return int(self.states.shape[0])

    @property
    def pbc(self):
        return self.boundary == PBC

    def __len__(self):
        return self.dimension

    def index(self, state):
        """Ordinal of ``state``; raises KeyError if it is not in the basis."""
        state = int(state)
        if state < 0 or state >> self.length:
            raise KeyError(state)
        r = int(open_chain_rank(state))
        if r >= self.lookup.shape[0] or self.lookup[r] < 0 or self.states[self.lookup[r]] != state:
            raise KeyError(state)
        return int(self.lookup[r])

    def indices(self, states):
        """Vectorised :meth:`index` without validity checks."""
        return self.lookup[open_chain_rank(states)]

    def __contains__(self, state):
        try:
            self.index(state)
        except KeyError:
            return False
        return True

    def excitations(self):
        return popcount(self.states)

    def unit(self, state, dtype=float):
        v = np.zeros(self.dimension, dtype=dtype)
        v[self.index(state)] = 1
        return v


def enumerate_basis(length, boundary=PBC):
    """All allowed configurations of a chain, sorted ascending.

    >>> enumerate_basis(6, "pbc").dimension
    18
    """
    _check_length(length)
    _check_boundary(boundary)
    L = int(length)
    obc = _open_chain_states(L)
    if boundary == PBC:
        keep = ~(((obc & 1) == 1) & (((obc >> (L - 1)) & 1) == 1))
        states = obc[keep]
        lookup = np.cumsum(keep, dtype=np.int64) - 1
        lookup[~keep] = -1
        ranks = np.flatnonzero(keep).astype(np.int64)
    else:
        states = obc
        lookup = np.arange(obc.shape[0], dtype=np.int64)
        ranks = lookup
    hamming = popcount(states ^ z2_mask(L))
    for arr in (states, ranks, lookup, hamming):
        arr.setflags(write=False)
    return ConstrainedBasis(L, boundary, states, ranks, lookup, hamming)


def product_state(pattern, length, boundary=PBC):
    """Density-wave or vacuum configuration as a packed integer.

    ``pattern`` is one of ``"z2"`` (excited on even sites), ``"z2p"`` (odd
    sites), ``"z3"``, ``"z4"`` (every k-th site from 0) or ``"zero"``.
    """
    _check_length(length)
    _check_boundary(boundary)
    L = int(length)
    if pattern == "zero":
        return 0
    if pattern == "z2p":
        if boundary == PBC and L % 2:
            raise ValueError(f"|Z2'> needs even L under PBC, got L={L}")
        return z2_mask(L) << 1 & ((1 << L) - 1)
    period = {"z2": 2, "z3": 3, "z4": 4}.get(pattern)
    if period is None:
        raise ValueError(f"unknown pattern {pattern!r}; expected one of {PATTERNS}")
    if boundary == PBC and L % period:
        raise ValueError(f"|Z{period}> needs L divisible by {period} under PBC, got L={L}")
    return sum(1 << i for i in range(0, L, period))


def hamming_to_z2(state, length):
    return int(popcount(int(state) ^ z2_mask(length)))


def to_string(state, length):
    """Render with 'x' for excited and 'o' for ground, highest site first."""
    return "".join("x" if (int(state) >> i) & 1 else "o" for i in reversed(range(length)))


def from_string(text):
    """Inverse of :func:`to_string`."""
    text = text.strip()
    if set(text) - {"x", "o"}:
        raise ValueError(f"configuration strings use only 'o' and 'x': {text!r}")
    return sum(1 << i for i, ch in enumerate(reversed(text)) if ch == "x")


@dataclass(frozen=True, eq=False)
class HilbertGraph:
    """Hilbert-space graph of H: nodes are basis ordinals, edges single flips."""

    basis: ConstrainedBasis
    edges: np.ndarray = field(repr=False)  # (E, 2) with i < j

    @property
    def layers(self):
        """Basis ordinals grouped by Hamming distance from |Z2>."""
        return {int(d): np.flatnonzero(self.basis.hamming == d) for d in np.unique(self.basis.hamming)}

    def degrees(self):
        deg = np.bincount(self.edges.ravel(), minlength=self.basis.dimension)
        return deg

    def write_edges(self, path):
        with open(path, "w") as fh:
            for i, j in self.edges:
                fh.write(f"{i} {j}\n")

    def write_dot(self, path):
        b = self.basis
        with open(path, "w") as fh:
            fh.write("graph hilbert {\n")
            for n, s in enumerate(b.states):
                fh.write(f'  {n} [label="{to_string(s, b.length)}", layer={int(b.hamming[n])}];\n')
            for i, j in self.edges:
                fh.write(f"  {i} -- {j};\n")
            fh.write("}\n")


def _flip_pairs(basis):
    """Yield (source, target) ordinal arrays for every allowed single flip."""
    s = basis.states
    L = basis.length
    fib = fibonacci_table(MAX_LENGTH + 2)
    for i in range(L):
        if basis.pbc:
            neigh = {(i - 1) % L, (i + 1) % L} - {i}
        else:
            neigh = {j for j in (i - 1, i + 1) if 0 <= j < L}
        ok = np.ones(s.shape[0], dtype=bool)
        for j in neigh:
            ok &= ((s >> j) & 1) == 0
        src = np.flatnonzero(ok)
        occ = ((s[src] >> i) & 1) == 1
        dst = basis.lookup[basis.ranks[src] + np.where(occ, -fib[i + 2], fib[i + 2])]
        yield i, src, dst


def build_graph(basis):
    pairs = []
    for _, src, dst in _flip_pairs(basis):
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        pairs.append(np.stack([lo, hi], axis=1))
    edges = np.concatenate(pairs) if pairs else np.zeros((0, 2), dtype=np.int64)
    edges = np.unique(edges, axis=0)
    edges.setflags(write=False)
    return HilbertGraph(basis, edges)


def write_basis(basis, path):
    with open(path, "w") as fh:
        for s in basis.states:
            fh.write(to_string(s, basis.length) + "\n")
