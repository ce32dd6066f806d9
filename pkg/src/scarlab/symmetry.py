"""Translation / inversion sectors and the particle-hole operator.

A sector is labelled by a momentum index ``k`` (translation eigenvalue
``exp(2 pi i k / L)``) and, for ``k`` in ``{0, L/2}``, an optional inversion
parity ``+1``/``-1``. The sector basis state of a representative ``r`` is

    |r> = orbit(r)**-0.5 * sum_{x in orbit} chi(g_x) |x>,   x = g_x r,

where ``chi(T**a I**b) = exp(-2 pi i k a / L) * parity**b``. Representatives
whose stabiliser carries a non-trivial character have zero norm and are
dropped.
"""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .basis import OBC, PBC, ConstrainedBasis, popcount


def _rotl(x, m, L):
    mask = (1 << L) - 1
    m %= L
    if m == 0:
        return x & mask
    return ((x << m) | (x >> (L - m))) & mask


def _reverse(x, L):
    y = np.zeros_like(x)
    for i in range(L):
        y |= ((x >> i) & 1) << (L - 1 - i)
    return y


@dataclass(frozen=True, eq=False)
class SymmetrySector:
    """Momentum (and optionally inversion) resolved basis.

    ``reps`` are the representatives kept in the sector, ``orbit`` the size of
    each representative's orbit under the group used. ``member`` maps every
    full-basis ordinal to its sector ordinal (``-1`` if its orbit is not in
    the sector) and ``phase`` holds ``chi(g_x)`` for every full-basis state.
    """

    basis: ConstrainedBasis = field(repr=False)
    k: int
    parity: int | None
    reps: np.ndarray = field(repr=False)
    rep_index: np.ndarray = field(repr=False)  # full-basis ordinal of each rep
    orbit: np.ndarray = field(repr=False)
    member: np.ndarray = field(repr=False)
    phase: np.ndarray = field(repr=False)

    @property
    def length(self):
        return self.basis.length

    @property
    def dimension(self):
        return int(self.reps.shape[0])

    def __len__(self):
        return self.dimension

    @property
    def norms(self):
        return np.sqrt(self.orbit.astype(float))

    @property
    def is_real(self):
        return (2 * self.k) % self.length == 0

    @property
    def dtype(self):
        return np.float64 if self.is_real else np.complex128

    def index(self, state):
        """Sector ordinal of the orbit containing ``state``."""
        n = self.member[self.basis.index(state)]
        if n < 0:
            raise KeyError(f"orbit of {state} is annihilated in sector k={self.k}, I={self.parity}")
        return int(n)

    def embed(self, amplitudes):
        """Full-basis vector carrying the sector amplitudes. Norm preserving."""
        a = np.asarray(amplitudes)
        if a.shape[-1] != self.dimension:
            raise ValueError(f"expected {self.dimension} sector amplitudes, got {a.shape[-1]}")
        inside = self.member >= 0
        dtype = np.result_type(a.dtype, self.phase.dtype)
        out = np.zeros(a.shape[:-1] + (self.basis.dimension,), dtype=dtype)
        m = self.member[inside]
        out[..., inside] = a[..., m] * self.phase[inside] / np.sqrt(self.orbit[m])
        return out

    def restrict(self, vector):
        """Sector amplitudes of a full-basis vector (orthogonal projection)."""
        v = np.asarray(vector)
        if v.shape[-1] != self.basis.dimension:
            raise ValueError(f"expected {self.basis.dimension} amplitudes, got {v.shape[-1]}")
        inside = self.member >= 0
        m = self.member[inside]
        w = v[..., inside] * np.conj(self.phase[inside]) / np.sqrt(self.orbit[m])
        dtype = np.result_type(v.dtype, self.phase.dtype)
        out = np.zeros(v.shape[:-1] + (self.dimension,), dtype=dtype)
        if v.ndim == 1:
            np.add.at(out, m, w)
        else:
            for row_out, row_w in zip(out.reshape(-1, self.dimension), w.reshape(-1, w.shape[-1])):
                np.add.at(row_out, m, row_w)
        return out

    def product_vector(self, state):
        """Sector image of a product state, normalised to unit length."""
        a = np.zeros(self.dimension, dtype=self.dtype)
        a[self.index(state)] = 1
        return a

    def summary(self):
        return {
            "L": self.length,
            "k": self.k,
            "I": self.parity,
            "dimension": self.dimension,
            "orbit_size_histogram": {str(s): c for s, c in sorted(Counter(self.orbit.tolist()).items())},
        }


@dataclass(frozen=True)
class SectorVector:
    amplitudes: np.ndarray
    sector: SymmetrySector

    def __post_init__(self):
        if self.amplitudes.shape != (self.sector.dimension,):
            raise ValueError("amplitude count does not match sector dimension")
        if not np.all(np.isfinite(self.amplitudes)):
            raise ValueError("sector amplitudes must be finite")


def embed(vector):
    """Full-basis amplitudes of a :class:`SectorVector`."""
    return vector.sector.embed(vector.amplitudes)


def build_sector(basis, k=0, inversion=None):
    """Reduce a periodic basis to momentum ``k`` and optional inversion parity.

    >>> from scarlab.basis import enumerate_basis
    >>> build_sector(enumerate_basis(4, "pbc"), 0, +1).dimension
    3
    """
    if basis.boundary != PBC:
        raise ValueError("symmetry sectors need periodic boundaries")
    L = basis.length
    k = int(k)
    if not 0 <= k < L:
        raise ValueError(f"momentum index must lie in [0, {L - 1}], got {k}")
    if inversion is not None:
        inversion = int(inversion)
        if inversion not in (1, -1):
            raise ValueError(f"inversion parity must be +1 or -1, got {inversion}")
        if (2 * k) % L:
            raise ValueError(f"inversion parity is only defined for k = 0 or k = L/2, got k={k} at L={L}")

    states = basis.states
    rep, shift, refl = kernels.orbit_canonical(states, L, inversion is not None)
    is_rep = rep == states
    rep_index = np.flatnonzero(is_rep)
    reps = states[rep_index]
    owner = np.searchsorted(reps, rep)
    orbit = np.bincount(owner, minlength=reps.shape[0]).astype(np.int64)

    # stabiliser check: translations by the period, plus a reflection if any
    period = np.full(reps.shape[0], L, dtype=np.int64)
    for m in range(L - 1, 0, -1):
        fixed = _rotl(reps, m, L) == reps
        period[fixed] = m
    keep = (k * period) % L == 0
    if inversion is not None:
        rev = _reverse(reps, L)
        for a in range(L):
            hit = _rotl(rev, a, L) == reps
            # chi(T^a I) = exp(-2 pi i k a / L) * parity, real for k in {0, L/2}
            char = (1 if (2 * k * a // L) % 2 == 0 else -1) * inversion
            keep &= ~(hit & (char != 1))

    sector_of_rep = np.full(reps.shape[0], -1, dtype=np.int64)
    sector_of_rep[keep] = np.arange(int(keep.sum()))
    member = sector_of_rep[owner]
    if (2 * k) % L == 0:
        sign = np.where((2 * k * shift // L) % 2 == 0, 1.0, -1.0)
        phase = sign * np.where(refl == 1, float(inversion or 1), 1.0)
    else:
        phase = np.exp(-2j * np.pi * k * shift / L)
    for arr in (reps, rep_index, orbit, member, phase):
        arr.setflags(write=False)
    return SymmetrySector(
        basis=basis,
        k=k,
        parity=inversion,
        reps=reps[keep],
        rep_index=rep_index[keep],
        orbit=orbit[keep],
        member=member,
        phase=phase,
    )


def all_sectors(basis, inversion=True):
    """Every (k, parity) sector; parity resolved only at k = 0 and k = L/2."""
    L = basis.length
    out = []
    for k in range(L):
        if inversion and (2 * k) % L == 0:
            out.extend(build_sector(basis, k, p) for p in (1, -1))
        else:
            out.append(build_sector(basis, k, None))
    return out


def particle_hole_signs(basis):
    """Diagonal of P = prod_i Z_i: +1 per excited site, -1 per ground site."""
    ground = basis.length - popcount(basis.states)
    return np.where(ground % 2 == 0, 1, -1).astype(np.int64)


def apply_particle_hole(basis, vector):
    v = np.asarray(vector)
    if v.shape[-1] != basis.dimension:
        raise ValueError(f"expected {basis.dimension} amplitudes, got {v.shape[-1]}")
    return v * particle_hole_signs(basis)


def inversion_permutation(basis):
    """Ordinal of I|s> for every basis state (site i -> L-1-i)."""
    return basis.indices(_reverse(basis.states, basis.length))


def is_inversion_invariant(basis):
    return inversion_permutation(basis) == np.arange(basis.dimension)


__all__ = [
    "OBC",
    "PBC",
    "SectorVector",
    "SymmetrySector",
    "all_sectors",
    "apply_particle_hole",
    "build_sector",
    "embed",
    "inversion_permutation",
    "is_inversion_invariant",
    "particle_hole_signs",
]
