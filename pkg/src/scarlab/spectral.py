"""Dense diagonalisation, level statistics and zero-mode counting."""

import os
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy import stats

from .basis import OBC, enumerate_basis, fibonacci, popcount
from .errors import CapacityError
from .exactla import bareiss_kernel, integer_kernel
from .hamiltonian import assemble, stagger_diagonal
from .symmetry import SymmetrySector, inversion_permutation

DEFAULT_DENSE_CAP = 12000
ZERO_MODE_RTOL = 1e-10


def dense_cap():
    """Largest dimension handed to the dense solver (env SCARLAB_DENSE_CAP)."""
    raw = os.environ.get("SCARLAB_DENSE_CAP")
    return int(raw) if raw else DEFAULT_DENSE_CAP


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Eigenpairs of H restricted to ``space`` (a sector or a full basis).

    ``vectors[:, i]`` is the eigenvector of ``energies[i]`` in the basis of
    ``space``; ``vectors`` is ``None`` when only energies were requested.
    """

    space: object = field(repr=False)
    energies: np.ndarray = field(repr=False)
    vectors: np.ndarray | None = field(repr=False, default=None)

    @property
    def length(self):
        return self.space.length

    @property
    def dimension(self):
        return int(self.energies.shape[0])

    @property
    def label(self):
        if isinstance(self.space, SymmetrySector):
            return {"L": self.space.length, "k": self.space.k, "I": self.space.parity}
        return {"L": self.space.length, "k": None, "I": None, "bc": self.space.boundary}

    def full_vectors(self, idx=None):
        """Eigenvectors expressed in the full constrained basis."""
        cols = self.vectors if idx is None else self.vectors[:, idx]
        if isinstance(self.space, SymmetrySector):
            return self.space.embed(cols.T).T
        return cols

    def zero_mode_mask(self, rtol=ZERO_MODE_RTOL):
        scale = np.abs(self.energies).max(initial=0.0)
        return np.abs(self.energies) < rtol * max(scale, 1.0)


def diagonalize(space, vectors=True, cap=None):
    """Full eigendecomposition of H on a sector or basis.

    Raises :class:`CapacityError` above the dense cap; iterative solvers
    are not provided.
    """
    cap = dense_cap() if cap is None else cap
    n = space.dimension
    if n > cap:
        raise CapacityError(
            f"dimension {n} exceeds the dense cap {cap}; raise SCARLAB_DENSE_CAP "
            "or use matrix-free tools (forward scattering, Krylov evolution)"
        )
    H = assemble("H", space).toarray()
    if vectors:
        E, V = la.eigh(H, overwrite_a=True, check_finite=False)
        return SpectrumResult(space, E, V)
    E = la.eigvalsh(H, overwrite_a=True, check_finite=False)
    return SpectrumResult(space, E, None)


def residuals(spectrum):
    """``||H v - E v||`` for every eigenpair, and ``||H||`` (Frobenius)."""
    H = assemble("H", spectrum.space).matrix
    R = H @ spectrum.vectors - spectrum.vectors * spectrum.energies
    return np.linalg.norm(R, axis=0), float(np.sqrt((abs(H.data) ** 2).sum()))


def reflection_defect(energies):
    """``max |E_i + E_{D-1-i}|`` for sorted energies."""
    E = np.sort(np.asarray(energies))
    return float(np.abs(E + E[::-1]).max(initial=0.0))


def degenerate_clusters(energies, atol):
    """Index ranges of runs of (sorted) energies closer than ``atol``."""
    E = np.asarray(energies)
    if E.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(E) > atol) + 1
    starts = np.concatenate([[0], breaks])
    stops = np.concatenate([breaks, [E.size]])
    return [(int(a), int(b)) for a, b in zip(starts, stops) if b - a > 1]


def concentrate(spectrum, reference, atol=1e-9):
    """Rotate degenerate eigenspaces so one vector carries all of ``reference``.

    ``reference`` is given in the basis of ``spectrum.space``. Within each
    degenerate cluster the first vector becomes the normalised projection of
    ``reference``; the rest span the orthogonal complement. Observables that
    are invariant under the rotation are unchanged.
    """
    V = spectrum.vectors.copy()
    ref = np.asarray(reference, dtype=V.dtype if np.iscomplexobj(V) else np.result_type(V, reference))
    for a, b in degenerate_clusters(spectrum.energies, atol):
        block = V[:, a:b]
        c = block.conj().T @ ref
        norm = np.linalg.norm(c)
        if norm < 1e-14:
            continue
        # orthonormal basis of the cluster whose first column is along c
        Q, _ = np.linalg.qr(np.column_stack([c / norm, np.eye(b - a, dtype=c.dtype)]))
        Q = Q[:, : b - a]
        Q[:, 0] *= np.vdot(Q[:, 0], c / norm) / abs(np.vdot(Q[:, 0], c / norm))
        V[:, a:b] = block @ Q
    return replace(spectrum, vectors=V)


def density_of_states(energies, bins=100, range_=None):
    """Normalised histogram ``(centres, density)`` of the spectrum."""
    hist, edges = np.histogram(energies, bins=bins, range=range_, density=True)
    return 0.5 * (edges[1:] + edges[:-1]), hist


def dos_zero_spike(energies, bins=101):
    """Ratio of the central DOS bin to the average of its two neighbours."""
    E = np.asarray(energies)
    width = np.abs(E).max()
    centres, dens = density_of_states(E, bins=bins, range_=(-width, width))
    mid = bins // 2
    side = 0.5 * (dens[mid - 1] + dens[mid + 1])
    return float(dens[mid] / side) if side > 0 else np.inf


# ---------------------------------------------------------------------------
# level statistics

UNFOLD_DEGREE = 9
MIN_WINDOW = 100
REFERENCE_DIMENSION = 77436  # sector size the window offset of 500 refers to


def _cdf_poisson(s):
    return 1.0 - np.exp(-s)


def _cdf_semipoisson(s):
    # P(s) = 4 s exp(-2 s)
    return 1.0 - (1.0 + 2.0 * s) * np.exp(-2.0 * s)


def _cdf_wigner(s):
    # P(s) = (pi/2) s exp(-pi s^2 / 4)
    return 1.0 - np.exp(-np.pi * s * s / 4.0)


REFERENCE_CDFS = {"poisson": _cdf_poisson, "semipoisson": _cdf_semipoisson, "wd": _cdf_wigner}


@dataclass(frozen=True, eq=False)
class LevelStatistics:
    spacings: np.ndarray = field(repr=False)
    ks_poisson: float
    ks_semipoisson: float
    ks_wd: float
    r_mean: float
    window: tuple
    degree: int

    @property
    def mean_spacing(self):
        return float(self.spacings.mean())

    def histogram(self, bins=40, upper=4.0):
        return np.histogram(self.spacings, bins=bins, range=(0.0, upper), density=True)

    @property
    def closest(self):
        ks = {"poisson": self.ks_poisson, "semipoisson": self.ks_semipoisson, "wd": self.ks_wd}
        return min(ks, key=ks.get)

    def to_json(self, label=None):
        out = dict(label or {})
        out.update(
            window=list(self.window),
            ks_poisson=self.ks_poisson,
            ks_semipoisson=self.ks_semipoisson,
            ks_wd=self.ks_wd,
            r_mean=self.r_mean,
            mean_spacing=self.mean_spacing,
            unfold_degree=self.degree,
        )
        return out


def paper_window(dimension):
    """``[D/5, D/2 - 500 D / 77436]``: skips the spectral edge and the E=0 block."""
    D = int(dimension)
    offset = int(round(500 * D / REFERENCE_DIMENSION))
    return D // 5, D // 2 - offset


def unfold(energies, degree=UNFOLD_DEGREE):
    """Map levels through a polynomial fit of the staircase ``N(E_i) = i``."""
    E = np.sort(np.asarray(energies, dtype=float))
    fit = np.polynomial.Polynomial.fit(E, np.arange(E.size, dtype=float), degree)
    return fit(E)


def gap_ratios(energies):
    d = np.diff(np.sort(np.asarray(energies, dtype=float)))
    a, b = d[:-1], d[1:]
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.minimum(a, b) / np.maximum(a, b)
    return r[np.isfinite(r)]


def _ks(spacings, r, window, degree):
    d = {name: float(stats.kstest(spacings, cdf).statistic) for name, cdf in REFERENCE_CDFS.items()}
    return LevelStatistics(
        spacings, d["poisson"], d["semipoisson"], d["wd"], float(r.mean()), tuple(window), degree
    )


def level_statistics(energies, window=None, degree=UNFOLD_DEGREE):
    """Unfolded spacing statistics of ``energies[window[0]:window[1]]``.

    KS distances are against the Poisson, Semi-Poisson and Wigner surmise
    distributions; ``r_mean`` uses raw gaps.
    """
    E = np.sort(np.asarray(energies, dtype=float))
    lo, hi = paper_window(E.size) if window is None else (int(window[0]), int(window[1]))
    if not 0 <= lo < hi <= E.size:
        raise ValueError(f"window [{lo}, {hi}) outside the spectrum of {E.size} levels")
    if hi - lo < MIN_WINDOW:
        raise ValueError(f"window [{lo}, {hi}) holds {hi - lo} levels; need at least {MIN_WINDOW}")
    sel = E[lo:hi]
    s = np.diff(unfold(sel, degree))
    return _ks(s, gap_ratios(sel), (lo, hi), degree)


def pooled_statistics(samples, fraction=0.5, degree=UNFOLD_DEGREE):
    """Statistics pooled over several spectra, each cut to its central ``fraction``."""
    spacings, ratios = [], []
    for E in samples:
        E = np.sort(np.asarray(E, dtype=float))
        cut = int(E.size * (1 - fraction) / 2)
        sel = E[cut : E.size - cut]
        spacings.append(np.diff(unfold(sel, degree)))
        ratios.append(gap_ratios(sel))
    s = np.concatenate(spacings)
    if s.size < MIN_WINDOW:
        raise ValueError(f"only {s.size} pooled spacings; need at least {MIN_WINDOW}")
    return _ks(s, np.concatenate(ratios), (0, s.size), degree)


def poisson_control(levels=4000, seed=0):
    """Uncorrelated levels: sorted i.i.d. uniform numbers."""
    rng = np.random.default_rng(seed)
    E = np.sort(rng.uniform(0.0, 1.0, levels))
    return level_statistics(E, (0, levels), degree=1)


def goe_control(size=400, samples=20, seed=0):
    """Pooled spectra of real symmetric Gaussian matrices."""
    rng = np.random.default_rng(seed)
    spectra = []
    for _ in range(samples):
        A = rng.standard_normal((size, size))
        spectra.append(la.eigvalsh(A + A.T))
    return pooled_statistics(spectra)


# ---------------------------------------------------------------------------
# zero modes


def zero_mode_formula(length, boundary):
    """Closed-form OBC zero-mode count; ``None`` for periodic chains."""
    if boundary != OBC:
        return None
    L = int(length)
    return fibonacci(L // 2 + 1) if L % 2 == 0 else fibonacci((L - 1) // 2)


@dataclass(frozen=True, eq=False)
class ZeroModeReport:
    boundary: str
    length: int
    kernel_dimension: int
    kernel_dimension_exact: int | None
    formula_prediction: int | None
    stagger: str = "0"
    integer_basis: list | None = field(repr=False, default=None)

    @property
    def consistent(self):
        ok = self.kernel_dimension_exact in (None, self.kernel_dimension)
        if self.formula_prediction is not None:
            ok = ok and self.formula_prediction == (self.kernel_dimension_exact or self.kernel_dimension)
        return ok

    def to_json(self):
        out = {
            "boundary": self.boundary,
            "L": self.length,
            "stagger": self.stagger,
            "kernelDimension": self.kernel_dimension,
            "kernelDimensionExact": self.kernel_dimension_exact,
            "formulaPrediction": self.formula_prediction,
        }
        if self.integer_basis is not None:
            out["integerKernelBasis"] = [[int(x) for x in v] for v in self.integer_basis]
        return out


def integer_hamiltonian(basis, stagger=0):
    """``(M, scale)`` with ``M = scale * (H + stagger * V)`` an integer matrix.

    ``stagger`` is read as a decimal fraction so that e.g. 0.3 gives
    ``M = 10 H + 3 V`` exactly.
    """
    frac = Fraction(str(stagger)) if not isinstance(stagger, Fraction) else stagger
    H = assemble("H", basis).matrix.astype(np.int64)
    if frac == 0:
        return H.tocsr(), 1
    V = sp.diags(stagger_diagonal(basis))
    return (frac.denominator * H + frac.numerator * V).tocsr().astype(np.int64), frac.denominator


def numerical_kernel_dimension(matrix, rtol=ZERO_MODE_RTOL):
    """Singular values below ``rtol * ||M||_2``."""
    dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
    sv = la.svdvals(dense.astype(float), check_finite=False)
    return int(np.sum(sv < rtol * max(sv.max(initial=0.0), 1e-300)))


def exact_kernel(basis, stagger=0, method="modular"):
    """Certified integer kernel of ``H + stagger * V`` in the product basis.

    Rows and columns are grouped by excitation number before elimination,
    which keeps fill-in low; the returned vectors are in basis order.
    """
    M, _ = integer_hamiltonian(basis, stagger)
    perm = np.argsort(popcount(basis.states), kind="stable")
    A = M[perm][:, perm]
    if method == "bareiss":
        res = bareiss_kernel(A.toarray())
    elif method == "modular":
        res = integer_kernel(A)
    else:
        raise ValueError(f"unknown kernel method {method!r}")
    vectors = []
    for v in res.vectors:
        w = [0] * len(v)
        for j, x in enumerate(v):
            w[perm[j]] = x
        vectors.append(w)
    return res, vectors, M


def zero_modes(boundary, length, exact=True, integer_basis=False, stagger=0, cap=None):
    """Count E=0 eigenstates numerically and, if ``exact``, over the rationals."""
    basis = enumerate_basis(length, boundary)
    cap = dense_cap() if cap is None else cap
    if basis.dimension > cap:
        raise CapacityError(f"dimension {basis.dimension} exceeds the dense cap {cap}")
    M, _ = integer_hamiltonian(basis, stagger)
    numeric = numerical_kernel_dimension(M)
    exact_dim, vectors = None, None
    if exact or integer_basis:
        res, vecs, _ = exact_kernel(basis, stagger)
        exact_dim = res.dimension
        if integer_basis:
            vectors = vecs
    return ZeroModeReport(
        basis.boundary,
        basis.length,
        numeric,
        exact_dim,
        zero_mode_formula(length, basis.boundary),
        str(stagger),
        vectors,
    )


def sublattice_imbalance_bound(space):
    """``|N_even - N_odd|`` over excitation-number parity of the basis states."""
    states = space.reps if isinstance(space, SymmetrySector) else space.states
    odd = int(np.sum(popcount(states) % 2))
    return abs(len(states) - 2 * odd)


def inversion_invariant_states(basis):
    """Product states mapped to themselves by the reflection i -> L-1-i."""
    perm = inversion_permutation(basis)
    return basis.states[perm == np.arange(basis.dimension)]
