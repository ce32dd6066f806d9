"""Forward scattering approximation: Lanczos restricted to H+ propagation.

Starting from |Z2>, the vectors ``|n> = (H+)^n |Z2> / norm`` live on the
product states at Hamming distance ``n`` from |Z2>. Their supports are
disjoint, so all ``L + 1`` of them are stored as a single full-length
amplitude vector together with the basis' Hamming layer index.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .basis import PBC, enumerate_basis, product_state
from .errors import ConsistencyError
from .hamiltonian import OperatorSpec, apply

CLOSURE_TOL = 1e-10

_HPLUS = OperatorSpec("H+")
_HMINUS = OperatorSpec("H-")


@dataclass(frozen=True, eq=False)
class FsaResult:
    """Output of :func:`run_fsa`.

    Attributes
    ----------
    basis : ConstrainedBasis
    amplitudes : ndarray
        ``amplitudes[x] = <x|n>`` with ``n = basis.hamming[x]``.
    beta : ndarray
        Hoppings ``beta_n = ||H+ |n>||`` for ``n = 0 .. L-1``.
    err : ndarray
        Per-step error ``|<n|H+H-|n> / beta_{n-1}^2 - 1|``, ``err[0] = 0``.
    closure : float
        ``||H+ |L>||``.
    """

    basis: object = field(repr=False)
    amplitudes: np.ndarray = field(repr=False)
    beta: np.ndarray
    err: np.ndarray
    closure: float
    energies: np.ndarray = field(repr=False, default=None)
    eigenvectors: np.ndarray = field(repr=False, default=None)

    @property
    def length(self):
        return self.basis.length

    @property
    def hamiltonian(self):
        """Dense ``(L+1) x (L+1)`` tight-binding matrix."""
        return np.diag(self.beta, 1) + np.diag(self.beta, -1)

    def vector(self, n):
        """Full-basis amplitudes of ``|n>``."""
        out = np.zeros_like(self.amplitudes)
        layer = self.basis.hamming == n
        out[layer] = self.amplitudes[layer]
        return out

    def embedded(self, i):
        """Full-basis vector ``sum_n c_n |n>`` of FSA eigenvector ``i``."""
        c = self.eigenvectors[:, i]
        return self.amplitudes * c[self.basis.hamming]

    def profile(self, full_vector):
        """``<n|psi>`` for ``n = 0 .. L`` of a full-basis vector."""
        w = np.conj(self.amplitudes) * np.asarray(full_vector)
        L = self.length
        if np.iscomplexobj(w):
            return np.bincount(self.basis.hamming, w.real, L + 1) + 1j * np.bincount(
                self.basis.hamming, w.imag, L + 1
            )
        return np.bincount(self.basis.hamming, w, L + 1)

    @property
    def overlaps_z2(self):
        return self.eigenvectors[0, :] ** 2

    def report(self):
        return {
            "L": self.length,
            "beta": self.beta.tolist(),
            "err": self.err.tolist(),
            "mean_err": mean_error(self),
            "closure": self.closure,
            "energies": self.energies.tolist(),
            "overlaps_z2": self.overlaps_z2.tolist(),
        }


def run_fsa(length, boundary=PBC, basis=None):
    """Run the forward recursion from |Z2> and diagonalise H_FSA.

    Raises ``ValueError`` for odd L and :class:`ConsistencyError` when
    ``||H+ |L>||`` exceeds the closure tolerance.
    """
    L = int(length)
    if L % 2:
        raise ValueError(f"the forward recursion needs even L, got L={L}")
    if basis is None:
        basis = enumerate_basis(L, boundary)
    D = basis.dimension
    amps = np.zeros(D)
    cur = np.zeros(D)
    cur[basis.index(product_state("z2", L, basis.boundary))] = 1.0
    amps += cur
    beta = np.zeros(L)
    err = np.zeros(L + 1)
    work = np.zeros(D)
    for n in range(L + 1):
        if n > 0:
            back = apply(_HMINUS, basis, cur, out=work)
            err[n] = abs(np.dot(back, back) / beta[n - 1] ** 2 - 1.0)
        nxt = apply(_HPLUS, basis, cur)
        norm = float(np.linalg.norm(nxt))
        if n == L:
            closure = norm
            break
        if norm == 0.0:
            raise ConsistencyError(f"forward recursion terminated early at n={n}")
        beta[n] = norm
        cur = nxt / norm
        amps += cur
    if closure > CLOSURE_TOL:
        raise ConsistencyError(f"forward recursion did not close: ||H+|L>|| = {closure:.3e}")
    E, V = la.eigh_tridiagonal(np.zeros(L + 1), beta)
    # deterministic sign: largest component positive
    V = V * np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(L + 1)])
    return FsaResult(basis, amps, beta, err, closure, E, V)


def mean_error(result):
    """Average of ``err(n)`` over the steps with a backward partner, n = 1..L."""
    return float(result.err[1:].mean())


def fsa_spectrum(result):
    """``(energies, eigenvectors, overlaps with |Z2>)`` of H_FSA."""
    return result.energies, result.eigenvectors, result.overlaps_z2


def hopping_symmetry_defect(result):
    """``max_n | beta_n - <n|H-|n+1> |``."""
    worst = 0.0
    for n in range(result.length):
        up = result.vector(n + 1)
        back = apply(_HMINUS, result.basis, up)
        worst = max(worst, abs(result.beta[n] - float(np.dot(result.vector(n), back))))
    return worst


@dataclass(frozen=True)
class Comparison:
    """Matched FSA/exact pairs with energy errors and Hamming profiles."""

    fsa_energies: np.ndarray
    exact_energies: np.ndarray
    fsa_profiles: np.ndarray  # (pairs, L+1) of |<n|E_FSA>|^2
    exact_profiles: np.ndarray  # (pairs, L+1) of |<n|E_exact>|^2

    @property
    def relative_errors(self):
        """``|E_FSA - E| / |E|`` per pair, ``nan`` where ``E = 0``."""
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.abs(self.fsa_energies - self.exact_energies) / np.abs(self.exact_energies)
        rel[np.abs(self.exact_energies) < 1e-9] = np.nan
        return rel

    @property
    def mean_relative_error(self):
        return float(np.nanmean(self.relative_errors))

    def rows(self, i):
        """``(n, exact_prob, fsa_prob)`` rows for pair ``i``."""
        return [(n, self.exact_profiles[i, n], self.fsa_profiles[i, n]) for n in range(self.exact_profiles.shape[1])]


def compare_to_exact(result, exact_energies, exact_vectors):
    """Pair FSA eigenstates with an exact band, both sorted by energy.

    ``exact_vectors`` holds full-basis eigenvectors as columns.
    """
    E = np.asarray(exact_energies)
    if E.shape[0] != result.energies.shape[0]:
        raise ValueError(
            f"band size {E.shape[0]} does not match FSA size {result.energies.shape[0]}: "
            f"exact={np.round(np.sort(E), 4).tolist()} fsa={np.round(result.energies, 4).tolist()}"
        )
    order = np.argsort(E)
    exact_prof = np.array([np.abs(result.profile(exact_vectors[:, j])) ** 2 for j in order])
    return Comparison(result.energies.copy(), E[order], result.eigenvectors.T**2, exact_prof)
