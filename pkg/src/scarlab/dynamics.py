"""Quench dynamics: Krylov and spectral propagation with observables.

Observables per time point are the return probability, the averaged
nearest-neighbour correlator ``(1/L) sum_i <z_i z_{i+1}>`` and the
half-chain entanglement entropy in nats.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .basis import PBC, enumerate_basis, product_state
from .errors import AccuracyError
from .hamiltonian import assemble
from .io import write_csv

KRYLOV_DIM = 30
KRYLOV_TOL = 1e-10
NORM_TOL = 1e-10


def krylov_step(H, v, dt, m=KRYLOV_DIM, tol=KRYLOV_TOL):
    """``exp(-i H dt) v`` from a Lanczos space of dimension at most ``m``.

    The space grows until the a-posteriori estimate
    ``beta_j |e_j^T exp(-i T dt) e_1|`` drops below ``tol``. Returns the
    propagated vector and the final estimate. One pass of full
    reorthogonalisation keeps the basis orthonormal.
    """
    nrm = np.linalg.norm(v)
    n = v.shape[0]
    m = min(m, n)
    V = np.zeros((m, n), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    V[0] = v / nrm
    for j in range(m):
        w = H @ V[j]
        alpha[j] = np.vdot(V[j], w).real
        w -= V[: j + 1].T @ (V[: j + 1] @ w.conj()).conj()
        b = np.linalg.norm(w)
        beta[j] = b
        k = j + 1
        E, U = la.eigh_tridiagonal(alpha[:k], beta[: k - 1])
        c = U @ (np.exp(-1j * E * dt) * U[0].conj())
        err = abs(b * c[k - 1])
        if err < tol or b < 1e-13 * max(1.0, abs(alpha[j])) or k == m:
            break
        V[k] = w / b
    return nrm * (c @ V[:k]), err


def propagate_krylov(H, v, dt, m=KRYLOV_DIM, tol=KRYLOV_TOL):
    """Advance by ``dt`` with as many equal substeps as the error estimate needs."""
    pieces = 1
    while True:
        h = dt / pieces
        w, err = krylov_step(H, v, h, m, tol)
        if err < tol:
            break
        pieces *= 2
        if pieces > 2**16:
            raise AccuracyError(f"Krylov step did not converge for dt={dt}; increase the Krylov dimension")
    for _ in range(pieces - 1):
        w, err = krylov_step(H, w, h, m, tol)
        if err >= tol:
            raise AccuracyError(f"Krylov error {err:.2e} above {tol:.0e}; use a smaller step")
    return w


# ---------------------------------------------------------------------------
# observables


def correlator_diagonal(basis):
    """``(1/N_b) sum_b z_i z_{i+1}`` per basis state, over the N_b bonds."""
    L = basis.length
    s = basis.states
    bonds = L if basis.pbc else L - 1
    acc = np.zeros(basis.dimension)
    for i in range(bonds):
        zi = 2 * ((s >> i) & 1) - 1
        zj = 2 * ((s >> ((i + 1) % L)) & 1) - 1
        acc += zi * zj
    return acc / bonds


@dataclass(frozen=True, eq=False)
class Bipartition:
    """Row/column labels of the Schmidt matrix for a cut after site ``cut - 1``."""

    cut: int
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    shape: tuple

    @classmethod
    def of(cls, basis, cut):
        L = basis.length
        if not 1 <= cut <= L - 1:
            raise ValueError(f"cut must lie in [1, {L - 1}], got {cut}")
        left = basis.states & ((1 << cut) - 1)
        right = basis.states >> cut
        lu, rows = np.unique(left, return_inverse=True)
        ru, cols = np.unique(right, return_inverse=True)
        return cls(cut, rows, cols, (lu.size, ru.size))

    def matrix(self, vector):
        M = np.zeros(self.shape, dtype=np.result_type(vector, float))
        M[self.rows, self.cols] = vector
        return M


def entropy_from_matrix(M):
    sv = la.svdvals(M, check_finite=False)
    p = sv * sv
    p = p[p > 1e-300] / p.sum()
    return max(0.0, float(-np.sum(p * np.log(p))))


def entanglement_entropy(basis, vector, cut=None, partition=None):
    """Von Neumann entropy (nats) of the left ``cut`` sites.

    Product states that straddle the cut with two adjacent excitations are
    not in the basis, so they simply never receive amplitude.
    """
    v = np.asarray(vector)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"state is not normalised (norm {norm:.12f})")
    if partition is None:
        partition = Bipartition.of(basis, basis.length // 2 if cut is None else cut)
    return entropy_from_matrix(partition.matrix(v))


# ---------------------------------------------------------------------------
# quench runs


@dataclass(frozen=True, eq=False)
class QuenchRun:
    initial: int
    length: int
    boundary: str
    times: np.ndarray = field(repr=False)
    fidelity: np.ndarray = field(repr=False)
    correlator: np.ndarray = field(repr=False)
    entropy: np.ndarray = field(repr=False)
    energy: np.ndarray = field(repr=False)
    norm: np.ndarray = field(repr=False)
    method: str = "krylov"
    cut: int = 0

    @property
    def horizon(self):
        """Rough finite-size time scale: half the chain over the maximal speed."""
        return self.length / 4.0

    def rows(self):
        return zip(self.times, self.fidelity, self.correlator, self.entropy)

    def write_csv(self, path):
        write_csv(path, ["t", "fidelity", "correlator", "entropy"], self.rows())


def time_grid(tmax, dt):
    n = int(round(tmax / dt))
    if n < 1 or not np.isclose(n * dt, tmax):
        raise ValueError(f"tmax={tmax} is not a positive multiple of dt={dt}")
    return np.arange(n + 1) * dt


def _observe(state, psi0, corr, bip, Hm):
    p = np.abs(state) ** 2
    nrm = float(np.sqrt(p.sum()))
    return (
        float(abs(np.vdot(psi0, state)) ** 2),
        float(p @ corr),
        entropy_from_matrix(bip.matrix(state)),
        float(np.vdot(state, Hm @ state).real),
        nrm,
    )


def _spectral_states(spectra, psi0, times):
    """Yield ``psi(t)`` from eigen-decompositions covering ``psi0``."""
    parts = []
    weight = 0.0
    for spec in spectra:
        full = spec.full_vectors()
        c = full.conj().T @ psi0
        weight += float(np.sum(np.abs(c) ** 2))
        parts.append((full, c, spec.energies))
    if abs(weight - 1.0) > 1e-10:
        raise ValueError(f"the supplied spectra hold only {weight:.12f} of the initial state")
    for t in times:
        out = np.zeros_like(psi0, dtype=complex)
        for full, c, E in parts:
            out += full @ (np.exp(-1j * E * t) * c)
        yield out


def evolve(initial, length, times, method="krylov", boundary=PBC, spectra=None, cut=None, krylov_dim=KRYLOV_DIM):
    """Evolve a product state and record observables on ``times``.

    ``initial`` is a pattern name (``"z2"``, ``"zero"``, ...) or a packed
    state. ``method="spectral"`` uses ``spectra`` (eigen-decompositions
    whose union covers the initial state) or a full diagonalisation when
    ``spectra`` is None.
    """
    basis = enumerate_basis(length, boundary)
    state = product_state(initial, length, boundary) if isinstance(initial, str) else int(initial)
    psi0 = np.zeros(basis.dimension, dtype=complex)
    psi0[basis.index(state)] = 1.0
    times = np.asarray(times, dtype=float)
    Hm = assemble("H", basis).matrix.astype(complex)
    corr = correlator_diagonal(basis)
    bip = Bipartition.of(basis, basis.length // 2 if cut is None else cut)
    rec = []
    if method == "krylov":
        psi = psi0.copy()
        prev = times[0]
        if prev != 0:
            psi = propagate_krylov(Hm, psi, prev, krylov_dim)
        for t in times:
            if t > prev:
                psi = propagate_krylov(Hm, psi, t - prev, krylov_dim)
                prev = t
            rec.append(_observe(psi, psi0, corr, bip, Hm))
    elif method == "spectral":
        if spectra is None:
            from .spectral import diagonalize

            spectra = [diagonalize(basis)]
        for psi in _spectral_states(spectra, psi0, times):
            rec.append(_observe(psi, psi0, corr, bip, Hm))
    else:
        raise ValueError(f"unknown method {method!r}; use 'krylov' or 'spectral'")
    fid, cor, ent, en, nrm = (np.array(x) for x in zip(*rec))
    drift = np.max(np.abs(nrm - 1.0))
    if drift > NORM_TOL:
        raise AccuracyError(f"norm drifted by {drift:.2e}; use a smaller step or a larger Krylov space")
    return QuenchRun(state, basis.length, basis.boundary, times, fid, cor, ent, en, nrm, method, bip.cut)


# ---------------------------------------------------------------------------
# oscillation analysis


def dominant_period(t, x, min_period=0.5, max_period=None, oversample=50):
    """Period of the highest peak of the periodogram of detrended ``x``.

    The periodogram is evaluated on a grid ``oversample`` times finer than
    the natural resolution, so the peak position is not limited to FFT bins.
    Returns ``nan`` for a constant series.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = x - np.polyval(np.polyfit(t, x, 1), t)
    if np.allclose(y, 0.0, atol=1e-12):
        return float("nan")
    span = t[-1] - t[0]
    max_period = span / 2 if max_period is None else max_period
    f = np.linspace(1.0 / max_period, 1.0 / min_period, int(oversample * span * (1.0 / min_period)))
    power = np.abs(np.exp(-2j * np.pi * np.outer(f, t)) @ y) ** 2
    return float(1.0 / f[np.argmax(power)])


@dataclass(frozen=True)
class OscillationAnalysis:
    slope: float
    intercept: float
    fit_window: tuple
    residual: np.ndarray = field(repr=False)
    period_entropy_residual: float
    period_correlator: float

    def to_json(self):
        return {
            "slope": self.slope,
            "period_entropy_residual": self.period_entropy_residual,
            "period_correlator": self.period_correlator,
            "fit_window": list(self.fit_window),
        }


def linear_fit(t, s, window):
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 3:
        raise ValueError(f"fit window {window} holds fewer than three samples")
    slope, intercept = np.polyfit(t[sel], s[sel], 1)
    return float(slope), float(intercept), sel


def growth_window(length, times, period=None, min_periods=3):
    """Default fit window ``[0, L/2]`` for the oscillation analysis.

    Entanglement spreads from the cut at roughly one site per unit time in
    each direction, so after ``t ~ L/2`` finite-size bending of S(t) leaks
    into the residual. The window is stretched to ``min_periods`` periods
    (plus 5%) when ``L`` is small, and clipped to the run.
    """
    hi = length / 2.0
    if period is not None and np.isfinite(period):
        hi = max(hi, 1.05 * min_periods * period)
    return float(times[0]), float(min(times[-1], times[0] + hi))


def oscillation_analysis(run, fit_window=None, min_periods=3):
    """Linear fit of S(t), residual and dominant periods.

    ``fit_window=None`` selects :func:`growth_window`. Raises ``ValueError``
    when the fit window spans fewer than ``min_periods`` correlator periods.
    """
    t = run.times
    if fit_window is None:
        # the period inside a short window can differ from the full-run one
        period = dominant_period(t, run.correlator)
        for _ in range(5):
            window = growth_window(run.length, t, period, min_periods)
            sel = (t >= window[0]) & (t <= window[1])
            inner = dominant_period(t[sel], run.correlator[sel])
            if not np.isfinite(inner) or window[1] - window[0] >= min_periods * inner or window[1] >= t[-1]:
                break
            period = inner
    else:
        window = tuple(map(float, fit_window))
    slope, intercept, sel = linear_fit(t, run.entropy, window)
    resid = run.entropy - (slope * t + intercept)
    p_corr = dominant_period(t[sel], run.correlator[sel])
    if np.isfinite(p_corr) and window[1] - window[0] < min_periods * p_corr:
        raise ValueError(
            f"fit window {window} covers fewer than {min_periods} periods of {p_corr:.3f}"
        )
    p_res = dominant_period(t[sel], resid[sel])
    return OscillationAnalysis(slope, intercept, window, resid, p_res, p_corr)


def entropy_slope(run, fit_window):
    return linear_fit(run.times, run.entropy, fit_window)[0]


def energy_drift(run):
    return float(np.max(np.abs(run.energy - run.energy[0])))


def slope_window(length):
    """Early-time window for comparing entanglement growth rates.

    Starts after the first oscillation and ends at ``L / 4``, before the
    fastest-growing states approach their finite-size saturation value.
    """
    return (1.0, max(2.0, length / 4.0))
