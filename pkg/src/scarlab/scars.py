"""Special-band detection from eigenstate overlaps with a product state.

The |Z2> state is a sum of two orbit states, ``(|Z2> + |Z2'>)/sqrt2`` in the
sector ``k=0, I=+1`` and ``(|Z2> - |Z2'>)/sqrt2`` in ``k=L/2, I=-1``, so
its band is split between those two sectors. The functions here therefore
accept one spectrum or a list of spectra and treat their union as one
spectrum.
"""

from dataclasses import dataclass, field

import numpy as np

from .basis import product_state
from .io import write_csv
from .spectral import concentrate
from .symmetry import SymmetrySector, build_sector

WINDOW_FRACTION = 0.4


def z2_sectors(basis):
    """The two sectors that carry weight of |Z2> for even L under PBC."""
    L = basis.length
    if L % 2 or not basis.pbc:
        raise ValueError("|Z2> sectors need even L with periodic boundaries")
    return [build_sector(basis, 0, +1), build_sector(basis, L // 2, -1)]


def _reference_in(space, state):
    full = space.basis if isinstance(space, SymmetrySector) else space
    unit = np.zeros(full.dimension)
    unit[full.index(state)] = 1.0
    if isinstance(space, SymmetrySector):
        return space.restrict(unit)
    return unit


def participation_ratio(vector):
    """``sum_a |c_a|^4`` of a normalised vector."""
    p = np.abs(np.asarray(vector)) ** 2
    return float(np.sum(p * p))


@dataclass(frozen=True, eq=False)
class Scatter:
    """Per-eigenstate energy, overlap and PR2 over a union of spectra.

    ``source[i]`` is the position of eigenstate ``i``'s spectrum in
    ``spectra`` and ``local[i]`` its column there. Rows are sorted by energy.
    """

    spectra: list = field(repr=False)
    reference: int
    energies: np.ndarray = field(repr=False)
    overlaps: np.ndarray = field(repr=False)
    pr2: np.ndarray = field(repr=False)
    source: np.ndarray = field(repr=False)
    local: np.ndarray = field(repr=False)

    @property
    def total_weight(self):
        return float(self.overlaps.sum())

    def vector(self, i):
        """Full-basis eigenvector of row ``i``."""
        return self.spectra[self.source[i]].full_vectors(int(self.local[i]))

    def dimensions(self):
        return [s.dimension for s in self.spectra]

    def mid_spectrum(self, zero_atol=1e-9):
        """Rows in the middle 2/3 of the energy range, zero modes excluded."""
        lo, hi = self.energies.min(), self.energies.max()
        cut = (hi - lo) / 6
        E = self.energies
        return (E >= lo + cut) & (E <= hi - cut) & (np.abs(E) > zero_atol)


def overlap_scatter(spectra, reference, zero_atol=1e-9):
    """Overlaps ``|<ref|E>|^2`` and PR2 for every eigenstate of ``spectra``.

    Degenerate eigenspaces are rotated so a single vector carries all of the
    reference weight. PR2 uses each spectrum's own basis (sector orbit states
    or product states).
    """
    if not isinstance(spectra, (list, tuple)):
        spectra = [spectra]
    spectra = list(spectra)
    E, ov, pr, src, loc = [], [], [], [], []
    weight = 0.0
    for k, spec in enumerate(spectra):
        try:
            ref = _reference_in(spec.space, reference)
        except KeyError:
            ref = np.zeros(spec.dimension)
        weight += float(np.vdot(ref, ref).real)
        rot = concentrate(spec, ref, zero_atol)
        amp = rot.vectors.conj().T @ ref
        P = np.abs(rot.vectors) ** 2
        E.append(rot.energies)
        ov.append(np.abs(amp) ** 2)
        pr.append(np.sum(P * P, axis=0))
        src.append(np.full(spec.dimension, k))
        loc.append(np.arange(spec.dimension))
    if weight < 1e-12:
        raise ValueError("reference state has no weight in the supplied symmetry sector(s)")
    E = np.concatenate(E)
    order = np.argsort(E, kind="stable")
    cat = lambda xs: np.concatenate(xs)[order]  # noqa: E731
    return Scatter(spectra, int(reference), E[order], cat(ov), cat(pr), cat(src), cat(loc))


@dataclass(frozen=True)
class ScarBand:
    """Band members (row indices into a :class:`Scatter`) and spacing ``omega``."""

    members: np.ndarray
    energies: np.ndarray
    overlaps: np.ndarray
    pr2: np.ndarray
    omega: float
    margins: np.ndarray  # per window: best overlap / runner-up overlap

    @property
    def size(self):
        return int(self.members.shape[0])

    def to_json(self, length):
        return {
            "L": length,
            "omega": self.omega,
            "members": [
                {"energy": float(e), "overlap": float(o), "pr2": float(p)}
                for e, o, p in zip(self.energies, self.overlaps, self.pr2)
            ],
        }


def central_spacing(energies):
    """Mean adjacent spacing over the middle third of the sorted energies."""
    E = np.sort(np.asarray(energies))
    a = len(E) // 3
    mid = E[a : len(E) - a]
    return float(np.diff(mid).mean())


def _band(scatter, members, margins):
    members = np.asarray(sorted(members, key=lambda i: scatter.energies[i]), dtype=np.int64)
    return ScarBand(
        members,
        scatter.energies[members],
        scatter.overlaps[members],
        scatter.pr2[members],
        central_spacing(scatter.energies[members]),
        np.asarray(margins, dtype=float),
    )


def windows(centres, fraction=WINDOW_FRACTION):
    """``(lo, hi)`` per centre with half-width ``fraction`` of the local spacing."""
    c = np.sort(np.asarray(centres, dtype=float))
    gaps = np.diff(c)
    left = np.concatenate([[gaps[0]], gaps])
    right = np.concatenate([gaps, [gaps[-1]]])
    half = fraction * np.minimum(left, right)
    return np.column_stack([c - half, c + half])


def detect_band(scatter, centres, fraction=WINDOW_FRACTION):
    """Highest-overlap eigenstate inside each window around ``centres``.

    ``centres`` are normally the FSA energies, giving L+1 windows. Raises
    ``ValueError`` with a window report when a window is empty or its best
    candidate is not strictly ahead of the runner-up.
    """
    wins = windows(centres, fraction)
    members, margins, problems = [], [], []
    for lo, hi in wins:
        inside = np.flatnonzero((scatter.energies >= lo) & (scatter.energies <= hi))
        if inside.size == 0:
            problems.append(f"[{lo:.4f}, {hi:.4f}]: empty")
            continue
        ranked = inside[np.argsort(scatter.overlaps[inside])[::-1]]
        best = scatter.overlaps[ranked[0]]
        second = scatter.overlaps[ranked[1]] if ranked.size > 1 else 0.0
        if best <= second * (1 + 1e-12):
            problems.append(f"[{lo:.4f}, {hi:.4f}]: tie between rows {ranked[0]} and {ranked[1]}")
            continue
        members.append(int(ranked[0]))
        margins.append(best / second if second > 0 else np.inf)
    if len(set(members)) != len(members):
        problems.append("one eigenstate selected by two windows")
    if problems:
        raise ValueError("band detection failed:\n  " + "\n  ".join(problems))
    return _band(scatter, members, margins)


def greedy_band(scatter, count, min_spacing):
    """Top-``count`` overlaps subject to a minimum energy spacing."""
    chosen = []
    for i in np.argsort(scatter.overlaps, kind="stable")[::-1]:
        if all(abs(scatter.energies[i] - scatter.energies[j]) >= min_spacing for j in chosen):
            chosen.append(int(i))
            if len(chosen) == count:
                break
    if len(chosen) < count:
        raise ValueError(f"only {len(chosen)} states satisfy the spacing {min_spacing}")
    return _band(scatter, chosen, np.full(count, np.nan))


def separation(scatter, band, fraction=WINDOW_FRACTION):
    """Smallest best/runner-up overlap ratio over windows around the members."""
    ratios = []
    for lo, hi in windows(band.energies, fraction):
        inside = np.flatnonzero((scatter.energies >= lo) & (scatter.energies <= hi))
        ov = np.sort(scatter.overlaps[inside])[::-1]
        ratios.append(ov[0] / ov[1] if ov.size > 1 and ov[1] > 0 else np.inf)
    return float(np.min(ratios))


def pr2_enhancement(scatter, band, zero_atol=1e-9):
    """Mean band PR2 over mean PR2 of all states, both in the middle 2/3.

    Returns ``(ratio, band_mean, all_mean)``.
    """
    mid = scatter.mid_spectrum(zero_atol)
    in_band = np.zeros_like(mid)
    in_band[band.members] = True
    band_mean = float(scatter.pr2[mid & in_band].mean())
    all_mean = float(scatter.pr2[mid].mean())
    return band_mean / all_mean, band_mean, all_mean


def z2_reference(length):
    return product_state("z2", length)


def write_scatter(scatter, band, path):
    """CSV ``energy,overlap,pr2,is_special``."""
    special = np.zeros(scatter.energies.shape[0], dtype=int)
    if band is not None:
        special[band.members] = 1
    write_csv(
        path,
        ["energy", "overlap", "pr2", "is_special"],
        zip(scatter.energies, scatter.overlaps, scatter.pr2, special),
    )
