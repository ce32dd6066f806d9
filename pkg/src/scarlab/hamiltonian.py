"""The PXP Hamiltonian, its forward/backward split and a staggered field.

``H = sum_i P_{i-1} X_i P_{i+1}`` with unit coupling. On open chains the end
sites lose one projector (``X_0 P_1`` and ``P_{L-2} X_{L-1}``). ``H+`` raises
the Hamming distance from |Z2> by one: it de-excites even sites and excites
odd sites; ``H-`` is its transpose and ``H = H+ + H-``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .basis import MAX_LENGTH, ConstrainedBasis, fibonacci_table, popcount
from .symmetry import SymmetrySector

KINDS = ("H", "H+", "H-", "stagger")
_MODES = {"H": kernels.MODE_H, "H+": kernels.MODE_PLUS, "H-": kernels.MODE_MINUS}


@dataclass(frozen=True)
class OperatorSpec:
    """Which operator to build. ``amplitude`` scales the staggered field."""

    kind: str = "H"
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"operator kind must be one of {KINDS}, got {self.kind!r}")
        if not np.isfinite(self.amplitude):
            raise ValueError("operator amplitude must be finite")


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Assembled operator in CSR form, tagged with the space it acts on."""

    matrix: sp.csr_matrix = field(repr=False)
    spec: OperatorSpec
    tag: str

    @property
    def dimension(self):
        return self.matrix.shape[0]

    @property
    def nnz(self):
        return self.matrix.nnz

    def __matmul__(self, other):
        return self.matrix @ other

    def toarray(self):
        return self.matrix.toarray()

    def write_coo(self, path):
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w") as fh:
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{r} {c} {v!r}\n")


def _as_spec(spec):
    return OperatorSpec(spec) if isinstance(spec, str) else spec


def stagger_diagonal(basis):
    """``sum_i (-1)^i z_i`` per state, with z = +1 excited and -1 ground."""
    L = basis.length
    s = basis.states
    diag = np.zeros(basis.dimension, dtype=np.int64)
    for i in range(L):
        z = 2 * ((s >> i) & 1) - 1
        diag += z if i % 2 == 0 else -z
    return diag


def _check_pm(basis):
    if basis.pbc and basis.length % 2:
        raise ValueError(f"H+/H- split needs even L with periodic boundaries, got L={basis.length}")


def apply(spec, basis, vector, out=None):
    """Matrix-free ``A @ vector`` in the full constrained basis."""
    spec = _as_spec(spec)
    v = np.ascontiguousarray(vector)
    if v.shape != (basis.dimension,):
        raise ValueError(f"vector length {v.shape} does not match basis dimension {basis.dimension}")
    if spec.kind == "stagger":
        return spec.amplitude * stagger_diagonal(basis) * v
    if spec.kind != "H":
        _check_pm(basis)
    if not np.iscomplexobj(v):
        v = v.astype(np.float64, copy=False)
    if out is None:
        out = np.zeros_like(v)
    else:
        out[:] = 0
    kernels.flip_matvec(
        basis.states,
        basis.ranks,
        basis.lookup,
        fibonacci_table(MAX_LENGTH + 2),
        basis.length,
        basis.pbc,
        _MODES[spec.kind],
        v,
        out,
    )
    return out


def flip_triplets(basis, kind="H"):
    """(rows, cols) of every allowed single flip contributing to ``kind``."""
    L = basis.length
    s = basis.states
    fib = fibonacci_table(MAX_LENGTH + 2)
    rows, cols = [], []
    for i in range(L):
        if basis.pbc:
            neigh = {(i - 1) % L, (i + 1) % L} - {i}
        else:
            neigh = {j for j in (i - 1, i + 1) if 0 <= j < L}
        ok = np.ones(s.shape[0], dtype=bool)
        for j in neigh:
            ok &= ((s >> j) & 1) == 0
        occ = ((s >> i) & 1) == 1
        if kind == "H+":
            ok &= occ == (i % 2 == 0)
        elif kind == "H-":
            ok &= occ != (i % 2 == 0)
        src = np.flatnonzero(ok)
        dst = basis.lookup[basis.ranks[src] + np.where(occ[src], -fib[i + 2], fib[i + 2])]
        rows.append(dst)
        cols.append(src)
    return np.concatenate(rows), np.concatenate(cols)


def _assemble_full(spec, basis):
    n = basis.dimension
    if spec.kind == "stagger":
        m = sp.diags(spec.amplitude * stagger_diagonal(basis).astype(float), format="csr")
    else:
        if spec.kind != "H":
            _check_pm(basis)
        rows, cols = flip_triplets(basis, spec.kind)
        m = sp.csr_matrix((np.ones(rows.shape[0]), (rows, cols)), shape=(n, n))
    m.sum_duplicates()
    m.sort_indices()
    return SparseOperator(m, spec, f"full:L={basis.length}:{basis.boundary}")


def _assemble_sector(spec, sector):
    if spec.kind != "H":
        raise ValueError(f"only H is translation invariant; cannot build {spec.kind!r} in a momentum sector")
    basis = sector.basis
    rows, cols = flip_triplets(basis, "H")
    col_sector = sector.member[cols]
    # sources restricted to representatives
    is_rep = np.zeros(basis.dimension, dtype=bool)
    is_rep[sector.rep_index] = True
    sel = is_rep[cols] & (col_sector >= 0)
    rows, cols = rows[sel], cols[sel]
    r = sector.member[rows]
    keep = r >= 0
    rows, cols, r = rows[keep], cols[keep], r[keep]
    c = sector.member[cols]
    vals = np.conj(sector.phase[rows]) * np.sqrt(sector.orbit[c] / sector.orbit[r])
    if sector.is_real:
        vals = vals.real
    d = sector.dimension
    m = sp.csr_matrix((vals, (r, c)), shape=(d, d))
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    tag = f"sector:L={sector.length}:k={sector.k}:I={sector.parity}"
    return SparseOperator(m, spec, tag)


def assemble(spec, space):
    """Explicit sparse matrix of ``spec`` on a basis or a symmetry sector."""
    spec = _as_spec(spec)
    if isinstance(space, SymmetrySector):
        return _assemble_sector(spec, space)
    if isinstance(space, ConstrainedBasis):
        return _assemble_full(spec, space)
    raise TypeError(f"cannot assemble on {type(space).__name__}")


def decompose_pm(basis):
    """Return (H+, H-) with ``H+ + H- == H`` and ``H- == H+.T``."""
    _check_pm(basis)
    return assemble(OperatorSpec("H+"), basis), assemble(OperatorSpec("H-"), basis)


def excitation_numbers(basis):
    return popcount(basis.states)
