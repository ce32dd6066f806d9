import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import dense_pxp
from scarlab import spectral as S
from scarlab.basis import OBC, PBC, enumerate_basis, fibonacci, product_state
from scarlab.errors import CapacityError
from scarlab.hamiltonian import assemble, stagger_diagonal
from scarlab.symmetry import all_sectors, build_sector


def test_four_site_sector_spectrum():
    # brute-force 3x3 oracle: orbit states of 0000, 0001 and 0101
    sec = build_sector(enumerate_basis(4), 0, 1)
    ref = np.linalg.eigvalsh(assemble("H", sec).toarray())
    E = S.diagonalize(sec).energies
    assert np.allclose(E, ref)
    assert abs(E[1]) < 1e-12 and np.isclose(E[0], -E[2]) and E[2] > 0


@pytest.mark.parametrize("L", [6, 9, 12])
def test_residuals_and_orthonormality(L):
    for sec in all_sectors(enumerate_basis(L)):
        if sec.dimension == 0:
            continue
        spec = S.diagonalize(sec)
        res, norm = S.residuals(spec)
        assert res.max() <= 1e-8 * norm
        V = spec.vectors
        assert np.allclose(V.conj().T @ V, np.eye(sec.dimension), atol=1e-10)
        assert np.all(np.diff(spec.energies) >= 0)


@given(st.integers(3, 12))
def test_reflection_symmetry_of_every_sector(L):
    for sec in all_sectors(enumerate_basis(L)):
        if sec.dimension:
            assert S.reflection_defect(S.diagonalize(sec, vectors=False).energies) < 1e-8


def test_capacity_error():
    sec = build_sector(enumerate_basis(16), 0, 1)
    with pytest.raises(CapacityError):
        S.diagonalize(sec, cap=10)


def test_dense_cap_env(monkeypatch):
    monkeypatch.setenv("SCARLAB_DENSE_CAP", "77")
    assert S.dense_cap() == 77
    monkeypatch.delenv("SCARLAB_DENSE_CAP")
    assert S.dense_cap() == S.DEFAULT_DENSE_CAP


def test_concentrate_puts_reference_on_one_vector():
    L = 12
    sec = build_sector(enumerate_basis(L), 0, 1)
    spec = S.diagonalize(sec)
    ref = sec.product_vector(product_state("z2", L))
    rot = S.concentrate(spec, ref)
    zero = np.flatnonzero(spec.zero_mode_mask())
    ov = np.abs(rot.vectors[:, zero].T @ ref) ** 2
    assert np.sum(ov > 1e-14) == 1
    assert np.isclose(ov.sum(), np.sum(np.abs(spec.vectors[:, zero].T @ ref) ** 2))
    assert np.allclose(rot.vectors.T @ rot.vectors, np.eye(sec.dimension), atol=1e-10)
    res, norm = S.residuals(rot)
    assert res.max() < 1e-8 * norm


def test_degenerate_clusters():
    assert S.degenerate_clusters(np.array([0.0, 1.0, 1.0, 1.0, 2.0, 2.0]), 1e-9) == [(1, 4), (4, 6)]


def test_dos_spike_at_zero():
    sec = build_sector(enumerate_basis(20), 0, 1)
    E = S.diagonalize(sec, vectors=False).energies
    assert S.dos_zero_spike(E) > 2.0


# level statistics


def test_controls_classify():
    assert S.poisson_control(seed=1).closest == "poisson"
    assert S.goe_control(seed=1).closest == "wd"
    assert abs(S.poisson_control(seed=1).r_mean - 0.386) < 0.03
    assert abs(S.goe_control(seed=1).r_mean - 0.536) < 0.03


def test_controls_are_seeded():
    assert S.goe_control(seed=3).ks_wd == S.goe_control(seed=3).ks_wd


def test_unfolding_normalisation():
    sec = build_sector(enumerate_basis(22), 0, 1)
    st_ = S.level_statistics(S.diagonalize(sec, vectors=False).energies)
    assert 0.98 <= st_.mean_spacing <= 1.02
    assert np.all(st_.spacings >= 0)


def test_reference_cdfs_integrate_densities():
    s = np.linspace(0, 8, 20001)
    for name, pdf in (
        ("poisson", np.exp(-s)),
        ("semipoisson", 4 * s * np.exp(-2 * s)),
        ("wd", np.pi / 2 * s * np.exp(-np.pi * s * s / 4)),
    ):
        cum = np.concatenate([[0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(s))])
        assert np.allclose(S.REFERENCE_CDFS[name](s), cum, atol=1e-6)


def test_window_validation():
    E = np.arange(500.0)
    with pytest.raises(ValueError):
        S.level_statistics(E, (0, 50))
    with pytest.raises(ValueError):
        S.level_statistics(E, (400, 600))


def test_paper_window_scaling():
    assert S.paper_window(77436) == (15487, 38218)
    lo, hi = S.paper_window(2359)
    assert lo == 471 and hi == 1179 - 15


# zero modes


@pytest.mark.parametrize("L,expected", [(6, 3), (7, 2)])
def test_zero_mode_examples(L, expected):
    rep = S.zero_modes(OBC, L, integer_basis=True)
    assert rep.kernel_dimension == rep.kernel_dimension_exact == rep.formula_prediction == expected
    H, _ = dense_pxp(L, False)
    for v in rep.integer_basis:
        assert not np.any(H.astype(np.int64) @ np.array(v, dtype=np.int64))


def test_stagger_keeps_six_site_count():
    for amp in ("0.3", "1.7", "0.05"):
        rep = S.zero_modes(OBC, 6, stagger=amp, integer_basis=True)
        assert rep.kernel_dimension_exact == rep.kernel_dimension == 3
        b = enumerate_basis(6, OBC)
        M, scale = S.integer_hamiltonian(b, amp)
        for v in rep.integer_basis:
            assert not np.any(M @ np.array(v, dtype=np.int64))


def test_integer_hamiltonian_scaling():
    b = enumerate_basis(6, OBC)
    M, scale = S.integer_hamiltonian(b, "0.3")
    H = assemble("H", b).toarray() + 0.3 * np.diag(stagger_diagonal(b))
    assert scale == 10 and np.allclose(M.toarray(), 10 * H)


@pytest.mark.parametrize("bc", [OBC, PBC])
@pytest.mark.parametrize("L", range(4, 15))
def test_numerical_and_exact_kernels_agree(L, bc):
    rep = S.zero_modes(bc, L)
    assert rep.kernel_dimension == rep.kernel_dimension_exact
    if bc == OBC:
        assert rep.kernel_dimension == S.zero_mode_formula(L, OBC)
    else:
        assert rep.formula_prediction is None


@pytest.mark.parametrize("L", [6, 8, 10])
def test_exact_routes_agree(L):
    b = enumerate_basis(L, OBC)
    a, va, _ = S.exact_kernel(b, method="bareiss")
    m, vm, _ = S.exact_kernel(b, method="modular")
    assert a.dimension == m.dimension and va == vm


def test_formula():
    assert [S.zero_mode_formula(L, OBC) for L in (4, 5, 6, 7, 8)] == [fibonacci(3), fibonacci(2), fibonacci(4), fibonacci(3), fibonacci(5)]
    assert S.zero_mode_formula(8, PBC) is None


def test_sublattice_bounds():
    assert S.sublattice_imbalance_bound(enumerate_basis(6, OBC)) == 1
    for L in (6, 8, 10, 12):
        b = enumerate_basis(L, OBC)
        exact = S.zero_modes(OBC, L).kernel_dimension_exact
        assert S.sublattice_imbalance_bound(b) <= exact
        pb = enumerate_basis(L, PBC)
        per_sector = sum(S.sublattice_imbalance_bound(s) for s in all_sectors(pb))
        assert per_sector <= S.zero_modes(PBC, L).kernel_dimension_exact


def test_inversion_invariant_count_is_fibonacci():
    for k in (2, 3, 4, 5, 6):
        assert len(S.inversion_invariant_states(enumerate_basis(2 * k, OBC))) == fibonacci(k + 1)
    assert len(S.inversion_invariant_states(enumerate_basis(6, OBC))) == 3


def test_report_json():
    rep = S.zero_modes(OBC, 6, integer_basis=True)
    js = rep.to_json()
    assert js["kernelDimension"] == 3 and len(js["integerKernelBasis"]) == 3
    assert rep.consistent
