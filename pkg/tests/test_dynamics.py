import numpy as np
import pytest
import scipy.sparse.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from scarlab import dynamics as dyn
from scarlab.basis import OBC, PBC, enumerate_basis, product_state
from scarlab.errors import AccuracyError
from scarlab.hamiltonian import assemble
from scarlab.spectral import diagonalize
from scarlab.symmetry import all_sectors


def test_initial_values_for_z2():
    run = dyn.evolve("z2", 10, np.array([0.0]))
    assert run.fidelity[0] == 1.0
    assert run.correlator[0] == -1.0
    assert run.entropy[0] == 0.0


@given(st.integers(4, 12), st.sampled_from([PBC, OBC]), st.data())
def test_product_states_have_zero_entropy(L, bc, data):
    b = enumerate_basis(L, bc)
    s = data.draw(st.sampled_from(b.states.tolist()))
    cut = data.draw(st.integers(1, L - 1))
    assert dyn.entanglement_entropy(b, b.unit(s), cut) == 0.0


@given(st.sampled_from([4, 6, 8, 10, 12]), st.data())
def test_cat_state_entropy_is_log2(L, data):
    b = enumerate_basis(L)
    v = (b.unit(product_state("z2", L)) + b.unit(product_state("z2p", L))) / np.sqrt(2)
    cut = data.draw(st.integers(1, L - 1))
    assert np.isclose(dyn.entanglement_entropy(b, v, cut), np.log(2), atol=1e-12)


def test_entropy_rejects_unnormalised():
    b = enumerate_basis(6)
    with pytest.raises(ValueError):
        dyn.entanglement_entropy(b, 2 * b.unit(0))
    with pytest.raises(ValueError):
        dyn.Bipartition.of(b, 0)


def test_schmidt_oracle_random_state():
    # embed into the 2**L space and trace out with numpy reshapes
    L, cut = 8, 3
    b = enumerate_basis(L, OBC)
    rng = np.random.default_rng(4)
    v = rng.standard_normal(b.dimension) + 1j * rng.standard_normal(b.dimension)
    v /= np.linalg.norm(v)
    full = np.zeros(1 << L, dtype=complex)
    full[b.states] = v
    M = full.reshape(1 << (L - cut), 1 << cut)  # rows: high bits, cols: low bits
    p = np.linalg.svd(M, compute_uv=False) ** 2
    p = p[p > 1e-15]
    assert np.isclose(dyn.entanglement_entropy(b, v, cut), -np.sum(p * np.log(p)))


@pytest.mark.parametrize("L", [8, 10, 12, 14])
@pytest.mark.parametrize("pattern", ["z2", "zero"])
def test_krylov_agrees_with_spectral(L, pattern):
    t = dyn.time_grid(6, 0.1)
    a = dyn.evolve(pattern, L, t, "krylov")
    b = dyn.evolve(pattern, L, t, "spectral")
    for name in ("fidelity", "correlator", "entropy"):
        assert np.max(np.abs(getattr(a, name) - getattr(b, name))) < 1e-8


def test_krylov_agrees_with_expm_multiply():
    L = 14
    b = enumerate_basis(L)
    H = assemble("H", b).matrix.astype(complex)
    v = b.unit(product_state("z2", L), complex)
    w = dyn.propagate_krylov(H, v, 1.7)
    ref = sla.expm_multiply(-1j * 1.7 * H, v)
    assert np.linalg.norm(w - ref) < 1e-9


def test_unitarity_and_energy_conservation():
    t = dyn.time_grid(10, 0.1)
    run = dyn.evolve("z3", 12, t)
    assert np.max(np.abs(run.norm - 1)) < 1e-10
    assert dyn.energy_drift(run) < 1e-8
    assert np.all((run.fidelity >= 0) & (run.fidelity <= 1 + 1e-12))
    assert np.all(np.abs(run.correlator) <= 1 + 1e-12)
    assert np.all(run.entropy >= 0)


def test_spectral_via_sectors_matches_full_basis():
    L = 10
    t = dyn.time_grid(5, 0.25)
    secs = [diagonalize(s) for s in all_sectors(enumerate_basis(L)) if s.dimension]
    a = dyn.evolve("z2", L, t, "spectral", spectra=secs)
    b = dyn.evolve("z2", L, t, "krylov")
    assert np.max(np.abs(a.entropy - b.entropy)) < 1e-8


def test_spectral_needs_covering_spectra():
    secs = [diagonalize(s) for s in all_sectors(enumerate_basis(8))[:1]]
    with pytest.raises(ValueError):
        dyn.evolve("z2", 8, np.array([0.0, 1.0]), "spectral", spectra=secs)


def test_entropy_mirror_symmetry():
    L = 12
    t = dyn.time_grid(4, 0.5)
    for c in (3, 5):
        a = dyn.evolve("zero", L, t, cut=c)
        b = dyn.evolve("zero", L, t, cut=L - c)
        assert np.max(np.abs(a.entropy - b.entropy)) < 1e-8


def test_entropy_below_schmidt_bound():
    L = 14
    b = enumerate_basis(L)
    run = dyn.evolve("z2", L, dyn.time_grid(8, 0.2))
    part = dyn.Bipartition.of(b, L // 2)
    assert run.entropy.max() <= np.log(min(part.shape)) + 1e-12


def test_krylov_failure_is_reported():
    b = enumerate_basis(10)
    H = assemble("H", b).matrix.astype(complex)
    with pytest.raises(AccuracyError):
        dyn.propagate_krylov(H, b.unit(0, complex), 1.0, m=2, tol=1e-300)


def test_unknown_method():
    with pytest.raises(ValueError):
        dyn.evolve("z2", 6, np.array([0.0]), "rk4")


# oscillation analysis


def test_dominant_period_of_synthetic_signal():
    t = np.linspace(0, 30, 601)
    x = 0.3 * t + 0.1 * np.sin(2 * np.pi * t / 2.35)
    assert abs(dyn.dominant_period(t, x) - 2.35) < 0.01


def test_constant_entropy_gives_zero_slope():
    t = dyn.time_grid(20, 0.1)
    run = dyn.QuenchRun(0, 6, PBC, t, np.ones_like(t), np.cos(2 * np.pi * t / 2.0), np.full_like(t, 0.7),
                        np.zeros_like(t), np.ones_like(t))
    ana = dyn.oscillation_analysis(run)
    assert abs(ana.slope) < 1e-12
    assert np.isnan(ana.period_entropy_residual)
    assert abs(ana.period_correlator - 2.0) < 0.02


def test_fit_window_too_short():
    t = dyn.time_grid(20, 0.1)
    run = dyn.QuenchRun(0, 6, PBC, t, np.ones_like(t), np.cos(2 * np.pi * t / 2.0), 0.1 * t,
                        np.zeros_like(t), np.ones_like(t))
    with pytest.raises(ValueError):
        dyn.oscillation_analysis(run, (0.0, 4.0))


def test_growth_window():
    t = dyn.time_grid(30, 0.1)
    assert dyn.growth_window(20, t) == (0.0, 10.0)
    # stretched to three periods for short chains, clipped to the run
    lo, hi = dyn.growth_window(6, t, period=2.0)
    assert lo == 0.0 and abs(hi - 6.3) < 1e-12
    assert dyn.growth_window(80, t) == (0.0, 30.0)


def test_time_grid_validation():
    assert dyn.time_grid(1.0, 0.25).tolist() == [0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ValueError):
        dyn.time_grid(1.0, 0.3)


def test_timeseries_csv(tmp_path):
    run = dyn.evolve("z2", 8, dyn.time_grid(1, 0.5))
    run.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,fidelity,correlator,entropy" and len(lines) == 4
