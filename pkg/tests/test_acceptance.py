"""End-to-end acceptance checks.

Each test records one ``criterion N: PASS|FAIL ...`` line, printed in the
terminal summary, and then asserts. Tolerances are the contractual ones;
nothing here is tuned to make a check pass.
"""

import time

import numpy as np
import pytest

from oracles import dense_pxp
from scarlab import dynamics as dyn
from scarlab import fsa, scars, spectral
from scarlab.basis import OBC, PBC, enumerate_basis, expected_dimension, fibonacci, product_state
from scarlab.symmetry import all_sectors, build_sector


@pytest.fixture
def record(request):
    def _record(n, ok, detail):
        request.config.acceptance_lines.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {n}: {detail}"

    return _record


def _band(L):
    basis = enumerate_basis(L, PBC)
    spectra = [spectral.diagonalize(s) for s in scars.z2_sectors(basis)]
    scatter = scars.overlap_scatter(spectra, scars.z2_reference(L))
    result = fsa.run_fsa(L, basis=basis)
    return scatter, result, scars.detect_band(scatter, result.energies)


@pytest.fixture(scope="module")
def bands():
    cache = {}

    def get(L):
        if L not in cache:
            cache[L] = _band(L)
        return cache[L]

    return get


# ---------------------------------------------------------------------------
# 1. dimensions


def _brute_mask(L, pbc):
    s = np.arange(1 << L, dtype=np.int64)
    bad = s & (s >> 1)
    if pbc and L > 1:
        bad = bad | (s & (s >> (L - 1)) & 1)
    return bad == 0


def test_criterion_1_dimensions(record):
    t0 = time.perf_counter()
    wrong = []
    for L in range(2, 25):
        for bc in (PBC, OBC):
            got = np.sort(enumerate_basis(L, bc).states)
            ref = np.flatnonzero(_brute_mask(L, bc == PBC))
            F = fibonacci(L - 1) + fibonacci(L + 1) if bc == PBC else fibonacci(L + 2)
            if not (np.array_equal(got, ref) and got.size == F == expected_dimension(L, bc)):
                wrong.append((L, bc))
    d6 = enumerate_basis(6, PBC).dimension
    dt = time.perf_counter() - t0
    record(1, not wrong and d6 == 18 and dt < 10, f"mismatches={wrong} L6pbc={d6} runtime={dt:.1f}s (<10s)")


# ---------------------------------------------------------------------------
# 2. sector size at L=32


@pytest.mark.slow
def test_criterion_2_sector_count(record):
    t0 = time.perf_counter()
    D = build_sector(enumerate_basis(32, PBC), 0, +1).dimension
    dt = time.perf_counter() - t0
    record(2, D == 77436 and dt < 120, f"dim={D} (77436) runtime={dt:.1f}s (<120s)")


# ---------------------------------------------------------------------------
# 3. particle-hole reflection of every sector


def test_criterion_3_reflection(record):
    worst = 0.0
    for L in range(3, 17):
        for sec in all_sectors(enumerate_basis(L, PBC)):
            if sec.dimension:
                E = spectral.diagonalize(sec, vectors=False).energies
                worst = max(worst, spectral.reflection_defect(E))
    record(3, worst < 1e-8, f"max |E_i + E_(D-1-i)| = {worst:.2e} over all sectors, L=3..16 (<1e-8)")


# ---------------------------------------------------------------------------
# 4. exact zero modes, OBC


def _annihilates(M, v):
    M = M.tocsr()
    for r in range(M.shape[0]):
        a, b = M.indptr[r], M.indptr[r + 1]
        if sum(int(x) * v[int(c)] for x, c in zip(M.data[a:b], M.indices[a:b])) != 0:
            return False
    return True


@pytest.mark.slow
def test_criterion_4_zero_modes(record):
    bad = []
    for L in range(4, 17):
        basis = enumerate_basis(L, OBC)
        want = spectral.zero_mode_formula(L, OBC)
        staggers = ("0", "0.3") if L % 2 == 0 else ("0",)
        for a in staggers:
            res, vecs, M = spectral.exact_kernel(basis, a)
            exact = res.dimension == want == len(vecs) and all(_annihilates(M, v) for v in vecs)
            if not exact:
                bad.append((L, a, res.dimension, want))
    record(4, not bad, f"failures={bad} (OBC L=4..16, stagger 0.3 for even L, Hv=0 exactly)")


# ---------------------------------------------------------------------------
# 5. forward scattering


@pytest.mark.slow
def test_criterion_5_fsa(record):
    closures = {}
    t32 = None
    res = {}
    for L in range(4, 33, 2):
        t0 = time.perf_counter()
        res[L] = fsa.run_fsa(L)
        if L == 32:
            t32 = time.perf_counter() - t0
        closures[L] = res[L].closure
    mean32 = fsa.mean_error(res[32])
    max32, max24 = res[32].err[1:].max(), res[24].err[1:].max()
    ok = (
        max(closures.values()) < 1e-10
        and abs(mean32 - 0.002) <= 0.001
        and max32 <= max24
        and t32 < 600
    )
    record(
        5,
        ok,
        f"max closure={max(closures.values()):.1e} mean err(32)={100 * mean32:.3f}% (0.2+-0.1%) "
        f"max err 32/24={max32:.4f}/{max24:.4f} runtime(32)={t32:.0f}s",
    )


# ---------------------------------------------------------------------------
# 6. special band


@pytest.mark.slow
def test_criterion_6_band(record, bands):
    parts, ok = [], True
    for L in (20, 24):
        scatter, result, band = bands(L)
        omega_ok = abs(band.omega / 1.33 - 1) <= 0.05
        ok &= band.size == L + 1 and omega_ok
        parts.append(f"L={L}: members={band.size} omega={band.omega:.4f}")
        if L == 24:
            full = np.column_stack([scatter.vector(i) for i in band.members])
            rel = fsa.compare_to_exact(result, band.energies, full).mean_relative_error
            ok &= rel <= 0.03
            parts.append(f"mean |dE/E|={100 * rel:.2f}% (<=3%)")
    record(6, ok, "; ".join(parts))


# ---------------------------------------------------------------------------
# 7. quench dynamics at L=20


@pytest.mark.slow
def test_criterion_7_dynamics(record):
    t0 = time.perf_counter()
    times = dyn.time_grid(30, 0.05)
    run = dyn.evolve("z2", 20, times)
    ana = dyn.oscillation_analysis(run)
    vac = dyn.evolve("zero", 20, times)
    late = times >= 5
    revival = float(vac.fidelity[late].max())
    dt = time.perf_counter() - t0
    p_ok = abs(ana.period_correlator - 2.35) <= 0.10
    match = abs(ana.period_entropy_residual / ana.period_correlator - 1)
    ok = p_ok and match <= 0.05 and revival <= 0.1 and dt < 300
    record(
        7,
        ok,
        f"correlator period={ana.period_correlator:.3f} (2.35+-0.10) residual period="
        f"{ana.period_entropy_residual:.3f} (mismatch {100 * match:.1f}%, <=5%, fit {ana.fit_window}) "
        f"max |0> fidelity t>=5: {revival:.3f} (<=0.1) runtime={dt:.0f}s",
    )


# ---------------------------------------------------------------------------
# 8. entanglement growth ordering at L=24


@pytest.mark.slow
def test_criterion_8_slopes(record):
    L = 24
    times = dyn.time_grid(30, 0.05)
    window = dyn.slope_window(L)
    slopes = {}
    for p, period in (("z2", 2), ("z3", 3), ("z4", 4), ("zero", 1)):
        bc = PBC if L % period == 0 else OBC
        slopes[p] = dyn.entropy_slope(dyn.evolve(p, L, times, boundary=bc), window)
    others = min(v for k, v in slopes.items() if k != "z2")
    detail = " ".join(f"{k}={v:.4f}" for k, v in slopes.items())
    record(8, slopes["z2"] < others, f"slopes over t in {window}: {detail}")


# ---------------------------------------------------------------------------
# 9. level statistics


@pytest.mark.slow
def test_criterion_9_level_statistics(record, monkeypatch):
    # the k=0, I=+1 sector at L=28 has 13201 states; allow it through the
    # configurable dense cap when the default is smaller
    if spectral.dense_cap() < 13201:
        monkeypatch.setenv("SCARLAB_DENSE_CAP", "14000")
    sec = build_sector(enumerate_basis(28, PBC), 0, +1)
    st = spectral.level_statistics(spectral.diagonalize(sec, vectors=False).energies)
    pois = spectral.poisson_control(seed=0)
    goe = spectral.goe_control(seed=0)
    ok = st.ks_poisson > max(st.ks_semipoisson, st.ks_wd) and pois.closest == "poisson" and goe.closest == "wd"
    record(
        9,
        ok,
        f"L=28 D={sec.dimension} window={st.window} KS P/SP/WD={st.ks_poisson:.4f}/"
        f"{st.ks_semipoisson:.4f}/{st.ks_wd:.4f}; controls: poisson->{pois.closest} goe->{goe.closest}",
    )


# ---------------------------------------------------------------------------
# 10. PR2 enhancement trend


@pytest.mark.slow
def test_criterion_10_pr2(record, bands):
    ratios = {}
    for L in (12, 16, 20, 24):
        scatter, _, band = bands(L)
        ratios[L] = scars.pr2_enhancement(scatter, band)[0]
    r = list(ratios.values())
    ok = all(x > 1 for x in r) and all(b >= a for a, b in zip(r, r[1:]))
    record(10, ok, "ratios " + " ".join(f"L={k}:{v:.3f}" for k, v in ratios.items()))


# ---------------------------------------------------------------------------
# 11. symmetry sectors against brute force


def _clusters(E, gap=1e-6):
    return np.concatenate([[0], np.cumsum(np.diff(E) > gap)])


def _half_chain_entropy(psi_full, L):
    M = psi_full.reshape(1 << (L - L // 2), 1 << (L // 2))  # rows: high bits, cols: low L//2 bits
    p = np.linalg.svd(M, compute_uv=False) ** 2
    p = p[p > 1e-300]
    return float(-(p * np.log(p)).sum())


def _brute_route(L, pattern, times):
    H, states = dense_pxp(L, True)
    E, V = np.linalg.eigh(H)
    pos = {s: n for n, s in enumerate(states)}
    ref = pos[product_state(pattern, L, PBC)]
    z = np.array([[2 * ((s >> i) & 1) - 1 for i in range(L)] for s in states])
    corr = (z * np.roll(z, -1, axis=1)).mean(axis=1)
    c = V[ref]
    obs = []
    for t in times:
        psi = V @ (np.exp(-1j * E * t) * c)
        full = np.zeros(1 << L, dtype=complex)
        full[states] = psi
        obs.append((abs(psi[ref]) ** 2, float(np.abs(psi) ** 2 @ corr), _half_chain_entropy(full, L)))
    return E, V, states, c**2, np.array(obs)


def test_criterion_11_oracle_equivalence(record):
    worst = {"spectrum": 0.0, "overlaps": 0.0, "pr2": 0.0, "zero modes": 0, "dynamics": 0.0}
    times = np.linspace(0, 10, 21)
    for L in (6, 8, 9, 10, 12):
        basis = enumerate_basis(L, PBC)
        spectra = [spectral.diagonalize(s) for s in all_sectors(basis) if s.dimension]
        Es = np.sort(np.concatenate([s.energies for s in spectra]))
        for pattern in ("z2", "zero") if L % 2 == 0 else ("zero",):
            E, V, states, ov, obs = _brute_route(L, pattern, times)
            worst["spectrum"] = max(worst["spectrum"], np.abs(Es - E).max())
            sc = scars.overlap_scatter(spectra, product_state(pattern, L, PBC))
            lab = _clusters(E)
            w_b = np.bincount(lab, ov)
            w_s = np.bincount(lab, sc.overlaps)
            worst["overlaps"] = max(worst["overlaps"], np.abs(w_b - w_s).max())
            # PR2 of nondegenerate eigenstates, sector vectors embedded in the full basis
            single = np.flatnonzero(np.bincount(lab)[lab] == 1)
            order = np.argsort(basis.states)
            for i in single:
                pr_b = float(np.sum(V[:, i] ** 4))
                pr_s = float(np.sum(np.abs(sc.vector(i)[order]) ** 4))
                worst["pr2"] = max(worst["pr2"], abs(pr_b - pr_s))
            run = dyn.evolve(pattern, L, times, method="spectral", spectra=spectra)
            got = np.column_stack([run.fidelity, run.correlator, run.entropy])
            worst["dynamics"] = max(worst["dynamics"], np.abs(got - obs).max())
        n_brute = int(np.sum(np.abs(np.linalg.eigvalsh(dense_pxp(L, True)[0])) < 1e-8))
        n_sector = sum(int(s.zero_mode_mask().sum()) for s in spectra)
        n_exact = spectral.exact_kernel(basis)[0].dimension
        worst["zero modes"] = max(worst["zero modes"], abs(n_brute - n_sector), abs(n_brute - n_exact))
    ok = worst["zero modes"] == 0 and all(v <= 1e-8 for k, v in worst.items() if k != "zero modes")
    record(11, ok, "max deviations " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))
