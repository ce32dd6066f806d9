"""Command-line entry point: ``scarlab <subcommand> [options]``.

Every run writes its results plus ``config.json`` (the resolved options)
and ``manifest.json`` (versions and a timestamp) into ``--out``.
"""

import argparse
import os
import platform
import sys
import time

import numpy as np

from . import __version__, kernels
from . import dynamics as dyn
from . import fsa as fsa_mod
from . import scars
from . import spectral
from .basis import OBC, PATTERNS, PBC, build_graph, enumerate_basis, product_state, write_basis
from .errors import AccuracyError, CapacityError, ConsistencyError
from .io import write_csv, write_json
from .symmetry import build_sector

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CAPACITY = 3
EXIT_CONSISTENCY = 4

FIGURES = ("fig2", "fig3a", "fig3bc", "fig3d", "fig4")
FIG_LIMITS = {"fig2": 24, "fig3a": 24, "fig3bc": 32, "fig3d": 24, "fig4": 28}
GREEDY_SPACING = 0.7  # greedy cross-check: minimum spacing in units of the mean FSA spacing


def _parity(text):
    value = int(text)
    if value not in (1, -1):
        raise argparse.ArgumentTypeError("inversion must be +1 or -1")
    return value


def _common(p):
    p.add_argument("--length", "-L", type=int, required=True)
    p.add_argument("--bc", choices=(PBC, OBC), default=PBC)
    p.add_argument("--out", default=".")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _sector_args(p):
    p.add_argument("--momentum", type=int, default=None, help="momentum index k (2 pi k / L); omit for the full basis")
    p.add_argument("--inversion", type=_parity, default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="scarlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"scarlab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("basis", help="enumerate the constrained basis")
    _common(p)

    p = sub.add_parser("graph", help="Hilbert-space graph (edges, dot, layer sizes)")
    _common(p)

    p = sub.add_parser("spectrum", help="dense spectrum of a sector or the full basis")
    _common(p)
    _sector_args(p)

    p = sub.add_parser("levelstats", help="unfolded level-spacing statistics")
    _common(p)
    _sector_args(p)
    p.add_argument("--window", type=int, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--degree", type=int, default=spectral.UNFOLD_DEGREE)
    p.add_argument("--seed", type=int, default=None, help="also run seeded Poisson and GOE controls")

    p = sub.add_parser("scars", help="overlap scatter and special band")
    _common(p)
    p.add_argument("--reference", choices=PATTERNS, default="z2")
    p.add_argument("--fraction", type=float, default=scars.WINDOW_FRACTION)

    p = sub.add_parser("fsa", help="forward scattering approximation")
    _common(p)
    p.add_argument("--compare", action="store_true", help="match to the exact band and write Hamming profiles")

    p = sub.add_parser("dynamics", help="quench from a product state")
    _common(p)
    p.add_argument("--initial", choices=PATTERNS, default="z2")
    p.add_argument("--method", choices=("krylov", "spectral"), default="krylov")
    p.add_argument("--tmax", type=float, default=30.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--fit-window", type=float, nargs=2, default=None, metavar=("T0", "T1"))

    p = sub.add_parser("zeromodes", help="count E=0 states, optionally in exact arithmetic")
    _common(p)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--integer-basis", action="store_true")
    p.add_argument("--stagger", type=str, default="0", help="staggered field amplitude (decimal)")

    p = sub.add_parser("reproduce", help="data bundle for one figure")
    p.add_argument("figure", choices=FIGURES)
    p.add_argument("--length", "-L", type=int, required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--tmax", type=float, default=30.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--sizes", type=int, nargs="+", default=None, help="fig3d: system sizes to sweep")
    return ap


def _space(args):
    basis = enumerate_basis(args.length, args.bc)
    k = getattr(args, "momentum", None)
    inv = getattr(args, "inversion", None)
    if k is None and inv is None:
        return basis
    return build_sector(basis, 0 if k is None else k, inv)


def _write_spectrum(path, fmt, spec):
    if fmt == "json":
        write_json(path + ".json", {**spec.label, "energies": spec.energies})
    else:
        write_csv(path + ".csv", ["index", "energy"], enumerate(spec.energies))


# ---------------------------------------------------------------------------
# subcommands


def cmd_basis(args):
    basis = enumerate_basis(args.length, args.bc)
    if args.format == "json":
        from .basis import to_string

        write_json(
            os.path.join(args.out, "basis.json"),
            {"L": basis.length, "boundary": basis.boundary, "dimension": basis.dimension,
             "states": [to_string(s, basis.length) for s in basis.states]},
        )
    else:
        write_basis(basis, os.path.join(args.out, "basis.txt"))
    return {"dimension": basis.dimension}


def cmd_graph(args):
    g = build_graph(enumerate_basis(args.length, args.bc))
    g.write_edges(os.path.join(args.out, "edges.txt"))
    g.write_dot(os.path.join(args.out, "graph.dot"))
    summary = {
        "L": args.length,
        "boundary": args.bc,
        "nodes": g.basis.dimension,
        "edges": int(g.edges.shape[0]),
        "layer_sizes": {str(n): int(v.size) for n, v in g.layers.items()},
    }
    write_json(os.path.join(args.out, "graph.json"), summary)
    return summary


def cmd_spectrum(args):
    spec = spectral.diagonalize(_space(args))
    _write_spectrum(os.path.join(args.out, "spectrum"), args.format, spec)
    res, hnorm = spectral.residuals(spec)
    summary = {
        **spec.label,
        "dimension": spec.dimension,
        "max_residual_over_norm": float(res.max() / hnorm) if spec.dimension else 0.0,
        "reflection_defect": spectral.reflection_defect(spec.energies),
        "zero_modes": int(spec.zero_mode_mask().sum()),
        "dos_zero_spike": spectral.dos_zero_spike(spec.energies) if spec.dimension > 10 else None,
    }
    write_json(os.path.join(args.out, "spectrum_summary.json"), summary)
    return summary


def _levelstats(space, window=None, degree=spectral.UNFOLD_DEGREE, seed=None):
    spec = spectral.diagonalize(space, vectors=False)
    st = spectral.level_statistics(spec.energies, window, degree)
    out = st.to_json(spec.label)
    if seed is not None:
        out["controls"] = {
            "seed": seed,
            "poisson": spectral.poisson_control(seed=seed).to_json(),
            "goe": spectral.goe_control(seed=seed).to_json(),
        }
    return spec, st, out


def cmd_levelstats(args):
    space = _space(args)
    if args.momentum is None and args.inversion is None and args.bc == PBC:
        space = build_sector(space, 0, +1)
    _, st, out = _levelstats(space, args.window, args.degree, args.seed)
    write_json(os.path.join(args.out, "levelstats.json"), out)
    centres, dens = _spacing_hist(st)
    write_csv(os.path.join(args.out, "spacings_hist.csv"), ["s", "density"], zip(centres, dens))
    return out


def _spacing_hist(st):
    dens, edges = st.histogram()
    return 0.5 * (edges[1:] + edges[:-1]), dens


def _band_analysis(L, reference="z2", fraction=scars.WINDOW_FRACTION):
    basis = enumerate_basis(L, PBC)
    if reference in ("z2", "z2p"):
        spaces = scars.z2_sectors(basis)
    else:
        spaces = [build_sector(basis, 0, +1)]
    spectra = [spectral.diagonalize(s) for s in spaces]
    scatter = scars.overlap_scatter(spectra, product_state(reference, L, PBC))
    result = fsa_mod.run_fsa(L, basis=basis)
    band = None
    if reference in ("z2", "z2p"):
        band = scars.detect_band(scatter, result.energies, fraction)
    return basis, scatter, result, band


def cmd_scars(args):
    if args.bc != PBC:
        raise ValueError("band analysis uses periodic boundaries")
    _, scatter, result, band = _band_analysis(args.length, args.reference, args.fraction)
    scars.write_scatter(scatter, band, os.path.join(args.out, "scatter.csv"))
    out = {"L": args.length, "reference": args.reference, "total_weight": scatter.total_weight,
           "sector_dimensions": scatter.dimensions()}
    if band is not None:
        out.update(band.to_json(args.length))
        greedy = scars.greedy_band(scatter, band.size, GREEDY_SPACING * np.diff(result.energies).mean())
        out["greedy_agrees"] = bool(np.array_equal(greedy.members, band.members))
        ratio, band_mean, all_mean = scars.pr2_enhancement(scatter, band)
        out.update(pr2_ratio=ratio, pr2_band=band_mean, pr2_mid=all_mean)
    write_json(os.path.join(args.out, "band.json"), out)
    return out


def _profiles(result, scatter, band, outdir):
    full = np.column_stack([scatter.vector(i) for i in band.members])
    cmp = fsa_mod.compare_to_exact(result, band.energies, full)
    rel = cmp.relative_errors
    ground = 0
    nonzero = np.flatnonzero(np.abs(cmp.exact_energies) > 1e-9)
    middle = int(nonzero[np.argmin(np.abs(cmp.exact_energies[nonzero]))])
    for name, i in (("ground", ground), ("middle", middle)):
        write_csv(os.path.join(outdir, f"profile_{name}.csv"), ["n", "exact_prob", "fsa_prob"], cmp.rows(i))
    for i in range(len(cmp.exact_energies)):
        write_csv(os.path.join(outdir, f"profile_{i:02d}.csv"), ["n", "exact_prob", "fsa_prob"], cmp.rows(i))
    return {
        "exact_energies": cmp.exact_energies,
        "fsa_energies": cmp.fsa_energies,
        "relative_errors": rel,
        "mean_relative_error": cmp.mean_relative_error,
    }


def cmd_fsa(args):
    if args.bc != PBC:
        raise ValueError("the forward recursion is run with periodic boundaries")
    if args.compare:
        _, scatter, result, band = _band_analysis(args.length)
    else:
        result = fsa_mod.run_fsa(args.length, args.bc)
    report = result.report()
    if args.compare:
        report["comparison"] = _profiles(result, scatter, band, args.out)
    write_json(os.path.join(args.out, "fsa.json"), report)
    return {"L": args.length, "mean_err": report["mean_err"], "closure": report["closure"]}


def _quench(L, pattern, bc, tmax, dt, method="krylov", fit_window=None):
    times = dyn.time_grid(tmax, dt)
    run = dyn.evolve(pattern, L, times, method, boundary=bc)
    ana = dyn.oscillation_analysis(run, fit_window)
    return run, ana


def cmd_dynamics(args):
    run, ana = _quench(args.length, args.initial, args.bc, args.tmax, args.dt, args.method, args.fit_window)
    run.write_csv(os.path.join(args.out, "timeseries.csv"))
    out = {**ana.to_json(), "L": args.length, "initial": args.initial, "method": args.method,
           "energy_drift": dyn.energy_drift(run), "entropy_log_base": "e", "horizon": run.horizon}
    write_json(os.path.join(args.out, "analysis.json"), out)
    return out


def cmd_zeromodes(args):
    rep = spectral.zero_modes(args.bc, args.length, exact=args.exact, integer_basis=args.integer_basis,
                              stagger=args.stagger)
    out = rep.to_json()
    write_json(os.path.join(args.out, "zeromodes.json"), out)
    if rep.kernel_dimension_exact is not None and rep.kernel_dimension != rep.kernel_dimension_exact:
        raise ConsistencyError(
            f"numerical kernel {rep.kernel_dimension} differs from exact kernel {rep.kernel_dimension_exact}"
        )
    return {k: v for k, v in out.items() if k != "integerKernelBasis"}


# ---------------------------------------------------------------------------
# figure bundles


# fig2: the slope comparison needs each state compatible with the boundary
FIG2_PATTERNS = ("z2", "z3", "z4", "zero")


def _fig2(args):
    L = args.length
    window = dyn.slope_window(L)
    out = {}
    for pattern in FIG2_PATTERNS:
        period = {"z2": 2, "z3": 3, "z4": 4}.get(pattern, 1)
        bc = PBC if L % period == 0 else OBC
        run, ana = _quench(L, pattern, bc, args.tmax, args.dt)
        run.write_csv(os.path.join(args.out, f"timeseries_{pattern}.csv"))
        out[pattern] = {**ana.to_json(), "boundary": bc, "slope_early": dyn.entropy_slope(run, window)}
    write_json(os.path.join(args.out, "analysis.json"), {"L": L, "quenches": out, "slope_window": list(window)})
    return {p: v["slope_early"] for p, v in out.items()}


def _fig3a(args):
    L = args.length
    _, scatter, result, band = _band_analysis(L)
    scars.write_scatter(scatter, band, os.path.join(args.out, "scatter.csv"))
    data = band.to_json(L)
    data["sector_dimensions"] = scatter.dimensions()
    data["fsa_energies"] = result.energies
    data["fsa_overlaps_z2"] = result.overlaps_z2
    write_json(os.path.join(args.out, "band.json"), data)
    return {"members": band.size, "omega": band.omega}


def _fig3bc(args):
    L = args.length
    basis = enumerate_basis(L, PBC)
    dims = [s.dimension for s in scars.z2_sectors(basis)] if L <= 28 else None
    if dims is None or max(dims) > spectral.dense_cap():
        result = fsa_mod.run_fsa(L, basis=basis)
        write_json(os.path.join(args.out, "fsa.json"), result.report())
        return {"mode": "fsa-only", "mean_err": fsa_mod.mean_error(result)}
    _, scatter, result, band = _band_analysis(L)
    report = result.report()
    report["comparison"] = _profiles(result, scatter, band, args.out)
    write_json(os.path.join(args.out, "fsa.json"), report)
    return {"mode": "compare", "mean_relative_error": report["comparison"]["mean_relative_error"]}


def _fig3d(args):
    sizes = args.sizes or [n for n in (12, 16, 20, 24) if n <= args.length]
    rows = []
    for L in sizes:
        _, scatter, _, band = _band_analysis(L)
        ratio, band_mean, all_mean = scars.pr2_enhancement(scatter, band)
        dims = scatter.dimensions()
        rows.append((L, band_mean, all_mean, ratio, dims[0], sum(dims)))
    write_csv(os.path.join(args.out, "pr2.csv"),
              ["L", "pr2_band", "pr2_mid", "ratio", "dim_k0_even", "dim_z2_sectors"], rows)
    return {"sizes": sizes, "ratios": [r[3] for r in rows]}


def _fig4(args):
    L = args.length
    sector = build_sector(enumerate_basis(L, PBC), 0, +1)
    spec, st, out = _levelstats(sector)
    write_json(os.path.join(args.out, "levelstats.json"), out)
    centres, dens = _spacing_hist(st)
    write_csv(os.path.join(args.out, "spacings_hist.csv"), ["s", "density"], zip(centres, dens))
    c, d = spectral.density_of_states(spec.energies, bins=101)
    write_csv(os.path.join(args.out, "dos.csv"), ["energy", "density"], zip(c, d))
    return {"ks_poisson": st.ks_poisson, "ks_semipoisson": st.ks_semipoisson, "ks_wd": st.ks_wd}


def cmd_reproduce(args):
    limit = FIG_LIMITS[args.figure]
    if args.length > limit:
        raise ValueError(f"{args.figure} supports L <= {limit}, got {args.length}")
    return {"fig2": _fig2, "fig3a": _fig3a, "fig3bc": _fig3bc, "fig3d": _fig3d, "fig4": _fig4}[args.figure](args)


COMMANDS = {
    "basis": cmd_basis,
    "graph": cmd_graph,
    "spectrum": cmd_spectrum,
    "levelstats": cmd_levelstats,
    "scars": cmd_scars,
    "fsa": cmd_fsa,
    "dynamics": cmd_dynamics,
    "zeromodes": cmd_zeromodes,
    "reproduce": cmd_reproduce,
}


def _config(args):
    """Resolved options; the output directory lives in the manifest only."""
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "out"}
    cfg["dense_cap"] = spectral.dense_cap()
    return cfg


def _manifest(args):
    import scipy

    return {
        "scarlab": __version__,
        "backend": kernels.BACKEND,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "out": os.path.abspath(args.out),
        "config": _config(args),
    }


def run(argv=None):
    """Parse ``argv``, run the subcommand and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        os.makedirs(args.out, exist_ok=True)
        write_json(os.path.join(args.out, "config.json"), _config(args))
        summary = COMMANDS[args.command](args)
        write_json(os.path.join(args.out, "manifest.json"), _manifest(args))
    except (ValueError, KeyError) as exc:
        print(f"scarlab: invalid argument: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CapacityError as exc:
        print(f"scarlab: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ConsistencyError, AccuracyError) as exc:
        print(f"scarlab: consistency check failed: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    from .io import dumps

    print(dumps(summary))
    return EXIT_OK


def main():
    sys.exit(run())
