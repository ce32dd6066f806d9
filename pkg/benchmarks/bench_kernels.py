"""Compare the compiled and numpy kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from scarlab import kernels
from scarlab.basis import MAX_LENGTH, OBC, enumerate_basis, fibonacci_table, popcount
from scarlab.exactla import PRIMES
from scarlab.hamiltonian import assemble


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    fib = fibonacci_table(MAX_LENGTH + 2)
    for L in (20, 26):
        b = enumerate_basis(L)
        v = np.random.default_rng(0).standard_normal(b.dimension)

        def matvec(mod, b=b, v=v, L=L):
            mod.flip_matvec(b.states, b.ranks, b.lookup, fib, L, True, kernels.MODE_H, v, np.zeros_like(v))

        yield f"flip_matvec H  L={L} (D={b.dimension})", matvec

    b = enumerate_basis(24)

    def orbits(mod, s=b.states):
        mod.orbit_canonical(s, 24, True)

    yield f"orbit_canonical L=24 (D={b.dimension})", orbits

    ob = enumerate_basis(12, OBC)
    perm = np.argsort(popcount(ob.states), kind="stable")
    A = assemble("H", ob).matrix.toarray().astype(np.int64)[perm][:, perm]
    p = PRIMES[0]

    def factor(mod, A=A):
        mod.mod_factor(np.ascontiguousarray(A % p), p)

    yield f"mod_factor OBC L=12 ({A.shape[0]}x{A.shape[1]})", factor


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    found = kernels.backends()
    names = list(found)
    print(f"{'kernel':44s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, fn in cases():
        t = [best_of(lambda m=mod: fn(m), args.repeat) for mod in found.values()]
        row = f"{label:44s}" + "".join(f"{x * 1e3:10.2f}ms" for x in t)
        if len(t) > 1:
            row += f"{t[0] / t[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
