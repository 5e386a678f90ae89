"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--refinements 12] [--rows 1000000] [--repeat 3]

Times uniform newest-vertex bisection (marking closure plus element
splitting) and the per-element clamp-gap supremum, checks that both backends
return identical results and prints the speed-up.
"""
import argparse
import time

import numpy as np

from linfocp import _backend, mesh as meshmod


def _best_of(repeat, fn):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_refinement(kernels, refinements, repeat):
    def run():
        saved = meshmod.kernels
        meshmod.kernels = kernels
        try:
            m = meshmod.initial_lshape_mesh()
            for _ in range(refinements):
                m = meshmod.refine(m, np.arange(m.num_elements))
            return m
        finally:
            meshmod.kernels = saved
    return _best_of(repeat, run)


def bench_clamp_gap(kernels, rows, repeat, seed=0):
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1.0, 2.0, (rows, 3))
    u = np.clip(w, 0.0, 1.0) + rng.normal(0.0, 0.1, (rows, 3))
    return _best_of(repeat, lambda: np.asarray(kernels.clamp_gap_sup(w, u, 0.0, 1.0)))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--refinements", type=int, default=12)
    p.add_argument("--rows", type=int, default=1_000_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    names = _backend.available_backends()
    results = {}
    for name in names:
        k = _backend.load_backend(name)
        results[name] = (bench_refinement(k, args.refinements, args.repeat),
                         bench_clamp_gap(k, args.rows, args.repeat))

    print(f"{'kernel':<28}" + "".join(f"{n:>12}" for n in names))
    (t_ref, mesh), _ = results[names[0]]
    print(f"{f'refine x{args.refinements} ({mesh.num_elements} el)':<28}"
          + "".join(f"{results[n][0][0]:>11.3f}s" for n in names))
    print(f"{f'clamp gap ({args.rows} rows)':<28}"
          + "".join(f"{results[n][1][0]:>11.3f}s" for n in names))
    if len(names) == 2:
        (rc, mc), (gc, vc) = results["compiled"]
        (rp, mp), (gp, vp) = results["python"]
        assert np.array_equal(mc.elements, mp.elements), "refinement differs"
        assert np.array_equal(vc, vp), "clamp gap differs"
        print(f"speed-up: refine {rp / rc:.1f}x, clamp gap {gp / gc:.1f}x "
              "(results identical)")
    else:
        print("compiled backend not available; only the Python fallback was timed")


if __name__ == "__main__":
    main()
