"""Compare the compiled kernels with the numpy fallback.

Run ``python benchmarks/bench_kernels.py`` from the repository root.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mrcstat import _backend, _fallback, gqf, montecarlo, scenario_io

try:
    from mrcstat import _kernels
except ImportError:  # extension not built
    _kernels = None


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_recursion(module, order, points, repeat):
    d = gqf.GqfDecomposition(np.linspace(2.0, 0.5, 32), np.full(32, 0.2))
    s = (1.0 - order) / np.geomspace(5, 80, points)
    return _best(lambda: module.aux_tail_batch(d.weights, d.noncentralities, s, order, 1), repeat)


def bench_plane_waves(module, trials, waves, repeat):
    s = scenario_io.load_bundled("verify_ula32_vm_aligned").scenario
    cfg = montecarlo.SimConfig(trials=trials, waves=waves, seed=1, threads=1)
    saved = _backend.kernels
    _backend.kernels = module
    try:
        return _best(lambda: montecarlo.run(s, cfg), repeat)
    finally:
        _backend.kernels = saved


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--order", type=int, default=1024)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--waves", type=int, default=800)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; only the fallback can run")
        return 1
    rows = [
        (f"aux_tail_batch m={args.order} x{args.points}",
         bench_recursion(_kernels, args.order, args.points, args.repeat),
         bench_recursion(_fallback, args.order, args.points, args.repeat)),
        (f"plane waves T={args.trials} Z={args.waves} M=32",
         bench_plane_waves(_kernels, args.trials, args.waves, args.repeat),
         bench_plane_waves(_fallback, args.trials, args.waves, args.repeat)),
    ]
    print(f"{'kernel':<40} {'compiled s':>11} {'python s':>10} {'speedup':>8}")
    for name, fast, slow in rows:
        print(f"{name:<40} {fast:>11.4f} {slow:>10.4f} {slow / fast:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
