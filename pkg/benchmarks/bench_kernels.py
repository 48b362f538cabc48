"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both implementations are imported directly, so the STORMKL_NUMBA flag does
not matter here. The first numba call (compilation or cache load) is
excluded from the timings.
"""

import argparse
import time

import numpy as np

from stormkl import kernels


def _time(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(rng):
    mask = rng.random((400, 600)) < 0.45
    yield "label4 400x600", (kernels.label4_numba, kernels.label4_numpy), (mask,)

    data = rng.gamma(2.0, 1.0, 5000)
    x = np.linspace(0, data.max(), 512)
    yield "kde 5000 samples x 512", (kernels.kde_sum_numba, kernels.kde_sum_numpy), (data, x, 0.2, True)

    n, per_sat, n_sat = 20000, 3000, 2
    c_time = np.sort(rng.uniform(0, per_sat * 1800.0, n))
    s_time = np.tile(np.arange(per_sat) * 1800.0, n_sat)
    args = (c_time, rng.uniform(28, 42, n), rng.uniform(-125, -95, n),
            np.arange(n_sat + 1, dtype=np.int64) * per_sat, s_time,
            rng.uniform(-80, 80, n_sat * per_sat), rng.uniform(-180, 180, n_sat * per_sat), 900.0, 725.0)
    yield "match 20000 clusters x 2 sats", (kernels.match_samples_numba, kernels.match_samples_numpy), args

    lat_c, lon_c = np.arange(28.25, 42, 0.5), np.arange(-124.75, -95, 0.5)
    bg = np.full((lat_c.size, lon_c.size), 260.0)
    m = 2000
    lw = np.full((200,) + bg.shape, 260.0)
    pr = np.zeros_like(lw)
    args = (lw, pr, bg, lat_c, lon_c, rng.integers(0, 200, m), rng.uniform(28, 42, m),
            rng.uniform(-125, -95, m), rng.uniform(40, 150, m), np.full(m, 2e-3), 90.0, 0.05, 4.0)
    yield "paint 2000 storms", (kernels.paint_storms_numba, kernels.paint_storms_numpy), args


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<32}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, (fast, slow), fargs in cases(rng):
        a = _time(lambda: fast(*fargs), args.repeat)
        b = _time(lambda: slow(*fargs), args.repeat)
        print(f"{name:<32}{1e3 * a:>12.2f}{1e3 * b:>12.2f}{b / a:>9.1f}x")


if __name__ == "__main__":
    main()
