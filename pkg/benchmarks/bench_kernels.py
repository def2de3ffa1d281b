"""Time the numba kernels against the numpy fallback.

Run: python3 benchmarks/bench_kernels.py --size 257 --repeats 200
"""
import argparse
import time

import numpy as np

from critgrad.kernels import get_backend


def _time(fn, args, repeats):
    fn(*args)  # warm up (triggers compilation on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats * 1e3


def cases(size, rng):
    u1 = rng.random(size * 4)
    u2 = rng.random((size, size))
    hs1, hs2 = (1.0 / (size * 4 - 1),), (1.0 / (size - 1),) * 2
    lam2 = rng.random((size, size))
    mu2 = np.ones((size, size))
    h2 = rng.random((size, size))
    cells = rng.random((64, 64)) < 0.3
    return [
        ("neg_laplacian 1d", "neg_laplacian", (u1, hs1)),
        ("neg_laplacian 2d", "neg_laplacian", (u2, hs2)),
        ("grad_sq 2d", "grad_sq", (u2, hs2)),
        ("residual_direct 2d", "residual_direct", (u2, lam2, mu2, h2, hs2)),
        ("residual_colehopf 2d", "residual_colehopf", (u2, lam2, mu2, h2, 1.0, hs2)),
        ("p_laplacian p=3 2d", "p_laplacian_residual", (u2, 3.0, lam2, h2, hs2)),
        ("dyadic_block_sums", "dyadic_block_sums", (cells, 3)),
    ]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=257)
    ap.add_argument("--repeats", type=int, default=100)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    np_backend, nb_backend = get_backend("numpy"), get_backend("numba")
    print(f"{'kernel':24s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}  max|diff|")
    for label, name, call_args in cases(args.size, rng):
        f_np, f_nb = getattr(np_backend, name), getattr(nb_backend, name)
        t_np = _time(f_np, call_args, args.repeats)
        t_nb = _time(f_nb, call_args, args.repeats)
        diff = np.max(np.abs(np.asarray(f_np(*call_args), float) - np.asarray(f_nb(*call_args), float)))
        print(f"{label:24s} {t_np:10.3f} {t_nb:10.3f} {t_np / t_nb:8.2f}  {diff:.2e}")


if __name__ == "__main__":
    main()
