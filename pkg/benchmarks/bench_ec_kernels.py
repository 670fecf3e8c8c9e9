"""Compare the compiled P-256 kernel with the pure-Python fallback.

    python3 benchmarks/bench_ec_kernels.py [--iters N]
"""

from __future__ import annotations

import argparse
import random
import statistics
import time

from pqscms import ec
from pqscms._ec_py import GX, GY

N = ec.N


def _median_us(fn, args_list) -> float:
    times = []
    for args in args_list:
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times) * 1e6


def run(iters: int, seed: int = 1) -> list[tuple[str, str, float]]:
    rng = random.Random(seed)
    scalars = [rng.randrange(1, N) for _ in range(iters)]
    kernels = [ec.get_kernel("python")]
    try:
        kernels.append(ec.get_kernel("cython"))
    except ImportError:
        print("compiled kernel not built; only the fallback is timed")
    # a fixed non-base point for variable-base operations
    px, py = kernels[0].scalar_mult_base(0xC0FFEE)
    rows = []
    for k in kernels:
        # check the kernels agree before timing them
        assert k.scalar_mult_base(scalars[0]) == kernels[0].scalar_mult_base(scalars[0])
        rows.append((k.KERNEL, "k*G", _median_us(k.scalar_mult_base, [(s,) for s in scalars])))
        rows.append((k.KERNEL, "k*P", _median_us(k.scalar_mult, [(s, px, py) for s in scalars])))
        rows.append((k.KERNEL, "k*G+P", _median_us(k.mul_add_base, [(s, px, py) for s in scalars])))
        rows.append((k.KERNEL, "P+Q", _median_us(k.point_add, [(GX, GY, px, py)] * iters)))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iters", type=int, default=200)
    rows = run(ap.parse_args().iters)
    base = {op: us for kern, op, us in rows if kern == "python"}
    print(f"{'kernel':8} {'op':7} {'median_us':>10} {'speedup':>8}")
    for kern, op, us in rows:
        print(f"{kern:8} {op:7} {us:10.2f} {base[op] / us:8.1f}x")


if __name__ == "__main__":
    main()
