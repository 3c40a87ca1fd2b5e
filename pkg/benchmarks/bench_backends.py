"""Time the numba and numpy backends on the benchmark example.

Each backend runs in its own interpreter because the backend is fixed at
import time by ``CDRODEO_BACKEND``.

    python benchmarks/bench_backends.py --n 200000 --repeats 5
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from cdrodeo import BACKEND, RodeoConfig, estimate_density, get_kernel, marginal_known, run_cdrodeo, z_statistic
from cdrodeo.simulation import BENCH_POINT, ExampleSpec, sample_example, true_marginal

n, repeats = int(sys.argv[1]), int(sys.argv[2])
data = sample_example(ExampleSpec(n=n, seed=0))
marginal = marginal_known(true_marginal, data)
h = np.full(5, 0.4)
cases = {
    "estimate_density gaussian": lambda: estimate_density(BENCH_POINT, h, data, marginal, get_kernel("gaussian")),
    "z_statistic gaussian": lambda: z_statistic(BENCH_POINT, h, 1, data, marginal, get_kernel("gaussian")),
    "rodeo gaussian h0=0.4": lambda: run_cdrodeo(BENCH_POINT, data, marginal, get_kernel("gaussian"),
                                                 RodeoConfig(h0=0.4)),
    "rodeo biweight h0=1.0": lambda: run_cdrodeo(BENCH_POINT, data, marginal, get_kernel("biweight"),
                                                 RodeoConfig(h0=1.0)),
}
out = {"backend": BACKEND, "n": n, "seconds": {}}
for name, fn in cases.items():
    fn()  # compile / warm caches
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out["seconds"][name] = best
json.dump(out, sys.stdout)
"""


def run(backend, n, repeats):
    env = {**os.environ, "CDRODEO_BACKEND": backend}
    proc = subprocess.run([sys.executable, "-c", WORKER, str(n), str(repeats)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200_000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--json", help="also write the raw timings here")
    args = parser.parse_args()

    results = {b: run(b, args.n, args.repeats) for b in ("numba", "numpy")}
    print(f"n = {args.n}, best of {args.repeats}")
    print(f"{'case':<28}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for case, t_nb in results["numba"]["seconds"].items():
        t_np = results["numpy"]["seconds"][case]
        print(f"{case:<28}{1e3 * t_nb:>12.2f}{1e3 * t_np:>12.2f}{t_np / t_nb:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
