"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the backend flag is read at
import time. Usage: ``python benchmarks/bench_kernels.py [--points P] [--n N]``.
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from eplab import backend_name
from eplab._kernels import eig_batch
from eplab.harness import compute_sweep
from eplab.model import ParameterPath, ParameterPoint, spec_from_arrays

P, n, reps = int(sys.argv[1]), int(sys.argv[2]), int(sys.argv[3])
rng = np.random.default_rng(0)
X = rng.normal(size=(P, n, n)) + 1j * rng.normal(size=(P, n, n))
A = X + np.swapaxes(X, 1, 2)
spec = spec_from_arrays(e0=np.linspace(-1, 1, n), e1=rng.normal(size=n),
                        gamma0=rng.uniform(0, 0.1, n), channels=rng.normal(size=(2, n)))
path = ParameterPath.linear(ParameterPoint(0, (0.1j, 0.2j)), ParameterPoint(1, (0.5j, 0.1 + 0.3j)), P)

t = time.perf_counter(); eig_batch(A[:4]); compute_sweep(spec, ParameterPath(path.points[:4])); warm = time.perf_counter() - t
out = {"backend": backend_name(), "warmup_s": warm}
for name, fn in [("eig_batch", lambda: eig_batch(A)), ("sweep", lambda: compute_sweep(spec, path))]:
    best = min((lambda t0: (fn(), time.perf_counter() - t0)[1])(time.perf_counter()) for _ in range(reps))
    out[name + "_s"] = best
print(json.dumps(out))
"""


def run(disable, points, n, reps):
    env = dict(os.environ, EPLAB_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", CHILD, str(points), str(n), str(reps)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=10_000)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--reps", type=int, default=3)
    args = ap.parse_args()
    rows = [run(False, args.points, args.n, args.reps), run(True, args.points, args.n, args.reps)]
    print(f"{args.points} matrices, N = {args.n}, best of {args.reps}")
    print(f"{'backend':<8} {'warmup':>9} {'eig_batch':>10} {'sweep':>9}")
    for r in rows:
        print(f"{r['backend']:<8} {r['warmup_s']:9.3f} {r['eig_batch_s']:10.3f} {r['sweep_s']:9.3f}")
    print(f"eig_batch speedup: {rows[1]['eig_batch_s'] / rows[0]['eig_batch_s']:.2f}x")


if __name__ == "__main__":
    main()
