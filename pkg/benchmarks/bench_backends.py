"""Wall time of SLKL training with the numba kernels against the numpy fallback.

Each backend runs in its own interpreter (the flag is read at import), with
one untimed warm-up fit so numba's compile/cache load is excluded.

    python3 benchmarks/bench_backends.py --sizes 200:100 1000:256 1000:1000 --repeats 3
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from slkl._accel import backend_name
from slkl.datasets import gen_sinc
from slkl.optimizer import TrainConfig, train_slkl
n, M, repeats, mode = int(sys.argv[1]), int(sys.argv[2]), int(sys.argv[3]), sys.argv[4]
train, _ = gen_sinc(n, 0, seed=0)
cfg = TrainConfig(nu=0.01, M=M, seed=0, column_mode=mode)
train_slkl(train, cfg)
times = []
for _ in range(repeats):
    t0 = time.perf_counter()
    model, trace = train_slkl(train, cfg)
    times.append(time.perf_counter() - t0)
print(json.dumps(dict(backend=backend_name(), best=min(times), iterations=trace.iterations, m0=model.m0)))
"""


def time_backend(n, M, repeats, mode, disable):
    env = dict(os.environ)
    env.pop("SLKL_DISABLE_NUMBA", None)
    if disable:
        env["SLKL_DISABLE_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", WORKER, str(n), str(M), str(repeats), mode],
                         capture_output=True, text=True, env=env, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", nargs="+", default=["200:100", "1000:256", "1000:1000"], help="n:M pairs")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--column-mode", default="precompute", choices=["precompute", "on_the_fly"])
    args = ap.parse_args(argv)

    print(f"{'n':>6} {'M':>6} {'iters':>8} {'m0':>5} {'numba s':>9} {'numpy s':>9} {'speedup':>8}")
    for pair in args.sizes:
        n, M = (int(v) for v in pair.split(":"))
        fast = time_backend(n, M, args.repeats, args.column_mode, disable=False)
        slow = time_backend(n, M, args.repeats, args.column_mode, disable=True)
        print(f"{n:>6} {M:>6} {fast['iterations']:>8} {fast['m0']:>5} {fast['best']:>9.3f} {slow['best']:>9.3f} "
              f"{slow['best'] / fast['best']:>8.2f}")


if __name__ == "__main__":
    main()
