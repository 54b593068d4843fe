"""Time the numba kernels against the numpy reference path.

    python benchmarks/bench_kernels.py [--repeat 200]

Each kernel is called once first so compile time is excluded, then timed
with ``timeit`` at the sizes the engine actually uses. A final section runs
a short bundled scenario end to end in a subprocess per backend.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from uvswarm.kernels import _numba, _numpy


def cases(rng, n):
    xs = np.ascontiguousarray(rng.normal(size=(n, 3)) * 4)
    vs = np.ascontiguousarray(rng.normal(size=(n, 3)))
    bx = rng.normal(size=(n, n, 3)) * 4
    bv = rng.normal(size=(n, n, 3))
    mask = rng.random((n, n)) < 0.8
    centers = xs + 20.0
    radii = rng.uniform(0.3, 1.0, n)
    return {
        "baseline_sum": lambda k: k.baseline_sum(xs, vs, 10.0, 10.0, 3.0),
        "batch_baseline": lambda k: k.batch_baseline(bx, bv, mask, 10.0, 10.0, 3.0),
        "particle_sum": lambda k: k.particle_sum(xs, vs, 10.0, 1.0),
        "cylinder_particles": lambda k: k.cylinder_particles(centers, radii, vs[0]),
        "pairwise_min_mean": lambda k: k.pairwise_min_mean(xs),
        "deviation_energy": lambda k: k.deviation_energy(xs, 2.0, 10.0),
        "cylinder_clearance": lambda k: k.cylinder_clearance(xs, centers, radii),
    }


SCENARIO = """
import json, time
from uvswarm import kernels
from uvswarm.engine import run
from uvswarm.world import load_bundled
kernels.warmup()
t0 = time.perf_counter()
run(load_bundled('forest9').with_updates(duration=20.0))
print(json.dumps({'backend': kernels.BACKEND, 'seconds': time.perf_counter() - t0}))
"""


def scenario_time(disable: bool) -> dict:
    env = {k: v for k, v in os.environ.items() if k != "UVSWARM_DISABLE_NUMBA"}
    if disable:
        env["UVSWARM_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SCENARIO], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--sizes", default="5,9,30")
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<20} {'n':>4} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        for name, call in cases(rng, n).items():
            call(_numba)
            t_np = min(timeit.repeat(lambda: call(_numpy), number=args.repeat, repeat=3)) / args.repeat
            t_nb = min(timeit.repeat(lambda: call(_numba), number=args.repeat, repeat=3)) / args.repeat
            print(f"{name:<20} {n:>4} {t_np * 1e6:>10.2f} {t_nb * 1e6:>10.2f} {t_np / t_nb:>7.1f}x")

    print()
    for disable in (True, False):
        res = scenario_time(disable)
        print(f"forest9, 200 steps, {res['backend']:<6} {res['seconds']:.2f} s")


if __name__ == "__main__":
    main()
