"""Time the hot kernels on the numba and numpy backends.

    python3 benchmarks/bench_backends.py            # both backends, one table
    STIFFSTEP_NUMBA=0 python3 benchmarks/bench_backends.py --single

Each backend runs in its own interpreter since the flag is read at import.
JIT compilation happens in a warmup call and is not timed.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def cases(n):
    from stiffstep import kernels
    from stiffstep.krylov import pcg_solve
    from stiffstep.mesh import make_uniform_grid
    from stiffstep.operators import assemble_diffusion_1d, be_system
    from stiffstep.precond import build_pc2
    from stiffstep.sparse import as_csr
    from stiffstep.stability import gershgorin_bound
    from stiffstep.sts import rkl2_step, schedule_for

    prob = assemble_diffusion_1d(make_uniform_grid(n, 1.0), 1.0)
    M = prob.M
    Mc = as_csr(M)
    dte = gershgorin_bound(M).dt_euler
    x = np.random.default_rng(0).random(n)
    A = be_system(M, 50 * dte)
    P = build_pc2(A, 8)
    sched = schedule_for(100 * dte, dte)
    return {
        "dia_matvec": lambda: M.matvec(x),
        "csr_matvec": lambda: Mc.matvec(x),
        "pc2_apply": lambda: P.apply(x),
        "rkl2_step(s=20)": lambda: rkl2_step(M, x, 100 * dte, sched),
        "pcg_solve(pc2)": lambda: pcg_solve(A, x, x, P, 1e-10),
        "stage_update": lambda: kernels.rkl2_stage(0.5, 0.2, 0.1, 0.1, x, x, x, x, x),
    }


def measure(n, repeat):
    from stiffstep import BACKEND

    out = {}
    for name, fn in cases(n).items():
        fn()  # warmup / compile
        number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
        best = min(timeit.repeat(fn, number=number, repeat=repeat)) / number
        out[name] = best
    return BACKEND, out


def run_backend(flag, n, repeat):
    env = dict(os.environ, STIFFSTEP_NUMBA=flag)
    cmd = [sys.executable, __file__, "--single", "--json", "-n", str(n), "--repeat", str(repeat)]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=100_000, help="grid points")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--single", action="store_true", help="only the backend selected by the env flag")
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    if args.single:
        backend, times = measure(args.n, args.repeat)
        if args.json:
            print(json.dumps({"backend": backend, "times": times}))
        else:
            for name, t in times.items():
                print(f"{backend:6s} {name:18s} {t * 1e6:12.1f} us")
        return

    fast = run_backend("1", args.n, args.repeat)
    slow = run_backend("0", args.n, args.repeat)
    print(f"n = {args.n}")
    print(f"{'kernel':18s} {fast['backend']:>12s} {slow['backend']:>12s} {'ratio':>8s}")
    for name, t in fast["times"].items():
        s = slow["times"][name]
        print(f"{name:18s} {t * 1e6:10.1f}us {s * 1e6:10.1f}us {s / t:8.2f}")


if __name__ == "__main__":
    main()
