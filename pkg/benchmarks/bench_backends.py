#!/usr/bin/env python3
"""Time the pure-Python kernels against the compiled ones.

Each backend runs in its own subprocess (the choice is fixed at import
time), integrating one benchmark example with the structure-preserving
scheme and reporting the best wall time over a few repeats.  The two
backends execute the same operation sequence, so the final states must
agree bit for bit; the script checks that too.

Usage, from an environment with the package installed:

    python3 benchmarks/bench_backends.py --example pendulum --q 2000 --repeat 3
"""

import argparse
import json
import os
import subprocess
import sys
import time

from qsrdg.systems import EXAMPLE_NAMES


def build_parser():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--example", choices=EXAMPLE_NAMES, default="pendulum")
    parser.add_argument("--q", type=int, default=2000, help="number of steps")
    parser.add_argument("--T", type=float, default=10.0, help="horizon")
    parser.add_argument("--repeat", type=int, default=3, help="timing repeats")
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    return parser


def run_worker(args):
    import qsrdg
    from qsrdg.integrators import SchemeConfig, TimeGrid, integrate
    from qsrdg.systems import benchmark_settings

    case = benchmark_settings(args.example)
    grid = TimeGrid.equidistant(args.T, args.q)
    config = SchemeConfig()

    best = None
    for _ in range(args.repeat):
        start = time.perf_counter()
        trajectory = integrate(
            case.system, config, grid, case.control, case.initial_state
        )
        elapsed = time.perf_counter() - start
        if best is None or elapsed < best:
            best = elapsed
    print(
        json.dumps(
            {
                "backend": qsrdg.BACKEND,
                "seconds": best,
                "final_state": [float(v) for v in trajectory.states[-1]],
            }
        )
    )


def spawn(args, force_pure):
    env = dict(os.environ)
    if force_pure:
        env["QSRDG_PURE_PYTHON"] = "1"
    else:
        env.pop("QSRDG_PURE_PYTHON", None)
    cmd = [
        sys.executable, os.path.abspath(__file__), "--worker",
        "--example", args.example, "--q", str(args.q),
        "--T", str(args.T), "--repeat", str(args.repeat),
    ]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.worker:
        run_worker(args)
        return 0

    pure = spawn(args, force_pure=True)
    other = spawn(args, force_pure=False)

    print(f"example {args.example}, {args.q} steps over T = {args.T}")
    for report in (pure, other):
        per_step = 1e6 * report["seconds"] / args.q
        print(
            f"  {report['backend']:8s} {report['seconds']:8.4f} s"
            f"  ({per_step:7.1f} us/step)"
        )
    if other["backend"] == "pure":
        print("compiled kernels are not built; both runs used the pure backend")
        return 0

    speedup = pure["seconds"] / other["seconds"]
    print(f"  speedup  {speedup:8.2f} x")
    if pure["final_state"] != other["final_state"]:
        print("WARNING: backends disagree on the final state")
        print(f"  pure:     {pure['final_state']}")
        print(f"  compiled: {other['final_state']}")
        return 1
    print("final states agree bit for bit")
    return 0


if __name__ == "__main__":
    sys.exit(main())
