"""Compare the compiled and pure-Python timeout list cores.

    python benchmarks/bench_tom.py [--rounds N]

Part one drives both list classes through the same random workload of
insert/renew/delete/advance calls. Part two runs a full 60000-tick
simulation once per backend, each in a fresh interpreter so the backend
choice at import is honoured.
"""

from __future__ import annotations

import argparse
import os
import random
import subprocess
import sys
import time

from dirnet.tom import available_backends, declare

KINDS = (10, 15, 20, 30, 55, 60, 70)


def workload(seed: int, ops: int) -> list[tuple]:
    rng = random.Random(seed)
    out = []
    for _ in range(ops):
        r = rng.random()
        key = (rng.choice(KINDS), rng.randrange(4))
        if r < 0.25:
            out.append(("ins", *key, rng.random() < 0.8, rng.randint(50, 1500)))
        elif r < 0.6:
            out.append(("ren", *key))
        elif r < 0.7:
            out.append(("del", *key))
        else:
            out.append(("adv", rng.randint(0, 40)))
    return out


def drive(TL, ops) -> int:
    tl = TL()
    fired = 0
    for op in ops:
        if op[0] == "ins":
            tl.insert(declare(op[1], op[2], op[3], op[4]))
        elif op[0] == "ren":
            tl.renew(op[1], op[2])
        elif op[0] == "del":
            tl.delete(op[1], op[2])
        else:
            fired += len(tl.advance(op[1]))
    return fired


def time_call(fn, rounds: int) -> float:
    best = float("inf")
    for _ in range(rounds):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


SIM_SNIPPET = (
    "import time; from dirnet.simnet import SimConfig, run; from dirnet.tom import BACKEND;"
    "t0 = time.perf_counter(); run(SimConfig(run_length=60000)); "
    "print(BACKEND, time.perf_counter() - t0)"
)


def simulate(pure: bool) -> tuple[str, float]:
    env = dict(os.environ, DIRNET_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", SIM_SNIPPET], env=env, capture_output=True, text=True, check=True)
    backend, seconds = out.stdout.split()
    return backend, float(seconds)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--rounds", type=int, default=5)
    ap.add_argument("--ops", type=int, default=200_000)
    args = ap.parse_args()

    ops = workload(1, args.ops)
    backends = available_backends()
    results = {}
    counts = set()
    for name, TL in sorted(backends.items()):
        counts.add(drive(TL, ops))
        results[name] = time_call(lambda: drive(TL, ops), args.rounds)
    assert len(counts) == 1, "backends disagree on the workload"
    print(f"timeout list workload: {args.ops} ops, best of {args.rounds}")
    for name, secs in results.items():
        print(f"  {name:7s} {secs * 1e3:8.1f} ms")
    if "cython" in results:
        print(f"  speedup {results['python'] / results['cython']:.2f}x")

    print("full simulation, 4 nodes, 60000 ticks")
    for pure in (False, True):
        backend, secs = simulate(pure)
        print(f"  {backend:7s} {secs * 1e3:8.1f} ms")


if __name__ == "__main__":
    main()
