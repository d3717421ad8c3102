"""Benchmark the compiled Gillespie kernel against the numpy fallback.

Both kernels consume the same uniform stream, so besides throughput the
script asserts the trajectories are identical.

    python3 benchmarks/bench_ssa.py [--signals 4] [--copies 200] [--steps 200000]
"""

import argparse
import time

import numpy as np

from strandrec.engine import RateClass
from strandrec.gates import compile_library
from strandrec.kernel import implementations
from strandrec.sim import _network_for, parse_schedule


def run(kern, net, counts0, n_steps, seed):
    counts = counts0.copy()
    rng = np.random.default_rng(seed)
    chunk = 8192
    out_rxn = np.empty(chunk, dtype=np.int32)
    out_t = np.empty(chunk, dtype=np.float64)
    t = 0.0
    since = 0
    budget = n_steps
    done = 0
    fired = []
    t0 = time.perf_counter()
    while True:
        uniforms = rng.random(2 * chunk)
        steps, status, t, since, budget = kern(
            counts, net.r0, net.r1, net.same, net.rate, net.irrev,
            net.upd_off, net.upd_idx, net.upd_val,
            np.array([], dtype=np.int32),
            t, since, budget, 0, uniforms, out_rxn, out_t,
        )
        done += steps
        fired.append(out_rxn[:steps].copy())
        if status != 0 or budget <= 0:
            break
    dt = time.perf_counter() - t0
    return done, dt, counts, np.concatenate(fired) if fired else np.empty(0, dtype=np.int32)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--signals", type=int, default=4)
    ap.add_argument("--copies", type=int, default=200)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    signals = [chr(ord("a") + i) for i in range(args.signals)]
    lib = compile_library(signals, recorder="preorder", variant="crosstalk", copies_per_gate=args.copies)
    sched = parse_schedule("".join(signals), declared=lib.signals)
    net = _network_for(lib, sched, RateClass())
    counts0 = net.counts_of(lib.species_counts)
    for x in signals:
        counts0[net.idx(lib.signal(x))] += args.copies
    print(f"network: {len(net.species)} species, {len(net.reactions)} reactions; "
          f"{int(counts0.sum())} molecules")

    results = {}
    for name, kern in sorted(implementations().items()):
        done, dt, counts, fired = run(kern, net, counts0, args.steps, args.seed)
        results[name] = (done, dt, counts, fired)
        print(f"{name:>9}: {done} steps in {dt:.3f}s  ({done / dt / 1e3:.1f}k steps/s)")
    if len(results) == 2:
        (d1, _, c1, f1), (d2, _, c2, f2) = results["compiled"], results["python"]
        same = d1 == d2 and np.array_equal(c1, c2) and np.array_equal(f1, f2)
        print(f"trajectory parity: {'identical' if same else 'MISMATCH'}")
        speedup = results["python"][1] / results["compiled"][1]
        print(f"speedup: {speedup:.1f}x")


if __name__ == "__main__":
    main()
