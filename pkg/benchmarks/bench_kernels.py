"""Compare the numba and pure-numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Workloads are commuting families, so the searches run to exhaustion.
Numba compile time is paid in a warm-up call and excluded.
"""
import argparse
import math
import time

from boolalg import kernels
from boolalg.commute import _pack, compatibility_labels, shared_parts
from boolalg.core import upper_projection
from boolalg.fixtures import free_family


def workloads():
    out = []
    for n_gens, subsets in (
        (6, [(0, 1, 2), (2, 3, 4), (4, 5, 0)]),
        (8, [(0, 1, 2, 3), (2, 3, 4, 5), (4, 5, 6, 7), (6, 7, 0, 1)]),
        (9, [(0, 1, 2, 3), (3, 4, 5, 6), (6, 7, 8, 0), (1, 4, 7)]),
    ):
        fam = free_family(n_gens, subsets)
        m, _, offsets, masks = _pack(fam)
        labels = compatibility_labels(fam)
        ys = [upper_projection(D, b).bits for D, A in zip(shared_parts(fam), fam) for b in A.blocks]
        tuples = math.prod(A.n_atoms for A in fam)
        out.append((f"m={m} n={len(fam)} tuples={tuples}", masks, offsets, labels, kernels.to_words(ys, m)))
    return out


def best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if kernels.NUMBA_ENABLED else [])
    print(f"{'kernel':<18}{'workload':<32}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, masks, offsets, labels, ymasks in workloads():
        for kname, call in (
            ("incompatible", lambda b: kernels.incompatible_tuple(masks, offsets, labels, backend=b)),
            ("weak_failure", lambda b: kernels.weak_failure(masks, ymasks, offsets, backend=b)),
        ):
            ts = [best(lambda: call(b), args.repeat) for b in backends]
            row = f"{kname:<18}{name:<32}" + "".join(f"{t * 1e6:>10.1f}us" for t in ts)
            if len(ts) == 2:
                row += f"{ts[0] / ts[1]:>11.1f}x"
            print(row)


if __name__ == "__main__":
    main()
