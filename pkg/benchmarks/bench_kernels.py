"""Compare the numba and pure-numpy set-partition kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so ``CACHEZF_DISABLE_NUMBA`` does not
matter here. The first numba call per signature is timed separately
(compilation, or loading from the on-disk cache).
"""
import argparse
import time
from fractions import Fraction

import numpy as np

from cachezf import converse as cv
from cachezf.kernels import _numba, _numpy
from cachezf.placement import NetworkConfig


def _csr(packets):
    n = len(packets)
    groups = cv.feasible_groups(packets)
    buckets = [[] for _ in range(n)]
    for g in groups:
        buckets[(g & -g).bit_length() - 1].append(g)
    offsets = np.zeros(n + 1, dtype=np.int64)
    flat = []
    for b, bucket in enumerate(buckets):
        flat.extend(sorted(bucket, key=lambda g: (-g.bit_count(), g)))
        offsets[b + 1] = len(flat)
    return n, np.array(groups, dtype=np.int64), offsets, np.array(flat, dtype=np.int64), max(g.bit_count() for g in groups)


def _random_instance(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        to = int(rng.integers(1, 5))
        tx = frozenset(int(x) + 1 for x in rng.permutation(3)[: int(rng.integers(1, 4))])
        rx = frozenset(int(x) + 1 for x in rng.permutation(4)[: int(rng.integers(0, 3))]) - {to}
        out.append(cv.PacketInstance(k, tx, rx, to))
    return out


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        value = fn()
        times.append(time.perf_counter() - t)
    return value, min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cases = {
        "3x3 (18 packets)": cv.instance_for_config(NetworkConfig(3, 3, 3, Fraction(2), Fraction(1), 9), (1, 2, 3)).packets,
        "random 14": _random_instance(14, 1),
        "random 18": _random_instance(18, 2),
    }
    print(f"{'case':<18} {'kernel':<16} {'numpy s':>10} {'numba s':>10} {'speedup':>8}")
    for name, packets in cases.items():
        n, groups, offsets, flat, max_size = _csr(packets)
        full = (1 << n) - 1
        kernels = {
            "min_partition": (lambda b: b.min_partition(full, offsets, flat, max_size)),
            "partition_table": (lambda b: int(b.partition_table(n, groups)[full])),
        }
        for kname, call in kernels.items():
            t0 = time.perf_counter()
            call(_numba)
            warm = time.perf_counter() - t0
            v_np, t_np = best_of(lambda: call(_numpy), args.repeat)
            v_nb, t_nb = best_of(lambda: call(_numba), args.repeat)
            assert v_np == v_nb, (name, kname, v_np, v_nb)
            print(f"{name:<18} {kname:<16} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x"
                  f"   (value {v_nb}, first numba call {warm:.2f}s)")


if __name__ == "__main__":
    main()
