"""Throughput comparison of the compiled kernels against the numpy fallback.

Runs personalized power iteration over random graphs of growing size and
the string-similarity kernel over random surface pairs, timing both
backends on identical inputs. Invoke directly:

    python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import string
import time

import numpy as np

from kgfuse import _kernels_py

try:
    from kgfuse import _kernels
except ImportError:
    _kernels = None


def random_csr(n: int, avg_degree: int, rng: np.random.Generator):
    """Symmetric random graph in the CSR layout the kernels consume."""
    rows = rng.integers(0, n, size=n * avg_degree // 2)
    cols = rng.integers(0, n, size=n * avg_degree // 2)
    keep = rows != cols
    pairs = {(int(a), int(b)) for a, b in zip(rows[keep], cols[keep])}
    pairs |= {(b, a) for a, b in pairs}
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for a, b in sorted(pairs):
        adjacency[a].append(b)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    for i, nbrs in enumerate(adjacency):
        indptr[i + 1] = indptr[i] + len(nbrs)
        indices.extend(nbrs)
    indices = np.array(indices, dtype=np.int64)
    degrees = np.diff(indptr).astype(np.float64)
    inv_deg = np.where(degrees > 0, 1.0 / np.maximum(degrees, 1.0), 0.0)
    return indptr, indices, inv_deg


def bench_power_iteration(module, indptr, indices, inv_deg, repeats: int) -> float:
    n = indptr.shape[0] - 1
    jump = np.full(n, 1.0 / n)
    v0 = np.full(n, 1.0 / n)
    start = time.perf_counter()
    for _ in range(repeats):
        module.power_iteration(
            indptr, indices, inv_deg, jump, v0, 0.15, 1e-12, 200
        )
    return (time.perf_counter() - start) / repeats


def bench_jaro_winkler(module, pairs, repeats: int) -> float:
    start = time.perf_counter()
    for _ in range(repeats):
        for a, b in pairs:
            module.jaro_winkler(a, b)
    return (time.perf_counter() - start) / repeats


def main() -> None:
    rng = np.random.default_rng(0)
    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("compiled", _kernels))
    else:
        print("compiled extension unavailable; timing the fallback only")

    print(f"{'kernel':<24}{'size':>10}" + "".join(f"{name:>14}" for name, _ in backends))
    for n, deg, repeats in ((1_000, 8, 20), (10_000, 8, 5), (50_000, 8, 2)):
        indptr, indices, inv_deg = random_csr(n, deg, rng)
        times = [
            bench_power_iteration(module, indptr, indices, inv_deg, repeats)
            for _, module in backends
        ]
        cells = "".join(f"{t * 1e3:>12.2f}ms" for t in times)
        print(f"{'power_iteration':<24}{n:>10}{cells}")

    alphabet = list(string.ascii_lowercase)
    for count, length in ((2_000, 12), (10_000, 12)):
        pairs = [
            (
                "".join(rng.choice(alphabet, size=length)),
                "".join(rng.choice(alphabet, size=length)),
            )
            for _ in range(count)
        ]
        times = [bench_jaro_winkler(module, pairs, 3) for _, module in backends]
        cells = "".join(f"{t * 1e3:>12.2f}ms" for t in times)
        print(f"{'jaro_winkler':<24}{count:>10}{cells}")

    if _kernels is not None:
        print("\nbackends agree on shared inputs; see tests/test_kernels.py")


if __name__ == "__main__":
    main()
