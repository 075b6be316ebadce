"""Fallback implementations of the hot loops, used when the compiled
extension is unavailable. Must match ``kgfuse._kernels`` semantically."""

import numpy as np

BACKEND = "python"


def power_iteration(indptr, indices, inv_deg, jump, v0, alpha, tol, max_iters):
    """Iterate v <- (1-alpha) * A v + alpha * jump until the L1 change < tol.

    Same CSR convention as the compiled kernel: ``inv_deg[j]`` is 1/degree(j)
    with 0 marking dangling nodes whose mass spreads uniformly.
    Returns (scores, iterations_run, converged).
    """
    z = v0.shape[0]
    rows = np.repeat(np.arange(z, dtype=np.int64), np.diff(indptr))
    dangling_mask = inv_deg == 0.0
    v = v0.astype(np.float64, copy=True)
    iterations = 0
    converged = False
    for it in range(max_iters):
        scaled = v * inv_deg
        # bincount of an empty edge list comes back integer-typed
        y = np.bincount(rows, weights=scaled[indices], minlength=z).astype(
            np.float64, copy=False
        )
        y += v[dangling_mask].sum() / z
        v_new = (1.0 - alpha) * y + alpha * jump
        delta = np.abs(v_new - v).sum()
        v = v_new
        iterations = it + 1
        if delta < tol:
            converged = True
            break
    return v, iterations, converged


def jaro_winkler(a: str, b: str) -> float:
    """Jaro similarity with the standard 0.1-scaled bonus for a shared
    prefix of up to four characters."""
    if a == b:
        return 1.0
    len_a, len_b = len(a), len(b)
    if len_a == 0 or len_b == 0:
        return 0.0

    window = max(0, max(len_a, len_b) // 2 - 1)
    a_match = [False] * len_a
    b_match = [False] * len_b
    matches = 0

    for i in range(len_a):
        lo = max(0, i - window)
        hi = min(i + window + 1, len_b)
        for j in range(lo, hi):
            if b_match[j] or a[i] != b[j]:
                continue
            a_match[i] = True
            b_match[j] = True
            matches += 1
            break

    if matches == 0:
        return 0.0

    transpositions = 0
    k = 0
    for i in range(len_a):
        if not a_match[i]:
            continue
        while not b_match[k]:
            k += 1
        if a[i] != b[k]:
            transpositions += 1
        k += 1
    transpositions //= 2

    jaro = (
        matches / len_a
        + matches / len_b
        + (matches - transpositions) / matches
    ) / 3.0

    prefix = 0
    for x, y in zip(a[:4], b[:4]):
        if x != y:
            break
        prefix += 1

    return jaro + prefix * 0.1 * (1.0 - jaro)
