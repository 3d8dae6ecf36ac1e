"""Independent oracles shared across the test suite.

Each oracle is deliberately implemented differently from the code under test
(different algorithm or different formula) so agreement is meaningful.
"""

from __future__ import annotations

import itertools

import numpy as np

from morphkit.ner import EntitySpan


def insert_delete_distance(a: str, b: str) -> int:
    """Edit distance without substitution, via the LCS-subsequence formula."""
    m, n = len(a), len(b)
    lcs = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            if a[i - 1] == b[j - 1]:
                lcs[i][j] = lcs[i - 1][j - 1] + 1
            else:
                lcs[i][j] = max(lcs[i - 1][j], lcs[i][j - 1])
    return m + n - 2 * lcs[m][n]


def brute_force_lcsubstring(a: str, b: str) -> int:
    """Length of the longest common substring by enumerating all substrings."""
    best = 0
    for i in range(len(a)):
        for j in range(i + 1, len(a) + 1):
            if a[i:j] in b and j - i > best:
                best = j - i
    return best


def all_single_root_trees(n: int) -> np.ndarray:
    """All head assignments over tokens 1..n forming a tree rooted at 0 with
    exactly one child of the root. Rows are head vectors of length n."""
    trees = []
    for heads in itertools.product(range(n + 1), repeat=n):
        if sum(1 for h in heads if h == 0) != 1:
            continue
        if any(h == d + 1 for d, h in enumerate(heads)):
            continue
        ok = True
        for start in range(1, n + 1):
            seen = set()
            node = start
            while node != 0:
                if node in seen:
                    ok = False
                    break
                seen.add(node)
                node = heads[node - 1]
            if not ok:
                break
        if ok:
            trees.append(heads)
    return np.array(trees, dtype=np.int64)


def best_tree_by_enumeration(scores: np.ndarray, trees: np.ndarray) -> float:
    """Maximum total score over the given head vectors."""
    n = trees.shape[1]
    deps = np.arange(1, n + 1)
    totals = scores[trees, deps].sum(axis=1)
    return float(totals.max())


def tree_score(scores: np.ndarray, heads: list[int]) -> float:
    return float(sum(scores[h, d + 1] for d, h in enumerate(heads)))


def random_nesting(rng: np.random.Generator, length: int, max_depth: int = 4) -> list[EntitySpan]:
    """Random disjoint-or-nested span set with unique (start, end, type) triples."""
    types = ["pf", "ps", "gu", "gc", "if", "io", "ah", "ti"]
    spans: list[EntitySpan] = []
    seen: set[tuple[int, int, str]] = set()

    def fill(start: int, end: int, depth: int) -> None:
        if depth > max_depth or start > end:
            return
        pos = start
        while pos <= end:
            if rng.random() < 0.4:
                span_end = int(rng.integers(pos, end + 1))
                etype = types[int(rng.integers(len(types)))]
                key = (pos, span_end, etype)
                if key not in seen:
                    seen.add(key)
                    spans.append(EntitySpan(pos, span_end, etype))
                    if rng.random() < 0.5:
                        fill(pos, span_end, depth + 1)
                pos = span_end + 1
            else:
                pos += 1

    fill(1, length, 1)
    return spans


def finite_difference_gradcheck(params, loss_fn, h: float = 1e-5, rtol: float = 1e-4) -> float:
    """Central finite differences against backprop gradients, in float64.

    loss_fn() must rebuild the forward pass from the current parameter values
    and return the loss Tensor.  Returns the worst relative error seen.
    """
    from morphkit.nn import autodiff as ad

    for p in params:
        p.zero_grad()
    loss = loss_fn()
    ad.backward(loss)
    worst = 0.0
    for p in params:
        analytic = p.grad.copy()
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(loss_fn().data)
            flat[i] = orig - h
            down = float(loss_fn().data)
            flat[i] = orig
            numeric = (up - down) / (2 * h)
            a = analytic.reshape(-1)[i]
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            if err > worst:
                worst = err
            assert err < rtol, (
                f"gradient mismatch for {p.name}[{i}]: analytic {a}, numeric {numeric}"
            )
    return worst
