"""Maximum spanning arborescence decoding for dependency trees.

Scores come as an (n+1) x (n+1) matrix where entry (h, d) scores head h for
dependent d and index 0 is the artificial root.  The diagonal and the
root-as-dependent column are ignored.  Decoding returns the best tree in
which the root has exactly one child: if the unconstrained optimum is
multi-rooted, every candidate root child is re-decoded with the other root
arcs penalized to -inf and the best total wins.
"""

from __future__ import annotations

import numpy as np


def mst_decode(scores: np.ndarray) -> list[int]:
    """Heads for tokens 1..n (0 means the artificial root)."""
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 1:
        raise ValueError(f"scores must be a square (n+1) x (n+1) matrix, got {s.shape}")
    m = s.shape[0]
    if m == 1:
        return []
    s = s.copy()
    np.fill_diagonal(s, -np.inf)
    s[:, 0] = -np.inf
    legal = s[:, 1:][~np.eye(m, dtype=bool)[:, 1:]]
    if not np.all(np.isfinite(legal)):
        raise ValueError("arc scores must be finite")
    heads = _chu_liu_edmonds(s)
    root_children = [d for d in range(1, m) if heads[d] == 0]
    if len(root_children) != 1:
        best_heads: np.ndarray | None = None
        best_total = -np.inf
        for r in range(1, m):
            constrained = s.copy()
            constrained[0, :] = -np.inf
            constrained[0, r] = s[0, r]
            cand = _chu_liu_edmonds(constrained)
            total = _tree_score(s, cand)
            if total > best_total:
                best_total = total
                best_heads = cand
        assert best_heads is not None
        heads = best_heads
    return [int(h) for h in heads[1:]]


def _tree_score(s: np.ndarray, heads: np.ndarray) -> float:
    return float(sum(s[heads[d], d] for d in range(1, len(heads))))


def _find_cycle(heads: np.ndarray) -> list[int] | None:
    m = len(heads)
    color = np.zeros(m, dtype=np.int8)  # 0 new, 1 on path, 2 done
    color[0] = 2
    for start in range(1, m):
        if color[start] != 0:
            continue
        path = []
        node = start
        while color[node] == 0:
            color[node] = 1
            path.append(node)
            node = int(heads[node])
        if color[node] == 1:
            cycle = path[path.index(node) :]
            return cycle
        for v in path:
            color[v] = 2
    return None


def _chu_liu_edmonds(s: np.ndarray) -> np.ndarray:
    """Max arborescence rooted at 0 by greedy selection + cycle contraction."""
    m = s.shape[0]
    heads = np.zeros(m, dtype=np.int64)
    for d in range(1, m):
        heads[d] = int(np.argmax(s[:, d]))
    cycle = _find_cycle(heads)
    if cycle is None:
        return heads
    in_cycle = np.zeros(m, dtype=bool)
    in_cycle[cycle] = True
    rest = [v for v in range(m) if not in_cycle[v]]  # keeps 0 first
    k = len(rest) + 1
    c_idx = k - 1
    contracted = np.full((k, k), -np.inf)
    for ai, a in enumerate(rest):
        for bi, b in enumerate(rest):
            contracted[ai, bi] = s[a, b]
    np.fill_diagonal(contracted, -np.inf)
    # arcs entering the cycle: replace the cycle-internal arc into u
    enter_choice: dict[int, int] = {}
    for ai, a in enumerate(rest):
        best_u = -1
        best_w = -np.inf
        for u in cycle:
            w = s[a, u] - s[heads[u], u]
            if w > best_w:
                best_w = w
                best_u = u
        contracted[ai, c_idx] = best_w
        enter_choice[ai] = best_u
    # arcs leaving the cycle
    exit_choice: dict[int, int] = {}
    for bi, b in enumerate(rest):
        if bi == 0:
            continue  # nothing may head the root
        best_u = -1
        best_w = -np.inf
        for u in cycle:
            if s[u, b] > best_w:
                best_w = s[u, b]
                best_u = u
        contracted[c_idx, bi] = best_w
        exit_choice[bi] = best_u
    contracted[:, 0] = -np.inf
    sub_heads = _chu_liu_edmonds(contracted)
    expanded = heads.copy()
    entering = sub_heads[c_idx]
    broken = enter_choice[int(entering)]
    expanded[broken] = rest[int(entering)]
    for bi in range(1, k - 1):
        b = rest[bi]
        h = int(sub_heads[bi])
        expanded[b] = exit_choice[bi] if h == c_idx else rest[h]
    return expanded
