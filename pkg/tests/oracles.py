"""Independent brute-force oracles used by the test suite.

These deliberately avoid the library's own code paths: plain-Python
distance loops for AP, exhaustive spanning-tree enumeration for the MST,
and central finite differences for gradients.
"""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np


def ap_enumeration(query_id, query_vec, ref_ids, ref_vecs, relevant) -> float:
    """Average precision by full enumeration with plain-Python arithmetic."""
    scored = []
    for rid, vec in zip(ref_ids, ref_vecs):
        if rid == query_id:
            continue
        d = math.sqrt(sum((a - b) ** 2 for a, b in zip(query_vec, vec)))
        scored.append((d, rid))
    scored.sort()
    hits, total = 0, 0.0
    for k, (_, rid) in enumerate(scored, start=1):
        if rid in relevant:
            hits += 1
            total += hits / k
    return total / len(relevant)


def map_enumeration(query_ids, query_vecs, ref_ids, ref_vecs, gt) -> float:
    """mAP (%) via ap_enumeration over every ground-truth query."""
    aps = []
    lookup = {qid: vec for qid, vec in zip(query_ids, query_vecs)}
    for qid in sorted(gt):
        aps.append(ap_enumeration(qid, lookup[qid], ref_ids, ref_vecs, gt[qid]))
    return 100.0 * sum(aps) / len(aps)


def _spans(n_nodes: int, edges) -> bool:
    adj = {i: [] for i in range(n_nodes)}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == n_nodes


def min_spanning_weight(weights: np.ndarray) -> float:
    """Minimum spanning-tree weight of a complete graph by exhaustive
    enumeration of all (n-1)-edge subsets."""
    n = weights.shape[0]
    all_edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    best = math.inf
    for subset in combinations(all_edges, n - 1):
        if _spans(n, subset):
            best = min(best, sum(weights[i, j] for i, j in subset))
    return best


def finite_diff_grads(loss_fn, params, h=1e-5):
    """Central finite differences of a scalar loss over a list of arrays."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            up = loss_fn()
            p[idx] = orig - h
            down = loss_fn()
            p[idx] = orig
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads
