"""Kruskal minimum spanning tree over the complete affinity graph.

Edges are the upper-triangle entries of the undirected affinity matrix.
Ties are broken by lexicographic name pair so the result is deterministic.
Exports to DOT (edge length/label = weight) and JSON.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .affinity import UNDIRECTED_U, AffinityMatrix
from .errors import DataError, NotUndirected


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:  # path compression
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


@dataclass(frozen=True)
class MstResult:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]  # (a, b, weight), a < b
    total_weight: float


def kruskal(u: AffinityMatrix) -> MstResult:
    if u.kind != UNDIRECTED_U:
        raise NotUndirected(f"(kind {u.kind!r})")
    if np.abs(u.values - u.values.T).max() > 1e-12:
        raise NotUndirected("(values are asymmetric)")
    names = u.names
    n = len(names)
    candidates = []
    for i in range(n):
        for j in range(i + 1, n):
            a, b = sorted((names[i], names[j]))
            candidates.append((float(u.values[i, j]), a, b))
    candidates.sort()  # by weight, then lexicographic name pair

    index = {name: k for k, name in enumerate(names)}
    uf = UnionFind(n)
    edges = []
    for w, a, b in candidates:
        if uf.union(index[a], index[b]):
            edges.append((a, b, w))
            if len(edges) == n - 1:
                break
    if len(edges) != n - 1:
        raise DataError("graph is not connected")  # cannot happen for complete graphs
    return MstResult(
        nodes=names,
        edges=tuple(edges),
        total_weight=float(sum(w for _, _, w in edges)),
    )


def export(mst: MstResult, fmt: str, path) -> None:
    if fmt == "dot":
        lines = ["graph affinity {"]
        for name in mst.nodes:
            lines.append(f'  "{name}";')
        for a, b, w in mst.edges:
            lines.append(f'  "{a}" -- "{b}" [len={w!r}, label="{w:.3f}"];')
        lines.append("}")
        text = "\n".join(lines) + "\n"
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    elif fmt == "json":
        payload = {
            "nodes": list(mst.nodes),
            "edges": [{"a": a, "b": b, "w": w} for a, b, w in mst.edges],
            "total_weight": mst.total_weight,
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    else:
        raise DataError(f"unknown export format {fmt!r}")


def mst_from_json(path) -> MstResult:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    return MstResult(
        nodes=tuple(payload["nodes"]),
        edges=tuple((e["a"], e["b"], float(e["w"])) for e in payload["edges"]),
        total_weight=float(payload["total_weight"]),
    )
