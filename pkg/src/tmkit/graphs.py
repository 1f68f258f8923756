"""Small directed-graph helpers over hashable nodes.

Adjacency is a ``dict[node, list[node]]``; every routine iterates nodes and
successors in the order given so results are deterministic.
"""

from __future__ import annotations

import heapq
from collections import deque
from typing import Hashable, Iterable, Optional

Adjacency = dict


def adjacency(nodes: Iterable[Hashable], edges: Iterable[tuple]) -> Adjacency:
    adj: dict = {n: [] for n in nodes}
    for a, b in edges:
        adj.setdefault(a, [])
        adj.setdefault(b, [])
        if b not in adj[a]:
            adj[a].append(b)
    return adj


def strongly_connected_components(adj: Adjacency) -> list[list]:
    """Tarjan's algorithm, iterative.  Components come out in reverse topological order."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    result: list = []
    counter = 0
    for root in adj:
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for succ in it:
                if succ not in index:
                    index[succ] = low[succ] = counter
                    counter += 1
                    stack.append(succ)
                    on_stack.add(succ)
                    work.append((succ, iter(adj.get(succ, ()))))
                    advanced = True
                    break
                if succ in on_stack:
                    low[node] = min(low[node], index[succ])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                result.append(comp)
    return result


def _cycle_in(adj: Adjacency, members: set, start: Hashable) -> list:
    """BFS back to ``start`` inside one strongly connected component."""
    parent: dict = {}
    queue = deque([start])
    seen = {start}
    while queue:
        node = queue.popleft()
        for succ in adj.get(node, ()):
            if succ not in members:
                continue
            if succ == start:
                path = [node]
                while path[-1] != start:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            if succ not in seen:
                seen.add(succ)
                parent[succ] = node
                queue.append(succ)
    return [start]


def find_cycles(adj: Adjacency) -> list[list]:
    """One witness cycle per cyclic component (self-loops included)."""
    cycles = []
    order = {n: i for i, n in enumerate(adj)}
    for comp in reversed(strongly_connected_components(adj)):
        members = set(comp)
        if len(comp) == 1:
            node = comp[0]
            if node in adj.get(node, ()):
                cycles.append([node])
            continue
        start = min(comp, key=order.__getitem__)
        cycles.append(_cycle_in(adj, members, start))
    return cycles


def topological_order(adj: Adjacency, key=None) -> Optional[list]:
    """Kahn's algorithm; ties broken by ``key`` (default: insertion order).  ``None`` if cyclic."""
    rank = {n: i for i, n in enumerate(adj)}
    sort_key = key or rank.__getitem__
    indeg = {n: 0 for n in adj}
    for succs in adj.values():
        for s in succs:
            indeg[s] += 1
    heap = [(sort_key(n), rank[n], n) for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        _, _, node = heapq.heappop(heap)
        out.append(node)
        for succ in adj[node]:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                heapq.heappush(heap, (sort_key(succ), rank[succ], succ))
    if len(out) != len(adj):
        return None
    return out


def reachable_from(adj: Adjacency, start: Hashable) -> set:
    seen: set = set()
    queue = deque(adj.get(start, ()))
    while queue:
        node = queue.popleft()
        if node in seen:
            continue
        seen.add(node)
        queue.extend(adj.get(node, ()))
    return seen


def transitive_closure(adj: Adjacency) -> set[tuple]:
    return {(a, b) for a in adj for b in reachable_from(adj, a)}


def transitive_reduction(adj: Adjacency) -> set[tuple]:
    """Edges of a DAG not implied by a longer path."""
    reduced = set()
    for a, succs in adj.items():
        via_other = set()
        for s in succs:
            via_other |= reachable_from(adj, s)
        for s in succs:
            if s not in via_other:
                reduced.add((a, s))
    return reduced
