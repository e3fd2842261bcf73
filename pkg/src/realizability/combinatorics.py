"""Explicit enumerations of set partitions, connected graphs and labeled trees.

All enumerations are over the vertex set ``{0, ..., n-1}`` and are cached per
``n``.  They are kept exact and small (``n <= MAX_ORDER``).
"""

from functools import lru_cache
from itertools import combinations

MAX_ORDER = 6


def _check_order(n):
    if not 1 <= n <= MAX_ORDER:
        raise ValueError(f"order n={n} outside the supported range 1..{MAX_ORDER}")


@lru_cache(maxsize=None)
def set_partitions(n):
    """All partitions of ``{0, ..., n-1}`` as tuples of sorted blocks.

    The number of partitions is the Bell number ``B_n``.
    """
    _check_order(n)

    def grow(k):
        if k == 0:
            return [()]
        out = []
        for part in grow(k - 1):
            new = k - 1
            for i in range(len(part)):
                out.append(part[:i] + (part[i] + (new,),) + part[i + 1:])
            out.append(part + ((new,),))
        return out

    return tuple(tuple(sorted(p)) for p in grow(n))


@lru_cache(maxsize=None)
def complete_edges(n):
    return tuple(combinations(range(n), 2))


def _is_connected(n, edges):
    if n == 1:
        return True
    adj = {v: [] for v in range(n)}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n


@lru_cache(maxsize=None)
def connected_graphs(n):
    """Edge sets of all connected spanning subgraphs of the complete graph K_n."""
    _check_order(n)
    edges = complete_edges(n)
    out = []
    for mask in range(1 << len(edges)):
        chosen = tuple(e for k, e in enumerate(edges) if mask >> k & 1)
        if len(chosen) >= n - 1 and _is_connected(n, chosen):
            out.append(chosen)
    return tuple(out)


@lru_cache(maxsize=None)
def labeled_trees(n):
    """All labeled trees on n vertices, decoded from Pruefer sequences.

    There are ``n**(n-2)`` of them (Cayley).
    """
    _check_order(n)
    if n == 1:
        return ((),)
    if n == 2:
        return (((0, 1),),)
    trees = []
    for code in _sequences(n, n - 2):
        degree = [1] * n
        for v in code:
            degree[v] += 1
        edges = []
        for v in code:
            leaf = min(u for u in range(n) if degree[u] == 1)
            edges.append(tuple(sorted((leaf, v))))
            degree[leaf] -= 1
            degree[v] -= 1
        u, w = (x for x in range(n) if degree[x] == 1)
        edges.append((u, w))
        trees.append(tuple(sorted(edges)))
    return tuple(trees)


def _sequences(base, length):
    if length == 0:
        yield ()
        return
    for head in range(base):
        for tail in _sequences(base, length - 1):
            yield (head,) + tail
