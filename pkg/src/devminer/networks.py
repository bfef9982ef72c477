"""Developer and contribution networks with their betweenness metrics.

The developer network is undirected and unweighted; an edge joins two
developers who modified the same script. The contribution network is an
undirected weighted bipartite graph of developers and scripts, edge weight
being the developer's commit count to the script; shortest paths there sum
edge weights.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from devminer.ingest import CommitRecord

Edge = tuple[str, str]


def _edge(a: str, b: str) -> Edge:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class DeveloperNetwork:
    nodes: frozenset[str]
    edges: frozenset[Edge]
    provenance: Mapping[Edge, frozenset[str]]
    script_developers: Mapping[str, frozenset[str]]

    def neighbors(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj


@dataclass(frozen=True)
class ContributionNetwork:
    dev_nodes: frozenset[str]
    script_nodes: frozenset[str]
    weights: Mapping[tuple[str, str], int]  # (developer, script) -> commit count

    def adjacency(self) -> dict[str, dict[str, int]]:
        adj: dict[str, dict[str, int]] = {n: {} for n in self.dev_nodes | self.script_nodes}
        for (dev, script), w in self.weights.items():
            adj[dev][script] = w
            adj[script][dev] = w
        return adj


def build_developer_network(
    commits: Sequence[CommitRecord], scripts: Iterable[str]
) -> DeveloperNetwork:
    """Connect two developers whenever some script was modified by both."""
    script_set = set(scripts)
    devs_by_script: dict[str, set[str]] = {}
    for commit in commits:
        for change in commit.changes:
            if change.path in script_set:
                devs_by_script.setdefault(change.path, set()).add(commit.author_id)
    nodes: set[str] = set()
    provenance: dict[Edge, set[str]] = {}
    for script, devs in devs_by_script.items():
        nodes.update(devs)
        ordered = sorted(devs)
        for i, a in enumerate(ordered):
            for b in ordered[i + 1:]:
                provenance.setdefault(_edge(a, b), set()).add(script)
    return DeveloperNetwork(
        nodes=frozenset(nodes),
        edges=frozenset(provenance),
        provenance={e: frozenset(s) for e, s in provenance.items()},
        script_developers={s: frozenset(d) for s, d in devs_by_script.items()},
    )


def build_contribution_network(
    commits: Sequence[CommitRecord], scripts: Iterable[str]
) -> ContributionNetwork:
    """Weight each developer-script edge by the developer's commit count."""
    script_set = set(scripts)
    weights: dict[tuple[str, str], int] = {}
    for commit in commits:
        touched = {c.path for c in commit.changes if c.path in script_set}
        for path in touched:
            key = (commit.author_id, path)
            weights[key] = weights.get(key, 0) + 1
    return ContributionNetwork(
        dev_nodes=frozenset(dev for dev, _ in weights),
        script_nodes=frozenset(path for _, path in weights),
        weights=weights,
    )


def _components(net: DeveloperNetwork) -> dict[str, int]:
    """Map every node to the size of its connected component."""
    adj = net.neighbors()
    sizes: dict[str, int] = {}
    seen: set[str] = set()
    for start in sorted(net.nodes):
        if start in seen:
            continue
        component = [start]
        seen.add(start)
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    component.append(w)
                    queue.append(w)
        for node in component:
            sizes[node] = len(component)
    return sizes


def edge_betweenness(net: DeveloperNetwork, normalized: bool = True) -> dict[Edge, float]:
    """Betweenness of every edge: the summed fraction of pairwise shortest
    paths passing through it. When normalized, each edge is divided by the
    pair count n(n-1)/2 of its own connected component, so values stay in
    [0, 1] and are unaffected by unrelated components.

    Pairs in different components contribute nothing.
    """
    adj = net.neighbors()
    nodes = sorted(net.nodes)
    scores: dict[Edge, float] = {e: 0.0 for e in net.edges}
    if not scores:
        return {}
    # Brandes accumulation over ordered source nodes; undirected graphs
    # count every pair twice, so halve at the end.
    for source in nodes:
        dist: dict[str, int] = {source: 0}
        sigma: dict[str, int] = {source: 1}
        parents: dict[str, list[str]] = {v: [] for v in nodes}
        order: list[str] = []
        queue = deque([source])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in sorted(adj[v]):
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] = sigma.get(w, 0) + sigma[v]
                    parents[w].append(v)
        delta: dict[str, float] = {v: 0.0 for v in order}
        for w in reversed(order):
            for v in parents[w]:
                share = sigma[v] / sigma[w] * (1.0 + delta[w])
                scores[_edge(v, w)] += share
                delta[v] += share
    if not normalized:
        return {e: s / 2.0 for e, s in scores.items()}
    sizes = _components(net)
    out: dict[Edge, float] = {}
    for (a, b), s in scores.items():
        n = sizes[a]
        out[(a, b)] = s / (n * (n - 1)) if n > 1 else 0.0
    return out


def max_edge_betweenness_for_script(
    net: DeveloperNetwork,
    script: str,
    betweenness: Mapping[Edge, float] | None = None,
    normalized: bool = True,
) -> float:
    """Maximum network-wide edge betweenness over the script's co-modification
    edges; 0.0 when fewer than two developers touched the script."""
    if script not in net.script_developers:
        raise ValueError(f"unknown script: {script}")
    if len(net.script_developers[script]) < 2:
        return 0.0
    scores = betweenness if betweenness is not None else edge_betweenness(net, normalized)
    return max(scores[e] for e, shared in net.provenance.items() if script in shared)


def _dijkstra_counts(
    adj: Mapping[str, Mapping[str, int]], source: str
) -> tuple[dict[str, int], dict[str, int]]:
    """Exact weighted shortest-path distances and path counts from one node."""
    dist: dict[str, int] = {source: 0}
    sigma: dict[str, int] = {source: 1}
    done: set[str] = set()
    heap: list[tuple[int, str]] = [(0, source)]
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for w, weight in adj[v].items():
            nd = d + weight
            if w not in dist or nd < dist[w]:
                dist[w] = nd
                sigma[w] = sigma[v]
                heapq.heappush(heap, (nd, w))
            elif nd == dist[w] and w not in done:
                sigma[w] += sigma[v]
    return dist, sigma


def betweenness_centrality_all(net: ContributionNetwork) -> dict[str, float]:
    """Betweenness centrality of every script node in one pass.

    For each unordered developer pair, every script on a shortest path gets
    the fraction of that pair's shortest paths passing through it.
    """
    adj = net.adjacency()
    devs = sorted(net.dev_nodes)
    runs = {d: _dijkstra_counts(adj, d) for d in devs}
    totals: dict[str, Fraction] = {s: Fraction(0) for s in net.script_nodes}
    scripts = sorted(net.script_nodes)
    for i, a in enumerate(devs):
        dist_a, sigma_a = runs[a]
        for b in devs[i + 1:]:
            if b not in dist_a:
                continue
            dist_b, sigma_b = runs[b]
            d_ab = dist_a[b]
            for script in scripts:
                if (
                    script in dist_a
                    and script in dist_b
                    and dist_a[script] + dist_b[script] == d_ab
                ):
                    through = sigma_a[script] * sigma_b[script]
                    totals[script] += Fraction(through, sigma_a[b])
    return {s: float(v) for s, v in totals.items()}


def betweenness_centrality(net: ContributionNetwork, script: str) -> float:
    """Summed fraction of developer-pair weighted shortest paths that pass
    through the script node. Unreachable pairs contribute zero; the value is
    raw (no normalization)."""
    if script not in net.script_nodes:
        raise ValueError(f"unknown script: {script}")
    return betweenness_centrality_all(net)[script]


def network_dump(
    dev_net: DeveloperNetwork | None = None,
    contrib_net: ContributionNetwork | None = None,
) -> dict:
    """JSON-ready dump of either graph for debugging."""
    out: dict = {}
    if dev_net is not None:
        out["developer_network"] = {
            "nodes": sorted(dev_net.nodes),
            "edges": [
                {"a": a, "b": b, "scripts": sorted(dev_net.provenance[(a, b)])}
                for a, b in sorted(dev_net.edges)
            ],
        }
    if contrib_net is not None:
        out["contribution_network"] = {
            "developers": sorted(contrib_net.dev_nodes),
            "scripts": sorted(contrib_net.script_nodes),
            "edges": [
                {"developer": d, "script": s, "weight": w}
                for (d, s), w in sorted(contrib_net.weights.items())
            ],
        }
    return out
