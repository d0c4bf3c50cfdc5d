"""Weighted community detection by greedy modularity optimisation.

The optimizer is the classic two-phase local-move/aggregate scheme. A
single greedy pass from singletons can lodge in a poor local optimum on
small graphs (merging the heaviest edge first is sometimes irrevocably
wrong), so `louvain_communities` runs a fixed number of seeded restarts —
the first from the canonical sorted singleton start, the others from
shuffled visitation orders and random initial partitions — and returns the
partition with the highest modularity.

Greedy moves can only grow communities, never split them again, and a
merged-too-far partition is often stable under every single-node move. The
winning partition therefore gets a refinement pass: exhaustive two-way
splits of small communities alternated with single-node moves, each
accepted only on a strict modularity gain. Everything is deterministic for
a fixed seed: ties keep the earliest restart, and the refinement uses no
randomness at all.
"""

from __future__ import annotations

import random
from collections import defaultdict

from .seeds import derive_seed


def modularity(adj: dict, partition: dict, resolution: float = 1.0) -> float:
    """Weighted modularity of a partition.

    adj maps node -> {neighbor: weight} (symmetric, no self loops);
    partition maps node -> community id.
    Q = sum over communities c of [in_c / 2m - r * (deg_c / 2m)^2], where
    in_c is the total internal edge weight over ordered pairs and deg_c the
    total degree of c's members. The degree penalty covers every pair of
    co-members, linked or not.
    """
    degree = {u: sum(nbrs.values()) for u, nbrs in adj.items()}
    two_m = sum(degree.values())
    if two_m == 0.0:
        return 0.0
    internal = 0.0
    for u, nbrs in adj.items():
        cu = partition[u]
        for v, w in nbrs.items():
            if partition[v] == cu:
                internal += w
    comm_degree = defaultdict(float)
    for u in adj:
        comm_degree[partition[u]] += degree[u]
    penalty = sum(d * d for d in comm_degree.values()) / (two_m * two_m)
    return internal / two_m - resolution * penalty


def _one_level(adj, resolution, init=None, order=None):
    """One local-move pass; returns the node -> integer community label map.

    Self-loop weight counts toward a node's degree (it is the collapsed
    internal mass of an aggregated community) but never toward the gain of
    joining a neighbour community, since it moves with the node. Besides
    the neighbour communities, every move evaluates detaching into a fresh
    singleton — without it a node seeded into a community it has no links
    to (random initial partitions) could never leave.
    """
    nodes = sorted(adj) if order is None else order
    index = {u: i for i, u in enumerate(sorted(adj))}
    degree = {u: sum(adj[u].values()) for u in adj}
    two_m = sum(degree.values())
    if two_m == 0.0:
        return {u: index[u] for u in adj}
    if init is not None:
        comm_of = {u: index[init[u]] for u in adj}
    else:
        comm_of = {u: index[u] for u in adj}
    next_label = len(index)
    comm_degree = defaultdict(float)
    for u in adj:
        comm_degree[comm_of[u]] += degree[u]
    moved = True
    while moved:
        moved = False
        for u in nodes:
            cu = comm_of[u]
            ku = degree[u]
            links = defaultdict(float)
            for v, w in adj[u].items():
                if v != u:
                    links[comm_of[v]] += w
            comm_degree[cu] -= ku
            base = links.get(cu, 0.0)
            best_comm, best_gain = cu, 0.0
            for c in sorted(links):
                gain = (links[c] - base) - resolution * ku * (
                    comm_degree[c] - comm_degree[cu]
                ) / two_m
                if gain > best_gain + 1e-12 or (
                    gain > 0.0 and abs(gain - best_gain) <= 1e-12 and c < best_comm
                ):
                    best_comm, best_gain = c, gain
            detach_gain = -base + resolution * ku * comm_degree[cu] / two_m
            if detach_gain > best_gain + 1e-12:
                best_comm, best_gain = next_label, detach_gain
                next_label += 1
            comm_degree[best_comm] += ku
            if best_comm != cu:
                comm_of[u] = best_comm
                moved = True
    return comm_of


def _aggregate(adj, comm_of):
    """Collapse communities into super-nodes. Internal edges accumulate as
    self-loop weight (counted once per ordered pair, i.e. twice per
    undirected edge, matching the degree convention used above)."""
    new_adj: dict = defaultdict(lambda: defaultdict(float))
    for c in set(comm_of.values()):
        new_adj[c]  # isolated communities must survive
    for u, nbrs in adj.items():
        cu = comm_of[u]
        for v, w in nbrs.items():
            new_adj[cu][comm_of[v]] += w
    return {u: dict(nbrs) for u, nbrs in new_adj.items()}


def _split_disconnected(adj, comm_of):
    """Split every community into its connected components (fresh integer
    labels). Never decreases modularity: parts of a community with no edges
    between them share no internal weight, while pooled degrees only
    inflate the penalty term. Random initial partitions routinely strand
    such fragments inside foreign communities."""
    members = defaultdict(list)
    for u, c in comm_of.items():
        members[c].append(u)
    out = {}
    label = 0
    for c in sorted(members):
        todo = set(members[c])
        while todo:
            start = min(todo)
            stack = [start]
            todo.discard(start)
            while stack:
                u = stack.pop()
                out[u] = label
                for v in adj[u]:
                    if v in todo:
                        todo.discard(v)
                        stack.append(v)
            label += 1
    return out


# largest community size whose 2^(size-1) bipartitions are scanned
_SPLIT_CAP = 12


def _best_split(work, degree, two_m, resolution, members):
    """Best 2-way split of one community, by exhaustive bipartition scan.

    Splitting C into (A, B) changes modularity by
    2*r*deg_A*deg_B/(2m)^2 - 2*cut(A,B)/(2m), so only the cut weight and
    the side degrees matter. Bipartitions are visited in Gray-code order
    (one member switches sides per step), which keeps every candidate an
    O(size) update. Returns (gain, members of the detached side) for the
    best strict improvement, else (0.0, None).
    """
    s = len(members)
    degs = [degree[u] for u in members]
    wmat = [[0.0] * s for _ in range(s)]
    for i, u in enumerate(members):
        nbrs = work[u]
        for j in range(i + 1, s):
            w = nbrs.get(members[j], 0.0)
            if w:
                wmat[i][j] = wmat[j][i] = w
    int_deg = [sum(row) for row in wmat]
    total_deg = sum(degs)
    in_a = [False] * s
    link_a = [0.0] * s  # each member's total edge weight into the A side
    deg_a = 0.0
    cut = 0.0
    best_gain, best_side = 0.0, None
    prev_gray = 0
    for g in range(1, 1 << (s - 1)):  # the last member never leaves B
        gray = g ^ (g >> 1)
        bit = (gray ^ prev_gray).bit_length() - 1
        prev_gray = gray
        row = wmat[bit]
        if in_a[bit]:
            in_a[bit] = False
            deg_a -= degs[bit]
            cut += 2.0 * link_a[bit] - int_deg[bit]
            for j in range(s):
                link_a[j] -= row[j]
        else:
            in_a[bit] = True
            deg_a += degs[bit]
            cut += int_deg[bit] - 2.0 * link_a[bit]
            for j in range(s):
                link_a[j] += row[j]
        gain = (
            2.0 * resolution * deg_a * (total_deg - deg_a) / (two_m * two_m)
            - 2.0 * cut / two_m
        )
        if gain > best_gain + 1e-12:
            best_gain = gain
            best_side = [members[i] for i in range(s) if in_a[i]]
    return best_gain, best_side


def _refine_split(work, groups, resolution):
    """Apply every modularity-improving 2-way community split, repeatedly.

    Only communities up to _SPLIT_CAP members are scanned; larger ones are
    left to the move passes. Each applied split strictly raises modularity,
    so the sweep terminates.
    """
    degree = {u: sum(nbrs.values()) for u, nbrs in work.items()}
    two_m = sum(degree.values())
    out = [sorted(g) for g in groups]
    if two_m == 0.0:
        return out
    changed = True
    while changed:
        changed = False
        for gi in range(len(out)):  # groups appended here rescan next sweep
            members = out[gi]
            if not 1 < len(members) <= _SPLIT_CAP:
                continue
            _, side = _best_split(work, degree, two_m, resolution, members)
            if side:
                detached = set(side)
                out[gi] = [u for u in members if u not in detached]
                out.append(sorted(side))
                changed = True
    return out


def _polish(work, groups, resolution):
    """Alternate split refinement and single-node move passes until neither
    strictly improves modularity; deterministic, randomness-free."""
    best = [sorted(g) for g in groups]
    part = {u: ci for ci, grp in enumerate(best) for u in grp}
    best_q = modularity(work, part, resolution)
    for _ in range(50):
        refined = _refine_split(work, best, resolution)
        init = {u: grp[0] for grp in refined for u in grp}
        comm_of = _split_disconnected(
            work, _one_level(work, resolution, init=init)
        )
        regroup = defaultdict(list)
        for u, c in comm_of.items():
            regroup[c].append(u)
        cand = [sorted(g) for g in regroup.values()]
        part = {u: ci for ci, grp in enumerate(cand) for u in grp}
        q = modularity(work, part, resolution)
        if q > best_q + 1e-12:
            best, best_q = cand, q
        else:
            break
    return sorted(best, key=lambda g: (-len(g), g[0]))


def _symmetrise(adj):
    work: dict = {u: {} for u in adj}
    for u, nbrs in adj.items():
        for v, w in nbrs.items():
            if v == u:
                continue
            if v not in work:
                work[v] = {}
            work[u][v] = float(w)
            work[v][u] = float(w)
    return work


def _single_run(work, resolution, init=None, order=None) -> list[list]:
    """One full multi-level optimisation from a given starting partition."""
    members: dict = {u: [u] for u in work}
    current = work
    first = True
    while True:
        comm_of = _one_level(
            current,
            resolution,
            init if first else None,
            order if first else None,
        )
        comm_of = _split_disconnected(current, comm_of)
        first = False
        if len(set(comm_of.values())) == len(current):
            break  # all singletons: locally optimal, aggregation is identity
        new_members: dict = defaultdict(list)
        for u, c in comm_of.items():
            new_members[c].extend(members[u])
        members = {c: sorted(v) for c, v in new_members.items()}
        current = _aggregate(current, comm_of)

    return sorted(members.values(), key=lambda g: (-len(g), g[0]))


def louvain_communities(
    adj: dict,
    resolution: float = 1.0,
    seed: int = 0,
    restarts: int = 8,
) -> list[list]:
    """Best partition over seeded restarts, as sorted lists of nodes,
    ordered largest community first, then by smallest member.

    Restart 0 always starts from sorted-order singletons, so restarts=1
    gives the canonical deterministic pass. Later restarts draw shuffled
    visitation orders (odd) and additionally random initial partitions
    (even) from RNGs derived from the seed. The winning partition is then
    polished with exhaustive small-community splits and move passes.
    """
    if not adj:
        return []
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    work = _symmetrise(adj)
    nodes = sorted(work)

    best_groups: list[list] | None = None
    best_q = 0.0
    for rix in range(restarts):
        init = None
        order = None
        if rix > 0:
            rng = random.Random(derive_seed(seed, "louvain-restart", rix))
            order = list(nodes)
            rng.shuffle(order)
            if rix % 2 == 0:
                init = {u: nodes[rng.randrange(len(nodes))] for u in nodes}
        groups = _single_run(work, resolution, init, order)
        part = {u: ci for ci, grp in enumerate(groups) for u in grp}
        q = modularity(work, part, resolution)
        if best_groups is None or q > best_q + 1e-12:
            best_groups, best_q = groups, q
    assert best_groups is not None
    return _polish(work, best_groups, resolution)
