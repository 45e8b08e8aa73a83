"""Independent reference models used as test oracles.

Each oracle computes its answer a different way from the production code:
cycle-stepping instead of closed forms, exhaustive enumeration instead of a
direct construction, event simulation instead of reservation arithmetic.
"""

from __future__ import annotations

import heapq
import itertools
import math
from functools import lru_cache

import numpy as np


# --------------------------------------------------------------------------
# PE-level systolic array simulator
# --------------------------------------------------------------------------

def simulate_os(a: np.ndarray, b: np.ndarray, rows: int, cols: int) -> tuple[np.ndarray, np.ndarray]:
    """Output-stationary folds, batched on the leading axis.

    ``a`` is (batch, rows, k) and ``b`` is (batch, k, cols), already
    zero-padded to the array.  A rows enter from the left and B columns from
    the top, skewed by row/column index and shifted one PE per cycle.
    Returns (per-fold cycles until every PE has done its last MAC,
    accumulated outputs).
    """
    batch, _, k = a.shape
    a_reg = np.zeros((batch, rows, cols), dtype=np.int64)
    b_reg = np.zeros_like(a_reg)
    a_ok = np.zeros((batch, rows, cols), dtype=bool)
    b_ok = np.zeros_like(a_ok)
    acc = np.zeros_like(a_reg)
    macs = np.zeros_like(a_reg)
    done_at = np.full(batch, -1)
    ri, ci = np.arange(rows), np.arange(cols)
    cycle = 0
    while (done_at < 0).any():
        a_reg[:, :, 1:], a_ok[:, :, 1:] = a_reg[:, :, :-1].copy(), a_ok[:, :, :-1].copy()
        b_reg[:, 1:, :], b_ok[:, 1:, :] = b_reg[:, :-1, :].copy(), b_ok[:, :-1, :].copy()
        s = cycle - ri  # reduction index arriving at column 0 of each row
        live = (s >= 0) & (s < k)
        a_reg[:, :, 0] = np.where(live, a[:, ri, np.clip(s, 0, k - 1)], 0)
        a_ok[:, :, 0] = live
        s = cycle - ci
        live = (s >= 0) & (s < k)
        b_reg[:, 0, :] = np.where(live, b[:, np.clip(s, 0, k - 1), ci], 0)
        b_ok[:, 0, :] = live
        fire = a_ok & b_ok
        acc += np.where(fire, a_reg * b_reg, 0)
        macs += fire
        cycle += 1
        finished = (macs.reshape(batch, -1).min(axis=1) >= k) & (done_at < 0)
        done_at[finished] = cycle
    return done_at, acc


def simulate_stationary(stat: np.ndarray, vec: np.ndarray, rows: int, cols: int,
                        stream_along_rows: bool) -> tuple[np.ndarray, np.ndarray]:
    """Weight- or input-stationary folds, batched on the leading axis.

    ``stat`` (batch, rows, cols) is loaded one array row per cycle.  ``vec``
    (batch, n_vec, lanes) holds the streamed vectors; vector t enters lane i
    at cycle t + i + 1.  Partial sums travel orthogonally to the stream and
    leave at the far edge.  With ``stream_along_rows`` elements move right
    and partial sums move down (weight stationary); otherwise elements move
    down and partial sums move right (input stationary).  Returns (per-fold
    cycles until the last result leaves, results (batch, n_vec, out_lanes)).
    """
    batch, n_vec, lanes = vec.shape
    out_lanes = cols if stream_along_rows else rows
    loaded = np.zeros(rows, dtype=bool)
    x_reg = np.zeros((batch, rows, cols), dtype=np.int64)
    x_tag = np.full((rows, cols), -1)  # timing is identical across the batch
    p_reg = np.zeros_like(x_reg)
    p_tag = np.full((rows, cols), -1)
    results = np.zeros((batch, n_vec, out_lanes), dtype=np.int64)
    collected = np.zeros((n_vec, out_lanes), dtype=bool)
    first = np.zeros((rows, cols), dtype=bool)
    if stream_along_rows:
        first[0, :] = True
    else:
        first[:, 0] = True
    lane_idx, out_idx = np.arange(lanes), np.arange(out_lanes)
    cycle = 0
    while not collected.all():
        if cycle < rows:
            loaded[cycle] = True
        t = cycle - lane_idx - 1
        live = (t >= 0) & (t < n_vec)
        inject = np.where(live, vec[:, np.clip(t, 0, n_vec - 1), lane_idx], 0)
        if stream_along_rows:
            x_reg[:, :, 1:], x_tag[:, 1:] = x_reg[:, :, :-1].copy(), x_tag[:, :-1].copy()
            x_reg[:, :, 0], x_tag[:, 0] = inject, np.where(live, t, -1)
            p_in = np.concatenate([np.zeros((batch, 1, cols), dtype=np.int64), p_reg[:, :-1, :]], axis=1)
            p_in_tag = np.vstack([np.full((1, cols), -2), p_tag[:-1, :]])
        else:
            x_reg[:, 1:, :], x_tag[1:, :] = x_reg[:, :-1, :].copy(), x_tag[:-1, :].copy()
            x_reg[:, 0, :], x_tag[0, :] = inject, np.where(live, t, -1)
            p_in = np.concatenate([np.zeros((batch, rows, 1), dtype=np.int64), p_reg[:, :, :-1]], axis=2)
            p_in_tag = np.hstack([np.full((rows, 1), -2), p_tag[:, :-1]])
        fire = x_tag >= 0
        assert (loaded[:, None] | ~fire).all(), "stationary operand used before it was loaded"
        assert (first | (p_in_tag == x_tag) | ~fire).all(), "partial sum out of step"
        p_reg = np.where(fire, np.where(first, 0, p_in) + stat * x_reg, 0)
        p_tag = np.where(fire, x_tag, -1)
        edge_vals = p_reg[:, -1, :] if stream_along_rows else p_reg[:, :, -1]
        edge_tags = p_tag[-1, :] if stream_along_rows else p_tag[:, -1]
        out = edge_tags >= 0
        results[:, edge_tags[out], out_idx[out]] = edge_vals[:, out]
        collected[edge_tags[out], out_idx[out]] = True
        cycle += 1
    return np.full(batch, cycle), results


_RNG = np.random.default_rng(12345)


@lru_cache(maxsize=None)
def fold_sims(rows: int, cols: int, dataflow: str, stream: int) -> dict[tuple[int, int], int]:
    """Simulate every resident-block shape d1 x d2 (d1 <= rows, d2 <= cols) at once.

    The resident block is the output block for OS, the weights for WS and
    the inputs for IS; ``stream`` is the length of the remaining dimension.
    Every fold's numerical result is checked against a plain matmul.
    Returns {(d1, d2): cycles}.
    """
    shapes = [(d1, d2) for d1 in range(1, rows + 1) for d2 in range(1, cols + 1)]
    batch = len(shapes)
    x = _RNG.integers(-4, 5, (batch, rows, cols))
    y = _RNG.integers(-4, 5, (batch, max(rows, cols), stream))
    mask = np.zeros((batch, rows, cols), dtype=bool)
    for i, (d1, d2) in enumerate(shapes):
        mask[i, :d1, :d2] = True
    if dataflow == "OS":
        a = np.zeros((batch, rows, stream), dtype=np.int64)
        b = np.zeros((batch, stream, cols), dtype=np.int64)
        for i, (d1, d2) in enumerate(shapes):
            a[i, :d1] = y[i, :d1]
            b[i, :, :d2] = _RNG.integers(-4, 5, (stream, d2))
        cycles, got = simulate_os(a, b, rows, cols)
        want = np.einsum("bik,bkj->bij", a, b)
    elif dataflow == "WS":
        w = np.where(mask, x, 0)
        vec = np.zeros((batch, stream, rows), dtype=np.int64)
        for i, (d1, _) in enumerate(shapes):
            vec[i, :, :d1] = y[i, :d1, :].T
        cycles, got = simulate_stationary(w, vec, rows, cols, stream_along_rows=True)
        want = np.einsum("btr,brc->btc", vec, w)
    else:
        a_st = np.where(mask, x, 0)
        vec = np.zeros((batch, stream, cols), dtype=np.int64)
        for i, (_, d2) in enumerate(shapes):
            vec[i, :, :d2] = y[i, :d2, :].T
        cycles, got = simulate_stationary(a_st, vec, rows, cols, stream_along_rows=False)
        want = np.einsum("brc,btc->btr", a_st, vec)
    assert np.array_equal(got, want), f"{dataflow} fold on {rows}x{cols} computed a wrong result"
    return {shape: int(c) for shape, c in zip(shapes, cycles)}


def fold_sim(rows: int, cols: int, dataflow: str, d1: int, d2: int, stream: int) -> int:
    return fold_sims(rows, cols, dataflow, stream)[(d1, d2)]


def _pieces(total: int, size: int) -> list[tuple[int, int]]:
    """(piece length, how many) for cutting ``total`` into chunks of ``size``."""
    out = []
    if total // size:
        out.append((size, total // size))
    if total % size:
        out.append((total % size, 1))
    return out


def tile_cycles_oracle(rows: int, cols: int, m: int, k: int, n: int, dataflow: str,
                       sim=fold_sim) -> int:
    """Cycle count of one tile as the sum of simulated folds."""
    if dataflow == "OS":
        d1, d2, stream = m, n, k
    elif dataflow == "WS":
        d1, d2, stream = k, n, m
    else:
        d1, d2, stream = m, k, n
    total = 0
    for p1, c1 in _pieces(d1, rows):
        for p2, c2 in _pieces(d2, cols):
            total += c1 * c2 * sim(rows, cols, dataflow, p1, p2, stream)
    return total


def tile_cycle_table(rows: int, cols: int, dataflow: str, max_dim: int) -> np.ndarray:
    """Oracle cycles for every tile (m, k, n) in 1..max_dim, indexed [m, k, n].

    Each tile dimension splits into full folds and one remainder fold;
    simulated fold times are summed over the resulting pieces.
    """
    folds = np.zeros((rows + 1, cols + 1, max_dim + 1), dtype=np.int64)
    for stream in range(1, max_dim + 1):
        for (d1, d2), c in fold_sims(rows, cols, dataflow, stream).items():
            folds[d1, d2, stream] = c
    d = np.arange(max_dim + 1)
    q1, r1 = d // rows, d % rows
    q2, r2 = d // cols, d % cols
    s = slice(None)
    by_split = (q1[:, None, None] * q2[None, :, None] * folds[rows, cols][None, None, :]
                + q1[:, None, None] * folds[rows][r2][None, :, :]
                + q2[None, :, None] * folds[:, cols][r1][:, None, :]
                + folds[r1[:, None], r2[None, :], s])
    # by_split is indexed [d1, d2, stream]; reorder to [m, k, n]
    if dataflow == "OS":
        return by_split.transpose(0, 2, 1)
    if dataflow == "WS":
        return by_split.transpose(2, 0, 1)
    return by_split


# --------------------------------------------------------------------------
# Tiling and assignment by direct enumeration
# --------------------------------------------------------------------------

def partition_oracle(total: int, base: int) -> list[int]:
    """Contiguous pieces of ``base`` with a shorter last piece, built one element at a time."""
    pieces, current = [], 0
    for _ in range(total):
        current += 1
        if current == base:
            pieces.append(current)
            current = 0
    if current:
        pieces.append(current)
    return pieces


def largest_fit_oracle(buffer_kb: float, bpe: int, K: int, M: int, N: int, split_k: bool):
    """Brute force: the largest square output block, and reduction depth, fitting three equal buffers."""
    cap = buffer_kb * 1024 / 3 / bpe
    best_k = K if not split_k else max(x for x in range(1, K + 1) if x * x <= cap)
    side = 0
    for s in itertools.count(1):
        if s * s > cap or s * best_k > cap:
            break
        side = s
    return min(M, side), best_k, min(N, side)


def apportion_oracle(powers: list[float], total: int, ascending: bool) -> list[int]:
    """Hand-execution of the proportional assignment, returned in input order."""
    order = sorted(range(len(powers)), key=lambda q: powers[q], reverse=not ascending)
    ps = [powers[q] for q in order]
    ideal = [p * total / sum(ps) for p in ps]
    floors = [int(math.floor(x + 1e-9)) for x in ideal]
    left = total - sum(floors)
    frac = [(round(x - f, 9), -pos) for pos, (x, f) in enumerate(zip(ideal, floors))]
    while left:
        pos = -max(frac)[1]
        floors[pos] += 1
        frac[pos] = (-1.0, -pos)
        left -= 1
    counts = [0] * len(powers)
    for pos, q in enumerate(order):
        counts[q] = floors[pos]
    return counts


# --------------------------------------------------------------------------
# Slicing-tree enumerator
# --------------------------------------------------------------------------

def _all_bipartitions(items: tuple[int, ...]):
    for size in range(1, len(items)):
        for left in itertools.combinations(items, size):
            yield left, tuple(i for i in items if i not in left)


def _imbalance(areas, left, right):
    return round(abs(sum(areas[i] for i in left) - sum(areas[i] for i in right)), 9)


def enumerate_slicing_trees(areas, items=None, depth=0):
    """Every slicing tree over ``items`` with either cut direction at every node.

    Yields (tree, width, height) where tree is nested tuples
    ``(direction, depth, left_tree, right_tree)`` or a leaf index.
    """
    if items is None:
        items = tuple(range(len(areas)))
    if len(items) == 1:
        side = math.sqrt(areas[items[0]])
        yield items[0], side, side
        return
    for left, right in _all_bipartitions(items):
        for lt, lw, lh in enumerate_slicing_trees(areas, left, depth + 1):
            for rt, rw, rh in enumerate_slicing_trees(areas, right, depth + 1):
                yield ("V", depth, lt, rt), lw + rw, max(lh, rh)
                yield ("H", depth, lt, rt), max(lw, rw), lh + rh


def _leaves(tree):
    if isinstance(tree, int):
        return (tree,)
    return _leaves(tree[2]) + _leaves(tree[3])


@lru_cache(maxsize=None)
def _best_split_key(areas: tuple, items: tuple):
    return min((_imbalance(areas, l, r), len(l), l) for l, r in _all_bipartitions(items))


def follows_balance_rule(tree, areas) -> bool:
    """Alternating cuts starting vertical; each split is the most balanced with the documented tie-breaks."""
    if isinstance(tree, int):
        return True
    direction, depth, lt, rt = tree
    if direction != ("V" if depth % 2 == 0 else "H"):
        return False
    left, right = tuple(sorted(_leaves(lt))), tuple(sorted(_leaves(rt)))
    if (_imbalance(areas, left, right), len(left), left) != _best_split_key(tuple(areas), tuple(sorted(left + right))):
        return False
    return follows_balance_rule(lt, areas) and follows_balance_rule(rt, areas)


def floorplan_oracle(areas) -> tuple[float, float]:
    """(width, height) of the unique slicing tree that follows the balance rule."""
    matches = [(w, h) for tree, w, h in enumerate_slicing_trees(areas) if follows_balance_rule(tree, areas)]
    assert len(matches) == 1, f"{len(matches)} trees satisfy the rule for {areas}"
    return matches[0]


# --------------------------------------------------------------------------
# Event-driven link simulator
# --------------------------------------------------------------------------

def simulate_links(n: int, edges: dict, destination: int, flows: dict) -> tuple[float, dict]:
    """Discrete-event simulation of flows over links with per-link FIFO queues.

    ``edges`` maps (a, b) with a < b to bandwidth in GB/s; ``flows`` maps a
    source node to bits.  Paths are shortest hop routes with lower-id
    preference.  A flow starts when it is at the head of the queue of every
    link on its path, and holds all of them until it completes.
    """
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    # shortest paths by exhaustive search over simple paths
    def best_path(src):
        best = None
        stack = [(src, (src,))]
        while stack:
            node, path = stack.pop()
            if node == destination:
                if best is None or (len(path), path) < (len(best), best):
                    best = path
                continue
            for nxt in adj[node]:
                if nxt not in path:
                    stack.append((nxt, path + (nxt,)))
        return best

    order = sorted(s for s, bits in flows.items() if bits > 0 and s != destination)
    paths = {s: best_path(s) for s in order}
    links = {s: [tuple(sorted(h)) for h in zip(paths[s], paths[s][1:])] for s in order}
    queues = {e: [s for s in order if e in links[s]] for e in edges}
    duration = {s: flows[s] / (min(edges[h] for h in links[s]) * 8e9) for s in order}

    now, done, running, windows = 0.0, set(), [], {}
    started = set()
    while len(done) < len(order):
        for s in order:
            if s in started:
                continue
            if all(queues[h] and queues[h][0] == s for h in links[s]):
                started.add(s)
                windows[s] = (now, now + duration[s])
                heapq.heappush(running, (now + duration[s], s))
        now, s = heapq.heappop(running)
        done.add(s)
        for h in links[s]:
            queues[h].pop(0)
    return max((w[1] for w in windows.values()), default=0.0), windows
