"""Hot loops over range-compressed transition graphs.

A graph on ``n`` nodes stores its edges as index ranges: node ``v`` has edges
to every ``j`` with ``rstart[r] <= j < rstop[r]`` for ``r`` in
``indptr[v]:indptr[v + 1]``.  Because the image of a box is a box, and covers
are kept in lexicographic key order, this representation stays linear in the
number of boxes even when each image hits thousands of boxes.

Forward search removes visited nodes from a "next alive index" union-find so
every node is discovered once.  Reverse search (who has an edge into ``x``?)
uses a max segment tree over ranges sorted by start.  Both are combined in a
Kosaraju SCC pass.

Everything here is numba-compatible; see ``_jit`` for the fallback switch.
"""

import numpy as np

from ._jit import jit

# ---------------------------------------------------------------- key ranges


@jit
def piece_key_ranges(kmin, kmax, depth):
    """Flatten coordinate boxes into runs of consecutive grid keys.

    ``kmin``/``kmax`` are inclusive per-axis coordinate bounds, shape (m, d).
    Returns ``(piece, key_lo, key_hi)`` with exclusive ``key_hi``; one run per
    combination of the leading d-1 coordinates.
    """
    m, d = kmin.shape
    total = 0
    for p in range(m):
        cnt = 1
        for a in range(d - 1):
            cnt *= kmax[p, a] - kmin[p, a] + 1
        total += cnt
    piece = np.empty(total, np.int64)
    key_lo = np.empty(total, np.int64)
    key_hi = np.empty(total, np.int64)
    cur = np.empty(d, np.int64)
    out = 0
    for p in range(m):
        for a in range(d):
            cur[a] = kmin[p, a]
        while True:
            prefix = np.int64(0)
            for a in range(d - 1):
                prefix = (prefix << depth) | cur[a]
            base = prefix << depth
            piece[out] = p
            key_lo[out] = base + kmin[p, d - 1]
            key_hi[out] = base + kmax[p, d - 1] + 1
            out += 1
            # odometer over the leading axes
            a = d - 2
            while a >= 0:
                cur[a] += 1
                if cur[a] <= kmax[p, a]:
                    break
                cur[a] = kmin[p, a]
                a -= 1
            if a < 0:
                break
    return piece, key_lo, key_hi


@jit
def merge_owned_ranges(owner, start, stop, n):
    """Sort ranges by (owner, start), drop empties and merge overlaps.

    Returns ``(indptr, rstart, rstop)``.
    """
    keep = 0
    for r in range(owner.shape[0]):
        if stop[r] > start[r]:
            keep += 1
    o = np.empty(keep, np.int64)
    s = np.empty(keep, np.int64)
    t = np.empty(keep, np.int64)
    k = 0
    for r in range(owner.shape[0]):
        if stop[r] > start[r]:
            o[k] = owner[r]
            s[k] = start[r]
            t[k] = stop[r]
            k += 1
    order = np.argsort(o * (np.int64(n) + 1) + s, kind="mergesort")
    rstart = np.empty(keep, np.int64)
    rstop = np.empty(keep, np.int64)
    counts = np.zeros(n + 1, np.int64)
    out = -1
    last_owner = -1
    for idx in range(keep):
        r = order[idx]
        if o[r] == last_owner and s[r] <= rstop[out]:
            if t[r] > rstop[out]:
                rstop[out] = t[r]
        else:
            out += 1
            rstart[out] = s[r]
            rstop[out] = t[r]
            counts[o[r] + 1] += 1
            last_owner = o[r]
    indptr = np.cumsum(counts)
    return indptr, rstart[: out + 1].copy(), rstop[: out + 1].copy()


# ---------------------------------------------------------- skip structure


@jit
def _find(nxt, i):
    root = i
    while nxt[root] != root:
        root = nxt[root]
    while nxt[i] != root:
        j = nxt[i]
        nxt[i] = root
        i = j
    return root


@jit
def _remove(nxt, i):
    nxt[i] = i + 1


# ----------------------------------------------------------- segment tree


@jit
def _seg_build(rstop_sorted):
    m = rstop_sorted.shape[0]
    size = 1
    while size < max(m, 1):
        size *= 2
    tree = np.full(2 * size, -1, np.int64)
    for p in range(m):
        tree[size + p] = rstop_sorted[p]
    for node in range(size - 1, 0, -1):
        tree[node] = max(tree[2 * node], tree[2 * node + 1])
    return tree, size


@jit
def _seg_kill(tree, size, pos):
    node = size + pos
    tree[node] = -1
    node //= 2
    while node >= 1:
        tree[node] = max(tree[2 * node], tree[2 * node + 1])
        node //= 2


@jit
def _seg_find(tree, size, prefix, v, stack):
    """Leftmost position < prefix whose stored stop exceeds v, or -1."""
    if prefix <= 0 or tree[1] <= v:
        return -1
    # stack holds (node, lo, hi) triples
    sp = 0
    stack[0] = 1
    stack[1] = 0
    stack[2] = size
    sp = 3
    while sp > 0:
        sp -= 3
        node = stack[sp]
        lo = stack[sp + 1]
        hi = stack[sp + 2]
        if lo >= prefix or tree[node] <= v:
            continue
        if hi - lo == 1:
            return lo
        mid = (lo + hi) // 2
        # push right first so the left child is explored first
        stack[sp] = 2 * node + 1
        stack[sp + 1] = mid
        stack[sp + 2] = hi
        stack[sp + 3] = 2 * node
        stack[sp + 4] = lo
        stack[sp + 5] = mid
        sp += 6
    return -1


@jit
def _reverse_index(indptr, rstart, rstop):
    n = indptr.shape[0] - 1
    m = rstart.shape[0]
    owner = np.empty(m, np.int64)
    for v in range(n):
        for r in range(indptr[v], indptr[v + 1]):
            owner[r] = v
    order = np.argsort(rstart, kind="mergesort")
    pos_of = np.empty(m, np.int64)
    for p in range(m):
        pos_of[order[p]] = p
    start_sorted = rstart[order]
    tree, size = _seg_build(rstop[order])
    return owner, order, pos_of, start_sorted, tree, size


@jit
def _kill_node(tree, size, pos_of, indptr, u):
    for r in range(indptr[u], indptr[u + 1]):
        _seg_kill(tree, size, pos_of[r])


# ------------------------------------------------------------ reachability


@jit
def forward_closure(indptr, rstart, rstop, seed, max_steps):
    """Nodes reachable from ``seed`` by walks of length 0..max_steps.

    ``max_steps < 0`` means unbounded.
    """
    n = indptr.shape[0] - 1
    nxt = np.arange(n + 1)
    seen = np.zeros(n, np.bool_)
    front = np.empty(n, np.int64)
    nfront = 0
    for v in range(n):
        if seed[v]:
            seen[v] = True
            _remove(nxt, v)
            front[nfront] = v
            nfront += 1
    nxt_front = np.empty(n, np.int64)
    steps = 0
    while nfront > 0 and (max_steps < 0 or steps < max_steps):
        nnew = 0
        for q in range(nfront):
            v = front[q]
            for r in range(indptr[v], indptr[v + 1]):
                j = _find(nxt, rstart[r])
                while j < rstop[r]:
                    seen[j] = True
                    _remove(nxt, j)
                    nxt_front[nnew] = j
                    nnew += 1
                    j = _find(nxt, j + 1)
        front, nxt_front = nxt_front, front
        nfront = nnew
        steps += 1
    return seen


@jit
def reverse_closure(indptr, rstart, rstop, seed, max_steps):
    """Nodes that reach ``seed`` by walks of length 0..max_steps."""
    n = indptr.shape[0] - 1
    owner, order, pos_of, start_sorted, tree, size = _reverse_index(indptr, rstart, rstop)
    stack = np.empty(3 * 2 * (64 + 2), np.int64)
    seen = np.zeros(n, np.bool_)
    front = np.empty(n, np.int64)
    nfront = 0
    for v in range(n):
        if seed[v]:
            seen[v] = True
            _kill_node(tree, size, pos_of, indptr, v)
            front[nfront] = v
            nfront += 1
    nxt_front = np.empty(n, np.int64)
    steps = 0
    while nfront > 0 and (max_steps < 0 or steps < max_steps):
        nnew = 0
        for q in range(nfront):
            x = front[q]
            prefix = np.searchsorted(start_sorted, x, side="right")
            while True:
                p = _seg_find(tree, size, prefix, x, stack)
                if p < 0:
                    break
                u = owner[order[p]]
                seen[u] = True
                _kill_node(tree, size, pos_of, indptr, u)
                nxt_front[nnew] = u
                nnew += 1
        front, nxt_front = nxt_front, front
        nfront = nnew
        steps += 1
    return seen


@jit
def forward_image(indptr, rstart, rstop, seed):
    """Exact one-step image: the set of direct successors of ``seed``."""
    n = indptr.shape[0] - 1
    nxt = np.arange(n + 1)
    hit = np.zeros(n, np.bool_)
    for v in range(n):
        if seed[v]:
            for r in range(indptr[v], indptr[v + 1]):
                j = _find(nxt, rstart[r])
                while j < rstop[r]:
                    hit[j] = True
                    _remove(nxt, j)
                    j = _find(nxt, j + 1)
    return hit


@jit
def reverse_image(indptr, rstart, rstop, seed):
    """Exact one-step preimage: nodes with an edge into ``seed``."""
    n = indptr.shape[0] - 1
    owner, order, pos_of, start_sorted, tree, size = _reverse_index(indptr, rstart, rstop)
    stack = np.empty(3 * 2 * (64 + 2), np.int64)
    hit = np.zeros(n, np.bool_)
    for x in range(n):
        if not seed[x]:
            continue
        prefix = np.searchsorted(start_sorted, x, side="right")
        while True:
            p = _seg_find(tree, size, prefix, x, stack)
            if p < 0:
                break
            u = owner[order[p]]
            hit[u] = True
            _kill_node(tree, size, pos_of, indptr, u)
    return hit


# --------------------------------------------------------------------- SCC


@jit
def scc(indptr, rstart, rstop):
    """Kosaraju strongly connected components.

    Returns ``(comp, ncomp)``; component ids follow a topological order of
    the condensation (sources first).
    """
    n = indptr.shape[0] - 1
    nxt = np.arange(n + 1)
    order = np.empty(n, np.int64)
    nord = 0
    stack_v = np.empty(n, np.int64)
    stack_r = np.empty(n, np.int64)
    s = _find(nxt, 0)
    while s < n:
        _remove(nxt, s)
        sp = 0
        stack_v[0] = s
        stack_r[0] = indptr[s]
        sp = 1
        while sp > 0:
            v = stack_v[sp - 1]
            r = stack_r[sp - 1]
            if r < indptr[v + 1]:
                j = _find(nxt, rstart[r])
                if j < rstop[r]:
                    _remove(nxt, j)
                    stack_v[sp] = j
                    stack_r[sp] = indptr[j]
                    sp += 1
                else:
                    stack_r[sp - 1] = r + 1
            else:
                sp -= 1
                order[nord] = v
                nord += 1
        s = _find(nxt, s)

    owner, rorder, pos_of, start_sorted, tree, size = _reverse_index(indptr, rstart, rstop)
    stack = np.empty(3 * 2 * (64 + 2), np.int64)
    comp = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    ncomp = 0
    for idx in range(n - 1, -1, -1):
        root = order[idx]
        if comp[root] >= 0:
            continue
        comp[root] = ncomp
        _kill_node(tree, size, pos_of, indptr, root)
        head = 0
        tail = 1
        queue[0] = root
        while head < tail:
            x = queue[head]
            head += 1
            prefix = np.searchsorted(start_sorted, x, side="right")
            while True:
                p = _seg_find(tree, size, prefix, x, stack)
                if p < 0:
                    break
                u = owner[rorder[p]]
                comp[u] = ncomp
                _kill_node(tree, size, pos_of, indptr, u)
                queue[tail] = u
                tail += 1
        ncomp += 1
    return comp, ncomp


@jit
def self_loops(indptr, rstart, rstop):
    n = indptr.shape[0] - 1
    out = np.zeros(n, np.bool_)
    for v in range(n):
        for r in range(indptr[v], indptr[v + 1]):
            if rstart[r] <= v and v < rstop[r]:
                out[v] = True
                break
    return out
