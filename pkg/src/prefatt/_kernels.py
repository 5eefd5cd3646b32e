"""Numba inner loops for the growth processes.

Every process keeps an endpoint pool: an append-only int32 array in which
vertex j occurs once per unit of attachment weight (in-degree or degree).
Weights only ever grow by one unit per elementary event, so preferential
sampling is a single uniform index draw into the pool and the pool is never
compacted. Uniforms are drawn inline from the numpy Generator that is passed
in; the draw order is part of the reproducibility contract:

  simon:        per event: u_branch, then u_target only on edge events
  genealogy:    per event: u_pick, u_branch, then u_target only on edge events
  iipa / ba-*:  one uniform per edge event, none for vertex creation
  price:        one uniform per target draw, redrawn on duplicate rejection

Checkpoint rows hold counts for k = 1..k_limit in columns 1..k_limit, the
count of vertices beyond k_limit in column k_limit+1 (column 0 is unused).
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_BAD_DENOMINATOR = 1


@njit(cache=True, inline="always")
def _draw_index(rng, size):
    # uniform index in [0, size); guard the (measure-zero) u*size == size case
    idx = np.int64(rng.random() * size)
    if idx >= size:
        idx = size - 1
    return idx


@njit(cache=True)
def _snapshot(values, n, row):
    # bin values[0:n] into row: columns 1..k_limit, overflow in the last column
    k_limit = row.shape[0] - 2
    for i in range(row.shape[0]):
        row[i] = 0
    for v in range(n):
        k = values[v]
        if k <= k_limit:
            row[k] += 1
        else:
            row[k_limit + 1] += 1


@njit(cache=True)
def simon_kernel(rng, t_target, alpha, pool, indeg, birth, is_new, actor,
                 cp_times, cp_counts, cp_vcount):
    """Simon growth to time t_target. Returns (n_vertices, last_vertex)."""
    pool[0] = 0
    indeg[0] = 1
    birth[0] = 1
    is_new[0] = 1
    actor[0] = 0
    n = 1
    last = 0
    ci = 0
    if cp_times.shape[0] > 0 and cp_times[0] == 1:
        _snapshot(indeg, n, cp_counts[0])
        cp_vcount[0] = n
        ci = 1
    for i in range(1, t_target):
        # event at time i+1; pool[0:i] holds the in-degree mass of state i
        if rng.random() < alpha:
            v = n
            n += 1
            pool[i] = v
            indeg[v] = 1
            birth[v] = i + 1
            is_new[i] = 1
            actor[i] = v
            last = v
        else:
            j = pool[_draw_index(rng, i)]
            pool[i] = j
            indeg[j] += 1
            is_new[i] = 0
            actor[i] = j
        if ci < cp_times.shape[0] and cp_times[ci] == i + 1:
            _snapshot(indeg, n, cp_counts[ci])
            cp_vcount[ci] = n
            ci += 1
    return n, last


@njit(cache=True)
def simon_genealogy_kernel(rng, t_target, alpha, pool, indeg, birth, is_new,
                           actor, parent):
    """Duplication form of the Simon process: the same graph law, but each
    new vertex is assigned a uniformly chosen existing vertex as parent."""
    pool[0] = 0
    indeg[0] = 1
    birth[0] = 1
    is_new[0] = 1
    actor[0] = 0
    parent[0] = -1
    n = 1
    last = 0
    for i in range(1, t_target):
        p = np.int32(_draw_index(rng, n))  # uniform existing vertex
        if rng.random() < alpha:
            v = n
            n += 1
            pool[i] = v
            indeg[v] = 1
            birth[v] = i + 1
            parent[v] = p
            is_new[i] = 1
            actor[i] = v
            last = v
        else:
            j = pool[_draw_index(rng, i)]
            pool[i] = j
            indeg[j] += 1
            is_new[i] = 0
            actor[i] = j
    return n, last


@njit(cache=True)
def iipa_kernel(rng, n_target, m, pool, indeg, birth, is_new, actor,
                cp_nverts, cp_counts, cp_vcount):
    """II-PA growth to n_target complete vertices (t = n_target*(m+1)).

    Vertex n arrives with a directed loop at t = (n-1)*(m+1)+1 and then emits
    m directed edges, each targeting any existing vertex (itself included)
    with probability proportional to current in-degree.
    """
    period = m + 1
    t_total = n_target * period
    pool[0] = 0
    indeg[0] = 1
    birth[0] = 1
    is_new[0] = 1
    actor[0] = 0
    n = 1
    ci = 0
    for i in range(1, t_total):
        if i % period == 0:
            v = n
            n += 1
            pool[i] = v
            indeg[v] = 1
            birth[v] = i + 1
            is_new[i] = 1
            actor[i] = v
        else:
            j = pool[_draw_index(rng, i)]
            pool[i] = j
            indeg[j] += 1
            is_new[i] = 0
            actor[i] = j
            if (i + 1) % period == 0:
                # a vertex just became complete
                if ci < cp_nverts.shape[0] and cp_nverts[ci] == (i + 1) // period:
                    _snapshot(indeg, n, cp_counts[ci])
                    cp_vcount[ci] = n
                    ci += 1
    return n


@njit(cache=True)
def ba_single_kernel(rng, n_target, pool, deg, birth, target, cp_times,
                     cp_counts, cp_vcount):
    """Single-edge Barabasi-Albert process: at each step one new vertex and
    one edge, the target drawn by degree with the newborn counted at weight 1.
    """
    deg[0] = 2
    pool[0] = 0
    pool[1] = 0
    birth[0] = 1
    target[0] = 0
    n = 1
    ci = 0
    if cp_times.shape[0] > 0 and cp_times[0] == 1:
        _snapshot(deg, n, cp_counts[0])
        cp_vcount[0] = n
        ci = 1
    for t in range(1, n_target):
        v = t
        pool[2 * t] = v            # the newborn's 1/(2t+1) share
        j = pool[_draw_index(rng, 2 * t + 1)]
        pool[2 * t + 1] = j
        if j == v:
            deg[v] = 2             # loop counts twice
        else:
            deg[v] = 1
            deg[j] += 1
        birth[v] = t + 1
        target[t] = j
        n += 1
        if ci < cp_times.shape[0] and cp_times[ci] == t + 1:
            _snapshot(deg, n, cp_counts[ci])
            cp_vcount[ci] = n
            ci += 1
    return n


@njit(cache=True)
def ba_rescaled_kernel(rng, n_target, m, pool, deg, birth, is_new, actor,
                       cp_nverts, cp_counts, cp_vcount):
    """Per-edge Barabasi-Albert construction: vertex n arrives bare at
    t = (n-1)*(m+1)+1, then emits m edges; at each edge the self weight is
    degree+1 so the probabilities sum to one exactly. Returns (n, status);
    status != 0 means the pool size disagreed with the closed-form
    denominator and the run must abort.
    """
    period = m + 1
    t_total = n_target * period
    deg[0] = 0
    birth[0] = 1
    is_new[0] = 1
    actor[0] = 0
    n = 1
    psize = 0
    ci = 0
    for i in range(1, t_total):
        if i % period == 0:
            v = n
            n += 1
            deg[v] = 0
            birth[v] = i + 1
            is_new[i] = 1
            actor[i] = v
        else:
            v = n - 1                       # newborn emitting this edge
            pool[psize] = v                 # degree+1 self share
            psize += 1
            sub = i % period + 1            # i = nblock*period + (sub-1)
            nblock = i // period
            denom = 2 * (m * nblock + sub - 1) - 1
            if psize != denom:
                return n, STATUS_BAD_DENOMINATOR
            j = pool[_draw_index(rng, psize)]
            pool[psize] = j
            psize += 1
            if j == v:
                deg[v] += 2
            else:
                deg[v] += 1
                deg[j] += 1
            is_new[i] = 0
            actor[i] = j
            if (i + 1) % period == 0:
                if ci < cp_nverts.shape[0] and cp_nverts[ci] == (i + 1) // period:
                    _snapshot(deg, n, cp_counts[ci])
                    cp_vcount[ci] = n
                    ci += 1
    return n, STATUS_OK


@njit(cache=True)
def price_kernel(rng, n_target, k0, m_values, pool, indeg, birth, taken,
                 batch):
    """Price growth to n_target vertices.

    Vertex 1 starts with m_values[0] + k0 directed loops. Each later vertex
    n+1 brings k0 loops plus min(m_values[n], n) edges to distinct old
    vertices, drawn proportional to in-degrees frozen at the start of the
    batch (duplicates rejected and redrawn). Returns (pool_size,
    truncated_batches).
    """
    w0 = m_values[0] + k0
    indeg[0] = w0
    birth[0] = 1
    for e in range(w0):
        pool[e] = 0
    psize = w0
    n = 1
    truncated = 0
    for b in range(1, n_target):
        mu = m_values[b]
        take = mu
        if take > n:
            take = n
            truncated += 1
        frozen = psize
        for e in range(take):
            while True:
                j = pool[_draw_index(rng, frozen)]
                if taken[j] == 0:
                    break
            taken[j] = 1
            batch[e] = j
        v = n
        n += 1
        indeg[v] = k0
        birth[v] = b + 1
        for e in range(k0):
            pool[psize] = v
            psize += 1
        for e in range(take):
            j = batch[e]
            taken[j] = 0
            indeg[j] += 1
            pool[psize] = j
            psize += 1
    return psize, truncated


@njit(cache=True)
def genus_births_kernel(rng, beta, horizon, times, start_count, start_acc):
    """Pure-birth genus arrivals at rate beta * count, resumable.

    Fills `times` from start_count with arrival epochs <= horizon.
    Returns (count, acc, done); done == 0 means the buffer filled up and the
    caller must grow it and call again with the returned state.
    """
    g = start_count
    acc = start_acc
    cap = times.shape[0]
    while True:
        acc += rng.standard_exponential() / (beta * g)
        if acc > horizon:
            return g, acc, 1
        if g >= cap:
            return g, acc, 0
        times[g] = acc
        g += 1


@njit(cache=True)
def genus_sizes_kernel(rng, lam, durations, sizes, species_budget):
    """Grow one Yule(lam) population per entry for its duration.

    Waits are exponential at rate lam * size, per the inter-event
    construction. Returns total births, or -1 if species_budget would be
    exceeded.
    """
    total = 0
    for g in range(durations.shape[0]):
        s = durations[g]
        size = 1
        acc = rng.standard_exponential() / lam
        while acc <= s:
            size += 1
            total += 1
            if total > species_budget:
                return -1
            acc += rng.standard_exponential() / (lam * size)
        sizes[g] = size
    return total


@njit(cache=True)
def resolve_roots_kernel(parent, birth, t_star, root):
    """Map each vertex to its ancestor alive at time t_star."""
    for v in range(parent.shape[0]):
        if birth[v] <= t_star:
            root[v] = v
        else:
            root[v] = root[parent[v]]


# ---------------------------------------------------------------------------
# Tiny-instance Monte Carlo kernels for the exact-enumeration cross checks.
# The terminal weight multiset is sorted and packed 5 bits per entry, which
# is enough for any process of <= 12 elementary events.
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _pack_sorted(values, n):
    # insertion sort then pack (n <= 12, values <= 31)
    for a in range(1, n):
        x = values[a]
        b = a - 1
        while b >= 0 and values[b] > x:
            values[b + 1] = values[b]
            b -= 1
        values[b + 1] = x
    key = np.int64(0)
    for a in range(n):
        key = (key << 5) | np.int64(values[a])
    return key


@njit(cache=True)
def simon_mc_kernel(rng, reps, t_target, alpha, keys):
    pool = np.empty(t_target, dtype=np.int32)
    indeg = np.empty(t_target, dtype=np.int64)
    for r in range(reps):
        pool[0] = 0
        indeg[0] = 1
        n = 1
        for i in range(1, t_target):
            if rng.random() < alpha:
                pool[i] = n
                indeg[n] = 1
                n += 1
            else:
                j = pool[_draw_index(rng, i)]
                pool[i] = j
                indeg[j] += 1
        keys[r] = _pack_sorted(indeg, n)


@njit(cache=True)
def iipa_mc_kernel(rng, reps, n_target, m, keys):
    period = m + 1
    t_total = n_target * period
    pool = np.empty(t_total, dtype=np.int32)
    indeg = np.empty(n_target, dtype=np.int64)
    for r in range(reps):
        pool[0] = 0
        indeg[0] = 1
        n = 1
        for i in range(1, t_total):
            if i % period == 0:
                pool[i] = n
                indeg[n] = 1
                n += 1
            else:
                j = pool[_draw_index(rng, i)]
                pool[i] = j
                indeg[j] += 1
        keys[r] = _pack_sorted(indeg, n)


@njit(cache=True)
def ba_single_mc_kernel(rng, reps, t_target, keys):
    pool = np.empty(2 * t_target, dtype=np.int32)
    deg = np.empty(t_target, dtype=np.int64)
    for r in range(reps):
        deg[0] = 2
        pool[0] = 0
        pool[1] = 0
        n = 1
        for t in range(1, t_target):
            v = t
            pool[2 * t] = v
            j = pool[_draw_index(rng, 2 * t + 1)]
            pool[2 * t + 1] = j
            if j == v:
                deg[v] = 2
            else:
                deg[v] = 1
                deg[j] += 1
            n += 1
        keys[r] = _pack_sorted(deg, n)


@njit(cache=True)
def ba_rescaled_mc_kernel(rng, reps, n_target, m, keys):
    period = m + 1
    t_total = n_target * period
    pool = np.empty(2 * m * n_target, dtype=np.int32)
    deg = np.empty(n_target, dtype=np.int64)
    for r in range(reps):
        deg[0] = 0
        n = 1
        psize = 0
        for i in range(1, t_total):
            if i % period == 0:
                deg[n] = 0
                n += 1
            else:
                v = n - 1
                pool[psize] = v
                psize += 1
                j = pool[_draw_index(rng, psize)]
                pool[psize] = j
                psize += 1
                if j == v:
                    deg[v] += 2
                else:
                    deg[v] += 1
                    deg[j] += 1
        keys[r] = _pack_sorted(deg, n)


@njit(cache=True)
def price_mc_kernel(rng, reps, n_target, k0, m_const, keys):
    cap = n_target * (k0 + m_const)
    pool = np.empty(cap, dtype=np.int32)
    indeg = np.empty(n_target, dtype=np.int64)
    taken = np.zeros(n_target, dtype=np.uint8)
    batch = np.empty(m_const, dtype=np.int32)
    for r in range(reps):
        w0 = m_const + k0
        indeg[0] = w0
        for e in range(w0):
            pool[e] = 0
        psize = w0
        n = 1
        for b in range(1, n_target):
            take = m_const if m_const <= n else n
            frozen = psize
            for e in range(take):
                while True:
                    j = pool[_draw_index(rng, frozen)]
                    if taken[j] == 0:
                        break
                taken[j] = 1
                batch[e] = j
            indeg[n] = k0
            n += 1
            for e in range(k0):
                pool[psize] = n - 1
                psize += 1
            for e in range(take):
                j = batch[e]
                taken[j] = 0
                indeg[j] += 1
                pool[psize] = j
                psize += 1
        keys[r] = _pack_sorted(indeg, n)


@njit(cache=True)
def simon_vcount_mc_kernel(rng, reps, t_target, alpha, vcounts):
    """Vertex counts only, for the binomial growth check."""
    for r in range(reps):
        n = 1
        for i in range(1, t_target):
            if rng.random() < alpha:
                n += 1
            else:
                rng.random()  # target draw, identical stream shape
        vcounts[r] = n
