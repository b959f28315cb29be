# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled engine: permutation-trial loop and exhaustive subset search.

Bit-for-bit identical to revsel._engine.fallback; keep the two in lockstep.
"""

from libc.stdlib cimport free, malloc

ctypedef unsigned long long u64
ctypedef long long i64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline u64 mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline u64 substream(u64 seed, u64 index) nogil:
    return mix64(seed ^ mix64((index + 1) * GOLDEN))


cdef inline u64 next_u64(u64 *state) nogil:
    state[0] += GOLDEN
    return mix64(state[0])


cdef inline u64 randbelow(u64 *state, u64 n) nogil:
    # r = 2**64 mod n; accept z < 2**64 - r (always, when r == 0).
    cdef u64 r = ((<u64> 0) - n) % n
    cdef u64 z
    if r == 0:
        return next_u64(state) % n
    while True:
        z = next_u64(state)
        if z < (<u64> 0) - r:
            return z % n


cdef void fisher_yates(int *idx, int n, u64 seed, u64 trial) nogil:
    cdef int i, tmp
    cdef u64 state = substream(seed, trial)
    cdef int j
    for i in range(n):
        idx[i] = i
    for i in range(n - 1, 0, -1):
        j = <int> randbelow(&state, <u64> (i + 1))
        tmp = idx[i]
        idx[i] = idx[j]
        idx[j] = tmp


def permutation_raw(int n, seed, trial):
    """Trial permutation, matching rng.permutation exactly."""
    cdef u64 s = <u64> (seed & ((1 << 64) - 1))
    cdef u64 t = <u64> trial
    cdef int *idx = <int *> malloc(n * sizeof(int))
    if idx == NULL:
        raise MemoryError()
    try:
        fisher_yates(idx, n, s, t)
        return [idx[i] for i in range(n)]
    finally:
        free(idx)


def run_single_length_trials_raw(
    list starts,
    list ends,
    int mode,
    list fl_keys,
    list fl_vals,
    int fl_default,
    list fr_keys,
    list fr_vals,
    int fr_default,
    int trials,
    seed,
):
    """Replay a single-length table policy over seeded permutations.

    mode 0: threshold tables (reject on two or more conflicts).
    mode 1: always replace. mode 2: never replace.
    Returns the final solution size of each trial.
    """
    cdef int n = len(starts)
    cdef u64 useed = <u64> (seed & ((1 << 64) - 1))
    cdef int n_fl = len(fl_keys)
    cdef int n_fr = len(fr_keys)
    cdef i64 *cs = <i64 *> malloc(n * sizeof(i64))
    cdef i64 *ce = <i64 *> malloc(n * sizeof(i64))
    cdef i64 *sol_s = <i64 *> malloc(n * sizeof(i64))
    cdef i64 *sol_e = <i64 *> malloc(n * sizeof(i64))
    cdef char *is_hit = <char *> malloc(n)
    cdef int *idx = <int *> malloc(n * sizeof(int))
    cdef i64 *flk = <i64 *> malloc((n_fl + 1) * sizeof(i64))
    cdef char *flv = <char *> malloc(n_fl + 1)
    cdef i64 *frk = <i64 *> malloc((n_fr + 1) * sizeof(i64))
    cdef char *frv = <char *> malloc(n_fr + 1)
    if (cs == NULL or ce == NULL or sol_s == NULL or sol_e == NULL or
            is_hit == NULL or idx == NULL or flk == NULL or flv == NULL or
            frk == NULL or frv == NULL):
        raise MemoryError()
    cdef int i, t, m, nh, pos, bit, hit0, w
    cdef i64 s, e, ms, me, v, lo, hi
    cdef int sol_n
    out = []
    try:
        for i in range(n):
            cs[i] = starts[i]
            ce[i] = ends[i]
        for i in range(n_fl):
            flk[i] = fl_keys[i]
            flv[i] = <char> fl_vals[i]
        for i in range(n_fr):
            frk[i] = fr_keys[i]
            frv[i] = <char> fr_vals[i]
        for t in range(trials):
            fisher_yates(idx, n, useed, <u64> t)
            sol_n = 0
            for pos in range(n):
                i = idx[pos]
                s = cs[i]
                e = ce[i]
                nh = 0
                hit0 = -1
                for m in range(sol_n):
                    lo = sol_s[m] if sol_s[m] > s else s
                    hi = sol_e[m] if sol_e[m] < e else e
                    if lo < hi:
                        is_hit[m] = 1
                        nh += 1
                        if hit0 < 0:
                            hit0 = m
                    else:
                        is_hit[m] = 0
                if nh == 0:
                    sol_s[sol_n] = s
                    sol_e[sol_n] = e
                    sol_n += 1
                    continue
                if mode == 2:
                    continue
                if mode == 1:
                    w = 0
                    for m in range(sol_n):
                        if not is_hit[m]:
                            sol_s[w] = sol_s[m]
                            sol_e[w] = sol_e[m]
                            w += 1
                    sol_n = w
                    sol_s[sol_n] = s
                    sol_e[sol_n] = e
                    sol_n += 1
                    continue
                if nh >= 2:
                    continue
                ms = sol_s[hit0]
                me = sol_e[hit0]
                if (ms <= s and e <= me and not (ms == s and me == e)) or \
                        (s <= ms and me <= e and not (ms == s and me == e)):
                    continue
                v = (e if e < me else me) - (s if s > ms else ms)
                bit = -1
                if s < ms:
                    for m in range(n_fl):
                        if flk[m] == v:
                            bit = flv[m]
                            break
                    if bit < 0:
                        bit = fl_default
                else:
                    for m in range(n_fr):
                        if frk[m] == v:
                            bit = frv[m]
                            break
                    if bit < 0:
                        bit = fr_default
                if bit:
                    w = 0
                    for m in range(sol_n):
                        if m != hit0:
                            sol_s[w] = sol_s[m]
                            sol_e[w] = sol_e[m]
                            w += 1
                    sol_n = w
                    sol_s[sol_n] = s
                    sol_e[sol_n] = e
                    sol_n += 1
            out.append(sol_n)
        return out
    finally:
        free(cs); free(ce); free(sol_s); free(sol_e); free(is_hit)
        free(idx); free(flk); free(flv); free(frk); free(frv)


def best_subset_scaled(list starts, list ends, list weights):
    """(best total weight, member bitmask) over all conflict-free subsets.

    Enumeration by increasing bitmask; ties on weight keep the smallest mask,
    matching the fallback exactly.
    """
    cdef int n = len(starts)
    if n == 0:
        return 0, 0
    if n > 24:
        raise ValueError("subset search capped at 24 intervals")
    cdef unsigned int size = (<unsigned int> 1) << n
    cdef i64 *ws = <i64 *> malloc(n * sizeof(i64))
    cdef i64 *cs = <i64 *> malloc(n * sizeof(i64))
    cdef i64 *ce = <i64 *> malloc(n * sizeof(i64))
    cdef unsigned int *masks = <unsigned int *> malloc(n * sizeof(unsigned int))
    cdef char *feasible = <char *> malloc(size)
    cdef i64 *weight = <i64 *> malloc(size * sizeof(i64))
    if (ws == NULL or cs == NULL or ce == NULL or masks == NULL or
            feasible == NULL or weight == NULL):
        raise MemoryError()
    cdef int i, j, low_i
    cdef unsigned int sset, low, rest
    cdef i64 best = 0, w, lo, hi
    cdef unsigned int best_mask = 0
    try:
        for i in range(n):
            ws[i] = weights[i]
            cs[i] = starts[i]
            ce[i] = ends[i]
        for i in range(n):
            masks[i] = 0
            for j in range(n):
                if i == j:
                    continue
                lo = cs[i] if cs[i] > cs[j] else cs[j]
                hi = ce[i] if ce[i] < ce[j] else ce[j]
                if lo < hi:
                    masks[i] |= (<unsigned int> 1) << j
        feasible[0] = 1
        weight[0] = 0
        for sset in range(1, size):
            low = sset & (0 - sset)
            low_i = 0
            while not (low >> low_i) & 1:
                low_i += 1
            rest = sset ^ low
            feasible[sset] = 0
            if feasible[rest] and not (masks[low_i] & rest):
                feasible[sset] = 1
                w = weight[rest] + ws[low_i]
                weight[sset] = w
                if w > best:
                    best = w
                    best_mask = sset
        return best, int(best_mask)
    finally:
        free(ws); free(cs); free(ce); free(masks); free(feasible); free(weight)
