"""Pure-Python twin of the compiled engine.

Every function here matches the extension bit for bit: same splitmix64
stream, same rejection sampling, same Fisher-Yates order, same enumeration
order. Keep the two in lockstep when changing either.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _substream(seed: int, index: int) -> int:
    return _mix64((seed & _MASK) ^ _mix64((index + 1) * _GOLDEN))


def _next_u64(state: int) -> tuple[int, int]:
    state = (state + _GOLDEN) & _MASK
    return state, _mix64(state)


def _randbelow(state: int, n: int) -> tuple[int, int]:
    limit = (1 << 64) - ((1 << 64) % n)
    while True:
        state, z = _next_u64(state)
        if z < limit:
            return state, z % n


def permutation_raw(n: int, seed: int, trial: int) -> list[int]:
    idx = list(range(n))
    state = _substream(seed, trial)
    for i in range(n - 1, 0, -1):
        state, j = _randbelow(state, i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def run_single_length_trials_raw(
    starts: list[int],
    ends: list[int],
    mode: int,
    fl_keys: list[int],
    fl_vals: list[int],
    fl_default: int,
    fr_keys: list[int],
    fr_vals: list[int],
    fr_default: int,
    trials: int,
    seed: int,
) -> list[int]:
    """Replay a single-length table policy over seeded permutations.

    mode 0: threshold tables (reject on two or more conflicts).
    mode 1: always replace. mode 2: never replace.
    Returns the final solution size of each trial.
    """
    n = len(starts)
    fl = dict(zip(fl_keys, fl_vals))
    fr = dict(zip(fr_keys, fr_vals))
    out = []
    for t in range(trials):
        perm = permutation_raw(n, seed, t)
        sol_s: list[int] = []
        sol_e: list[int] = []
        for idx in perm:
            s, e = starts[idx], ends[idx]
            hits = [
                i for i in range(len(sol_s)) if max(sol_s[i], s) < min(sol_e[i], e)
            ]
            if not hits:
                sol_s.append(s)
                sol_e.append(e)
                continue
            if mode == 2:
                continue
            if mode == 1:
                for i in reversed(hits):
                    del sol_s[i], sol_e[i]
                sol_s.append(s)
                sol_e.append(e)
                continue
            if len(hits) >= 2:
                continue
            i = hits[0]
            ms, me = sol_s[i], sol_e[i]
            # Containment cannot occur between equal lengths; guard anyway.
            if (ms <= s and e <= me and (ms, me) != (s, e)) or (
                s <= ms and me <= e and (ms, me) != (s, e)
            ):
                continue
            v = min(e, me) - max(s, ms)
            if s < ms:
                bit = fl.get(v, fl_default)
            else:
                bit = fr.get(v, fr_default)
            if bit:
                del sol_s[i], sol_e[i]
                sol_s.append(s)
                sol_e.append(e)
        out.append(len(sol_s))
    return out


def best_subset_scaled(
    starts: list[int], ends: list[int], weights: list[int]
) -> tuple[int, int]:
    """Exhaustive search over all subsets by increasing bitmask.

    feasible[S] extends feasible[S minus lowest bit]; ties on weight keep the
    smallest mask, so both backends return the same subset.
    """
    n = len(starts)
    if n == 0:
        return 0, 0
    masks = [0] * n
    for i in range(n):
        for j in range(n):
            if i != j and max(starts[i], starts[j]) < min(ends[i], ends[j]):
                masks[i] |= 1 << j
    size = 1 << n
    feasible = bytearray(size)
    weight = [0] * size
    feasible[0] = 1
    best, best_mask = 0, 0
    for s in range(1, size):
        low = s & (-s)
        i = low.bit_length() - 1
        rest = s ^ low
        if feasible[rest] and not (masks[i] & rest):
            feasible[s] = 1
            w = weight[rest] + weights[i]
            weight[s] = w
            if w > best:
                best, best_mask = w, s
    return best, best_mask
