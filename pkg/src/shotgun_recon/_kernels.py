"""Compiled inner loops: grid canvas windows and induced-path search.

The grid canvas is a flat array of side ``S`` per axis.  A window is the k^d block
whose corner sits at canvas coordinates ``coords + off`` (lattice) or
``coords mod S`` (torus).
"""
import numpy as np
from numba import njit


@njit(cache=True)
def window_ok(canvas, variants, v, coords, k, off, S, torus, unset):
    """True iff variant v agrees with every assigned cell of the window."""
    d = len(coords)
    kd = variants.shape[1]
    cnt = np.zeros(d, np.int64)
    for j in range(kd):
        idx = 0
        for a in range(d):
            c = coords[a] + cnt[a]
            if torus:
                c = c % S
            else:
                c += off
            idx = idx * S + c
        w = canvas[idx]
        if w != unset and w != variants[v, j]:
            return False
        a = d - 1
        while a >= 0:
            cnt[a] += 1
            if cnt[a] < k:
                break
            cnt[a] = 0
            a -= 1
    return True


@njit(cache=True)
def window_write(canvas, variants, v, coords, k, off, S, torus, unset):
    """Write variant v into the window; returns False (after writing) on a conflict."""
    d = len(coords)
    kd = variants.shape[1]
    cnt = np.zeros(d, np.int64)
    ok = True
    for j in range(kd):
        idx = 0
        for a in range(d):
            c = coords[a] + cnt[a]
            if torus:
                c = c % S
            else:
                c += off
            idx = idx * S + c
        w = canvas[idx]
        x = variants[v, j]
        if w != unset and w != x:
            ok = False
        canvas[idx] = x
        a = d - 1
        while a >= 0:
            cnt[a] += 1
            if cnt[a] < k:
                break
            cnt[a] = 0
            a -= 1
    return ok


# --- induced paths on bitmask adjacency (n <= 62) ---------------------------------

@njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@njit(cache=True)
def _ctz(x):
    i = 0
    while not (x >> i) & 1:
        i += 1
    return i


@njit(cache=True)
def induced_path_search(adj, n, target, lower, out):
    """Depth-first search over induced paths.

    target > 0: write every induced path with exactly ``target`` vertices and
    first vertex < last vertex into ``out`` (rows); returns the count, which
    may exceed len(out), in which case the caller retries with more room.
    target == 0: find a longest induced path longer than ``lower``; returns its
    length (or ``lower`` if none) and writes it to out[0].
    """
    full = (np.int64(1) << n) - 1
    path = np.zeros(n + 1, np.int64)
    pmask = np.zeros(n + 2, np.int64)
    blocked = np.zeros(n + 2, np.int64)
    cand = np.zeros(n + 2, np.int64)
    best = lower
    count = 0
    if target == 1:
        for s in range(n):
            if count < out.shape[0]:
                out[count, 0] = s
            count += 1
        return count
    if target == 0 and best < 1 and n > 0:
        best = 1
        out[0, 0] = 0
    for s in range(n):
        path[0] = s
        pmask[1] = np.int64(1) << s
        blocked[1] = 0
        cand[1] = adj[s] & ~pmask[1] & full
        d = 1
        while d >= 1:
            if cand[d] == 0:
                d -= 1
                continue
            low = cand[d] & -cand[d]
            cand[d] ^= low
            u = _ctz(low)
            last = path[d - 1]
            nb_last = adj[last] | (np.int64(1) << last)
            free = ~(blocked[d] | pmask[d]) & full
            room = free & ~nb_last & ~low
            length = d + 1
            if target > 0:
                if length == target:
                    if path[0] < u:
                        if count < out.shape[0]:
                            for i in range(d):
                                out[count, i] = path[i]
                            out[count, d] = u
                        count += 1
                    continue
                if length + _popcount(room) < target:
                    continue
            else:
                if length > best:
                    best = length
                    for i in range(d):
                        out[0, i] = path[i]
                    out[0, d] = u
                if length + _popcount(room) <= best:
                    continue
            path[d] = u
            pmask[d + 1] = pmask[d] | low
            blocked[d + 1] = blocked[d] | nb_last
            cand[d + 1] = adj[u] & ~(blocked[d + 1] | pmask[d + 1]) & full
            d += 1
    if target > 0:
        return count
    return best
