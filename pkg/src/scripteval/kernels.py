"""Longest-common-subsequence kernels over integer token ids.

Two interchangeable implementations: a numba-compiled rolling-row DP and a
row-vectorised numpy version. ``lcs_kernel`` picks one according to
``scripteval._accel.USE_NUMBA``.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


@njit(cache=True, nogil=True)
def lcs_numba(a, b):
    n = a.shape[0]
    m = b.shape[0]
    if n == 0 or m == 0:
        return 0
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        ai = a[i]
        for j in range(m):
            if ai == b[j]:
                cur[j + 1] = prev[j] + 1
            else:
                up = prev[j + 1]
                left = cur[j]
                cur[j + 1] = up if up > left else left
        prev, cur = cur, prev
    return prev[m]


def lcs_numpy(a, b):
    # Row recurrence: cur[j] = max(prev[j], cur[j-1], prev[j-1] + eq[j]).
    # Since cur is non-decreasing in j, it equals the running maximum of
    # cand[j] = max(prev[j], prev[j-1] + eq[j]).
    a = np.asarray(a)
    b = np.asarray(b)
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        return 0
    prev = np.zeros(m + 1, dtype=np.int64)
    cand = np.empty(m, dtype=np.int64)
    for i in range(n):
        eq = (b == a[i]).astype(np.int64)
        np.maximum(prev[1:], prev[:-1] + eq, out=cand)
        np.maximum.accumulate(cand, out=prev[1:])
    return int(prev[m])


def lcs_kernel(a, b):
    """LCS length of two 1-D int64 arrays using the configured backend."""
    short, long_ = (a, b) if a.shape[0] <= b.shape[0] else (b, a)
    if USE_NUMBA:
        # short rows stay in cache
        return int(lcs_numba(long_, short))
    # numpy: python-level loop over the short side, vector ops over the long
    return lcs_numpy(short, long_)
