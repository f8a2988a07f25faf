"""Compiled per-subset cross-validation error, shared by search and its tests.

Released from the GIL so contiguous chunks of subsets can run on threads.
Every subset's value is computed independently with a fixed accumulation
order, so the output does not depend on how the subsets are chunked.
"""

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def epe_chunk(XT, yi, fold_of, fold_n, psi_fit, psi_eval, fallback, subsets, base, n_y, out):
    """Fill ``out[s]`` with the cross-validated error of ``subsets[s]``.

    XT is the (n, N) transposed factor table, ``yi`` the responses shifted to
    0..2m, ``fallback`` the per-fold unseen-cell prediction (also shifted),
    ``subsets`` 0-based column indices. A held-out row with response y and
    prediction z contributes psi(y) |z - y|, which equals the threshold sum
    over i = 0..2m-1.
    """
    N = yi.shape[0]
    K = fold_n.shape[0]
    S, r = subsets.shape
    C = 1
    for _ in range(r):
        C *= base
    counts = np.zeros((K, C, n_y), dtype=np.int64)
    total = np.zeros((C, n_y), dtype=np.int64)
    pred = np.full((K, C), -1, dtype=np.int64)
    dev = np.zeros((K, n_y), dtype=np.int64)
    code = np.zeros(N, dtype=np.int64)
    # weight[k, z, a] = psi(a) |a - z|, multiplied in the same order as the reference cost
    weight = np.empty((K, n_y, n_y))
    for k in range(K):
        for z in range(n_y):
            for a in range(n_y):
                weight[k, z, a] = psi_fit[k, a] * abs(a - z)
    train = np.empty(n_y)
    for s in range(S):
        for j in range(N):
            code[j] = 0
        for t in range(r):
            col = XT[subsets[s, t]]
            for j in range(N):
                code[j] = code[j] * base + col[j]
        for j in range(N):
            counts[fold_of[j], code[j], yi[j]] += 1
            total[code[j], yi[j]] += 1
        for j in range(N):
            k = fold_of[j]
            c = code[j]
            z_best = pred[k, c]
            if z_best < 0:
                z_best = fallback[k]
                in_train = 0
                for a in range(n_y):
                    tr = total[c, a] - counts[k, c, a]
                    train[a] = tr
                    in_train += tr
                if in_train > 0:
                    best = np.inf
                    for z in range(n_y):
                        cost = 0.0
                        for a in range(n_y):
                            cost = cost + weight[k, z, a] * train[a]
                        if cost < best:
                            best = cost
                            z_best = z
                pred[k, c] = z_best
            dev[k, yi[j]] += abs(z_best - yi[j])
        acc = 0.0
        for k in range(K):
            fold_acc = 0.0
            for a in range(n_y):
                fold_acc += psi_eval[k, a] * dev[k, a]
                dev[k, a] = 0
            acc += fold_acc / fold_n[k]
        out[s] = acc / K
        # reset only what this subset touched
        for j in range(N):
            counts[fold_of[j], code[j], yi[j]] = 0
            total[code[j], yi[j]] = 0
            pred[fold_of[j], code[j]] = -1
