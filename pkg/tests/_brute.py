"""Pure-python evaluation of the cross-validated double sum, written from the definition.

Deliberately shares no code with the package: dictionaries of counts, explicit
loops over thresholds and response values, 0-based rows, contiguous folds.
"""


def _psi(ys, m, eps):
    n = len(ys)
    out = {}
    for y in range(-m, m + 1):
        c = ys.count(y)
        out[y] = min(n / c, 1 / eps) if c else 0.0
    return out


def _fit(rows, psi, m):
    def best(counts):
        costs = [(sum(psi[y] * abs(y - z) * counts.get(y, 0) for y in range(-m, m + 1)), z)
                 for z in range(-m, m + 1)]
        return min(costs)[1]  # ties -> smallest z

    by_cell, marginal = {}, {}
    for cell, y in rows:
        by_cell.setdefault(cell, {}).setdefault(y, 0)
        by_cell[cell][y] += 1
        marginal[y] = marginal.get(y, 0) + 1
    table = {cell: best(c) for cell, c in by_cell.items()}
    return table, best(marginal)


def brute_err(X, y, beta, K, eps, m, scope="fold", prefix=None):
    """X rows as lists, beta 1-based; returns the K-averaged estimate."""
    N = len(y)
    q = N // K
    folds = [list(range(k * q, (k + 1) * q if k < K - 1 else N)) for k in range(K)]
    total = 0.0
    for fold in folds:
        train = [j for j in range(N) if j not in fold]
        psi_fit = _psi([y[j] for j in train], m, eps)
        source = fold if scope == "fold" else train
        psi_eval = _psi([y[j] for j in source], m, eps)
        table, fallback = _fit([(tuple(X[j][b - 1] for b in beta), y[j]) for j in train], psi_fit, m)
        scored = fold if prefix is None else fold[:prefix]
        acc = 0.0
        for i in range(2 * m):
            for yy in range(-m, m + 1):
                if i - m < abs(yy) <= m:
                    for j in scored:
                        z = table.get(tuple(X[j][b - 1] for b in beta), fallback)
                        if y[j] == yy and abs(z - yy) > i:
                            acc += psi_eval[yy] / len(scored)
        total += acc
    return total / K
