"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``."""
import numpy as np


def kendall_counts(x, y):
    """Return ``(n_pairs, concordant - discordant, tied_x, tied_y)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError("x and y must have equal length")
    iu, ju = np.triu_indices(n, k=1)
    sx = np.sign(x[ju] - x[iu]).astype(np.int64)
    sy = np.sign(y[ju] - y[iu]).astype(np.int64)
    return (
        n * (n - 1) // 2,
        int(np.sum(sx * sy)),
        int(np.count_nonzero(sx == 0)),
        int(np.count_nonzero(sy == 0)),
    )


def best_split(X, y, n_classes, features, max_features):
    """Search ``features`` in order for the Gini-optimal threshold.

    Same contract as the compiled version.
    """
    n = X.shape[0]
    total = np.bincount(y, minlength=n_classes).astype(np.int64)
    best_f, best_thr, best_score = -1, 0.0, -1.0
    visited = 0
    for f in features:
        if visited >= max_features:
            break
        col = np.ascontiguousarray(X[:, f])
        order = np.argsort(col, kind="stable")
        v = col[order]
        if v[0] == v[-1]:
            continue
        visited += 1
        onehot = np.zeros((n, n_classes), dtype=np.int64)
        onehot[np.arange(n), y[order]] = 1
        left = np.cumsum(onehot, axis=0)[:-1]
        right = total - left
        n_left = np.arange(1, n, dtype=np.float64)
        score = (np.sum(left * left, axis=1).astype(np.float64) / n_left
                 + np.sum(right * right, axis=1).astype(np.float64) / (n - n_left))
        valid = np.flatnonzero(v[:-1] != v[1:])
        for i in valid:
            s = score[i]
            thr = (v[i] + v[i + 1]) / 2.0
            if thr == v[i + 1]:
                thr = v[i]
            if (s > best_score
                    or (s == best_score
                        and (f < best_f or (f == best_f and thr < best_thr)))):
                best_f, best_thr, best_score = int(f), float(thr), float(s)
    return best_f, best_thr, best_score
