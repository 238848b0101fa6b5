"""Pure numpy implementations of the hot kernels.

These mirror ``glyset._ckernels`` exactly in signature and semantics and are
used whenever the compiled extension is unavailable (or ``GLYSET_PURE=1``).
"""

import numpy as np


def logistic_loss_grad(X, ysign, w, b, C):
    """Objective ``0.5*|w|^2 + C*sum(log1p(exp(-y*(Xw+b))))`` and its gradient.

    Returns ``(f, grad_w, grad_b)``.
    """
    z = X @ w + b
    m = ysign * z
    # log(1 + exp(-m)) computed without overflow
    loss = np.logaddexp(0.0, -m)
    # d/dm log(1+exp(-m)) = -sigmoid(-m)
    coef = -ysign * _sigmoid(-m)
    f = 0.5 * float(w @ w) + C * float(loss.sum())
    grad_w = w + C * (X.T @ coef)
    grad_b = C * float(coef.sum())
    return f, grad_w, grad_b


def _sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def ds_log_terms(item_idx, worker_idx, obs, log_theta, n_items):
    """Sum of ``log_theta[worker, :, obs]`` per item, shape (n_items, K)."""
    K = log_theta.shape[1]
    out = np.zeros((n_items, K))
    np.add.at(out, item_idx, log_theta[worker_idx, :, obs])
    return out


def ds_confusion_counts(item_idx, worker_idx, obs, post, n_workers):
    """Soft confusion counts ``counts[w, k, l] = sum post[i, k]`` over judgments (i, w, l)."""
    K = post.shape[1]
    counts = np.zeros((n_workers, K, K))
    # flatten (w, l) into one axis so np.add.at handles repeated pairs
    flat = np.zeros((n_workers * K, K))
    np.add.at(flat, worker_idx * K + obs, post[item_idx])
    counts[:] = flat.reshape(n_workers, K, K).transpose(0, 2, 1)
    return counts


def coincidence_matrix(unit_idx, value_idx, n_units, n_values):
    """Krippendorff coincidence matrix from (unit, value) pairs.

    Units with fewer than two values contribute nothing.
    """
    table = np.zeros((n_units, n_values))
    np.add.at(table, (unit_idx, value_idx), 1.0)
    m = table.sum(axis=1)
    keep = m >= 2
    table = table[keep]
    m = m[keep]
    o = (table.T / (m - 1.0)) @ table
    o -= np.diag((table / (m - 1.0)[:, None]).sum(axis=0))
    return o
