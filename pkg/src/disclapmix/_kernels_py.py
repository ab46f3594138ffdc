"""Pure numpy implementations of the EM inner loops.

Mirrors ``_kernels.pyx`` function for function; selected by
:mod:`disclapmix.kernels` when the compiled module is unavailable.
"""
import numpy as np


def log_norm_const(log_p):
    """log((1 - p) / (1 + p)) evaluated from log p."""
    p = np.exp(log_p)
    return np.log1p(-p) - np.log1p(p)


def e_step(db, centers, log_p, log_tau):
    """Posterior cluster memberships and per-row log mixture density.

    Returns ``(resp, row_loglik)`` with ``resp`` of shape (n, c).
    """
    dist = np.abs(db[:, None, :] - centers[None, :, :])
    lw = np.einsum("ijk,jk->ij", dist, log_p)
    lw += log_tau + log_norm_const(log_p).sum(axis=1)
    m = lw.max(axis=1)
    row_ll = m + np.log(np.exp(lw - m[:, None]).sum(axis=1))
    resp = np.exp(lw - row_ll[:, None])
    resp /= resp.sum(axis=1, keepdims=True)
    return resp, row_ll


def log_density(xs, centers, log_p, log_tau):
    _, row_ll = e_step(xs, centers, log_p, log_tau)
    return row_ll


def abs_dev_sums(db, centers, resp):
    """D[j, k] = sum_i resp[i, j] * |db[i, k] - centers[j, k]|."""
    dist = np.abs(db[:, None, :] - centers[None, :, :])
    return np.einsum("ij,ijk->jk", resp, dist)


def weighted_medians(db, order, resp):
    """Lower weighted median of every column of ``db`` under every weight column of ``resp``.

    ``order[:, k]`` must sort ``db[:, k]`` ascending.
    """
    n, r = db.shape
    c = resp.shape[1]
    out = np.empty((c, r), dtype=np.int64)
    for k in range(r):
        ok = order[:, k]
        cum = np.cumsum(resp[ok, :], axis=0)
        idx = np.argmax(cum >= 0.5 * cum[-1], axis=0)
        out[:, k] = db[ok[idx], k]
    return out
