"""Base kernels, the task-coupling matrix and the combined kernel.

The coupling matrix C = Omega (lam1 Omega + lam2 I)^{-1} shares the
covariance's eigenvectors; an eigenvalue mu maps to mu / (lam1 mu + lam2).
The combined kernel between point x1 of task i1 and point x2 of task i2
is C[i1, i2] * k(x1, x2).
"""

import numpy as np

from .errors import DimensionMismatch, TaskIndexOutOfRange
from .linalg import sym_eig


def base_kernel(kernel, x, z):
    """Evaluate the base kernel between two input vectors."""
    x = np.asarray(x, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    if x.shape != z.shape:
        raise DimensionMismatch(f"kernel inputs of dimension {x.size} vs {z.size}")
    if kernel.kind == "linear":
        return float(x @ z)
    diff = x - z
    return float(np.exp(-(diff @ diff) / (2.0 * kernel.width**2)))


def base_kernel_matrix(kernel, xa, xb=None):
    """Base-kernel Gram block between two stacked input sets."""
    xa = np.atleast_2d(np.asarray(xa, dtype=float))
    xb = xa if xb is None else np.atleast_2d(np.asarray(xb, dtype=float))
    if xa.shape[1] != xb.shape[1]:
        raise DimensionMismatch(
            f"kernel inputs of dimension {xa.shape[1]} vs {xb.shape[1]}"
        )
    if kernel.kind == "linear":
        return xa @ xb.T
    sq = (
        np.sum(xa**2, axis=1)[:, None]
        + np.sum(xb**2, axis=1)[None, :]
        - 2.0 * (xa @ xb.T)
    )
    return np.exp(-np.clip(sq, 0.0, None) / (2.0 * kernel.width**2))


def coupling_matrix(omega, hp):
    """Task-coupling matrix C = Omega (lam1 Omega + lam2 I)^{-1}.

    Computed spectrally: negative noise eigenvalues of the covariance are
    clamped to zero, and a zero eigenvalue maps to zero coupling (the
    pseudo-inverse limit), which keeps the weight matrix confined to the
    covariance's range in degenerate iterations.
    """
    if hp.lam1 <= 0 and hp.lam2 <= 0:
        raise ValueError("coupling needs lam1 > 0 or lam2 > 0")
    dec = sym_eig(omega.matrix if hasattr(omega, "matrix") else omega)
    mu = np.clip(dec.values, 0.0, None)
    denom = hp.lam1 * mu + hp.lam2
    mapped = np.divide(mu, denom, out=np.zeros_like(mu), where=denom > 0)
    c = (dec.vectors * mapped) @ dec.vectors.T
    return (c + c.T) / 2.0


def multitask_kernel(kernel, coupling, i1, x1, i2, x2):
    """Combined kernel value: coupling[i1, i2] * k(x1, x2)."""
    m = coupling.shape[0]
    if not (0 <= i1 < m and 0 <= i2 < m):
        raise TaskIndexOutOfRange(f"task indices ({i1}, {i2}) outside 0..{m - 1}")
    return float(coupling[i1, i2] * base_kernel(kernel, x1, x2))


def assemble_kernel_matrix(ds, kernel, coupling):
    """N x N combined-kernel Gram over all points of all tasks.

    Entry (p, q) couples the tasks of flat points p and q and multiplies
    by the base kernel of their inputs.
    """
    base = base_kernel_matrix(kernel, ds.inputs)
    factors = coupling[np.ix_(ds.point_task, ds.point_task)]
    k = factors * base
    return (k + k.T) / 2.0


def cross_kernel_matrix(kernel, coupling, support_inputs, support_tasks, task_index, x):
    """Combined-kernel column between all support points and one query.

    Returns the length-N vector k_MT(support_q, (task_index, x)).
    """
    base = base_kernel_matrix(kernel, support_inputs, np.atleast_2d(x)).ravel()
    return coupling[support_tasks, task_index] * base
