"""Fixed task-relationship matrices and fitting against them.

Each constructor returns a symmetric PSD matrix L that plays the role of
the inverse task covariance; tr(W L W^T) then reproduces a classical
multi-task penalty (pull to the mean, similarity-graph smoothness, task
network smoothness, or cluster structure). Fitting holds L fixed: only
the dual solve runs, with the coupling (lam1 I + lam2 L)^{-1}.
"""

import numpy as np

from .data import TaskCovariance, TrainedModel, validate_dataset
from .errors import (
    AsymmetricSimilarity,
    EmptyCluster,
    IndexOutOfRange,
    NegativeSimilarity,
    NotPSD,
    SelfEdge,
)
from .kernels import assemble_kernel_matrix, base_kernel_matrix
from .linalg import sym_eig
from .solver import solve_alpha_b_direct, solve_alpha_b_smo, DIRECT_SOLVE_LIMIT


def laplacian_mean_regularization(m):
    """Centering matrix I - ones/m: tr(W L W^T) is the summed squared
    deviation of each task's weights from the average weights."""
    if m < 1:
        raise ValueError("need at least one task")
    return np.eye(m) - np.full((m, m), 1.0 / m)


def laplacian_from_similarity(similarity):
    """Graph Laplacian scaled for the ordered double sum.

    L = 2 (D - S) so that tr(W L W^T) equals
    sum_{i,j} s_ij ||w_i - w_j||^2 over ordered pairs. The similarity
    matrix must be symmetric with nonnegative entries and zero diagonal.
    """
    s = np.asarray(similarity, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise AsymmetricSimilarity("similarity matrix must be square")
    if np.max(np.abs(s - s.T)) > 1e-12 * max(1.0, np.max(np.abs(s)) if s.size else 1.0):
        raise AsymmetricSimilarity("similarity matrix must be symmetric")
    if np.any(s < 0):
        raise NegativeSimilarity("similarities must be nonnegative")
    s = s.copy()
    np.fill_diagonal(s, 0.0)
    degrees = s.sum(axis=1)
    return 2.0 * (np.diag(degrees) - s)


def laplacian_from_task_network(m, edges):
    """Laplacian of an undirected 0/1 task network, each edge counted once.

    tr(W L W^T) = sum over listed edges (p, q) of ||w_p - w_q||^2.
    """
    graph = np.zeros((m, m))
    for p, q in edges:
        if not (0 <= p < m and 0 <= q < m):
            raise IndexOutOfRange(f"edge ({p}, {q}) outside 0..{m - 1}")
        if p == q:
            raise SelfEdge(f"self edge on task {p}")
        graph[p, q] = 1.0
        graph[q, p] = 1.0
    return np.diag(graph.sum(axis=1)) - graph


def clustered_inverse_covariance(m, cluster_assignment, alpha, beta, gamma):
    """Cluster-structured inverse covariance
    alpha*H + beta*(M - H) + gamma*(I - M), with H the centering matrix
    and M the orthogonal projector onto the cluster indicator columns.

    cluster_assignment maps task index -> cluster label; every cluster
    must be nonempty over tasks 0..m-1. Raises NotPSD if the weight
    combination produces a negative eigenvalue.
    """
    if alpha <= 0 or beta <= 0 or gamma <= 0:
        raise ValueError("cluster penalty weights must be positive")
    labels = [cluster_assignment[i] for i in range(m)]
    clusters = sorted(set(labels), key=str)
    indicator = np.zeros((m, len(clusters)))
    for i, lab in enumerate(labels):
        indicator[i, clusters.index(lab)] = 1.0
    sizes = indicator.sum(axis=0)
    if np.any(sizes == 0):
        raise EmptyCluster("every cluster must contain at least one task")
    projector = indicator @ np.diag(1.0 / sizes) @ indicator.T
    centering = laplacian_mean_regularization(m)
    combo = alpha * centering + beta * (projector - centering) + gamma * (np.eye(m) - projector)
    combo = (combo + combo.T) / 2.0
    eigvals = np.linalg.eigvalsh(combo)
    if eigvals[0] < -1e-8:
        raise NotPSD(
            f"weights (alpha={alpha}, beta={beta}, gamma={gamma}) give eigenvalue {eigvals[0]:.3e}"
        )
    return combo


def _coupling_from_fixed_inverse(inverse, hp):
    """(lam1 I + lam2 L)^{-1}: well-defined for singular L because lam1 > 0."""
    m = inverse.shape[0]
    dec = sym_eig(hp.lam1 * np.eye(m) + hp.lam2 * inverse)
    coupling = (dec.vectors / dec.values) @ dec.vectors.T
    return (coupling + coupling.T) / 2.0


def _reported_covariance(inverse):
    """Pseudo-inverse of L, trace-normalized; identity/m when L is zero."""
    dec = sym_eig(inverse)
    m = inverse.shape[0]
    cutoff = 1e-12 * max(dec.values[0], 0.0)
    inv_vals = np.array([1.0 / v if v > cutoff else 0.0 for v in dec.values])
    pinv = (dec.vectors * inv_vals) @ dec.vectors.T
    total = float(np.trace(pinv))
    if total <= 1e-12:
        return TaskCovariance.unrelated(m)
    return TaskCovariance((pinv + pinv.T) / (2.0 * total))


def fit_with_fixed_inverse(ds, kernel, hp, inverse, solver="auto"):
    """One dual solve with the relationship structure held fixed.

    No covariance update runs; the model reports the trace-normalized
    pseudo-inverse of L as its covariance (for inspection only - the
    stored coupling is what predictions use).
    """
    validate_dataset(ds)
    if hp.lam1 <= 0:
        raise ValueError("fitting requires lam1 > 0")
    inverse = np.asarray(inverse, dtype=float)
    if inverse.shape != (ds.m, ds.m):
        raise ValueError(f"fixed inverse must be {ds.m} x {ds.m}")
    spectrum = sym_eig(inverse).values  # also rejects asymmetric input
    if spectrum.size and spectrum[-1] < -1e-8:
        raise NotPSD(f"fixed inverse has eigenvalue {spectrum[-1]:.3e}")
    coupling = _coupling_from_fixed_inverse(inverse, hp)
    use_smo = solver == "smo" or (solver == "auto" and ds.total > DIRECT_SOLVE_LIMIT)
    if use_smo:
        alpha, b = solve_alpha_b_smo(ds, kernel, coupling)
    else:
        alpha, b = solve_alpha_b_direct(ds, kernel, coupling)
    k = assemble_kernel_matrix(ds, kernel, coupling)
    residuals = ds.targets - (k @ alpha + b[ds.point_task])
    weights = 1.0 / ds.counts[ds.point_task]
    spread = np.zeros((ds.total, ds.m))
    spread[np.arange(ds.total), ds.point_task] = alpha
    gram = coupling @ (spread.T @ base_kernel_matrix(kernel, ds.inputs) @ spread) @ coupling
    objective = (
        float(np.sum(weights * residuals**2))
        + 0.5 * hp.lam1 * float(np.trace(gram))
        + 0.5 * hp.lam2 * float(np.trace(inverse @ gram))
    )
    return TrainedModel(
        task_ids=ds.task_ids,
        dual_coefs=alpha,
        biases=b,
        covariance=_reported_covariance(inverse),
        coupling=coupling,
        kernel=kernel,
        support_inputs=ds.inputs,
        support_tasks=ds.point_task,
        counts=ds.counts,
        hyperparams=hp,
        objective_trace=(objective,),
    )
