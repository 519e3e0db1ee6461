"""Alternating optimizer for the joint regression / task-covariance fit.

One outer iteration solves the dual coefficients and biases exactly with
the covariance held fixed (a saddle linear system, or SMO for large N),
then updates the covariance analytically from the weight Gram matrix:
Omega = (W^T W)^{1/2} / tr((W^T W)^{1/2}). Both substeps minimize a
jointly convex objective, so the recorded objective never increases.
"""

import numpy as np

from .data import TaskCovariance, TrainedModel, validate_dataset
from .errors import DegenerateGram, DimensionMismatch, MaxIterationsExceeded, NonDecreaseDetected
from .kernels import assemble_kernel_matrix, base_kernel_matrix, coupling_matrix, cross_kernel_matrix
from .linalg import solve_linear, sym_eig, trace_pinv_product

# Direct saddle solve up to this many points; SMO beyond.
DIRECT_SOLVE_LIMIT = 2000
SMO_DEFAULT_TOL = 1e-6
SMO_MAX_ROUNDS = 200_000
# Relative rise in the objective treated as a bug rather than noise.
NONDECREASE_RTOL = 1e-8


def _indicator_matrix(ds):
    """N x m block of per-task indicator columns (the off-diagonal blocks
    of the saddle system)."""
    ind = np.zeros((ds.total, ds.m))
    ind[np.arange(ds.total), ds.point_task] = 1.0
    return ind


def _loss_weights(ds):
    """Diagonal of the task-imbalance matrix: n_i for each point of task i."""
    return ds.counts[ds.point_task].astype(float)


def solve_alpha_b_direct(ds, kernel, coupling):
    """Exact dual coefficients and biases for a fixed coupling matrix.

    Solves the saddle system
        [K + diag(n_i)/2   E] [alpha]   [y]
        [E^T               0] [b    ] = [0]
    where K is the combined-kernel Gram and E holds per-task indicator
    columns. Raises SingularSystem if the factorization fails.
    """
    n, m = ds.total, ds.m
    k = assemble_kernel_matrix(ds, kernel, coupling)
    ind = _indicator_matrix(ds)
    block = np.zeros((n + m, n + m))
    block[:n, :n] = k + np.diag(_loss_weights(ds) / 2.0)
    block[:n, n:] = ind
    block[n:, :n] = ind.T
    rhs = np.concatenate([ds.targets, np.zeros(m)])
    sol = solve_linear(block, rhs)
    return sol[:n], sol[n:]


def solve_alpha_b_smo(ds, kernel, coupling, kkt_tol=SMO_DEFAULT_TOL, max_rounds=SMO_MAX_ROUNDS):
    """Dual coefficients by pairwise coordinate descent on the dual.

    Minimizes h(alpha) = alpha^T K~ alpha / 2 - alpha^T y subject to the
    per-task zero-sum constraints, with K~ = K + diag(n_i)/2. Working
    pairs are always drawn within one task (the equality constraints
    forbid cross-task moves); each visit takes the task's maximal
    violating pair, and tasks are visited round-robin. Biases come from
    per-task stationarity of the gradient.

    Raises MaxIterationsExceeded (carrying the best iterate) if the KKT
    spread does not fall below kkt_tol in time.
    """
    n = ds.total
    kt = assemble_kernel_matrix(ds, kernel, coupling)
    kt[np.diag_indices(n)] += _loss_weights(ds) / 2.0
    alpha = np.zeros(n)
    grad = -ds.targets.copy()  # gradient of h at alpha = 0
    task_slices = []
    start = 0
    for c in ds.counts:
        task_slices.append(slice(start, start + int(c)))
        start += int(c)

    def kkt_spread():
        worst = 0.0
        for sl in task_slices:
            if sl.stop - sl.start >= 2:
                g = grad[sl]
                worst = max(worst, float(g.max() - g.min()))
        return worst

    for _ in range(max_rounds):
        if kkt_spread() <= kkt_tol:
            break
        for sl in task_slices:
            if sl.stop - sl.start < 2:
                continue  # single-point task: zero-sum pins alpha at 0
            g = grad[sl]
            hi = int(np.argmax(g)) + sl.start
            lo = int(np.argmin(g)) + sl.start
            viol = grad[hi] - grad[lo]
            if viol <= kkt_tol:
                continue
            # curvature >= min task size thanks to the diag(n_i)/2 shift
            curv = kt[hi, hi] + kt[lo, lo] - 2.0 * kt[hi, lo]
            step = viol / curv
            alpha[hi] -= step
            alpha[lo] += step
            grad -= step * (kt[:, hi] - kt[:, lo])
    b = np.array([-grad[sl].mean() for sl in task_slices])
    spread = kkt_spread()
    if spread > kkt_tol:
        raise MaxIterationsExceeded(
            f"KKT spread {spread:.3e} above {kkt_tol:.1e} after {max_rounds} rounds",
            alpha=alpha,
            b=b,
        )
    return alpha, b


def gram_wtw(alpha, ds, kernel, omega, hp):
    """m x m weight Gram matrix W^T W implied by the dual coefficients.

    With C the coupling of the given covariance and S the task-blocked
    quadratic form of alpha against the base Gram, W^T W = C S C. For a
    linear kernel this equals the explicit-feature product.
    """
    c = coupling_matrix(omega, hp)
    return _gram_from_coupling(alpha, ds, kernel, c)


def _gram_from_coupling(alpha, ds, kernel, coupling):
    spread = np.zeros((ds.total, ds.m))
    spread[np.arange(ds.total), ds.point_task] = alpha
    base = base_kernel_matrix(kernel, ds.inputs)
    s = spread.T @ base @ spread
    g = coupling @ s @ coupling
    return (g + g.T) / 2.0


def update_omega(gram):
    """Analytic covariance update: sqrt of the weight Gram, trace-normalized.

    Gram eigenvalues below 1e-14 of the largest are rank noise and are
    zeroed before rooting (the square root would otherwise amplify them
    by seven orders of magnitude and destabilize the objective). Raises
    DegenerateGram when the Gram is (numerically) zero; the caller keeps
    the previous covariance in that case.
    """
    dec = sym_eig(gram)
    vals = np.clip(dec.values, 0.0, None)
    if vals.size:
        vals[vals < 1e-14 * vals[0]] = 0.0
    root = (dec.vectors * np.sqrt(vals)) @ dec.vectors.T
    root = (root + root.T) / 2.0
    total = float(np.trace(root))
    if total <= 1e-12:
        raise DegenerateGram("weight Gram is zero; covariance update undefined")
    return TaskCovariance(root / total)


def _objective_terms(ds, loss_residuals, gram, omega, hp):
    weights = 1.0 / ds.counts[ds.point_task]
    loss = float(np.sum(weights * loss_residuals**2))
    norm_term = 0.5 * hp.lam1 * float(np.trace(gram))
    rel_term = 0.5 * hp.lam2 * trace_pinv_product(omega.matrix, gram)
    return loss + norm_term + rel_term


def objective_value(ds, alpha, b, omega, kernel, hp):
    """Objective at a self-consistent state (weights implied by alpha
    through the coupling of the given covariance).

    The relationship term is evaluated against the covariance's range
    (pseudo-inverse), which is exact for states produced by the solver.
    """
    alpha = np.asarray(alpha, dtype=float)
    b = np.asarray(b, dtype=float)
    if not np.any(alpha):
        residuals = ds.targets - b[ds.point_task]
        gram = np.zeros((ds.m, ds.m))
    else:
        c = coupling_matrix(omega, hp)
        k = assemble_kernel_matrix(ds, kernel, c)
        residuals = ds.targets - (k @ alpha + b[ds.point_task])
        gram = _gram_from_coupling(alpha, ds, kernel, c)
    return _objective_terms(ds, residuals, gram, omega, hp)


def fit(ds, kernel, hp, solver="auto"):
    """Alternate the dual solve and the covariance update to convergence.

    Parameters
    ----------
    ds : MultiTaskDataset
    kernel : KernelSpec
    hp : Hyperparams (lam1 must be positive)
    solver : 'direct', 'smo' or 'auto' (direct up to 2000 points)

    Returns a TrainedModel whose objective trace is non-increasing; a rise
    beyond 1e-8 relative raises NonDecreaseDetected. Stops when the
    relative objective change falls below hp.tol or after hp.max_iters
    outer iterations. On a degenerate weight Gram (all-zero targets) the
    previous covariance is kept and the run terminates converged.
    """
    validate_dataset(ds)
    if hp.lam1 <= 0:
        raise ValueError("fitting requires lam1 > 0")
    if solver not in ("direct", "smo", "auto"):
        raise ValueError(f"unknown solver {solver!r}")
    use_smo = solver == "smo" or (solver == "auto" and ds.total > DIRECT_SOLVE_LIMIT)

    def alpha_b_step(coupling):
        if use_smo:
            return solve_alpha_b_smo(ds, kernel, coupling)
        return solve_alpha_b_direct(ds, kernel, coupling)

    omega = TaskCovariance.unrelated(ds.m)
    zero_b = np.zeros(ds.m)
    trace = [objective_value(ds, np.zeros(ds.total), zero_b, omega, kernel, hp)]

    alpha = np.zeros(ds.total)
    b = zero_b
    for _ in range(hp.max_iters):
        coupling = coupling_matrix(omega, hp)
        k = assemble_kernel_matrix(ds, kernel, coupling)
        alpha, b = alpha_b_step(coupling)
        residuals = ds.targets - (k @ alpha + b[ds.point_task])
        gram = _gram_from_coupling(alpha, ds, kernel, coupling)
        try:
            omega = update_omega(gram)
        except DegenerateGram:
            trace.append(_objective_terms(ds, residuals, gram, omega, hp))
            break
        value = _objective_terms(ds, residuals, gram, omega, hp)
        previous = trace[-1]
        if value > previous + NONDECREASE_RTOL * max(1.0, abs(previous)):
            raise NonDecreaseDetected(
                f"objective rose from {previous!r} to {value!r}"
            )
        trace.append(value)
        if abs(value - previous) < hp.tol * max(abs(previous), 1e-12):
            break

    # Final refresh so the stored coefficients, coupling and covariance are
    # mutually consistent (the loop updates the covariance after the dual
    # solve). Can only lower the objective further.
    coupling = coupling_matrix(omega, hp)
    k = assemble_kernel_matrix(ds, kernel, coupling)
    alpha, b = alpha_b_step(coupling)
    residuals = ds.targets - (k @ alpha + b[ds.point_task])
    gram = _gram_from_coupling(alpha, ds, kernel, coupling)
    final = _objective_terms(ds, residuals, gram, omega, hp)
    if final > trace[-1] + NONDECREASE_RTOL * max(1.0, abs(trace[-1])):
        raise NonDecreaseDetected(
            f"objective rose from {trace[-1]!r} to {final!r} in the final refresh"
        )
    trace.append(final)

    return TrainedModel(
        task_ids=ds.task_ids,
        dual_coefs=alpha,
        biases=b,
        covariance=omega,
        coupling=coupling,
        kernel=kernel,
        support_inputs=ds.inputs,
        support_tasks=ds.point_task,
        counts=ds.counts,
        hyperparams=hp,
        objective_trace=trace,
    )


def predict(model, task_id, x):
    """Predict the output of one task at a new input.

    Evaluates the combined-kernel expansion over all stored support points
    plus the task bias. Raises UnknownTask / DimensionMismatch on bad
    queries.
    """
    i = model.task_index(task_id)
    x = np.asarray(x, dtype=float).ravel()
    if x.size != model.dim:
        raise DimensionMismatch(f"input has dimension {x.size}, model expects {model.dim}")
    column = cross_kernel_matrix(
        model.kernel, model.coupling, model.support_inputs, model.support_tasks, i, x
    )
    return float(model.dual_coefs @ column + model.biases[i])


def predict_batch(model, task_ids, xs):
    """Vector of predictions for parallel lists of task ids and inputs."""
    return np.array([predict(model, t, x) for t, x in zip(task_ids, xs)])


def reconstruct_weights(model):
    """Explicit per-task weight vectors for a linear-kernel model.

    Column i is w_i = sum_{p,q} alpha_q^p x_q^p coupling[p, i]; predictions
    then equal w_i^T x + b_i exactly.
    """
    if model.kernel.kind != "linear":
        raise ValueError("explicit weights exist only for the linear kernel")
    weighted = model.support_inputs * model.dual_coefs[:, None]
    spread = np.zeros((model.support_inputs.shape[0], model.m))
    spread[np.arange(model.support_inputs.shape[0]), model.support_tasks] = 1.0
    return weighted.T @ spread @ model.coupling
