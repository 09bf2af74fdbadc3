"""Pure-Python (numpy) implementations of the numerical hot kernels.

Mirrors the compiled obfeval._kernels extension. The selector in
obfeval.kernels picks the extension when it is importable and this module
otherwise; both expose the same functions with the same semantics.
"""

import numpy as np

BACKEND = "python"


def ba_iterate(rows, tol, max_iter):
    """Alternating-maximization channel capacity iteration.

    Runs the classic multiplicative update on the input distribution and
    stops when the certified upper/lower capacity bounds are closer than
    ``tol`` bits.

    Parameters
    ----------
    rows : (m, n) array
        Row-stochastic channel matrix W[e|x].
    tol : float
        Convergence threshold on the upper-lower bound gap, in bits.
    max_iter : int
        Maximum number of iterations.

    Returns
    -------
    (lower, upper, prior, iterations, converged)
        ``lower`` is I(prior; W) in bits, ``upper`` the matching upper
        bound; capacity lies in [lower, upper].
    """
    rows = np.ascontiguousarray(rows, dtype=np.float64)
    m = rows.shape[0]
    mask = rows > 0.0
    log_rows = np.zeros_like(rows)
    log_rows[mask] = np.log2(rows[mask])
    # D[x] = sum_e W[e|x] log2 W[e|x] - sum_e W[e|x] log2 P(e); the first
    # term never changes across iterations.
    row_term = (rows * log_rows).sum(axis=1)

    prior = np.full(m, 1.0 / m)
    lower = upper = 0.0
    for iteration in range(1, int(max_iter) + 1):
        marginal = prior @ rows
        log_marginal = np.zeros_like(marginal)
        pos = marginal > 0.0
        log_marginal[pos] = np.log2(marginal[pos])
        per_input = row_term - rows @ log_marginal
        lower = float(prior @ per_input)
        upper = float(per_input.max())
        if upper - lower < tol:
            return lower, upper, prior, iteration, True
        prior = prior * np.exp2(per_input - upper)
        prior = prior / prior.sum()
    return lower, upper, prior, int(max_iter), False


def mutual_information_bits(prior, rows):
    """I(X; E) in bits for a prior over inputs and a channel matrix.

    Computed as sum_x p(x) sum_e W[e|x] log2(W[e|x] / P(e)): taking logs
    of the conditionals rather than the joint keeps subnormal prior
    entries from underflowing the log argument to zero.
    """
    prior = np.asarray(prior, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.float64)
    marginal = prior @ rows
    log_rows = np.zeros_like(rows)
    mask = rows > 0.0
    log_rows[mask] = np.log2(rows[mask])
    log_marginal = np.zeros_like(marginal)
    pos = marginal > 0.0
    log_marginal[pos] = np.log2(marginal[pos])
    valid = mask & pos[None, :]
    contrib = np.where(valid, rows * (log_rows - log_marginal[None, :]), 0.0)
    total = float(prior @ contrib.sum(axis=1))
    return total if total > 0.0 else 0.0
