"""Minimum-norm point in the convex hull of vectors, via Frank-Wolfe on the simplex.

Given vectors v_1, ..., v_T, the weights beta minimizing
``|| sum_i beta_i v_i ||^2`` over the probability simplex are found by
conditional-gradient iterations on the Gram matrix M_ij = <v_i, v_j>.
Every step moves toward a single vertex with an exact, closed-form step
size, so the objective never increases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FwConfig",
    "FwResult",
    "gram_matrix",
    "combination_norm_sq",
    "fw_line_search",
    "frank_wolfe_min_norm",
]

# Line-search denominators below this are treated as zero (flat objective).
_DENOM_GUARD = 1e-18


@dataclass(frozen=True)
class FwConfig:
    """Stopping parameters for the Frank-Wolfe solver.

    ``tolerance`` bounds the exact step size: once the optimal step is at
    or below it, the iterate cannot move meaningfully and we stop.
    """

    tolerance: float = 1e-10
    max_iters: int = 500

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class FwResult:
    """Solver output: simplex weights plus convergence diagnostics.

    ``last_eta`` is the final exact step size; values above the configured
    tolerance mean the iteration budget ran out before the stopping test
    fired. ``objectives[k]`` is the quadratic form at the iterate after k
    updates (index 0 is the uniform starting point).
    """

    weights: np.ndarray
    last_eta: float
    iterations: int
    objectives: np.ndarray


def gram_matrix(vectors) -> np.ndarray:
    """Matrix of pairwise inner products, exactly symmetric by construction.

    Parameters
    ----------
    vectors : array-like, shape (T, d) or a sequence of length-d vectors

    Returns
    -------
    ndarray, shape (T, T)
    """
    try:
        V = np.asarray(vectors, dtype=float)
    except ValueError as exc:
        raise ValueError("all vectors must share the same dimension") from exc
    if V.ndim == 1:
        V = V[None, :]
    if V.ndim != 2 or V.shape[0] < 1 or V.shape[1] < 1:
        raise ValueError(f"expected at least one vector of dimension >= 1, got shape {V.shape}")
    T = V.shape[0]
    M = np.empty((T, T))
    for i in range(T):
        for j in range(i, T):
            M[i, j] = M[j, i] = float(np.dot(V[i], V[j]))
    return M


def combination_norm_sq(M, w) -> float:
    """Squared norm ``w^T M w`` of the combination with weights w, clamped at 0."""
    M = np.asarray(M, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape != (M.shape[0],):
        raise ValueError(f"weights of length {w.shape} do not match matrix of dim {M.shape[0]}")
    return max(float(w @ M @ w), 0.0)


def fw_line_search(M, w, target: int) -> float:
    """Exact step size toward a vertex for the quadratic simplex objective.

    Minimizes ``q(eta) = ||(1-eta) w + eta e_t||_M^2`` over eta in [0, 1].
    The minimizer has three regimes: 0 when w already beats the vertex
    direction, 1 when the vertex dominates outright, and otherwise an
    interior ratio clamped into [0, 1].
    """
    M = np.asarray(M, dtype=float)
    w = np.asarray(w, dtype=float)
    T = M.shape[0]
    if w.shape != (T,):
        raise ValueError(f"weights of length {w.shape} do not match matrix of dim {T}")
    if not 0 <= target < T:
        raise ValueError(f"target index {target} out of range for dim {T}")

    Mw = M @ w
    w_M_w = float(w @ Mw)
    w_M_e = float(Mw[target])
    e_M_e = float(M[target, target])

    if w_M_w <= w_M_e:
        return 0.0
    if e_M_e <= w_M_e:
        return 1.0
    denom = e_M_e - 2.0 * w_M_e + w_M_w
    if denom < _DENOM_GUARD:
        return 0.0
    eta = (w_M_w - w_M_e) / denom
    return min(max(eta, 0.0), 1.0)


def _face_refinement(M: np.ndarray, beta: np.ndarray) -> np.ndarray | None:
    """Exact weights on the face the iterate has settled on, or None.

    Toward-vertex steps converge sublinearly when the optimum lies on a
    proper face: weights of abandoned vertices decay too slowly to ever
    look like exact zeros. This solves the stationarity system of the
    sum-one quadratic program restricted to the currently heavy
    coordinates (a bordered system, solved by least squares so that
    rank-deficient faces, where the minimum value is zero, work too),
    dropping coordinates the solution makes negative and admitting
    vertices that still beat the candidate. The final answer carries
    exact zeros off the identified face.
    """
    T = beta.shape[0]
    scale = max(1.0, float(np.max(np.abs(np.diag(M)))))
    support = np.flatnonzero(beta > 1e-7)
    if support.size == 0:
        return None
    best: np.ndarray | None = None
    best_value = np.inf
    for _ in range(4 * T + 8):
        k = support.size
        bordered = np.zeros((k + 1, k + 1))
        bordered[:k, :k] = 2.0 * M[np.ix_(support, support)]
        bordered[:k, k] = 1.0
        bordered[k, :k] = 1.0
        rhs = np.zeros(k + 1)
        rhs[k] = 1.0
        x = np.linalg.lstsq(bordered, rhs, rcond=None)[0][:k]
        total = float(x.sum())
        if not np.all(np.isfinite(x)) or total <= 1e-300:
            return best
        x = x / total
        if float(x.min()) < -1e-12:
            support = np.delete(support, int(np.argmin(x)))
            if support.size == 0:
                return best
            continue
        candidate = np.zeros(T)
        candidate[support] = np.maximum(x, 0.0)
        candidate /= candidate.sum()
        value = combination_norm_sq(M, candidate)
        if value < best_value:
            best, best_value = candidate, value
        slack = value - M @ candidate
        slack[support] = 0.0
        worst = int(np.argmax(slack))
        if slack[worst] > 1e-12 * scale:
            support = np.sort(np.append(support, worst))
            continue
        return candidate
    return best


def frank_wolfe_min_norm(M, cfg: FwConfig = FwConfig()) -> FwResult:
    """Minimize ``beta^T M beta`` over the probability simplex.

    Starts from the uniform point. Each iteration picks the vertex whose
    coordinate of the objective gradient ``M beta`` is smallest (ties go to
    the smallest index), takes the exact step toward it, and stops once the
    exact step size drops to the configured tolerance.

    Because toward-vertex steps leave slowly decaying weight on abandoned
    vertices, a terminal refinement re-solves the optimality system on the
    face the iterate identified; it is kept only when it does not increase
    the objective, so the recorded objective sequence stays non-increasing.
    The returned weights are renormalized once at exit so they sum to one
    despite float drift.

    Parameters
    ----------
    M : ndarray, shape (T, T)
        Gram matrix of the vectors whose combination is being shortened.
    cfg : FwConfig

    Returns
    -------
    FwResult
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    T = M.shape[0]
    if T == 0:
        raise ValueError("need at least one vector")
    if T == 1:
        return FwResult(
            weights=np.ones(1),
            last_eta=0.0,
            iterations=0,
            objectives=np.array([max(float(M[0, 0]), 0.0)]),
        )

    beta = np.full(T, 1.0 / T)
    objectives = [combination_norm_sq(M, beta)]
    last_eta = 0.0
    iterations = 0
    for _ in range(cfg.max_iters):
        i_star = int(np.argmin(M @ beta))
        eta = fw_line_search(M, beta, i_star)
        last_eta = eta
        if eta <= cfg.tolerance:
            break
        beta *= 1.0 - eta
        beta[i_star] += eta
        iterations += 1
        objectives.append(combination_norm_sq(M, beta))

    refined = _face_refinement(M, beta)
    if refined is not None and combination_norm_sq(M, refined) <= objectives[-1]:
        beta = refined
        objectives.append(combination_norm_sq(M, beta))

    beta = beta / beta.sum()
    return FwResult(
        weights=beta,
        last_eta=last_eta,
        iterations=iterations,
        objectives=np.asarray(objectives),
    )
