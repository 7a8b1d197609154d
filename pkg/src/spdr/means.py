"""Frechet means of SPD matrices under each supported metric.

The Frechet mean minimizes ``sum_i d^2(X_i, M)`` over SPD ``M``.

* AIRM: Karcher iteration with exponential/logarithm maps.
* Stein: fixed point ``M^-1 = mean_i ((X_i + M) / 2)^-1``, the stationarity
  condition of the summed divergence.
* Jeffrey: closed form, the unique SPD solution of ``M L M = G`` with
  ``L = sum_i X_i^-1`` and ``G = sum_i X_i``.
* log-Euclidean: ``exp(mean_i log X_i)``.
* Frobenius: arithmetic mean.
"""

from dataclasses import dataclass

import numpy as np

from .core import mat_exp, mat_invsqrt, mat_log, mat_pow, symmetrize
from .divergences import MetricKind, _as_stack, sq_dist
from .exceptions import InvalidParameterError, NoConvergenceError


@dataclass(frozen=True)
class MeanConfig:
    max_iters: int = 100
    grad_tolerance: float = 1e-10
    step_size: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidParameterError("max_iters must be >= 1")
        if not self.grad_tolerance > 0:
            raise InvalidParameterError("grad_tolerance must be positive")
        if not 0 < self.step_size <= 1:
            raise InvalidParameterError("step_size must be in (0, 1]")


def _inv(X):
    return symmetrize(np.linalg.inv(X))


def _sqrt_and_invsqrt(M):
    w, U = np.linalg.eigh(M)
    Ut = U.T
    return symmetrize((U * np.sqrt(w)) @ Ut), symmetrize((U / np.sqrt(w)) @ Ut)


def _rel_change(new, old):
    return np.linalg.norm(new - old) / np.linalg.norm(old)


def karcher_mean(dataset, cfg=None, return_history=False):
    """Riemannian (Karcher) mean under the affine-invariant metric.

    Iterates ``M <- M^1/2 exp(step * mean_i log(M^-1/2 X_i M^-1/2)) M^1/2``
    from the arithmetic mean, halving the step whenever the summed squared
    distance goes up.

    Raises
    ------
    NoConvergenceError
        If ``cfg.max_iters`` is exhausted; ``best`` holds the last iterate.
    """
    cfg = cfg or MeanConfig()
    X = _as_stack(dataset)
    if len(X) == 1:
        return X[0].copy()
    M = symmetrize(X.mean(axis=0))
    step = cfg.step_size
    cost = float(np.sum(sq_dist(np.broadcast_to(M, X.shape), X, MetricKind.AIRM)))
    history = [cost]
    for _ in range(cfg.max_iters):
        S, Si = _sqrt_and_invsqrt(M)
        T = mat_log(Si @ X @ Si).mean(axis=0)
        while True:
            M_new = symmetrize(S @ mat_exp(step * T) @ S)
            new_cost = float(np.sum(sq_dist(np.broadcast_to(M_new, X.shape), X, MetricKind.AIRM)))
            if new_cost <= cost * (1 + 1e-12) or step < 1e-8:
                break
            step *= 0.5
        change = _rel_change(M_new, M)
        M, cost = M_new, new_cost
        history.append(cost)
        if change < cfg.grad_tolerance:
            return (M, history) if return_history else M
    raise NoConvergenceError(
        f"Karcher mean did not converge in {cfg.max_iters} iterations", best=M, residual=change
    )


def stein_mean(dataset, cfg=None, return_history=False):
    """Mean under the Stein divergence by fixed-point iteration.

    Each step sets ``M^-1`` to the average of ``((X_i + M) / 2)^-1``.  The
    summed divergence is recorded in the optional history.
    """
    cfg = cfg or MeanConfig()
    X = _as_stack(dataset)
    if len(X) == 1:
        return X[0].copy()
    M = symmetrize(X.mean(axis=0))
    history = [float(np.sum(sq_dist(X, np.broadcast_to(M, X.shape), MetricKind.STEIN)))]
    for _ in range(cfg.max_iters):
        M_new = _inv(np.mean(np.linalg.inv(0.5 * (X + M)), axis=0))
        change = _rel_change(M_new, M)
        M = M_new
        history.append(float(np.sum(sq_dist(X, np.broadcast_to(M, X.shape), MetricKind.STEIN))))
        if change < cfg.grad_tolerance:
            return (M, history) if return_history else M
    raise NoConvergenceError(
        f"Stein mean did not converge in {cfg.max_iters} iterations", best=M, residual=change
    )


def jeffrey_mean(dataset):
    """Closed-form Frechet mean under the Jeffrey divergence.

    ``M = L^-1/2 (L^1/2 G L^1/2)^1/2 L^-1/2`` with ``L = sum X_i^-1`` and
    ``G = sum X_i``; this is the SPD solution of the Riccati equation
    ``M L M = G``.
    """
    X = _as_stack(dataset)
    if len(X) == 1:
        return X[0].copy()
    L = symmetrize(np.sum(np.linalg.inv(X), axis=0))
    G = symmetrize(X.sum(axis=0))
    Ls, Lis = _sqrt_and_invsqrt(L)
    return symmetrize(Lis @ mat_pow(Ls @ G @ Ls, 0.5) @ Lis)


def logeuc_mean(dataset):
    X = _as_stack(dataset)
    if len(X) == 1:
        return X[0].copy()
    return mat_exp(mat_log(X).mean(axis=0))


def arithmetic_mean(dataset):
    X = _as_stack(dataset)
    if len(X) == 1:
        return X[0].copy()
    return symmetrize(X.mean(axis=0))


def frechet_mean(dataset, metric, cfg=None):
    """Frechet mean of ``dataset`` under ``metric``.

    Dispatches to :func:`karcher_mean`, :func:`stein_mean`,
    :func:`jeffrey_mean`, :func:`logeuc_mean` or :func:`arithmetic_mean`.
    """
    metric = MetricKind.parse(metric)
    if metric is MetricKind.AIRM:
        return karcher_mean(dataset, cfg)
    if metric is MetricKind.STEIN:
        return stein_mean(dataset, cfg)
    if metric is MetricKind.JEFFREY:
        return jeffrey_mean(dataset)
    if metric is MetricKind.LOG_EUCLIDEAN:
        return logeuc_mean(dataset)
    return arithmetic_mean(dataset)


def frechet_objective(dataset, M, metric):
    """``sum_i d^2(X_i, M)``."""
    X = _as_stack(dataset)
    return float(np.sum(sq_dist(X, np.broadcast_to(M, X.shape), metric)))


def karcher_residual(dataset, M):
    """``||sum_i log(M^-1/2 X_i M^-1/2)||_F``, zero at the Karcher mean."""
    X = _as_stack(dataset)
    Si = mat_invsqrt(M)
    return float(np.linalg.norm(mat_log(Si @ X @ Si).sum(axis=0)))


def stein_residual(dataset, M):
    """Frobenius norm of the Euclidean gradient of the summed Stein divergence."""
    X = _as_stack(dataset)
    G = 0.5 * np.sum(np.linalg.inv(0.5 * (X + M)), axis=0) - 0.5 * len(X) * np.linalg.inv(M)
    return float(np.linalg.norm(G))


def riccati_residual(dataset, M):
    """Relative residual ``||M L M - G|| / ||G||`` of the Jeffrey-mean equation."""
    X = _as_stack(dataset)
    L = np.sum(np.linalg.inv(X), axis=0)
    G = X.sum(axis=0)
    return float(np.linalg.norm(M @ L @ M - G) / np.linalg.norm(G))
