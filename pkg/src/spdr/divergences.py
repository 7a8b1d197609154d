"""Distances, divergences and kernels between SPD matrices.

Five measures are supported, selected by :class:`MetricKind`:

* ``AIRM``: affine-invariant geodesic distance ``||log(X^-1/2 Y X^-1/2)||_F``
* ``STEIN``: Jensen-Bregman LogDet divergence
  ``logdet((X+Y)/2) - logdet(XY)/2``
* ``JEFFREY``: symmetric KL divergence ``tr(X^-1 Y)/2 + tr(Y^-1 X)/2 - n``
* ``LOG_EUCLIDEAN``: ``||log X - log Y||_F``
* ``FROBENIUS``: ``||X - Y||_F``

Stein and Jeffrey are only ever used squared, so their functions return
the squared value.  :func:`sq_dist` and :func:`pairwise` return squared
values for every metric.
"""

import enum

import numpy as np

from .core import mat_log
from .exceptions import DimMismatchError, InvalidParameterError, NotPositiveDefiniteError


class MetricKind(str, enum.Enum):
    AIRM = "airm"
    STEIN = "stein"
    JEFFREY = "jeffrey"
    LOG_EUCLIDEAN = "logeuclidean"
    FROBENIUS = "frobenius"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {"riemann": "airm", "logeuc": "logeuclidean", "le": "logeuclidean",
                   "jbld": "stein", "s": "stein", "j": "jeffrey", "frob": "frobenius"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        raise InvalidParameterError(f"unknown metric {value!r}")

    @property
    def affine_invariant(self):
        return self in (MetricKind.AIRM, MetricKind.STEIN, MetricKind.JEFFREY)


def _pair(X, Y):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[-2:] != Y.shape[-2:]:
        raise DimMismatchError(f"dimension mismatch: {X.shape[-2:]} vs {Y.shape[-2:]}")
    return X, Y


def _cholesky(X):
    try:
        return np.linalg.cholesky(X)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("Cholesky factorization failed") from exc


def logdet(X):
    """``log det X`` from the Cholesky factor, safe for large ``n``."""
    L = _cholesky(np.asarray(X, dtype=np.float64))
    return 2.0 * np.sum(np.log(np.diagonal(L, axis1=-2, axis2=-1)), axis=-1)


def _whitened(X, Y):
    # L^-1 Y L^-T, with X = L L^T, shares its spectrum with X^-1/2 Y X^-1/2
    L = _cholesky(X)
    Z = np.linalg.solve(L, Y)
    Z = np.linalg.solve(L, np.swapaxes(Z, -1, -2))
    return 0.5 * (Z + np.swapaxes(Z, -1, -2))


def airm_dist_sq(X, Y):
    X, Y = _pair(X, Y)
    w = np.linalg.eigvalsh(_whitened(X, Y))
    if np.any(w <= 0):
        raise NotPositiveDefiniteError("second argument is not positive definite")
    return np.sum(np.log(w) ** 2, axis=-1)


def airm_dist(X, Y):
    """Geodesic distance induced by the affine-invariant Riemannian metric."""
    return np.sqrt(airm_dist_sq(X, Y))


def stein_div_sq(X, Y):
    """Squared Stein (Jensen-Bregman LogDet) divergence."""
    X, Y = _pair(X, Y)
    val = logdet(0.5 * (X + Y)) - 0.5 * (logdet(X) + logdet(Y))
    return np.maximum(val, 0.0)


def _trace_solve(L, B):
    # tr(X^-1 B) with X = L L^T
    Z = np.linalg.solve(L, B)
    Z = np.linalg.solve(np.swapaxes(L, -1, -2), Z)
    return np.trace(Z, axis1=-2, axis2=-1)


def jeffrey_div_sq(X, Y):
    """Squared Jeffrey (symmetric KL) divergence."""
    X, Y = _pair(X, Y)
    n = X.shape[-1]
    val = 0.5 * _trace_solve(_cholesky(X), Y) + 0.5 * _trace_solve(_cholesky(Y), X) - n
    return np.maximum(val, 0.0)


def logeuc_dist(X, Y):
    X, Y = _pair(X, Y)
    return np.linalg.norm(mat_log(X) - mat_log(Y), axis=(-2, -1))


def frob_dist(X, Y):
    X, Y = _pair(X, Y)
    return np.linalg.norm(X - Y, axis=(-2, -1))


def sq_dist(X, Y, metric):
    """Squared distance/divergence between ``X`` and ``Y`` under ``metric``."""
    metric = MetricKind.parse(metric)
    if metric is MetricKind.AIRM:
        return airm_dist_sq(X, Y)
    if metric is MetricKind.STEIN:
        return stein_div_sq(X, Y)
    if metric is MetricKind.JEFFREY:
        return jeffrey_div_sq(X, Y)
    if metric is MetricKind.LOG_EUCLIDEAN:
        return logeuc_dist(X, Y) ** 2
    return frob_dist(X, Y) ** 2


def stein_kernel(X, Y, beta):
    """Stein RBF kernel ``exp(-beta * stein_div_sq(X, Y))``."""
    if not beta > 0:
        raise InvalidParameterError(f"beta must be positive, got {beta}")
    return np.exp(-beta * stein_div_sq(X, Y))


def beta_is_pd(n, beta, atol=1e-12):
    """Whether the Stein kernel on n x n matrices is positive definite at ``beta``.

    True for ``beta`` in ``{1/2, 1, ..., (n-1)/2}`` or ``beta > (n-1)/2``.
    """
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if beta > 0.5 * (n - 1):
        return True
    twice = 2.0 * beta
    k = round(twice)
    return 1 <= k <= n - 1 and abs(twice - k) <= 2 * atol


def _as_stack(dataset):
    X = np.asarray(dataset, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise DimMismatchError(f"expected a stack of square matrices, got shape {X.shape}")
    if X.shape[0] == 0:
        raise DimMismatchError("dataset is empty")
    return X


def pairwise(dataset, metric, other=None):
    """Matrix of squared distances between all elements of a dataset.

    With ``other`` given, returns the ``(p, q)`` cross matrix between
    ``dataset`` and ``other`` instead.  Each entry is computed by the same
    routine as :func:`sq_dist`, so entries agree with elementwise calls.
    """
    metric = MetricKind.parse(metric)
    X = _as_stack(dataset)
    Y = X if other is None else _as_stack(other)
    if X.shape[1] != Y.shape[1]:
        raise DimMismatchError("datasets have different matrix sizes")
    p, q = len(X), len(Y)
    D = np.zeros((p, q))
    if metric in (MetricKind.LOG_EUCLIDEAN, MetricKind.FROBENIUS):
        # same arithmetic as sq_dist, with the logs computed once
        fx = mat_log if metric is MetricKind.LOG_EUCLIDEAN else np.asarray
        LX = fx(X)
        LY = LX if other is None else fx(Y)
        for i in range(p):
            D[i] = np.linalg.norm(LX[i] - LY, axis=(-2, -1)) ** 2
        if other is None:
            D = np.triu(D, 1)
            D = D + D.T
        return D
    if other is None:
        # upper triangle only, mirrored
        for i in range(p - 1):
            D[i, i + 1:] = sq_dist(np.broadcast_to(X[i], Y[i + 1:].shape), Y[i + 1:], metric)
        D = D + D.T
    else:
        for i in range(p):
            D[i] = sq_dist(np.broadcast_to(X[i], Y.shape), Y, metric)
    return D


def gram_matrix(dataset, metric, beta, other=None):
    """RBF-style Gram matrix ``exp(-beta * d^2)`` under any metric.

    Under the Stein divergence this is the Stein kernel; under the Jeffrey
    divergence it is in general *not* positive definite.
    """
    if not beta > 0:
        raise InvalidParameterError(f"beta must be positive, got {beta}")
    return np.exp(-beta * pairwise(dataset, metric, other=other))
