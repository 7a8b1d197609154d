"""Nearest-neighbour classification, clustering and clustering scores."""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import mat_exp, mat_log, symmetrize
from .divergences import MetricKind, _as_stack, pairwise
from .exceptions import (DataError, InvalidKError, LengthMismatchError,
                         MissingLabelsError, NoConvergenceError)
from .means import MeanConfig, frechet_mean


def nn_classify(train, labels, query, metric):
    """Label each query with the label of its nearest training matrix.

    Distances are squared distances under ``metric``; ties go to the
    training point with the lowest index.
    """
    X = _as_stack(train)
    labels = np.asarray(labels)
    if labels.shape != (len(X),):
        raise MissingLabelsError("need one label per training matrix")
    D = pairwise(query, metric, other=X)
    return labels[np.argmin(D, axis=1)]


@dataclass
class ClusterResult:
    assignments: np.ndarray
    centroids: list
    inertia: float
    history: list = field(default_factory=list)
    n_iter: int = 0
    clipped: bool = False
    empty_repairs: int = 0


def _check_k(k, p):
    if not 1 <= k <= p:
        raise InvalidKError(f"need 1 <= k <= {p}, got k={k}")


def _plusplus(dist_fn, p, k, rng):
    # k-means++ seeding with squared distances; returns chosen indices
    chosen = [int(rng.integers(p))]
    closest = dist_fn(chosen[0])
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(p, p=closest / total))
        else:
            # every point coincides with a seed: pick any unused index
            unused = np.setdiff1d(np.arange(p), chosen)
            nxt = int(rng.choice(unused))
        chosen.append(nxt)
        closest = np.minimum(closest, dist_fn(nxt))
    return chosen


def _repair_empty(assign, dist, k):
    # move the point farthest from its centroid into each empty cluster
    repairs = 0
    own = dist[np.arange(len(assign)), assign].copy()
    for c in range(k):
        if np.any(assign == c):
            continue
        counts = np.bincount(assign, minlength=k)
        movable = counts[assign] > 1
        i = int(np.argmax(np.where(movable, own, -np.inf)))
        assign[i] = c
        own[i] = 0.0
        repairs += 1
    return repairs


def kmeans(dataset, k, metric, seed=0, max_iters=100, mean_cfg=None):
    """Lloyd's k-means on SPD matrices under ``metric``.

    Points are assigned by squared distance and centroids recomputed with
    the matching Frechet mean.  The log-Euclidean case runs ordinary
    k-means on the matrix logarithms.  Seeding is k-means++ with squared
    distances, driven by ``seed``.

    Returns
    -------
    ClusterResult
        ``history`` holds the inertia after every centroid update; it is
        non-increasing up to the accuracy of the mean solver.
    """
    metric = MetricKind.parse(metric)
    X = _as_stack(dataset)
    p = len(X)
    _check_k(k, p)
    rng = np.random.default_rng(seed)
    mean_cfg = mean_cfg or MeanConfig(max_iters=500)

    if metric is MetricKind.LOG_EUCLIDEAN:
        L = mat_log(X)
        flat = L.reshape(p, -1)

        def to_centroids(C):
            return [mat_exp(c.reshape(L.shape[1:])) for c in C]

        def dists(C):
            C = np.asarray(C).reshape(len(C), -1)
            return ((flat[:, None, :] - C[None]) ** 2).sum(axis=-1)

        def update(assign):
            return np.array([flat[assign == c].mean(axis=0) for c in range(k)])

        seeds = _plusplus(lambda i: ((flat - flat[i]) ** 2).sum(axis=1), p, k, rng)
        C = flat[seeds].copy()
    else:
        def to_centroids(C):
            return [np.array(c) for c in C]

        def dists(C):
            return pairwise(X, metric, other=np.asarray(C))

        def centroid(members):
            try:
                return frechet_mean(members, metric, mean_cfg)
            except NoConvergenceError as exc:
                return exc.best

        def update(assign):
            return np.array([centroid(X[assign == c]) for c in range(k)])

        seeds = _plusplus(lambda i: pairwise(X, metric, other=X[i:i + 1])[:, 0], p, k, rng)
        C = X[seeds].copy()

    D = dists(C)
    assign = np.argmin(D, axis=1)
    repairs = _repair_empty(assign, D, k)
    history = []
    it = 0
    for it in range(1, max_iters + 1):
        C = update(assign)
        D = dists(C)
        history.append(float(D[np.arange(p), assign].sum()))
        new = np.argmin(D, axis=1)
        repairs += _repair_empty(new, D, k)
        if np.array_equal(new, assign):
            break
        assign = new
    inertia = float(D[np.arange(p), assign].sum())
    return ClusterResult(assign, to_centroids(C), inertia, history, it, False, repairs)


def _prepare_gram(gram):
    K = np.asarray(gram, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DataError(f"Gram matrix must be square, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise DataError("Gram matrix contains non-finite values")
    K = symmetrize(K)
    w, V = np.linalg.eigh(K)
    if w[0] < -1e-8 * abs(np.trace(K)):
        warnings.warn(
            f"Gram matrix is indefinite (min eigenvalue {w[0]:.3e}); clipping negative "
            "eigenvalues to zero",
            RuntimeWarning,
            stacklevel=3,
        )
        return symmetrize((V * np.maximum(w, 0.0)) @ V.T), True
    return K, False


def kernel_distances(K, assign, k):
    """Squared feature-space distances from every point to every cluster mean."""
    p = len(K)
    D = np.full((p, k), np.inf)
    diag = np.diag(K)
    for c in range(k):
        idx = np.flatnonzero(assign == c)
        if len(idx) == 0:
            continue
        s = len(idx)
        D[:, c] = diag - 2.0 / s * K[:, idx].sum(axis=1) + K[np.ix_(idx, idx)].sum() / s**2
    return D


def kernel_objective(K, assign):
    """``sum_i ||phi(x_i) - mean of its cluster||^2`` from Gram entries."""
    K = np.asarray(K, dtype=np.float64)
    total = float(np.trace(K))
    for c in np.unique(assign):
        idx = np.flatnonzero(assign == c)
        total -= K[np.ix_(idx, idx)].sum() / len(idx)
    return total


def kernel_kmeans(gram, k, seed=0, max_iters=100):
    """Kernel k-means on a precomputed Gram matrix.

    A slightly indefinite Gram matrix (smallest eigenvalue below
    ``-1e-8 * trace``) triggers a :class:`RuntimeWarning`; its negative
    eigenvalues are clipped to zero and ``clipped`` is set on the result.
    """
    K, clipped = _prepare_gram(gram)
    p = len(K)
    _check_k(k, p)
    rng = np.random.default_rng(seed)
    diag = np.diag(K)
    seeds = _plusplus(lambda i: np.maximum(diag + K[i, i] - 2.0 * K[:, i], 0.0), p, k, rng)
    D0 = np.maximum(diag[:, None] + diag[seeds][None] - 2.0 * K[:, seeds], 0.0)
    assign = np.argmin(D0, axis=1)
    repairs = _repair_empty(assign, D0, k)
    history = [kernel_objective(K, assign)]
    it = 0
    for it in range(1, max_iters + 1):
        D = kernel_distances(K, assign, k)
        new = np.argmin(D, axis=1)
        repairs += _repair_empty(new, D, k)
        if np.array_equal(new, assign):
            break
        assign = new
        history.append(kernel_objective(K, assign))
    return ClusterResult(assign, [], history[-1], history, it, clipped, repairs)


def _labels_pair(assignments, truth):
    a = np.asarray(assignments)
    t = np.asarray(truth)
    if a.ndim != 1 or a.shape != t.shape:
        raise LengthMismatchError(f"label vectors differ in shape: {a.shape} vs {t.shape}")
    if a.size == 0:
        raise LengthMismatchError("label vectors are empty")
    return a, t


def contingency(assignments, truth):
    a, t = _labels_pair(assignments, truth)
    _, ai = np.unique(a, return_inverse=True)
    _, ti = np.unique(t, return_inverse=True)
    M = np.zeros((ai.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(M, (ai, ti), 1)
    return M


def clustering_accuracy(assignments, truth):
    """Fraction of points matched under the best one-to-one label mapping.

    The mapping is found by optimal assignment (Hungarian method) on the
    contingency table.
    """
    M = contingency(assignments, truth)
    rows, cols = linear_sum_assignment(M, maximize=True)
    return float(M[rows, cols].sum() / M.sum())


def nmi(assignments, truth):
    """Normalized mutual information ``2 I / (H_a + H_t)`` in nats.

    Defined as 0 when both partitions consist of a single cluster.
    """
    M = contingency(assignments, truth)
    total = M.sum()

    def entropy(counts):
        q = counts[counts > 0] / total
        return -math.fsum(q * np.log(q))

    # I = H_a + H_t - H_joint; exactly rounded sums make identical
    # partitions score exactly 1
    ha, ht = entropy(M.sum(axis=1)), entropy(M.sum(axis=0))
    if ha + ht == 0:
        return 0.0
    mi = ha + ht - entropy(M.ravel())
    return float(np.clip(2.0 * mi / (ha + ht), 0.0, 1.0))
