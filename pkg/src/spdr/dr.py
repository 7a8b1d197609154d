"""Dimensionality reduction from SPD(n) to SPD(m) with ``X -> W^T X W``.

``W`` is an n x m orthonormal matrix.  Two objectives are provided:

* supervised: ``L(W) = sum_{i != j} a_ij d^2(W^T X_i W, W^T X_j W)`` with an
  affinity graph ``a`` that pulls same-class neighbours together and pushes
  different-class neighbours apart (minimized);
* unsupervised: ``sum_i d^2(W^T X_i W, W^T M W)`` for the Frechet mean ``M``
  of the training data (maximized).

For AIRM, Stein and Jeffrey the Euclidean partials are available in closed
form and :func:`fit` runs Grassmann conjugate gradients.  For the
log-Euclidean metric ``log(W^T X W)`` is replaced by ``W^T log(X) W``,
which turns the supervised objective into ``tr(W^T F(W) W)``; the same
holds for the Frobenius distance with ``X`` in place of ``log X``.
:func:`fit_eig` minimizes it by repeatedly taking the ``m`` smallest
eigenvectors of ``F(W)``.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .core import mat_log, symmetrize, validate_spd
from .divergences import MetricKind, _as_stack, pairwise, sq_dist
from .exceptions import (
    ClassTooSmallError,
    DimMismatchError,
    EigFailureError,
    InvalidParameterError,
    MetricUnsupportedError,
    MissingLabelsError,
    NotPositiveDefiniteError,
    SingularProjectedMatrixError,
)
from .grassmann import (
    CgConfig,
    FitReport,
    IterRecord,
    Termination,
    cg_minimize,
    orthonormalize,
    random_projection,
    truncated_identity,
)
from .means import MeanConfig, frechet_mean

SUPERVISED = "supervised"
UNSUPERVISED = "unsupervised"

_GRADIENT_METRICS = (MetricKind.AIRM, MetricKind.STEIN, MetricKind.JEFFREY)
_EIG_METRICS = (MetricKind.LOG_EUCLIDEAN, MetricKind.FROBENIUS)


@dataclass
class AffinityGraph:
    """Symmetric ``{-1, 0, 1}`` affinity matrix with its construction parameters."""

    a: np.ndarray
    nu_w: int
    nu_b: int
    metric: MetricKind

    def pairs(self):
        """Upper-triangle index pairs with nonzero affinity, and their weights."""
        I, J = np.nonzero(np.triu(self.a, 1))
        return I, J, self.a[I, J]


def affinity_graph(dataset, labels, nu_w=None, nu_b=None, metric=MetricKind.AIRM):
    """Build the within/between-class nearest-neighbour affinity graph.

    ``a_ij = g_w - g_b`` where ``g_w = 1`` if ``i`` is among the ``nu_w``
    nearest same-class neighbours of ``j`` or vice versa, and ``g_b`` is the
    same with the ``nu_b`` nearest different-class neighbours.  Neighbours
    are ranked by the squared distance under ``metric``; ties go to the
    lower index.

    ``nu_w`` defaults to the smallest class size and ``nu_b`` to ``nu_w``.
    Neighbour counts larger than what a class offers are clipped.
    """
    if labels is None:
        raise MissingLabelsError("supervised DR needs class labels")
    X = _as_stack(dataset)
    labels = np.asarray(labels)
    if labels.shape != (len(X),):
        raise DimMismatchError("need exactly one label per matrix")
    classes, counts = np.unique(labels, return_counts=True)
    if np.any(counts < 2):
        raise ClassTooSmallError(
            f"every class needs >= 2 members; class {classes[np.argmin(counts)]} has {counts.min()}"
        )
    if nu_w is None:
        nu_w = int(counts.min())
    if nu_b is None:
        nu_b = nu_w
    if nu_w < 1 or nu_b < 0:
        raise InvalidParameterError("need nu_w >= 1 and nu_b >= 0")
    metric = MetricKind.parse(metric)

    D = pairwise(X, metric)
    p = len(X)
    same = labels[:, None] == labels[None, :]
    gw = np.zeros((p, p), dtype=bool)
    gb = np.zeros((p, p), dtype=bool)
    for i in range(p):
        order = np.argsort(D[i], kind="stable")
        order = order[order != i]
        within = order[same[i, order]][:nu_w]
        between = order[~same[i, order]][:nu_b]
        gw[i, within] = True
        gb[i, between] = True
    gw |= gw.T
    gb |= gb.T
    a = gw.astype(np.float64) - gb.astype(np.float64)
    return AffinityGraph(a=a, nu_w=nu_w, nu_b=nu_b, metric=metric)


@dataclass
class DrProblem:
    """Data and objective for one DR fit.

    Use :meth:`supervised` or :meth:`unsupervised` to build one.
    """

    X: np.ndarray
    metric: MetricKind
    target_dim: int
    mode: str = SUPERVISED
    affinity: AffinityGraph = None
    mean: np.ndarray = None
    labels: np.ndarray = None
    _logs: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.X = _as_stack(self.X)
        self.metric = MetricKind.parse(self.metric)
        n = self.X.shape[1]
        if not 1 <= self.target_dim < n:
            raise InvalidParameterError(
                f"target dimension must satisfy 1 <= m < n={n}, got {self.target_dim}"
            )
        if self.mode == SUPERVISED and self.affinity is None:
            raise MissingLabelsError("supervised problems need an affinity graph")
        if self.mode == UNSUPERVISED and self.mean is None:
            raise InvalidParameterError("unsupervised problems need the data mean")
        if self.mode not in (SUPERVISED, UNSUPERVISED):
            raise InvalidParameterError(f"unknown mode {self.mode!r}")

    @classmethod
    def supervised(cls, X, labels, metric, target_dim, nu_w=None, nu_b=None):
        graph = affinity_graph(X, labels, nu_w=nu_w, nu_b=nu_b, metric=metric)
        return cls(X=X, metric=metric, target_dim=target_dim, mode=SUPERVISED,
                   affinity=graph, labels=np.asarray(labels))

    @classmethod
    def unsupervised(cls, X, metric, target_dim, mean_cfg=None):
        # the mean is taken once, on the original data, and kept fixed
        mean = frechet_mean(X, metric, mean_cfg or MeanConfig(max_iters=500))
        return cls(X=X, metric=metric, target_dim=target_dim, mode=UNSUPERVISED, mean=mean)

    @property
    def n(self):
        return self.X.shape[1]

    def matrix_source(self):
        """Matrices entering the eigen-solver objective (``log X`` or ``X``)."""
        if self._logs is None:
            self._logs = mat_log(self.X) if self.metric is MetricKind.LOG_EUCLIDEAN else self.X
        return self._logs


def _project(X, W):
    XW = X @ W
    return XW, symmetrize(W.T @ XW)


def _chol_inv(A):
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularProjectedMatrixError("W^T X W is not positive definite") from exc
    Li = np.linalg.inv(L)
    return symmetrize(np.swapaxes(Li, -1, -2) @ Li)


def _pair_sq_dist(A, B, metric):
    try:
        return sq_dist(A, B, metric)
    except NotPositiveDefiniteError as exc:
        raise SingularProjectedMatrixError("W^T X W is not positive definite") from exc


def _pair_coefficients(A, B, Ainv, Binv, metric):
    """m x m factors such that the partials of d^2(W^T X W, W^T Y W) are
    ``X W C_x + Y W C_y``."""
    if metric is MetricKind.STEIN:
        Sinv = _chol_inv(0.5 * (A + B))
        return Sinv - Ainv, Sinv - Binv
    if metric is MetricKind.JEFFREY:
        return Binv - Ainv @ B @ Ainv, Ainv - Binv @ A @ Binv
    # AIRM: 4 (X W A^-1 - Y W B^-1) log(A B^-1), with the log taken through
    # the similar symmetric matrix B^-1/2 A B^-1/2
    w, U = np.linalg.eigh(B)
    Bs = (U * np.sqrt(w)[..., None, :]) @ np.swapaxes(U, -1, -2)
    Bis = (U / np.sqrt(w)[..., None, :]) @ np.swapaxes(U, -1, -2)
    logAB = Bs @ mat_log(symmetrize(Bis @ A @ Bis)) @ Bis
    return 4.0 * Ainv @ logAB, -4.0 * Binv @ logAB


def _check_gradient_metric(problem):
    if problem.metric not in _GRADIENT_METRICS:
        raise MetricUnsupportedError(
            f"{problem.metric.value} has no closed-form Jacobian; use the eigen solver"
        )


def supervised_cost(W, problem):
    """``sum_{i != j} a_ij d^2(W^T X_i W, W^T X_j W)`` (may be negative)."""
    _check_gradient_metric(problem)
    I, J, a = problem.affinity.pairs()
    if len(a) == 0:
        return 0.0
    _, A = _project(problem.X, W)
    return 2.0 * float(np.sum(a * _pair_sq_dist(A[I], A[J], problem.metric)))


def supervised_grad(W, problem):
    """Euclidean partials of :func:`supervised_cost` with respect to ``W``."""
    _check_gradient_metric(problem)
    I, J, a = problem.affinity.pairs()
    if len(a) == 0:
        return np.zeros_like(W)
    XW, A = _project(problem.X, W)
    Ainv = _chol_inv(A)
    CI, CJ = _pair_coefficients(A[I], A[J], Ainv[I], Ainv[J], problem.metric)
    C = np.zeros_like(A)
    np.add.at(C, I, a[:, None, None] * CI)
    np.add.at(C, J, a[:, None, None] * CJ)
    return 2.0 * np.einsum("pnm,pmk->nk", XW, C)


def unsupervised_cost_grad(W, problem):
    """Variance ``sum_i d^2(W^T X_i W, W^T M W)`` and its Euclidean partials.

    This objective is to be maximized.  For the log-Euclidean and Frobenius
    metrics the linearized surrogate ``||W^T (log X_i - log M) W||^2`` is
    used.
    """
    if problem.mode != UNSUPERVISED:
        raise InvalidParameterError("problem is not unsupervised")
    M = problem.mean
    if problem.metric in _EIG_METRICS:
        src = problem.matrix_source()
        Mref = mat_log(M) if problem.metric is MetricKind.LOG_EUCLIDEAN else M
        D = src - Mref
        DW = D @ W
        T = np.swapaxes(DW, -1, -2) @ W  # W^T D W
        cost = float(np.sum(T * T))
        grad = 4.0 * np.einsum("pnm,pmk->nk", DW, T)
        return cost, grad
    XW, A = _project(problem.X, W)
    MW, B = _project(M, W)
    Ainv = _chol_inv(A)
    Binv = _chol_inv(B)
    Bs = np.broadcast_to(B, A.shape)
    cost = float(np.sum(_pair_sq_dist(A, Bs, problem.metric)))
    CI, CM = _pair_coefficients(A, Bs, Ainv, np.broadcast_to(Binv, A.shape), problem.metric)
    grad = np.einsum("pnm,pmk->nk", XW, CI) + MW @ CM.sum(axis=0)
    return cost, grad


def eig_matrix(W, problem):
    """``F(W) = sum_ij a_ij D_ij W W^T D_ij`` with ``D_ij`` the difference
    of the (log-)matrices of samples ``i`` and ``j``."""
    L = problem.matrix_source()
    a = problem.affinity.a
    Q = L @ W
    deg = a.sum(axis=1)
    T = np.einsum("ij,jnm->inm", a, Q)
    F = 2.0 * np.einsum("i,inm,ikm->nk", deg, Q, Q) - 2.0 * np.einsum("inm,ikm->nk", Q, T)
    return symmetrize(F)


def eig_objective(W, problem):
    """``tr(W^T F(W) W) = sum_ij a_ij ||W^T D_ij W||_F^2``."""
    return float(np.sum(W * (eig_matrix(W, problem) @ W)))


def eig_objective_grad(W, problem):
    return 4.0 * eig_matrix(W, problem) @ W


def objective(W, problem):
    """Objective value as minimized by :func:`fit` (variance is negated)."""
    if problem.mode == UNSUPERVISED:
        return -unsupervised_cost_grad(W, problem)[0]
    if problem.metric in _EIG_METRICS:
        return eig_objective(W, problem)
    return supervised_cost(W, problem)


def _initial_point(problem, W0, seed, init):
    if W0 is not None:
        W0 = np.asarray(W0, dtype=np.float64)
        if W0.shape != (problem.n, problem.target_dim):
            raise DimMismatchError(f"W0 has shape {W0.shape}")
        return orthonormalize(W0)
    if init == "random":
        return random_projection(problem.n, problem.target_dim, np.random.default_rng(seed))
    return truncated_identity(problem.n, problem.target_dim)


def fit(problem, cfg=None, seed=0, W0=None, init="identity"):
    """Learn ``W`` by conjugate gradients on the Grassmann manifold.

    The supervised cost is minimized; the unsupervised variance is
    maximized by minimizing its negation.  Log-Euclidean and Frobenius
    problems optimize the linearized ``tr(W^T F(W) W)`` objective.  The
    start is the truncated identity unless ``W0`` is given or
    ``init="random"`` (drawn from ``seed``).
    """
    cfg = cfg or CgConfig()
    W0 = _initial_point(problem, W0, seed, init)

    if problem.mode == UNSUPERVISED:
        cache = {}

        def cost_grad(W):
            key = W.tobytes()
            if key not in cache:
                cache.clear()
                c, g = unsupervised_cost_grad(W, problem)
                cache[key] = (-c, -g)
            return cache[key]

        cost_fn = lambda W: cost_grad(W)[0]  # noqa: E731
        grad_fn = lambda W: cost_grad(W)[1]  # noqa: E731
    elif problem.metric in _EIG_METRICS:
        cost_fn = lambda W: eig_objective(W, problem)  # noqa: E731
        grad_fn = lambda W: eig_objective_grad(W, problem)  # noqa: E731
    else:
        cost_fn = lambda W: supervised_cost(W, problem)  # noqa: E731
        grad_fn = lambda W: supervised_grad(W, problem)  # noqa: E731
    W, report = cg_minimize(cost_fn, grad_fn, W0, cfg)
    return W, report


def _align(W_new, W):
    # rotate W_new's basis to be as close as possible to W (orthogonal Procrustes)
    U, _, Vt = np.linalg.svd(W_new.T @ W)
    return W_new @ (U @ Vt)


def fit_eig(problem, max_outer=100, tol=1e-8, W0=None, max_backtracks=20):
    """Iterative eigen-decomposition solver for log-Euclidean/Frobenius DR.

    Alternates between building ``F(W)`` and replacing ``W`` by the ``m``
    eigenvectors of ``F(W)`` with smallest eigenvalues.  A new ``W`` is only
    accepted if it lowers ``tr(W^T F(W) W)``; otherwise the step toward it
    is shortened by interpolation, and the solver stops if that fails too.
    Stops when the relative decrease drops below ``tol``.
    """
    if problem.metric not in _EIG_METRICS:
        raise MetricUnsupportedError("the eigen solver handles log-Euclidean and Frobenius only")
    if problem.mode != SUPERVISED:
        raise InvalidParameterError("the eigen solver needs a supervised problem")
    start = time.perf_counter()
    m = problem.target_dim
    W = truncated_identity(problem.n, m) if W0 is None else orthonormalize(W0)
    report = FitReport(solver="eig", termination=Termination.MAX_ITERS)
    F = eig_matrix(W, problem)
    f = float(np.sum(W * (F @ W)))
    report.n_cost_evals += 1
    report.records.append(IterRecord(0, f, float(np.linalg.norm(4 * (F @ W - W @ (W.T @ F @ W)))),
                                     0.0, time.perf_counter() - start))
    if not np.any(F):
        report.termination = Termination.CONVERGED
        return W, report

    for it in range(1, max_outer + 1):
        try:
            _, V = np.linalg.eigh(F)
        except np.linalg.LinAlgError as exc:
            raise EigFailureError("eigendecomposition of F(W) failed") from exc
        W_new = _align(V[:, :m], W)
        F_new = eig_matrix(W_new, problem)
        f_new = float(np.sum(W_new * (F_new @ W_new)))
        report.n_cost_evals += 1
        step = 1.0
        while f_new >= f:
            step *= 0.5
            if step < 0.5**max_backtracks:
                break
            W_new = orthonormalize(W + step * (_align(V[:, :m], W) - W))
            F_new = eig_matrix(W_new, problem)
            f_new = float(np.sum(W_new * (F_new @ W_new)))
            report.n_cost_evals += 1
        if f_new >= f:
            report.termination = Termination.LINE_SEARCH_FAILED
            break
        decrease = f - f_new
        W, F, f = W_new, F_new, f_new
        G = 4.0 * (F @ W - W @ (W.T @ F @ W))
        report.records.append(IterRecord(it, f, float(np.linalg.norm(G)), step,
                                         time.perf_counter() - start))
        if decrease <= tol * max(abs(f), np.finfo(float).tiny):
            report.termination = Termination.CONVERGED
            break
    return W, report


def transform(X, W, validate=True):
    """Map SPD matrices to ``W^T X W``; accepts one matrix or a stack."""
    X = np.asarray(X, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    if X.shape[-1] != W.shape[0]:
        raise DimMismatchError(f"X is {X.shape[-1]}-dimensional but W has {W.shape[0]} rows")
    out = symmetrize(W.T @ X @ W)
    return validate_spd(out) if validate else out
