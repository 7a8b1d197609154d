"""Conjugate-gradient optimization on the Grassmann manifold G(m, n).

Points are n x m matrices with orthonormal columns; the cost functions we
optimize are invariant to ``W -> W R`` for orthogonal ``R``, so only the
spanned subspace matters.  Tangent vectors at ``W`` are horizontal:
``W^T H = 0``.
"""

import enum
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import DimMismatchError, InvalidParameterError, NumericalError


class DirectionRule(str, enum.Enum):
    FLETCHER_REEVES = "fletcher-reeves"
    POLAK_RIBIERE = "polak-ribiere"


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    LINE_SEARCH_FAILED = "line_search_failed"


@dataclass(frozen=True)
class CgConfig:
    """Settings for :func:`cg_minimize`.

    ``initial_step`` is the length (in radians along the geodesic) of the
    first trial step; later iterations start from twice the previously
    accepted step length.  ``restart_period=None`` means ``m * (n - m)``.
    """

    max_iters: int = 200
    grad_tolerance: float = 1e-6
    initial_step: float = 1.0
    shrink_factor: float = 0.5
    max_evals: int = 25
    restart_period: int = None
    direction_rule: DirectionRule = DirectionRule.FLETCHER_REEVES
    armijo: float = 1e-4

    def __post_init__(self):
        if self.max_iters < 1 or self.max_evals < 1:
            raise InvalidParameterError("max_iters and max_evals must be >= 1")
        if not (self.grad_tolerance > 0 and self.initial_step > 0):
            raise InvalidParameterError("grad_tolerance and initial_step must be positive")
        if not 0 < self.shrink_factor < 1:
            raise InvalidParameterError("shrink_factor must be in (0, 1)")
        if self.restart_period is not None and self.restart_period < 1:
            raise InvalidParameterError("restart_period must be >= 1")
        object.__setattr__(self, "direction_rule", DirectionRule(self.direction_rule))


@dataclass
class IterRecord:
    iter: int
    cost: float
    grad_norm: float
    step: float
    elapsed_seconds: float


@dataclass
class FitReport:
    records: list = field(default_factory=list)
    termination: Termination = Termination.MAX_ITERS
    solver: str = "cg"
    n_cost_evals: int = 0
    n_grad_evals: int = 0

    @property
    def costs(self):
        return np.array([r.cost for r in self.records])

    @property
    def final_cost(self):
        return self.records[-1].cost

    @property
    def elapsed_seconds(self):
        return self.records[-1].elapsed_seconds if self.records else 0.0

    def to_dict(self):
        out = asdict(self)
        out["termination"] = Termination(self.termination).value
        return out


def orthonormalize(W):
    """Thin QR with the diagonal of R forced positive."""
    Q, R = np.linalg.qr(np.asarray(W, dtype=np.float64))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def truncated_identity(n, m):
    if not 1 <= m < n:
        raise InvalidParameterError(f"need 1 <= m < n, got m={m}, n={n}")
    return np.eye(n, m)


def random_projection(n, m, rng):
    return orthonormalize(rng.standard_normal((n, m)))


def orthonormality_error(W):
    return float(np.max(np.abs(W.T @ W - np.eye(W.shape[1]))))


def project_gradient(W, euclid_grad):
    """Riemannian gradient ``(I - W W^T) G`` from Euclidean partials ``G``."""
    G = np.asarray(euclid_grad, dtype=np.float64)
    if G.shape != W.shape:
        raise DimMismatchError(f"gradient shape {G.shape} does not match W {W.shape}")
    return G - W @ (W.T @ G)


def inner(H1, H2):
    return float(np.sum(H1 * H2))


def geodesic_step(W, H, t):
    """Point at parameter ``t`` on the geodesic from ``W`` in direction ``H``.

    ``W(t) = [W V, U] [cos(S t); sin(S t)] V^T`` where ``H = U S V^T`` is the
    compact SVD.
    """
    if t == 0 or not np.any(H):
        return np.array(W, dtype=np.float64, copy=True)
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    Wt = (W @ Vt.T) * np.cos(s * t) @ Vt + U * np.sin(s * t) @ Vt
    return orthonormalize(Wt)


def parallel_transport(H, W_from, W_to, step_dir, t):
    """Transport tangent vector ``H`` along the geodesic ``W_from -> W_to``.

    The geodesic is the one traced by :func:`geodesic_step` with
    ``step_dir`` and ``t``.  The result is re-projected onto the horizontal
    space at ``W_to`` to remove round-off.
    """
    if H.shape != W_from.shape or W_to.shape != W_from.shape:
        raise DimMismatchError("tangent vector and base points must share a shape")
    if t == 0 or not np.any(step_dir):
        return np.array(H, dtype=np.float64, copy=True)
    U, s, Vt = np.linalg.svd(step_dir, full_matrices=False)
    UtH = U.T @ H
    moved = (-(W_from @ Vt.T) * np.sin(s * t) + U * np.cos(s * t)) @ UtH
    out = moved + H - U @ UtH
    return project_gradient(W_to, out)


def cg_minimize(cost_fn, grad_fn, W0, cfg=None, callback=None):
    """Minimize ``cost_fn`` over G(m, n) by Riemannian conjugate gradients.

    Parameters
    ----------
    cost_fn : callable
        ``W -> float``.  May raise :class:`~spdr.exceptions.NumericalError`
        at points where the cost is undefined; such trial steps are rejected.
    grad_fn : callable
        ``W -> ndarray`` of Euclidean partial derivatives; the projection to
        the tangent space is applied here.
    W0 : ndarray, shape (n, m)
        Starting point, orthonormalized before use.
    cfg : CgConfig, optional

    Returns
    -------
    W : ndarray
        Best point found.
    report : FitReport
        One record per accepted iterate; costs are strictly decreasing.
    """
    cfg = cfg or CgConfig()
    start = time.perf_counter()
    report = FitReport(solver="cg")
    n, m = W0.shape
    restart_period = cfg.restart_period or max(m * (n - m), 1)

    def safe_cost(W):
        report.n_cost_evals += 1
        try:
            val = float(cost_fn(W))
        except (NumericalError, np.linalg.LinAlgError):
            return np.inf
        return val if np.isfinite(val) else np.inf

    def riem_grad(W):
        report.n_grad_evals += 1
        return project_gradient(W, grad_fn(W))

    W = orthonormalize(W0)
    f = safe_cost(W)
    if not np.isfinite(f):
        raise NumericalError("cost is undefined at the starting point")
    g = riem_grad(W)
    gnorm = np.linalg.norm(g)
    report.records.append(IterRecord(0, f, float(gnorm), 0.0, time.perf_counter() - start))
    if gnorm < cfg.grad_tolerance:
        report.termination = Termination.CONVERGED
        return W, report

    H = -g
    step_length = cfg.initial_step
    since_restart = 0
    for it in range(1, cfg.max_iters + 1):
        slope = inner(g, H)
        if slope >= 0 or since_restart >= restart_period:
            H, slope, since_restart = -g, -gnorm**2, 0

        accepted = False
        while True:
            hnorm = np.linalg.norm(H)
            t = step_length / hnorm
            for _ in range(cfg.max_evals):
                W_try = geodesic_step(W, H, t)
                f_try = safe_cost(W_try)
                if f_try < f and f_try <= f + cfg.armijo * t * slope:
                    accepted = True
                    break
                t *= cfg.shrink_factor
            if accepted or since_restart == 0:
                break
            # conjugate direction failed: retry once along steepest descent
            H, slope, since_restart = -g, -gnorm**2, 0

        if not accepted:
            report.termination = Termination.LINE_SEARCH_FAILED
            break

        g_new = riem_grad(W_try)
        gnorm_new = np.linalg.norm(g_new)
        H_tr = parallel_transport(H, W, W_try, H, t)
        if cfg.direction_rule is DirectionRule.FLETCHER_REEVES:
            eta = gnorm_new**2 / gnorm**2
        else:
            g_tr = parallel_transport(g, W, W_try, H, t)
            eta = max(0.0, inner(g_new, g_new - g_tr) / gnorm**2)
        step_length = 2.0 * t * hnorm

        W, f, g, gnorm = W_try, f_try, g_new, gnorm_new
        H = -g + eta * H_tr
        since_restart += 1
        report.records.append(
            IterRecord(it, f, float(gnorm), float(t), time.perf_counter() - start)
        )
        if callback is not None:
            callback(W, report.records[-1])
        if gnorm < cfg.grad_tolerance:
            report.termination = Termination.CONVERGED
            break
    else:
        report.termination = Termination.MAX_ITERS
    return W, report
