"""Validated SPD matrices and spectral matrix functions.

Every matrix function here goes through a symmetric eigendecomposition,
``X = U diag(lambda) U^T``, and applies the scalar function to the
eigenvalues.  Functions accept a single ``(n, n)`` matrix or a stack of
shape ``(..., n, n)``.
"""

import numpy as np

from .exceptions import (
    AsymmetryError,
    DataError,
    MatrixOverflowError,
    NotPositiveDefiniteError,
    NotSquareError,
)

#: Absolute tolerance on ``max|M - M^T|`` below which inputs are symmetrized.
ASYM_TOLERANCE = 1e-8
#: Relative positive-definiteness threshold, scaled by ``trace(M) / n``.
SPD_RELATIVE_TOLERANCE = 1e-10
#: Largest eigenvalue accepted by :func:`mat_exp` before it overflows.
EXP_MAX_EIGENVALUE = 700.0


def symmetrize(M):
    """Return ``(M + M^T) / 2`` over the last two axes."""
    M = np.asarray(M, dtype=np.float64)
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def _check_square(M):
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise NotSquareError(f"expected square matrices, got shape {M.shape}")
    if M.shape[-1] == 0:
        raise NotSquareError("matrices must have dimension >= 1")
    if not np.all(np.isfinite(M)):
        raise DataError("matrix contains non-finite entries")


def spd_tolerance(M):
    """Default positive-definiteness threshold ``1e-10 * trace(M) / n``."""
    n = M.shape[-1]
    return SPD_RELATIVE_TOLERANCE * np.trace(M, axis1=-2, axis2=-1) / n


def validate_spd(M, tol=None, asym_tol=ASYM_TOLERANCE, return_min_eig=False):
    """Check that ``M`` is symmetric positive definite and symmetrize it.

    Parameters
    ----------
    M : array_like, shape (..., n, n)
        Candidate matrix or stack of matrices.
    tol : float, optional
        Smallest eigenvalue must exceed this. Defaults to
        ``1e-10 * trace(M) / n`` per matrix.
    asym_tol : float
        Maximum tolerated ``|M - M^T|`` entry before rejecting.
    return_min_eig : bool
        Also return the smallest eigenvalue(s) found during validation.

    Returns
    -------
    X : ndarray
        ``(M + M^T) / 2``.
    min_eig : float or ndarray
        Only if ``return_min_eig``.

    Raises
    ------
    NotSquareError, AsymmetryError, NotPositiveDefiniteError
    """
    M = np.asarray(M, dtype=np.float64)
    _check_square(M)
    asym = np.max(np.abs(M - np.swapaxes(M, -1, -2)))
    if asym > asym_tol:
        raise AsymmetryError(f"asymmetry {asym:.3e} exceeds tolerance {asym_tol:.1e}")
    X = symmetrize(M)
    min_eig = np.linalg.eigvalsh(X)[..., 0]
    if tol is None:
        tol = np.maximum(spd_tolerance(X), 0.0)
    bad = min_eig <= tol
    if np.any(bad):
        worst = float(np.min(min_eig))
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite (smallest eigenvalue {worst:.3e})"
        )
    if return_min_eig:
        return X, (float(min_eig) if min_eig.ndim == 0 else min_eig)
    return X


def is_spd(M, tol=None):
    try:
        validate_spd(M, tol=tol)
    except DataError:
        return False
    return True


def eig_sym(S):
    """Eigendecomposition of symmetric matrices, eigenvalues descending.

    Eigenvectors follow a fixed sign convention: the first component with
    magnitude above round-off is positive.

    Returns
    -------
    w : ndarray, shape (..., n)
    U : ndarray, shape (..., n, n)
        Columns are the eigenvectors, ``S = U diag(w) U^T``.
    """
    S = np.asarray(S, dtype=np.float64)
    w, U = np.linalg.eigh(S)
    w = w[..., ::-1]
    U = U[..., ::-1]
    # first component clearly away from zero decides the sign
    mag = np.abs(U)
    first = np.argmax(mag > 1e-12 * np.max(mag, axis=-2, keepdims=True), axis=-2)
    lead = np.take_along_axis(U, first[..., None, :], axis=-2)
    U = U * np.where(lead < 0, -1.0, 1.0)
    return w, U


def _spectral(S, fn):
    w, U = np.linalg.eigh(S)
    out = (U * fn(w)[..., None, :]) @ np.swapaxes(U, -1, -2)
    return symmetrize(out)


def mat_log(X):
    """Principal matrix logarithm of SPD matrices."""
    X = np.asarray(X, dtype=np.float64)
    _check_square(X)
    w = np.linalg.eigvalsh(X)
    if np.any(w <= 0):
        raise NotPositiveDefiniteError("matrix logarithm needs a positive definite input")
    return _spectral(X, np.log)


def mat_exp(S):
    """Matrix exponential of symmetric matrices; the result is SPD."""
    S = np.asarray(S, dtype=np.float64)
    _check_square(S)
    w = np.linalg.eigvalsh(S)
    if np.any(w > EXP_MAX_EIGENVALUE):
        raise MatrixOverflowError(
            f"eigenvalue {np.max(w):.1f} exceeds {EXP_MAX_EIGENVALUE}; exp would overflow"
        )
    return _spectral(S, np.exp)


def mat_pow(X, p):
    """Real power ``X^p`` of SPD matrices (``p=-1`` is the inverse)."""
    X = np.asarray(X, dtype=np.float64)
    _check_square(X)
    if p == 0:
        return np.broadcast_to(np.eye(X.shape[-1]), X.shape).copy()
    return _spectral(X, lambda w: np.power(w, p))


def mat_sqrt(X):
    return mat_pow(X, 0.5)


def mat_invsqrt(X):
    return mat_pow(X, -0.5)


def random_spd(n, rng, size=None, cond=None):
    """Draw random SPD matrices.

    Eigenvalues are log-uniform in ``[1, cond]`` (``cond`` defaults to 10)
    and eigenvectors Haar-distributed.
    """
    cond = 10.0 if cond is None else float(cond)
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    Q, R = np.linalg.qr(rng.standard_normal(shape + (n, n)))
    Q = Q * np.sign(np.diagonal(R, axis1=-2, axis2=-1))[..., None, :]
    w = np.exp(rng.uniform(0.0, np.log(cond), size=shape + (n,)))
    return symmetrize((Q * w[..., None, :]) @ np.swapaxes(Q, -1, -2))


def random_symmetric(n, rng, size=None):
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    return symmetrize(rng.standard_normal(shape + (n, n)))
