"""SPD descriptors built from raw feature observations.

Observations are stored column-wise: ``O`` is ``n x r`` with one
``n``-dimensional observation per column.  Feature extraction itself
(SIFT, LBP, ...) is out of scope; observations are read from CSV.
"""

import csv

import numpy as np

from .core import symmetrize, validate_spd
from .exceptions import (DataError, InvalidParameterError, NotPositiveDefiniteError,
                         RankDeficientError, TooFewObservationsError)


def _observations(obs):
    O = np.asarray(obs, dtype=np.float64)
    if O.ndim == 1:
        O = O[None, :]
    if O.ndim != 2:
        raise DataError(f"observation matrix must be 2-D, got shape {O.shape}")
    if not np.all(np.isfinite(O)):
        raise DataError("observations contain non-finite values")
    if O.shape[1] < 2:
        raise TooFewObservationsError(f"need at least 2 observations, got {O.shape[1]}")
    return O


def centering_matrix(r):
    """``I - 1/r`` (the r x r centering projector)."""
    return np.eye(r) - np.full((r, r), 1.0 / r)


def sample_covariance(obs):
    """Unbiased sample covariance ``O C O^T / (r - 1)``, without SPD checks."""
    O = _observations(obs)
    D = O - O.mean(axis=1, keepdims=True)
    return symmetrize(D @ D.T / (O.shape[1] - 1))


def shrink(C, shrinkage):
    """Convex combination ``(1 - lam) C + lam * (tr(C) / n) I``."""
    if not 0 < shrinkage < 1:
        raise InvalidParameterError(f"shrinkage must be in (0, 1), got {shrinkage}")
    n = C.shape[-1]
    return (1.0 - shrinkage) * C + shrinkage * (np.trace(C) / n) * np.eye(n)


def _finish(C, shrinkage, what):
    if shrinkage:
        C = shrink(C, shrinkage)
    try:
        return validate_spd(C)
    except NotPositiveDefiniteError as exc:
        raise RankDeficientError(
            f"{what} is rank deficient; add observations or enable shrinkage"
        ) from exc


def region_covariance(obs, shrinkage=None):
    """Region covariance matrix of an ``n x r`` observation matrix.

    Parameters
    ----------
    obs : array_like, shape (n, r)
        One observation per column.
    shrinkage : float in (0, 1), optional
        If given, shrink towards a scaled identity so the result is SPD even
        when ``r <= n``.

    Returns
    -------
    ndarray, shape (n, n)
        ``sum_i (o_i - mu)(o_i - mu)^T / (r - 1)``.

    Raises
    ------
    TooFewObservationsError
        Fewer than two observations.
    RankDeficientError
        The covariance is singular and no shrinkage was requested.
    """
    return _finish(sample_covariance(obs), shrinkage, "region covariance")


def gaussian_embed(obs, normalize=False):
    """Embed the observation set as ``[[O O^T + mu mu^T, mu], [mu^T, 1]]``.

    With ``normalize=True`` the second-moment block uses ``O O^T / r``, which
    makes the result independent of the number of observations (the
    classical Gaussian embedding of mean and second moment).
    """
    O = _observations(obs)
    n, r = O.shape
    mu = O.mean(axis=1)
    S = O @ O.T
    if normalize:
        S = S / r
    out = np.empty((n + 1, n + 1))
    out[:n, :n] = S + np.outer(mu, mu)
    out[:n, n] = mu
    out[n, :n] = mu
    out[n, n] = 1.0
    return _finish(symmetrize(out), None, "Gaussian embedding")


def joint_covariance(sequence, shrinkage=None):
    """Covariance of joint locations over the frames of a skeleton sequence.

    ``sequence`` is ``T x 3K`` with one frame per row and columns ordered
    ``x_1..x_K, y_1..y_K, z_1..z_K``.
    """
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2:
        raise DataError(f"sequence must be 2-D (frames x coordinates), got {seq.shape}")
    if seq.shape[1] % 3:
        raise DataError(f"coordinate count {seq.shape[1]} is not a multiple of 3")
    return region_covariance(seq.T, shrinkage=shrinkage)


def read_observations(path, delimiter=","):
    """Read a CSV with one observation per row; returns the ``n x r`` matrix.

    A first row that does not parse as numbers is treated as a header.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh, delimiter=delimiter) if row]
    if not rows:
        raise DataError(f"{path}: no observations")
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        rows = rows[1:]
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric entry ({exc})") from exc
    if data.ndim != 2 or data.shape[0] == 0:
        raise DataError(f"{path}: ragged or empty observation table")
    return data.T

