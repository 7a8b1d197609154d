"""Synthetic labelled SPD data with a known discriminative subspace.

Class centres share a common block outside a random ``d``-dimensional
subspace ``U`` and differ only inside it:

    M_c = Q blockdiag(B_c^T B_c / d + eps I, S) Q^T,   Q = [U, U_perp]

Members are ``M_c^1/2 exp(sigma V) M_c^1/2`` with ``V`` a random symmetric
matrix, so the spread is isotropic in the affine-invariant sense while all
class information lives in ``U``.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .core import mat_exp, mat_sqrt, random_symmetric, symmetrize
from .exceptions import InvalidParameterError


@dataclass(frozen=True)
class SynthParams:
    n_classes: int = 2
    n: int = 10
    intrinsic_dim: int = 3
    train_per_class: int = 20
    test_per_class: int = 20
    sigma: float = 1.5
    separation: float = 0.5
    eps: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 1 or self.train_per_class < 1 or self.test_per_class < 0:
            raise InvalidParameterError("class and sample counts must be positive")
        if not 1 <= self.intrinsic_dim <= self.n:
            raise InvalidParameterError("need 1 <= intrinsic_dim <= n")
        if self.sigma < 0 or self.separation < 0 or not self.eps > 0:
            raise InvalidParameterError("sigma, separation must be >= 0 and eps > 0")

    def to_dict(self):
        return asdict(self)


@dataclass
class SynthData:
    X_train: np.ndarray
    y_train: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    centers: np.ndarray
    subspace: np.ndarray
    params: SynthParams


def _haar(n, rng):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def make_synthetic(params=None, **kwargs):
    """Draw a train/test split from the generator described in the module doc.

    Deterministic for a given ``params.seed``.  With ``sigma=0`` every
    member equals its class centre.
    """
    if params is None:
        params = SynthParams(**kwargs)
    elif kwargs:
        raise TypeError("pass either a SynthParams or keyword arguments")
    rng = np.random.default_rng(params.seed)
    n, d, C = params.n, params.intrinsic_dim, params.n_classes
    Q = _haar(n, rng)

    B = rng.standard_normal((n - d, n - d))
    shared = B.T @ B / max(n - d, 1) + params.eps * np.eye(n - d)
    centers = np.empty((C, n, n))
    for c in range(C):
        Bc = params.separation * rng.standard_normal((d, d))
        block = np.zeros((n, n))
        block[:d, :d] = Bc.T @ Bc / d + params.eps * np.eye(d)
        block[d:, d:] = shared
        centers[c] = symmetrize(Q @ block @ Q.T)

    def draw(count):
        X = np.empty((C * count, n, n))
        y = np.repeat(np.arange(C), count)
        for c in range(C):
            root = mat_sqrt(centers[c])
            V = random_symmetric(n, rng, size=count) / np.sqrt(n)
            X[c * count:(c + 1) * count] = symmetrize(root @ mat_exp(params.sigma * V) @ root)
        return X, y

    X_train, y_train = draw(params.train_per_class)
    X_test, y_test = draw(params.test_per_class)
    return SynthData(X_train, y_train, X_test, y_test, centers, Q[:, :d], params)
