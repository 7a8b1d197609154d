"""File formats and run configuration.

SPDB1 bundle (little-endian)::

    b"SPDB1" | n: uint32 | count: uint64 | has_labels: uint8
    count * n * n float64, row-major
    count int32 labels, if has_labels

SPDW1 projection (little-endian)::

    b"SPDW1" | n: uint32 | m: uint32 | n * m float64, row-major

Writers go through a temporary file in the destination directory followed
by ``os.replace`` so a failed write never leaves a truncated output.
"""

import contextlib
import dataclasses
import json
import os
import struct
import tempfile
from dataclasses import dataclass, fields

import numpy as np

from .core import symmetrize, validate_spd
from .descriptors import shrink
from .divergences import MetricKind
from .exceptions import (ConfigError, DataError, FormatError, NotPositiveDefiniteError,
                         SpdrError)
from .grassmann import DirectionRule

BUNDLE_MAGIC = b"SPDB1"
PROJECTION_MAGIC = b"SPDW1"
_BUNDLE_HEADER = struct.Struct("<5sIQB")
_PROJECTION_HEADER = struct.Struct("<5sII")
LENIENT_FLOOR = 1e-8


@contextlib.contextmanager
def atomic_open(path, mode="wb"):
    """Open a temporary sibling of ``path``; rename it into place on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    with atomic_open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, rows, header=None):
    with atomic_open(path, "w") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in rows:
            cells = row if isinstance(row, (tuple, list)) else np.atleast_1d(row)
            fh.write(",".join(_fmt(v) for v in cells) + "\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class Bundle:
    matrices: np.ndarray
    labels: np.ndarray = None

    @property
    def n(self):
        return self.matrices.shape[1]

    def __len__(self):
        return len(self.matrices)


def save_bundle(path, matrices, labels=None):
    X = np.asarray(matrices, dtype=np.float64)
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise DataError(f"expected a stack of square matrices, got shape {X.shape}")
    count, n = X.shape[0], X.shape[1]
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (count,):
            raise DataError("need exactly one label per matrix")
        if np.any(labels != labels.astype(np.int32)):
            raise DataError("labels must fit in int32")
    with atomic_open(path) as fh:
        fh.write(_BUNDLE_HEADER.pack(BUNDLE_MAGIC, n, count, labels is not None))
        fh.write(np.ascontiguousarray(X, dtype="<f8").tobytes())
        if labels is not None:
            fh.write(labels.astype("<i4").tobytes())


def _lenient_fix(M):
    """Symmetrize; if not SPD, apply the smallest shrinkage that makes it SPD.

    Shrinking by ``lam`` maps eigenvalue ``s`` to ``(1 - lam) s + lam t``
    with ``t = tr/n``, so the required ``lam`` is available in closed form;
    we target a smallest eigenvalue of ``1e-8 t``.
    """
    S = symmetrize(M)
    if not np.all(np.isfinite(S)):
        raise NotPositiveDefiniteError("matrix cannot be repaired: non-finite entries")
    try:
        return validate_spd(S)
    except NotPositiveDefiniteError:
        pass
    t = np.trace(S) / S.shape[0]
    if t <= 0:
        raise NotPositiveDefiniteError("matrix cannot be repaired: trace <= 0")
    s_min = np.linalg.eigvalsh(S)[0]
    lam = (LENIENT_FLOOR * t - s_min) / (t - s_min)
    return validate_spd(shrink(S, lam))


def load_bundle(path, strict=True):
    """Read an SPDB1 bundle.

    In strict mode every matrix must pass SPD validation and is returned
    bit-for-bit as stored.  In lenient mode matrices are symmetrized and,
    if needed, shrunk towards a scaled identity until they are SPD.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _BUNDLE_HEADER.size:
        raise FormatError(f"{path}: file too short for an SPDB1 header")
    magic, n, count, has_labels = _BUNDLE_HEADER.unpack_from(data)
    if magic != BUNDLE_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if has_labels not in (0, 1):
        raise FormatError(f"{path}: bad label flag {has_labels}")
    payload = count * n * n * 8
    expected = _BUNDLE_HEADER.size + payload + (4 * count if has_labels else 0)
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    off = _BUNDLE_HEADER.size
    X = np.frombuffer(data, dtype="<f8", count=count * n * n, offset=off)
    X = X.astype(np.float64).reshape(count, n, n)
    labels = None
    if has_labels:
        labels = np.frombuffer(data, dtype="<i4", count=count, offset=off + payload)
        labels = labels.astype(np.int64)
    if strict:
        for i, M in enumerate(X):
            try:
                validate_spd(M)
            except DataError as exc:
                raise type(exc)(f"{path}: matrix {i}: {exc}") from exc
    else:
        X = np.array([_lenient_fix(M) for M in X]).reshape(count, n, n)
    return Bundle(X, labels)


def save_projection(path, W):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise DataError(f"projection must be 2-D, got shape {W.shape}")
    n, m = W.shape
    with atomic_open(path) as fh:
        fh.write(_PROJECTION_HEADER.pack(PROJECTION_MAGIC, n, m))
        fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())


def load_projection(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _PROJECTION_HEADER.size:
        raise FormatError(f"{path}: file too short for an SPDW1 header")
    magic, n, m = _PROJECTION_HEADER.unpack_from(data)
    if magic != PROJECTION_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if len(data) != _PROJECTION_HEADER.size + 8 * n * m:
        raise FormatError(f"{path}: payload size does not match {n}x{m}")
    W = np.frombuffer(data, dtype="<f8", offset=_PROJECTION_HEADER.size)
    return W.astype(np.float64).reshape(n, m)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text):
    return tuple(int(v) for v in text.replace(",", " ").split())


def _optional(parse):
    def inner(text):
        return None if text.strip().lower() in ("", "none", "auto") else parse(text)
    return inner


def _field(default, parse, check=None):
    return dataclasses.field(default=default, metadata={"parse": parse, "check": check})


def _positive(v):
    return v is None or v > 0


def _nonneg(v):
    return v is None or v >= 0


@dataclass
class RunConfig:
    """Parameters for every CLI command, read from a ``key = value`` file."""

    metric: str = _field("airm", lambda s: MetricKind.parse(s).value)
    mode: str = _field("supervised", str.strip,
                       lambda v: v in ("supervised", "unsupervised"))
    solver: str = _field("auto", str.strip, lambda v: v in ("auto", "cg", "eig"))
    target_dim: int = _field(None, _optional(int), lambda v: v is None or v >= 1)
    m_grid: tuple = _field((), _parse_int_list, lambda v: all(m >= 1 for m in v))
    nu_w: int = _field(None, _optional(int), lambda v: v is None or v >= 1)
    nu_b: int = _field(None, _optional(int), _nonneg)
    beta: float = _field(None, _optional(float), _positive)
    seed: int = _field(0, int, lambda v: 0 <= v < 2**64)
    strict_load: bool = _field(True, _parse_bool)
    # optimizer
    max_iters: int = _field(200, int, lambda v: v >= 1)
    grad_tolerance: float = _field(1e-6, float, lambda v: v > 0)
    initial_step: float = _field(1.0, float, lambda v: v > 0)
    shrink_factor: float = _field(0.5, float, lambda v: 0 < v < 1)
    max_evals: int = _field(25, int, lambda v: v >= 1)
    restart_period: int = _field(None, _optional(int), _positive)
    direction_rule: str = _field("fletcher-reeves", lambda s: DirectionRule(s.strip()).value)
    max_outer: int = _field(100, int, lambda v: v >= 1)
    eig_tolerance: float = _field(1e-8, float, lambda v: v > 0)
    # clustering
    k: int = _field(None, _optional(int), lambda v: v is None or v >= 1)
    cluster_method: str = _field("kmeans", str.strip, lambda v: v in ("kmeans", "kernel"))
    # synthetic data
    n_classes: int = _field(2, int, lambda v: v >= 1)
    n: int = _field(10, int, lambda v: v >= 2)
    intrinsic_dim: int = _field(3, int, lambda v: v >= 1)
    train_per_class: int = _field(20, int, lambda v: v >= 1)
    test_per_class: int = _field(20, int, lambda v: v >= 0)
    sigma: float = _field(1.5, float, lambda v: v >= 0)
    separation: float = _field(0.5, float, lambda v: v >= 0)
    eps: float = _field(0.1, float, lambda v: v > 0)

    def __post_init__(self):
        for f in fields(self):
            check = f.metadata.get("check")
            value = getattr(self, f.name)
            if check is not None and not check(value):
                raise ConfigError(f"{f.name}: value {value!r} out of range")

    @classmethod
    def from_text(cls, text, source="<config>"):
        known = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            try:
                values[key] = known[key].metadata["parse"](value)
            except (ValueError, SpdrError) as exc:
                raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
        return cls(**values)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read(), source=os.fspath(path))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["m_grid"] = list(self.m_grid)
        return out
