"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

import numpy as np

from .errors import ConfigurationError, DomainError


def check_vector(x, size=None, name="x", finite=True):
    """Return ``x`` as a 1-D float array, optionally of a fixed size."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be 1-D, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise DomainError(f"{name} must have {size} entries, got {arr.shape[0]}")
    if finite and not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def check_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def check_positive(value, name, strict=True):
    arr = np.asarray(value, dtype=float)
    bad = arr <= 0 if strict else arr < 0
    if np.any(bad) or not np.all(np.isfinite(arr)):
        rel = ">" if strict else ">="
        raise ConfigurationError(f"{name} must be {rel} 0, got {value!r}")
    return arr


def check_rotation(R, tol=1e-10, name="R"):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise DomainError(f"{name} must be 3x3")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol or np.linalg.det(R) < 0:
        raise DomainError(f"{name} is not a proper rotation")
    return R
