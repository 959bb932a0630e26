"""Input validation helpers shared across the package.

Conventions: 1-D float arrays are treated as exact singular value spectra
(of diagonal matrices), 2-D arrays as dense matrices.
"""

import numpy as np

__all__ = [
    "as_vector",
    "as_matrix",
    "as_spectrum",
    "check_finite",
    "check_square_symmetric",
    "rng_from",
]


def check_finite(x, name="input"):
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def as_vector(x, n=None, name="x"):
    """Coerce to a 1-D float64 vector, optionally of length n."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {n}")
    return check_finite(v, name)


def as_matrix(x, rows=None, name="X"):
    """Coerce to a 2-D float64 matrix, optionally with a fixed row count."""
    m = np.asarray(x, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if rows is not None and m.shape[0] != rows:
        raise ValueError(f"{name} has {m.shape[0]} rows, expected {rows}")
    return check_finite(m, name)


def as_spectrum(sigma, name="sigma", require_sorted=True):
    """Validate a non-negative singular value spectrum (descending)."""
    s = as_vector(sigma, name=name)
    if np.any(s < 0):
        raise ValueError(f"{name} must be non-negative")
    if require_sorted and np.any(np.diff(s) > 0):
        raise ValueError(f"{name} must be sorted in descending order")
    return s


def check_square_symmetric(a, name="A", rtol=1e-8):
    """Validate a square, numerically symmetric matrix."""
    m = as_matrix(a, name=name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    scale = np.abs(m).max() or 1.0
    if np.abs(m - m.T).max() > rtol * scale:
        raise ValueError(f"{name} is not symmetric to relative tolerance {rtol:g}")
    return m


def rng_from(seed, *stream):
    """Named, seedable, splittable generator (PCG64 behind SeedSequence).

    `stream` selects an independent substream, so per-trial generators are
    `rng_from(base_seed, trial_index)` and never collide across cells.
    Negative seeds are mapped through their 64-bit two's complement.
    """
    entropy = int(seed) & 0xFFFFFFFFFFFFFFFF
    key = tuple(int(s) & 0xFFFFFFFFFFFFFFFF for s in stream)
    return np.random.default_rng(np.random.SeedSequence(entropy=entropy, spawn_key=key))
