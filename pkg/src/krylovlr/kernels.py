"""Small dense numerical primitives.

Modified Gram-Schmidt with re-orthogonalization, symmetric
eigendecomposition of projected matrices, and principal angles between
equal-width subspaces.
"""

from dataclasses import dataclass, field

import numpy as np

from .validation import as_vector, check_finite

__all__ = [
    "DEFAULT_DROP_TOL",
    "OrthonormalBasis",
    "mgs_extend",
    "eigh_small",
    "principal_angle_distance",
]

# Relative residual below which a column is declared numerically dependent.
# True dependencies cancel to <= ~1e-15 of the column norm while genuinely
# new Krylov directions stay >= ~1e-8 under per-step orthogonalization, so
# 1e-10 separates the two bands with margin on both sides.
DEFAULT_DROP_TOL = 1e-10


@dataclass
class OrthonormalBasis:
    """Column-orthonormal matrix plus a log of dropped extension attempts.

    drop_log records the ordinal (0-based attempt index) of every column
    discarded as numerically dependent.
    """

    columns: np.ndarray
    drop_log: list = field(default_factory=list)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((int(n), 0)))

    @property
    def n_rows(self):
        return self.columns.shape[0]

    @property
    def width(self):
        return self.columns.shape[1]

    def validate(self, gram_tol=1e-10, norm_tol=1e-12):
        """Check the orthonormality invariant; raises on violation."""
        z = self.columns
        if z.shape[1] == 0:
            return self
        gram = z.T @ z
        err = np.abs(gram - np.eye(z.shape[1])).max()
        if err > gram_tol:
            raise ValueError(f"basis not orthonormal: max |Z'Z - I| = {err:.3e}")
        norms = np.linalg.norm(z, axis=0)
        if np.abs(norms - 1.0).max() > norm_tol:
            raise ValueError("basis columns are not unit-norm")
        return self


class MgsBuilder:
    """Incremental two-pass MGS basis with drop detection.

    policy="full" orthogonalizes each new column against every retained
    column; policy="local" only against the trailing `window` columns
    (the Lanczos-style pattern, which loses global orthogonality).
    """

    def __init__(self, n, drop_tol=DEFAULT_DROP_TOL, policy="full", window=2):
        self.n = int(n)
        self.drop_tol = float(drop_tol)
        if policy not in ("full", "local"):
            raise ValueError(f"unknown policy {policy!r}")
        self.policy = policy
        self.window = int(window)
        self._cols = []
        self.drop_log = []
        self.attempts = 0

    @property
    def width(self):
        return len(self._cols)

    def matrix(self):
        if not self._cols:
            return np.zeros((self.n, 0))
        return np.array(self._cols).T

    def try_append(self, v):
        """Orthogonalize v and append; returns the new index or None if dropped."""
        v = as_vector(v, n=self.n, name="column")
        attempt = self.attempts
        self.attempts += 1
        nv0 = np.linalg.norm(v)
        if nv0 == 0:
            self.drop_log.append(attempt)
            return None
        w = v.copy()
        against = self._cols if self.policy == "full" else self._cols[-self.window:]
        for _ in range(2):
            for z in against:
                w -= (z @ w) * z
        nv = np.linalg.norm(w)
        # the width of the ambient space is a hard cap: further columns are
        # dependent by dimension count even if roundoff hides it
        if nv <= self.drop_tol * nv0 or len(self._cols) >= self.n:
            self.drop_log.append(attempt)
            return None
        self._cols.append(w / nv)
        return len(self._cols) - 1

    def basis(self):
        return OrthonormalBasis(self.matrix(), list(self.drop_log))


def mgs_extend(basis, v, drop_tol=DEFAULT_DROP_TOL):
    """Extend an orthonormal basis by one vector (two MGS passes).

    The vector is projected away from all existing columns twice,
    normalized and appended; if the residual norm falls below
    drop_tol * ||v|| the column is dropped and logged instead. Returns a
    new OrthonormalBasis; the input is not modified.
    """
    if drop_tol <= 0:
        raise ValueError("drop_tol must be positive")
    b = MgsBuilder(basis.n_rows, drop_tol=drop_tol)
    b._cols = [basis.columns[:, j].copy() for j in range(basis.width)]
    b.drop_log = list(basis.drop_log)
    b.attempts = basis.width + len(basis.drop_log)
    b.try_append(v)
    return b.basis()


def eigh_small(m):
    """Eigendecomposition of a small symmetric matrix, values descending.

    The input is symmetrized internally but must already be symmetric to
    1e-8 relative; ties are broken by the order LAPACK reports, which for
    diagonal input is ascending original index.
    """
    m = np.asarray(m, dtype=float)
    check_finite(m, "M")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("M must be square")
    scale = np.abs(m).max() or 1.0
    if np.abs(m - m.T).max() > 1e-8 * scale:
        raise ValueError("M is not symmetric within 1e-8 relative tolerance")
    sym = (m + m.T) / 2.0
    values, vectors = np.linalg.eigh(sym)
    order = np.argsort(-values, kind="stable")
    return values[order], vectors[:, order]


def _columns(u):
    if isinstance(u, OrthonormalBasis):
        return u.columns
    return np.asarray(u, dtype=float)


def principal_angle_distance(u, v):
    """sqrt(m - ||U^T V||_F^2) for two orthonormal n x m bases.

    Computed through the equivalent residual form ||U - V (V^T U)||_F,
    which is exact in the same formula but does not lose the answer to
    cancellation when the spans nearly coincide. Zero iff the spans are
    equal; at most sqrt(m).
    """
    u = _columns(u)
    v = _columns(v)
    if u.shape != v.shape:
        raise ValueError(f"width/shape mismatch: {u.shape} vs {v.shape}")
    resid = u - v @ (v.T @ u)
    d = float(np.linalg.norm(resid))
    return min(d, float(np.sqrt(u.shape[1])))
