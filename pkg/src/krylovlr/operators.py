"""Matrix-free Gram operators with exact matvec accounting.

Every solver touches the input matrix A only through ``x -> A A^T x``.
One application to one vector costs one count, regardless of how the
operator is realized internally (a dense rectangular A is applied as two
sequential products A^T then A but counted once).
"""

from dataclasses import dataclass, field

import numpy as np

from .validation import as_matrix, as_spectrum, as_vector, check_square_symmetric, rng_from

__all__ = [
    "GramOperator",
    "DenseGram",
    "DiagonalGram",
    "PerturbedPsdGram",
    "GramPlusDiagonal",
    "DiagonalPerturbation",
    "perturb_diagonal",
    "recommended_delta",
]


@dataclass(frozen=True)
class DiagonalPerturbation:
    """Seeded diagonal noise with entries i.i.d. uniform on [-delta, +delta].

    Reconstruction from (seed, delta, n) is bit-identical, and the operator
    norm of the perturbation is max|d_i| <= delta by construction.
    """

    delta: float
    n: int
    seed: int
    entries: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.delta == 0:
            d = np.zeros(self.n)
        else:
            d = rng_from(self.seed).uniform(-self.delta, self.delta, size=self.n)
        object.__setattr__(self, "entries", d)

    @property
    def spectral_norm(self):
        return float(np.abs(self.entries).max(initial=0.0))


class GramOperator:
    """Base class: symmetric PSD-like operator x -> A A^T x with a counter.

    apply_count increments by one per input vector and never decreases
    except through reset_count(). Instances are meant to be owned by a
    single solver run; the counter is not synchronized across instances.
    """

    def __init__(self, n):
        self.n = int(n)
        if self.n <= 0:
            raise ValueError("operator dimension must be positive")
        self.apply_count = 0

    def _matvec(self, x):
        raise NotImplementedError

    def apply(self, x):
        """Apply the Gram operator to one vector; counts one application."""
        x = as_vector(x, n=self.n)
        self.apply_count += 1
        return self._matvec(x)

    def apply_block(self, x_block):
        """Column-wise application; counts one per column."""
        xb = as_matrix(x_block, rows=self.n, name="X")
        cols = [self.apply(xb[:, j]) for j in range(xb.shape[1])]
        if not cols:
            return np.zeros((self.n, 0))
        return np.column_stack(cols)

    def reset_count(self):
        self.apply_count = 0


class DenseGram(GramOperator):
    """Gram operator of an explicit dense matrix A (n x d)."""

    def __init__(self, a):
        a = as_matrix(a, name="A")
        super().__init__(a.shape[0])
        self.a = a

    def _matvec(self, x):
        return self.a @ (self.a.T @ x)


class DiagonalGram(GramOperator):
    """Gram operator of diag(sigma): applies entrywise sigma_i^2."""

    def __init__(self, sigma):
        sigma = as_spectrum(sigma, require_sorted=False)
        super().__init__(sigma.shape[0])
        self.sigma = sigma
        self._lam = sigma * sigma

    def _matvec(self, x):
        return self._lam * x


class PerturbedPsdGram(GramOperator):
    """Gram operator of a diagonally perturbed symmetric PSD matrix A + D.

    One Gram application is (A + D) applied twice. For a diagonal A given
    by its spectrum the squared perturbed diagonal is precomputed, so
    delta = 0 reproduces the unperturbed applications bit for bit.
    """

    def __init__(self, base, perturbation):
        if isinstance(base, np.ndarray) and base.ndim == 1:
            sigma = as_spectrum(base, require_sorted=False)
            n = sigma.shape[0]
        else:
            base = check_square_symmetric(base)
            n = base.shape[0]
        super().__init__(n)
        if perturbation.n != n:
            raise ValueError("perturbation dimension does not match operator")
        self.perturbation = perturbation
        if isinstance(base, np.ndarray) and base.ndim == 1:
            self._dense = None
            self._lam = (base + perturbation.entries) ** 2
        else:
            self._dense = base
            self._d = perturbation.entries
            self._zero = perturbation.delta == 0

    def _matvec(self, x):
        if self._dense is None:
            return self._lam * x
        if self._zero:
            y = self._dense @ x
            return self._dense @ y
        y = self._dense @ x + self._d * x
        return self._dense @ y + self._d * y


class GramPlusDiagonal(GramOperator):
    """Applies A A^T + D on top of an existing Gram operator.

    This is the route for rectangular inputs: perturb the PSD matrix
    A A^T itself rather than A. The wrapped operator's counter is left
    untouched; this instance carries its own.
    """

    def __init__(self, base_op, perturbation):
        if not isinstance(base_op, GramOperator):
            raise TypeError("base must be a GramOperator")
        super().__init__(base_op.n)
        if perturbation.n != base_op.n:
            raise ValueError("perturbation dimension does not match operator")
        self.base = base_op
        self.perturbation = perturbation
        self._zero = perturbation.delta == 0

    def _matvec(self, x):
        y = self.base._matvec(x)
        if self._zero:
            return y
        return y + self.perturbation.entries * x


def perturb_diagonal(operand, delta, seed):
    """Diagonally perturb a PSD matrix or a Gram operator.

    - symmetric matrix or 1-D spectrum (a diagonal PSD matrix): returns the
      Gram operator of A + D;
    - GramOperator: returns an operator applying A A^T + D.

    D is reproducible from (seed, delta, dimension); delta = 0 leaves the
    applications numerically identical to the unperturbed operator.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if isinstance(operand, GramOperator):
        pert = DiagonalPerturbation(delta=float(delta), n=operand.n, seed=int(seed))
        return GramPlusDiagonal(operand, pert)
    arr = np.asarray(operand, dtype=float)
    if arr.ndim == 1:
        sigma = as_spectrum(arr, require_sorted=False)
        pert = DiagonalPerturbation(delta=float(delta), n=sigma.shape[0], seed=int(seed))
        return PerturbedPsdGram(sigma, pert)
    mat = check_square_symmetric(arr)
    pert = DiagonalPerturbation(delta=float(delta), n=mat.shape[0], seed=int(seed))
    return PerturbedPsdGram(mat, pert)


def recommended_delta(sigma_kplus1, n, eps, route="psd"):
    """Perturbation size for gap-independent convergence.

    route="psd" gives eps * sigma_{k+1} / (3n) for perturbing a PSD A;
    route="gram" gives eps * sigma_{k+1}^2 / (3n) for perturbing A A^T.
    """
    if sigma_kplus1 <= 0:
        raise ValueError("sigma_{k+1} must be positive")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if n <= 0:
        raise ValueError("n must be positive")
    if route == "psd":
        return eps * sigma_kplus1 / (3 * n)
    if route == "gram":
        return eps * sigma_kplus1**2 / (3 * n)
    raise ValueError(f"unknown route {route!r}")
