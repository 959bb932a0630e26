"""Error metrics, gap statistics and diagnostic checks.

The convention throughout: a 1-D array is the exact spectrum of a
diagonal matrix (optimal residuals then come from exact tail formulas,
never from a numerical SVD); a 2-D array is a dense matrix whose optimum
is computed by full SVD at desk scale.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import OrthonormalBasis
from .operators import DiagonalPerturbation, GramOperator
from .solvers import SolverConfig, single_vector_krylov
from .spectra import as_operator
from .validation import as_matrix, as_spectrum, rng_from

__all__ = [
    "EPSILON_FLOOR",
    "floor_epsilon",
    "UndefinedReferenceError",
    "epsilon_empirical",
    "schatten_residual",
    "SchattenPipelineResult",
    "schatten_pipeline",
    "SingularValueErrorReport",
    "singular_value_errors",
    "GapReport",
    "gap_report",
    "GoodnessReport",
    "kl_goodness",
    "chi_square_min_check",
    "PerturbationTransferReport",
    "perturbation_transfer_check",
    "spectral_error_transfers_from_gram",
]

# Reporting floor for log plots; raw values are never modified.
EPSILON_FLOOR = 1e-15


class UndefinedReferenceError(ValueError):
    """The optimal rank-k residual is zero, so relative error is undefined."""


def floor_epsilon(value):
    return max(float(value), EPSILON_FLOOR)


def _columns(q):
    if isinstance(q, OrthonormalBasis):
        q = q.columns
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    return q


def _orthonormalized(q):
    """Return q with orthonormal columns, re-orthonormalizing if needed.

    Bases produced under local orthogonalization drift; measuring their
    span through a proper projector keeps epsilon >= 0 meaningful.
    """
    q = _columns(q)
    if q.shape[1] == 0:
        return q
    gram = q.T @ q
    if np.abs(gram - np.eye(q.shape[1])).max() <= 1e-10:
        return q
    u, s, _ = np.linalg.svd(q, full_matrices=False)
    keep = s > s[0] * 1e-12
    return u[:, keep]


def _sigma_of(a):
    """Singular values (descending) of a spectrum or dense matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        return as_spectrum(a)
    return np.linalg.svd(as_matrix(a), compute_uv=False)


def _schatten_value(s, p):
    """(sum s_i^p)^(1/p) with overflow-safe scaling by the top value."""
    if s.size == 0:
        return 0.0
    top = float(s[0])
    if math.isinf(p) or top == 0.0:
        return top
    return top * float(((s / top) ** p).sum() ** (1.0 / p))


def _tail_value(sigma, k, norm):
    tail = sigma[k:]
    if norm == "frobenius":
        return float(np.sqrt((tail**2).sum()))
    if norm == "spectral":
        return float(tail[0]) if tail.size else 0.0
    p = float(norm)
    if p < 1:
        raise ValueError("Schatten order p must be >= 1")
    return _schatten_value(tail, p)


def _residual_matrix(a, q):
    """(I - QQ') A materialized; `a` is a spectrum or dense matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        amat = np.diag(a)
    else:
        amat = a
    return amat - q @ (q.T @ amat)


def _residual_value(a, q, norm):
    a = np.asarray(a, dtype=float)
    if norm == "frobenius":
        if a.ndim == 1:
            # ||A - QQ'A||_F^2 = sum_i sigma_i^2 (1 - ||Q[i,:]||^2) for diagonal A
            row = (q**2).sum(axis=1)
            val = ((a**2) * np.clip(1.0 - row, 0.0, None)).sum()
            return float(np.sqrt(val))
        return float(np.linalg.norm(_residual_matrix(a, q)))
    s = np.linalg.svd(_residual_matrix(a, q), compute_uv=False)
    if norm == "spectral" or math.isinf(float(norm)):
        return float(s[0]) if s.size else 0.0
    return _schatten_value(s, float(norm))


def epsilon_empirical(a, q, k, norm="frobenius"):
    """Relative excess error of Q over the optimal rank-k truncation.

    (||A - QQ'A|| - ||A - A_k||) / ||A - A_k|| in the requested norm
    ('frobenius', 'spectral', or a Schatten order p >= 1). Q may have
    fewer than k columns (rank-deficient solves); extra optimality of A_k
    keeps the result >= -1e-10 in all cases.
    """
    a = np.asarray(a, dtype=float)
    sigma = _sigma_of(a)
    if k < 0 or k >= sigma.size:
        raise ValueError("k must satisfy 0 <= k < n")
    opt = _tail_value(sigma, k, norm)
    if opt == 0.0:
        raise UndefinedReferenceError("input is exactly rank k; relative error undefined")
    q = _orthonormalized(q)
    rows = a.shape[0] if a.ndim > 1 else sigma.size
    if q.shape[1] > 0 and q.shape[0] != rows:
        raise ValueError("Q row count does not match the input")
    if q.shape[1] > k:
        raise ValueError(f"Q has {q.shape[1]} columns but the target rank is {k}")
    val = _residual_value(a, q, norm)
    return (val - opt) / opt


def schatten_residual(a, z, k, p):
    """Schatten-p norm of A - ZZ'A via SVD of the residual (p >= 1).

    p = inf is the spectral norm. `k` is the rank context and is only
    sanity-checked against the width of Z.
    """
    p = float(p)
    if p < 1:
        raise ValueError("Schatten order p must be >= 1")
    z = _columns(z)
    s = np.linalg.svd(_residual_matrix(np.asarray(a, dtype=float), z), compute_uv=False)
    return _schatten_value(s, p)


@dataclass
class SchattenPipelineResult:
    Q: np.ndarray                   # d x k basis from the run on A^T
    Z: np.ndarray                   # n x k orthonormal basis of A Q
    residuals: dict                 # p -> ||A - ZZ'A||_p (two-step)
    direct_residuals: dict          # p -> ||A - AQQ'||_p (one-step)
    optima: dict                    # p -> ||A - A_k||_p
    matvecs: int = 0


def schatten_pipeline(a, cfg, p_list=(1.0, 2.0, 4.0, math.inf)):
    """Near-optimal Schatten-p approximation from one single-vector run.

    Runs the single-vector Krylov method on A^T (through the Gram
    operator A'A), takes Q from that run, orthonormalizes Z = orth(AQ),
    and evaluates ||A - ZZ'A||_p for every requested p. The direct
    one-step residuals ||A - AQQ'||_p are reported alongside, since the
    two-step construction is conjectured to be an analysis artifact.
    """
    a = np.asarray(a, dtype=float)
    sigma = _sigma_of(a)
    amat = np.diag(a) if a.ndim == 1 else a
    op = as_operator(a if a.ndim == 1 else a.T)
    res = single_vector_krylov(op, cfg)
    q = res.Q.columns
    z = _orthonormalized(amat @ q)
    k = cfg.target_rank
    residuals, direct, optima = {}, {}, {}
    for p in p_list:
        residuals[p] = schatten_residual(amat, z, k, p)
        direct[p] = schatten_residual(amat.T, q, k, p)
        optima[p] = _tail_value(sigma, k, "spectral" if math.isinf(float(p)) else float(p))
    return SchattenPipelineResult(
        Q=q, Z=z, residuals=residuals, direct_residuals=direct,
        optima=optima, matvecs=res.matvecs,
    )


@dataclass
class SingularValueErrorReport:
    errors: np.ndarray
    relative: bool  # False when sigma_{k+1} = 0 forced absolute errors


def singular_value_errors(op, q, sigma, k):
    """Per-vector Ritz errors |q_i' G q_i - sigma_i^2| / sigma_{k+1}^2.

    Needs the exact spectrum (synthetic inputs). Applying G to the k
    columns is counted by the operator like any other application.
    """
    if not isinstance(op, GramOperator):
        raise TypeError("op must be a GramOperator")
    sigma = as_spectrum(sigma)
    q = _columns(q)
    kk = q.shape[1]
    if kk > k:
        q = q[:, :k]
        kk = k
    gq = op.apply_block(q)
    rayleigh = np.einsum("ij,ij->j", q, gq)
    err = np.abs(rayleigh - sigma[:kk] ** 2)
    denom = sigma[k] ** 2 if k < sigma.size else 0.0
    if denom == 0.0:
        return SingularValueErrorReport(errors=err, relative=False)
    return SingularValueErrorReport(errors=err / denom, relative=True)


@dataclass
class GapReport:
    g_min_over_next: float
    g_min_over_self: float
    g_k_to_ell: dict = field(default_factory=dict)
    g_min_b: dict = field(default_factory=dict)


def gap_report(sigma, k, ell_list=(), b_list=()):
    """Gap statistics of a descending spectrum.

    Both normalizations of the smallest sequential gap among the top k
    are reported (denominator sigma_{i+1} and sigma_i), along with the
    decay gaps g_{k->ell} = (sigma_k - sigma_{ell+1}) / sigma_k and the
    bth-order gaps that exclude each value's b-1 nearest relative
    neighbors (1 by definition at b = k).
    """
    sigma = as_spectrum(sigma)
    if k < 1:
        raise ValueError("k must be positive")
    need = max([k] + [int(x) + 1 for x in ell_list])
    if need > sigma.size:
        raise ValueError("spectrum too short for the requested k / ell values")
    if np.any(sigma[:need] <= 0):
        raise ValueError("spectrum must be positive through index max(k, ell+1)")
    diffs = sigma[: k - 1] - sigma[1:k]
    g_next = float((diffs / sigma[1:k]).min()) if k > 1 else math.inf
    g_self = float((diffs / sigma[: k - 1]).min()) if k > 1 else math.inf
    report = GapReport(g_min_over_next=g_next, g_min_over_self=g_self)
    for ell in ell_list:
        ell = int(ell)
        if ell < k:
            raise ValueError("each ell must be >= k")
        report.g_k_to_ell[ell] = float((sigma[k - 1] - sigma[ell]) / sigma[k - 1])
    top = sigma[:k]
    for b in b_list:
        b = int(b)
        if not 1 <= b <= k:
            raise ValueError("each b must lie in 1..k")
        if b == k:
            report.g_min_b[b] = 1.0
            continue
        best = math.inf
        for i in range(k):
            ratios = np.abs((top[i] - top) / top)
            ratios[i] = math.inf
            # the b-1 nearest relative neighbors, ties by ascending index
            order = np.lexsort((np.arange(k), ratios))
            excluded = set(order[: b - 1]) | {i}
            rest = [ratios[j] for j in range(k) if j not in excluded]
            if rest:
                best = min(best, min(rest))
        report.g_min_b[b] = float(best)
    return report


@dataclass
class GoodnessReport:
    L: float
    smallest_singular_value_of_UkT_Q: float


def kl_goodness(u_k, b, k):
    """How good a starting block B is for a target subspace U_k.

    Q is an orthonormal basis for span(B); for width m = k the score is
    L = 1 / sigma_min(U_k' Q)^2, for m > k the best k-dimensional
    subspace inside span(B) is used, L = 1 / sigma_k(U_k' Q)^2. L = +inf
    when the block misses part of the target span. L depends on span(B)
    only.
    """
    u_k = _columns(u_k)
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    if u_k.shape[1] != k:
        raise ValueError("U_k must have exactly k columns")
    if b.shape[1] < k:
        raise ValueError("starting block must have at least k columns")
    q = _orthonormalized(b)
    s = np.linalg.svd(u_k.T @ q, compute_uv=False)
    s_k = float(s[k - 1]) if s.size >= k else 0.0
    if s_k == 0.0:
        return GoodnessReport(L=math.inf, smallest_singular_value_of_UkT_Q=0.0)
    return GoodnessReport(L=1.0 / s_k**2, smallest_singular_value_of_UkT_Q=s_k)


def chi_square_min_check(k, delta, trials, seed=0):
    """Empirical frequency of min_i g_i^2 >= 2 delta^2 / (pi k^2).

    Samples k i.i.d. standard normals per trial; the bound promises the
    frequency is at least 1 - delta (up to binomial sampling error).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    threshold = 2.0 * delta**2 / (math.pi * k**2)
    g = rng_from(seed).normal(size=(int(trials), int(k)))
    return float(((g**2).min(axis=1) >= threshold).mean())


@dataclass
class Implication:
    hypothesis: bool
    conclusion: bool

    @property
    def holds(self):
        return (not self.hypothesis) or self.conclusion


@dataclass
class PerturbationTransferReport:
    admissible: bool
    singular_value: Implication | None = None
    spectral: Implication | None = None
    frobenius: Implication | None = None

    @property
    def all_hold(self):
        if not self.admissible:
            return False
        return all(im.holds for im in (self.singular_value, self.spectral, self.frobenius))


def perturbation_transfer_check(a, d, q, k, eps):
    """Evaluate the three error-transfer implications for A vs A + D.

    For ||D||_2 within (eps/3n) sigma_{k+1}(A): near-optimality on the
    perturbed matrix implies near-optimality on the original with
    constants 8 eps (singular values, against sigma_i^2), 2 eps
    (spectral) and 4 eps (Frobenius). Violating the norm precondition
    yields a report flagged inadmissible, with no implications evaluated.
    """
    a = np.asarray(a, dtype=float)
    amat = np.diag(a) if a.ndim == 1 else as_matrix(a)
    n = amat.shape[0]
    if isinstance(d, DiagonalPerturbation):
        dmat = np.diag(d.entries)
    else:
        d = np.asarray(d, dtype=float)
        dmat = np.diag(d) if d.ndim == 1 else as_matrix(d, rows=n)
    q = _orthonormalized(q)
    sig_a = np.linalg.svd(amat, compute_uv=False)
    if np.linalg.norm(dmat, 2) > eps / (3.0 * n) * sig_a[k]:
        return PerturbationTransferReport(admissible=False)
    atil = amat + dmat
    sig_t = np.linalg.svd(atil, compute_uv=False)

    ray_t = ((atil.T @ q) ** 2).sum(axis=0)
    ray_a = ((amat.T @ q) ** 2).sum(axis=0)
    kk = min(k, q.shape[1])
    hyp_sv = bool(np.all(np.abs(ray_t[:kk] - sig_t[:kk] ** 2) <= eps * sig_t[k] ** 2))
    con_sv = bool(np.all(np.abs(ray_a[:kk] - sig_a[:kk] ** 2) <= 8 * eps * sig_a[:kk] ** 2))

    def norms(mat, sig):
        resid = mat - q @ (q.T @ mat)
        s = np.linalg.svd(resid, compute_uv=False)
        spec = float(s[0])
        fro = float(np.sqrt((s**2).sum()))
        return spec, fro, float(sig[k]), float(np.sqrt((sig[k:] ** 2).sum()))

    spec_t, fro_t, opt2_t, optf_t = norms(atil, sig_t)
    spec_a, fro_a, opt2_a, optf_a = norms(amat, sig_a)
    return PerturbationTransferReport(
        admissible=True,
        singular_value=Implication(hyp_sv, con_sv),
        spectral=Implication(spec_t <= (1 + eps) * opt2_t, spec_a <= (1 + 2 * eps) * opt2_a),
        frobenius=Implication(fro_t <= (1 + eps) * optf_t, fro_a <= (1 + 4 * eps) * optf_a),
    )


def spectral_error_transfers_from_gram(a, q, k, eps):
    """Check: near-optimal spectral approximation of AA' transfers to A.

    Returns the (hypothesis, conclusion) pair of the implication
    ||AA' - QQ'AA'||_2 <= (1+eps) sigma_{k+1}^2
        =>  ||A - QQ'A||_2 <= (1+eps) sigma_{k+1}.
    """
    a = np.asarray(a, dtype=float)
    amat = np.diag(a) if a.ndim == 1 else as_matrix(a)
    q = _orthonormalized(q)
    sigma = np.linalg.svd(amat, compute_uv=False)
    gram = amat @ amat.T
    lhs = np.linalg.norm(gram - q @ (q.T @ gram), 2)
    rhs = np.linalg.norm(amat - q @ (q.T @ amat), 2)
    return Implication(
        hypothesis=bool(lhs <= (1 + eps) * sigma[k] ** 2),
        conclusion=bool(rhs <= (1 + eps) * sigma[k]),
    )
