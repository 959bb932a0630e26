"""Krylov and simultaneous-iteration solvers for rank-k approximation.

All solvers share the same access pattern: a Gram operator is applied to
the most recently retained column or block, the result is cached so the
projected matrix M = Z' (A A') Z costs no extra applications, and the
output basis is Q = Z U_k for the top-k eigenvectors U_k of M. Running t
iterations costs (t+1) * block_size applications (the final block's
products feed the Ritz extraction), minus savings when dependent columns
are dropped and no longer iterated.
"""

from dataclasses import dataclass, field

import numpy as np

from .kernels import DEFAULT_DROP_TOL, OrthonormalBasis, eigh_small
from .operators import GramOperator
from .validation import as_matrix, as_vector, rng_from

__all__ = [
    "SimulatedStart",
    "SolverConfig",
    "SolverResult",
    "InsufficientSubspaceError",
    "DegenerateStartError",
    "block_krylov",
    "single_vector_krylov",
    "build_simulated_block",
    "simultaneous_iteration",
    "single_vector_simultaneous",
    "lanczos_local_extend",
    "LanczosLocalState",
]


class InsufficientSubspaceError(ValueError):
    """The configured subspace cannot reach the target rank."""


class DegenerateStartError(ValueError):
    """The starting block has no usable directions."""


@dataclass(frozen=True)
class SimulatedStart:
    """Start a block run from S_ell = [x, Gx, ..., G^(ell-1) x]."""

    ell: int


@dataclass
class SolverConfig:
    target_rank: int
    iterations: int
    block_size: int = 1
    ortho: str = "full"  # "full" or "lanczos"
    seed: int = 0
    start: object = "gaussian"  # "gaussian" | ndarray | SimulatedStart
    drop_tol: float = DEFAULT_DROP_TOL

    def __post_init__(self):
        if self.target_rank < 1:
            raise ValueError("target_rank must be positive")
        if self.block_size < 1:
            raise ValueError("block_size must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.ortho not in ("full", "lanczos"):
            raise ValueError(f"unknown ortho policy {self.ortho!r}")
        if self.drop_tol <= 0:
            raise ValueError("drop_tol must be positive")
        if isinstance(self.start, SimulatedStart):
            if self.block_size != 1:
                raise ValueError("a simulated start block requires block_size=1")
            if self.start.ell < self.target_rank:
                raise ValueError("simulated block width ell must be >= target_rank")


@dataclass
class SolverResult:
    Q: OrthonormalBasis
    ritz_values: np.ndarray
    matvecs: int
    subspace_dim: int
    drop_count: int
    rank_deficient: bool = False
    iterations_run: int = 0
    basis: OrthonormalBasis = None  # full subspace the Ritz pairs came from


class _Workspace:
    """Grow-on-demand storage for the basis, cached products and M."""

    def __init__(self, n, cap):
        self.n = n
        self.cap = max(16, int(cap))
        self.z = np.zeros((n, self.cap))
        self.gz = np.zeros((n, self.cap))
        self.m = np.zeros((self.cap, self.cap))
        self.width = 0          # retained columns
        self.products = 0       # columns of gz filled
        self.drop_log = []
        self.attempts = 0

    def _grow(self):
        cap = 2 * self.cap
        for name in ("z", "gz"):
            buf = np.zeros((self.n, cap))
            buf[:, : self.cap] = getattr(self, name)
            setattr(self, name, buf)
        m = np.zeros((cap, cap))
        m[: self.cap, : self.cap] = self.m
        self.m = m
        self.cap = cap

    def append(self, v, drop_tol, window=None):
        """Two-pass MGS append; returns index or None when dropped.

        window=None orthogonalizes against all retained columns, an
        integer restricts to that many trailing columns (local policy).
        """
        attempt = self.attempts
        self.attempts += 1
        nv0 = np.linalg.norm(v)
        if nv0 == 0 or self.width >= self.n:
            self.drop_log.append(attempt)
            return None
        w = v.copy()
        lo = 0 if window is None else max(0, self.width - window)
        for _ in range(2):
            for j in range(lo, self.width):
                zj = self.z[:, j]
                w -= (zj @ w) * zj
        nv = np.linalg.norm(w)
        if nv <= drop_tol * nv0:
            self.drop_log.append(attempt)
            return None
        if self.width == self.cap:
            self._grow()
        idx = self.width
        self.z[:, idx] = w / nv
        self.width += 1
        return idx

    def record_product(self, idx, gz_col):
        """Cache G z_idx and fill the corresponding slice of M."""
        self.gz[:, idx] = gz_col
        w = self.width
        vals = self.z[:, :w].T @ gz_col
        self.m[:w, idx] = vals
        self.m[idx, :w] = vals
        self.products = max(self.products, idx + 1)

    def ritz(self, k):
        """Top-k Ritz pairs over the current basis (needs all products)."""
        w = self.width
        if w == 0:
            raise DegenerateStartError("subspace is empty")
        values, vectors = eigh_small(self.m[:w, :w])
        kk = min(k, w)
        q = self.z[:, :w] @ vectors[:, :kk]
        return q, np.maximum(values[:kk], 0.0)


def _start_block(op, cfg, expect_width=None):
    """Materialize the configured starting block; may cost applications."""
    n = op.n
    if isinstance(cfg.start, str):
        if cfg.start != "gaussian":
            raise ValueError(f"unknown start {cfg.start!r}")
        width = expect_width if expect_width is not None else cfg.block_size
        return rng_from(cfg.seed).normal(size=(n, width))
    if isinstance(cfg.start, SimulatedStart):
        x = rng_from(cfg.seed).normal(size=n)
        return build_simulated_block(op, x, cfg.start.ell)
    arr = np.asarray(cfg.start, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    b = as_matrix(arr, rows=n, name="starting block")
    if expect_width is not None and b.shape[1] != expect_width:
        raise ValueError(
            f"explicit start has {b.shape[1]} columns, expected {expect_width}"
        )
    return b


def build_simulated_block(op, x, ell):
    """[x, Gx, ..., G^(ell-1) x] with each column normalized on generation.

    Span-preserving (positive scaling only); costs ell - 1 applications.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    x = as_vector(x, n=op.n)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise DegenerateStartError("start vector is zero")
    cols = [x / nx]
    for _ in range(ell - 1):
        w = op.apply(cols[-1])
        nw = np.linalg.norm(w)
        if nw == 0:
            raise DegenerateStartError("operator annihilated the start vector")
        cols.append(w / nw)
    return np.column_stack(cols)


def block_krylov(op, cfg, checkpoint_iterations=None, on_checkpoint=None):
    """Block Krylov iteration: Ritz extraction over span[B, GB, ..., G^t B].

    When `checkpoint_iterations` is given, `on_checkpoint(iteration,
    matvecs, q, ritz_values)` fires after the products of that iteration
    are available; checkpoints reuse cached products and cost nothing
    extra. Iteration stops early once the Krylov space saturates, in
    which case the result reflects the smaller subspace and, if it is
    narrower than the target rank, the rank_deficient flag is set.
    """
    if not isinstance(op, GramOperator):
        raise TypeError("op must be a GramOperator")
    count0 = op.apply_count  # building a simulated start block costs applications too
    b0 = _start_block(op, cfg)
    width0 = b0.shape[1]
    if isinstance(cfg.start, SimulatedStart):
        if cfg.start.ell + cfg.iterations < cfg.target_rank:
            raise InsufficientSubspaceError("ell + t below target rank")
    elif (cfg.iterations + 1) * width0 < cfg.target_rank:
        raise InsufficientSubspaceError(
            f"(t+1)*b = {(cfg.iterations + 1) * width0} < k = {cfg.target_rank}"
        )

    t, k = cfg.iterations, cfg.target_rank
    local_window = 2 * width0 if cfg.ortho == "lanczos" else None
    ws = _Workspace(op.n, (t + 1) * width0)

    cur = []
    for j in range(width0):
        idx = ws.append(b0[:, j], cfg.drop_tol, window=local_window)
        if idx is not None:
            cur.append(idx)
    if not cur:
        raise DegenerateStartError("starting block has no independent columns")

    wanted = set(checkpoint_iterations or ())
    q = ritz = None
    it = 0
    for it in range(t + 1):
        for idx in cur:
            ws.record_product(idx, op.apply(ws.z[:, idx]))
        if on_checkpoint is not None and it in wanted:
            q_c, ritz_c = ws.ritz(k)
            on_checkpoint(it, op.apply_count - count0, q_c, ritz_c)
        if it == t:
            break
        nxt = []
        appended = 0
        for idx in cur:
            win = None if local_window is None else local_window + appended
            new = ws.append(ws.gz[:, idx], cfg.drop_tol, window=win)
            if new is not None:
                nxt.append(new)
                appended += 1
        if not nxt:
            break  # Krylov space saturated; nothing left to iterate
        cur = nxt

    q, ritz = ws.ritz(k)
    return SolverResult(
        Q=OrthonormalBasis(q, list(ws.drop_log)),
        ritz_values=ritz,
        matvecs=op.apply_count - count0,
        subspace_dim=ws.width,
        drop_count=len(ws.drop_log),
        rank_deficient=ws.width < k,
        iterations_run=it,
        basis=OrthonormalBasis(ws.z[:, : ws.width].copy(), list(ws.drop_log)),
    )


def single_vector_krylov(op, cfg, checkpoint_iterations=None, on_checkpoint=None):
    """Single-vector Krylov method: block_krylov with block size 1.

    The start vector is drawn i.i.d. standard normal from the seed unless
    an explicit vector is supplied. Requires t + 1 >= k.
    """
    if cfg.block_size != 1:
        raise ValueError("single_vector_krylov requires block_size=1")
    if not isinstance(cfg.start, SimulatedStart) and cfg.iterations + 1 < cfg.target_rank:
        raise InsufficientSubspaceError("t + 1 iterations below target rank")
    return block_krylov(
        op, cfg, checkpoint_iterations=checkpoint_iterations, on_checkpoint=on_checkpoint
    )


def _power_iteration(op, b0, powers, k, drop_tol, count0, checkpoint_iterations, on_checkpoint):
    """Shared core of the simultaneous-iteration variants.

    The block is re-orthonormalized after every power (span-preserving),
    and the Ritz products of each step double as the next power, so a
    t-power run costs (t+1) * width applications in total.
    """
    n = op.n
    drop_log = []

    def orthonormalize(cols):
        ws = _Workspace(n, cols.shape[1])
        for j in range(cols.shape[1]):
            ws.append(cols[:, j], drop_tol)
        drop_log.extend(ws.drop_log)
        return ws.z[:, : ws.width].copy()

    z = orthonormalize(b0)
    if z.shape[1] == 0:
        raise DegenerateStartError("starting block has no independent columns")

    wanted = set(checkpoint_iterations or ())
    q = ritz = None
    it = 0
    for it in range(powers + 1):
        w = op.apply_block(z)
        m = z.T @ w
        values, vectors = eigh_small(m)
        kk = min(k, z.shape[1])
        q = z @ vectors[:, :kk]
        ritz = np.maximum(values[:kk], 0.0)
        if on_checkpoint is not None and it in wanted:
            on_checkpoint(it, op.apply_count - count0, q, ritz)
        if it == powers:
            break
        z = orthonormalize(w)
        if z.shape[1] == 0:
            break

    return SolverResult(
        Q=OrthonormalBasis(q, drop_log),
        ritz_values=ritz,
        matvecs=op.apply_count - count0,
        subspace_dim=z.shape[1],
        drop_count=len(drop_log),
        rank_deficient=z.shape[1] < k,
        iterations_run=it,
        basis=OrthonormalBasis(z.copy(), list(drop_log)),
    )


def simultaneous_iteration(op, cfg, checkpoint_iterations=None, on_checkpoint=None):
    """Block power method: Ritz extraction over span(G^t B), b >= k."""
    if not isinstance(op, GramOperator):
        raise TypeError("op must be a GramOperator")
    if isinstance(cfg.start, SimulatedStart):
        raise ValueError("simultaneous_iteration takes a gaussian or explicit block")
    if cfg.block_size < cfg.target_rank:
        raise InsufficientSubspaceError("simultaneous iteration needs b >= k")
    b0 = _start_block(op, cfg)
    count0 = op.apply_count
    return _power_iteration(
        op, b0, cfg.iterations, cfg.target_rank, cfg.drop_tol,
        count0, checkpoint_iterations, on_checkpoint,
    )


def single_vector_simultaneous(op, cfg, memory_budget, checkpoint_iterations=None,
                               on_checkpoint=None):
    """Sliding-window power method from a single start vector.

    The window after t iterations spans [G^(t-ell+1) x, ..., G^t x], which
    equals G^(t-ell+1) applied to the span of S_ell; it is computed in
    that form (simulated block, then re-orthonormalized powering) because
    storing the raw window collapses to the dominant direction in finite
    precision. Only ell basis vectors are kept at any time.
    """
    ell = int(memory_budget)
    if ell < cfg.target_rank:
        raise InsufficientSubspaceError("memory budget ell must be >= target rank")
    if cfg.block_size != 1:
        raise ValueError("single_vector_simultaneous requires block_size=1")
    if cfg.iterations < ell - 1:
        raise ValueError("requires t >= ell - 1")
    count0 = op.apply_count
    if isinstance(cfg.start, SimulatedStart):
        raise ValueError("memory_budget already defines the window width")
    if isinstance(cfg.start, str):
        x = rng_from(cfg.seed).normal(size=op.n)
    else:
        x = as_vector(np.asarray(cfg.start, dtype=float).ravel(), n=op.n)
    s = build_simulated_block(op, x, ell)
    powers = cfg.iterations - (ell - 1)
    return _power_iteration(
        op, s, powers, cfg.target_rank, cfg.drop_tol,
        count0, checkpoint_iterations, on_checkpoint,
    )


@dataclass
class LanczosLocalState:
    """Basis state for the local (Lanczos-style) orthogonalization pattern."""

    columns: list = field(default_factory=list)
    drop_log: list = field(default_factory=list)
    window: int = 2

    def matrix(self):
        if not self.columns:
            raise ValueError("state holds no columns")
        return np.column_stack(self.columns)


def lanczos_local_extend(state, v):
    """Append v orthogonalized against only the previous `window` columns.

    The first columns behave exactly like full reorthogonalization
    (nothing older exists); afterwards global orthogonality is allowed to
    drift, which is the instability the policy isolates.
    """
    v = np.asarray(v, dtype=float).copy()
    attempt = len(state.columns) + len(state.drop_log)
    nv0 = np.linalg.norm(v)
    if nv0 == 0:
        state.drop_log.append(attempt)
        return state
    for _ in range(2):
        for z in state.columns[-state.window:]:
            v -= (z @ v) * z
    nv = np.linalg.norm(v)
    if nv == 0:
        state.drop_log.append(attempt)
        return state
    state.columns.append(v / nv)
    return state
