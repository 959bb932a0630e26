"""Seeded multi-trial experiment runner, CSV emission, quantile bands.

Budgets are counted in Gram applications (one per vector). Every cell of
a sweep derives its generator seed from base_seed XOR sha256(cell), with
the trial index selecting a substream, so runs are reproducible
record-for-record and trial order never matters.
"""

import csv
import hashlib
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .metrics import EPSILON_FLOOR, epsilon_empirical, schatten_pipeline
from .operators import DiagonalGram, GramOperator, perturb_diagonal
from .solvers import (
    SolverConfig,
    block_krylov,
    simultaneous_iteration,
    single_vector_krylov,
    single_vector_simultaneous,
)
from .spectra import SpectrumSpec, generate
from .validation import rng_from

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "PRESETS",
    "preset_config",
    "run_preset",
    "aggregate_quantiles",
    "write_csv",
    "read_csv",
    "estimate_tail_singular_value",
]

PRESETS = (
    "gap_sweep",
    "block_size",
    "perturb_sweep",
    "grid",
    "ortho_stability",
    "schatten",
    "simultaneous",
)


@dataclass
class ExperimentConfig:
    preset: str
    n: int
    k: int
    trials: int
    base_seed: int = 0
    budgets: tuple = ()
    t_list: tuple = ()
    gap_list: tuple = ()
    block_list: tuple = ()
    delta_list: tuple = ()
    p_list: tuple = ()
    alpha: float = 1.1
    beta: float = 1.5

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.budgets and any(b2 <= b1 for b1, b2 in zip(self.budgets, self.budgets[1:])):
            raise ValueError("budgets must be strictly increasing")


@dataclass
class ExperimentRecord:
    preset: str
    spectrum_id: str
    block_size: int
    delta: float | None
    ortho_policy: str
    trial_index: int
    matvecs: int
    eps_empirical_raw: float
    eps_empirical_floored: float = field(default=None)

    def __post_init__(self):
        if self.eps_empirical_floored is None:
            self.eps_empirical_floored = max(self.eps_empirical_raw, EPSILON_FLOOR)


def preset_config(preset, scale="full", **overrides):
    """Full-scale defaults for each preset; scale='fast' shrinks for CI."""
    full = scale == "full"
    if preset == "gap_sweep":
        cfg = dict(
            n=1000 if full else 200, k=10, trials=500 if full else 20,
            t_list=tuple(range(25, 35)),
            gap_list=tuple(float(g) for g in np.logspace(-10, 0, 8)),
            alpha=1.1,
        )
    elif preset == "block_size":
        cfg = dict(
            n=1000 if full else 200, k=50 if full else 10,
            trials=10 if full else 5, alpha=1.005 if full else 1.02,
            block_list=(1, 2, 3, 50) if full else (1, 2, 3, 10),
            budgets=tuple(range(25, 551, 25)) if full else tuple(range(10, 151, 10)),
        )
    elif preset == "perturb_sweep":
        budgets = sorted(set(range(25, 426, 25)) | set(range(150, 261, 10)))
        cfg = dict(
            n=1000 if full else 200, k=50 if full else 10,
            trials=10 if full else 5, alpha=1.005 if full else 1.02,
            delta_list=(1e-6, 1e-10, 1e-14, 0.0),
            budgets=tuple(budgets) if full else tuple(range(10, 161, 10)),
        )
    elif preset == "grid":
        cfg = dict(
            n=1000 if full else 200, k=50 if full else 10,
            trials=10 if full else 3,
            block_list=(1, 2, 3, 50, 54) if full else (1, 2, 3, 10, 14),
            budgets=tuple(range(25, 551, 25)) if full else tuple(range(10, 151, 10)),
        )
    elif preset == "ortho_stability":
        cfg = dict(
            n=1000 if full else 200, k=50 if full else 10,
            trials=100 if full else 10, alpha=1.1,
            block_list=(1, 2, 50, 54) if full else (1, 2, 10, 14),
            budgets=tuple(range(50, 301, 25)) if full else tuple(range(20, 121, 20)),
        )
    elif preset == "schatten":
        cfg = dict(
            n=500 if full else 120, k=10, trials=10 if full else 5,
            beta=1.5, t_list=(80 if full else 40,),
            p_list=(1.0, 2.0, 4.0, math.inf),
        )
    elif preset == "simultaneous":
        cfg = dict(
            n=500 if full else 150, k=10, trials=10 if full else 5, alpha=1.1,
            budgets=tuple(range(22, 331, 22)) if full else tuple(range(22, 155, 22)),
        )
    else:
        raise ValueError(f"unknown preset {preset!r}")
    cfg.update(overrides)
    return ExperimentConfig(preset=preset, **cfg)


def _cell_seed(base_seed, *parts):
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return (int(base_seed) ^ int.from_bytes(digest[:8], "big")) & 0x7FFFFFFFFFFFFFFF


def _checkpoint_map(budgets, width):
    """Map each affordable budget to the last iteration within it."""
    out = {}
    for b in budgets:
        it = b // width - 1
        if it >= 0:
            out.setdefault(it, []).append(b)
    return out


def _traced_eps(op, sigma_eval, k, budgets, *, solver="krylov", block_size=1,
                policy="full", seed=0, start="gaussian", memory_budget=None):
    """Run a solver once, returning [(matvecs, eps_raw)] at each budget.

    Checkpoints reuse the cached Ritz products, so one traced run costs
    exactly as much as a single run to the final budget.
    """
    if solver == "simultaneous":
        # t powers cost (t+1)*b applications including Ritz products
        plan = _checkpoint_map(budgets, block_size)
    elif solver == "sv_simultaneous":
        ell = memory_budget
        plan = {}
        for b in budgets:
            powers = (b - (ell - 1)) // ell - 1
            if powers >= 0:
                plan.setdefault(powers, []).append(b)
    else:
        plan = _checkpoint_map(budgets, block_size)
    if not plan:
        return []
    t_final = max(plan)
    trace = []

    def record(it, matvecs, q, ritz):
        eps = epsilon_empirical(sigma_eval, q, k)
        trace.append((matvecs, eps))

    its = sorted(plan)
    if solver == "krylov":
        cfg = SolverConfig(target_rank=k, iterations=t_final, block_size=block_size,
                           ortho=policy, seed=seed, start=start)
        fn = single_vector_krylov if block_size == 1 else block_krylov
        fn(op, cfg, checkpoint_iterations=its, on_checkpoint=record)
    elif solver == "simultaneous":
        cfg = SolverConfig(target_rank=k, iterations=t_final, block_size=block_size,
                           seed=seed, start=start)
        simultaneous_iteration(op, cfg, checkpoint_iterations=its, on_checkpoint=record)
    elif solver == "sv_simultaneous":
        ell = memory_budget
        cfg = SolverConfig(target_rank=k, iterations=t_final + ell - 1, block_size=1,
                           seed=seed, start=start)
        single_vector_simultaneous(op, cfg, ell, checkpoint_iterations=its,
                                   on_checkpoint=record)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return trace


class PairCoupledPerturbedGram(GramOperator):
    """Gram operator of diag(sigma) + D for D diagonal in a rotated basis.

    D couples random disjoint coordinate pairs through seeded rotations,
    so ||D||_2 <= delta still holds (its eigenvalues are the drawn
    entries) but D no longer commutes with diag(sigma). A co-diagonal
    perturbation would leave the eigenvectors untouched and hide the
    accuracy floor the perturbation trades away.
    """

    def __init__(self, sigma, delta, seed):
        sigma = np.asarray(sigma, dtype=float)
        super().__init__(sigma.shape[0])
        self.sigma = sigma
        self.delta = float(delta)
        n = self.n
        rng = rng_from(seed)
        d = rng.uniform(-delta, delta, size=n) if delta > 0 else np.zeros(n)
        perm = rng.permutation(n)
        theta = rng.uniform(0.0, 2 * math.pi, size=n // 2)
        self._ia = perm[0 : 2 * (n // 2) : 2]
        self._ib = perm[1 : 2 * (n // 2) : 2]
        self._lone = perm[2 * (n // 2):]
        c, s = np.cos(theta), np.sin(theta)
        da, db = d[self._ia], d[self._ib]
        self._e11 = c * c * da + s * s * db
        self._e22 = s * s * da + c * c * db
        self._e12 = c * s * (da - db)
        self._dlone = d[self._lone]

    def _apply_noise(self, x):
        y = np.zeros_like(x)
        xa, xb = x[self._ia], x[self._ib]
        y[self._ia] = self._e11 * xa + self._e12 * xb
        y[self._ib] = self._e12 * xa + self._e22 * xb
        y[self._lone] = self._dlone * x[self._lone]
        return y

    def _matvec(self, x):
        if self.delta == 0:
            return (self.sigma**2) * x
        y = self.sigma * x + self._apply_noise(x)
        return self.sigma * y + self._apply_noise(y)


def _records_from_trace(cfg, trace, spectrum_id, block_size, delta, policy, trial):
    return [
        ExperimentRecord(
            preset=cfg.preset, spectrum_id=spectrum_id, block_size=block_size,
            delta=delta, ortho_policy=policy, trial_index=trial,
            matvecs=mv, eps_empirical_raw=eps,
        )
        for mv, eps in trace
    ]


def _run_gap_sweep(cfg):
    records = []
    for g in cfg.gap_list:
        spec = SpectrumSpec("paired_gap", n=cfg.n, alpha=cfg.alpha, g_min=float(g))
        sigma = generate(spec)
        sigma_eval = np.sort(sigma)[::-1]
        t_list = sorted(cfg.t_list)
        for trial in range(cfg.trials):
            seed = _cell_seed(cfg.base_seed, "gap_sweep", spec.spectrum_id)
            op = DiagonalGram(sigma)
            trace = []

            def record(it, matvecs, q, ritz):
                trace.append((matvecs, epsilon_empirical(sigma_eval, q, cfg.k)))

            run_cfg = SolverConfig(target_rank=cfg.k, iterations=max(t_list),
                                   seed=_cell_seed(seed, trial))
            single_vector_krylov(op, run_cfg, checkpoint_iterations=t_list,
                                 on_checkpoint=record)
            records.extend(_records_from_trace(
                cfg, trace, spec.spectrum_id, 1, None, "full", trial))
    return records


def _run_block_size(cfg):
    spec = SpectrumSpec("repeated_pairs", n=cfg.n, alpha=cfg.alpha, k=cfg.k)
    sigma = generate(spec)
    records = []
    for b in cfg.block_list:
        for trial in range(cfg.trials):
            seed = _cell_seed(cfg.base_seed, "block_size", spec.spectrum_id, b)
            op = DiagonalGram(sigma)
            trace = _traced_eps(op, sigma, cfg.k, cfg.budgets, block_size=b,
                                seed=_cell_seed(seed, trial))
            records.extend(_records_from_trace(
                cfg, trace, spec.spectrum_id, b, None, "full", trial))
    return records


def _run_perturb_sweep(cfg):
    spec = SpectrumSpec("repeated_pairs", n=cfg.n, alpha=cfg.alpha, k=cfg.k)
    sigma = generate(spec)
    records = []
    for trial in range(cfg.trials):
        start_seed = _cell_seed(cfg.base_seed, "perturb_sweep", "start")
        x0 = rng_from(start_seed, trial).normal(size=cfg.n)
        for delta in cfg.delta_list:
            noise_seed = _cell_seed(cfg.base_seed, "perturb_sweep", "noise", delta)
            op = PairCoupledPerturbedGram(sigma, float(delta),
                                          _cell_seed(noise_seed, trial))
            trace = _traced_eps(op, sigma, cfg.k, cfg.budgets, block_size=1,
                                start=x0, seed=0)
            records.extend(_records_from_trace(
                cfg, trace, spec.spectrum_id, 1, float(delta), "full", trial))
        # unperturbed small-block reference
        ref_seed = _cell_seed(cfg.base_seed, "perturb_sweep", "reference")
        op = DiagonalGram(sigma)
        trace = _traced_eps(op, sigma, cfg.k, cfg.budgets, block_size=2,
                            seed=_cell_seed(ref_seed, trial))
        records.extend(_records_from_trace(
            cfg, trace, spec.spectrum_id, 2, None, "full", trial))
    return records


def _grid_spectra(cfg):
    specs = [
        SpectrumSpec("exponential", n=cfg.n, alpha=a) for a in (1.001, 1.01, 1.1)
    ] + [
        SpectrumSpec("polynomial", n=cfg.n, beta=b) for b in (0.1, 0.5, 1.5)
    ] + [
        SpectrumSpec("repeated_pairs", n=cfg.n, alpha=1.005, k=cfg.k),
        SpectrumSpec("wishart_lb", n=cfg.n),
    ]
    return specs


def _run_grid(cfg):
    records = []
    for spec in _grid_spectra(cfg):
        sigma = generate(spec)
        # the Wishart profile ends in an exact zero; the optimum is still fine
        for b in cfg.block_list:
            for trial in range(cfg.trials):
                seed = _cell_seed(cfg.base_seed, "grid", spec.spectrum_id, b)
                op = DiagonalGram(sigma)
                trace = _traced_eps(op, sigma, cfg.k, cfg.budgets, block_size=b,
                                    seed=_cell_seed(seed, trial))
                records.extend(_records_from_trace(
                    cfg, trace, spec.spectrum_id, b, None, "full", trial))
    return records


def _run_ortho_stability(cfg):
    spec = SpectrumSpec("exponential", n=cfg.n, alpha=cfg.alpha)
    sigma = generate(spec)
    records = []
    for policy in ("full", "lanczos"):
        for b in cfg.block_list:
            for trial in range(cfg.trials):
                seed = _cell_seed(cfg.base_seed, "ortho", spec.spectrum_id, policy, b)
                op = DiagonalGram(sigma)
                trace = _traced_eps(op, sigma, cfg.k, cfg.budgets, block_size=b,
                                    policy=policy, seed=_cell_seed(seed, trial))
                records.extend(_records_from_trace(
                    cfg, trace, spec.spectrum_id, b, None, policy, trial))
    return records


def _run_schatten(cfg):
    spec = SpectrumSpec("polynomial", n=cfg.n, beta=cfg.beta)
    sigma = generate(spec)
    records = []
    t = max(cfg.t_list)
    for trial in range(cfg.trials):
        seed = _cell_seed(cfg.base_seed, "schatten", spec.spectrum_id)
        run_cfg = SolverConfig(target_rank=cfg.k, iterations=t,
                               seed=_cell_seed(seed, trial))
        result = schatten_pipeline(sigma, run_cfg, p_list=cfg.p_list)
        for p in cfg.p_list:
            eps = result.residuals[p] / result.optima[p] - 1.0
            records.append(ExperimentRecord(
                preset=cfg.preset,
                spectrum_id=f"{spec.spectrum_id};p={p:g}",
                block_size=1, delta=None, ortho_policy="full",
                trial_index=trial, matvecs=result.matvecs,
                eps_empirical_raw=eps,
            ))
    return records


def _run_simultaneous(cfg):
    spec = SpectrumSpec("exponential", n=cfg.n, alpha=cfg.alpha)
    sigma = generate(spec)
    records = []
    runs = (
        ("krylov", dict(block_size=1), "krylov_b1"),
        ("simultaneous", dict(block_size=cfg.k), "simultaneous_bk"),
        ("sv_simultaneous", dict(block_size=1, memory_budget=cfg.k), "sv_simultaneous_lk"),
    )
    for solver, kw, label in runs:
        for trial in range(cfg.trials):
            seed = _cell_seed(cfg.base_seed, "simultaneous", label)
            op = DiagonalGram(sigma)
            trace = _traced_eps(op, sigma, cfg.k, cfg.budgets, solver=solver,
                                seed=_cell_seed(seed, trial), **kw)
            records.extend(_records_from_trace(
                cfg, trace, spec.spectrum_id, kw.get("block_size", 1), None,
                label, trial))
    return records


_RUNNERS = {
    "gap_sweep": _run_gap_sweep,
    "block_size": _run_block_size,
    "perturb_sweep": _run_perturb_sweep,
    "grid": _run_grid,
    "ortho_stability": _run_ortho_stability,
    "schatten": _run_schatten,
    "simultaneous": _run_simultaneous,
}


def run_preset(cfg):
    """Execute a preset, returning its records in deterministic order."""
    return _RUNNERS[cfg.preset](cfg)


def aggregate_quantiles(records, group_keys, value_field="eps_empirical_raw"):
    """Group records and report (q25, median, q75) by linear interpolation."""
    groups = {}
    for rec in records:
        key = tuple(getattr(rec, g) for g in group_keys)
        groups.setdefault(key, []).append(getattr(rec, value_field))
    if not groups:
        raise ValueError("no records to aggregate")
    rows = []
    for key in sorted(groups, key=lambda t: tuple(str(x) for x in t)):
        vals = np.asarray(groups[key], dtype=float)
        if vals.size == 0:
            raise ValueError(f"empty group {key}")
        q25, med, q75 = np.quantile(vals, [0.25, 0.5, 0.75], method="linear")
        rows.append(dict(zip(group_keys, key)) | {
            "q25": float(q25), "median": float(med), "q75": float(q75)})
    return rows


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(records, path):
    """Write records with the exact ExperimentRecord header, 17-digit floats, LF."""
    names = [f.name for f in fields(ExperimentRecord)]
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for rec in records:
            writer.writerow([_format_cell(getattr(rec, n)) for n in names])


def read_csv(path):
    """Read a harness CSV back into ExperimentRecords (floats bit-exact)."""
    records = []
    with open(path, "r", newline="", encoding="ascii") as fh:
        for row in csv.DictReader(fh):
            records.append(ExperimentRecord(
                preset=row["preset"],
                spectrum_id=row["spectrum_id"],
                block_size=int(row["block_size"]),
                delta=float(row["delta"]) if row["delta"] else None,
                ortho_policy=row["ortho_policy"],
                trial_index=int(row["trial_index"]),
                matvecs=int(row["matvecs"]),
                eps_empirical_raw=float(row["eps_empirical_raw"]),
                eps_empirical_floored=float(row["eps_empirical_floored"]),
            ))
    return records


def estimate_tail_singular_value(op, k, seed=0):
    """Pilot estimate of sigma_{k+1} from a short Krylov run (t = k + 10).

    Used to choose a perturbation size when the true spectrum is unknown.
    """
    cfg = SolverConfig(target_rank=k + 1, iterations=k + 10, seed=seed)
    res = single_vector_krylov(op, cfg)
    if res.ritz_values.size <= k:
        return 0.0
    return float(math.sqrt(max(res.ritz_values[k], 0.0)))
