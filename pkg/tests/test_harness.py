import random

import numpy as np
import pytest

from krylovlr.harness import (
    ExperimentConfig,
    ExperimentRecord,
    PairCoupledPerturbedGram,
    aggregate_quantiles,
    estimate_tail_singular_value,
    preset_config,
    read_csv,
    run_preset,
    write_csv,
)
from krylovlr.operators import DiagonalGram
from krylovlr.validation import rng_from


def rec(trial, matvecs, eps, **kw):
    base = dict(preset="block_size", spectrum_id="s", block_size=1, delta=None,
                ortho_policy="full", trial_index=trial, matvecs=matvecs,
                eps_empirical_raw=eps)
    base.update(kw)
    return ExperimentRecord(**base)


def test_quantile_conventions():
    rows = aggregate_quantiles([rec(i, 10, v) for i, v in enumerate([1.0, 2.0, 3.0])],
                               ["matvecs"])
    assert rows[0]["median"] == 2.0
    rows = aggregate_quantiles([rec(0, 10, 5.0)], ["matvecs"])
    assert rows[0]["q25"] == rows[0]["median"] == rows[0]["q75"] == 5.0
    rows = aggregate_quantiles([rec(i, 10, v) for i, v in enumerate([1.0, 2.0, 3.0, 4.0])],
                               ["matvecs"])
    assert rows[0]["median"] == 2.5  # linear interpolation
    assert rows[0]["q25"] == 1.75


def test_aggregate_rejects_missing_groups():
    with pytest.raises(ValueError):
        aggregate_quantiles([], ["matvecs"])


def test_write_csv_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv([], path)
    text = path.read_bytes().decode()
    assert text == ("preset,spectrum_id,block_size,delta,ortho_policy,"
                    "trial_index,matvecs,eps_empirical_raw,eps_empirical_floored\n")


def test_write_csv_roundtrip_bit_equal(tmp_path):
    eps = 1.2345678901234567e-7
    records = [rec(0, 12, eps), rec(1, 12, 1e-20, delta=1e-6)]
    path = tmp_path / "r.csv"
    write_csv(records, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert len(raw.decode().splitlines()) == 3
    back = read_csv(path)
    assert back[0].eps_empirical_raw == eps
    assert back[1].eps_empirical_raw == 1e-20
    assert back[1].eps_empirical_floored == 1e-15
    assert back[1].delta == 1e-6
    assert back[0].delta is None


def test_floored_field_defaults():
    r = rec(0, 5, 1e-20)
    assert r.eps_empirical_raw == 1e-20
    assert r.eps_empirical_floored == 1e-15


def test_trial_permutation_invariance():
    records = [rec(i, 10, v) for i, v in enumerate([0.5, 0.1, 0.9, 0.3])]
    shuffled = list(records)
    random.Random(3).shuffle(shuffled)
    a = aggregate_quantiles(records, ["matvecs"])
    b = aggregate_quantiles(shuffled, ["matvecs"])
    assert a == b


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(preset="nope", n=10, k=2, trials=1)
    with pytest.raises(ValueError):
        ExperimentConfig(preset="grid", n=10, k=2, trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(preset="grid", n=10, k=2, trials=1, budgets=(10, 10))


def test_gap_sweep_fast_record_count_and_determinism(tmp_path):
    cfg = preset_config("gap_sweep", scale="fast", trials=2,
                        gap_list=(1e-2, 1e-4), t_list=(25, 28), base_seed=7)
    records = run_preset(cfg)
    # gaps x trials x t-checkpoints
    assert len(records) == 2 * 2 * 2
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(records, p1)
    write_csv(run_preset(cfg), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_block_size_fast_budget_median_monotone():
    cfg = preset_config("block_size", scale="fast", trials=3, base_seed=1)
    records = run_preset(cfg)
    one = [r for r in records if r.block_size == 1]
    rows = aggregate_quantiles(one, ["matvecs"])
    rows.sort(key=lambda r: r["matvecs"])
    meds = [r["median"] for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(meds, meds[1:]))


def test_perturb_sweep_fast_smoke():
    cfg = preset_config("perturb_sweep", scale="fast", trials=2, base_seed=2,
                        delta_list=(1e-6, 0.0))
    records = run_preset(cfg)
    deltas = {r.delta for r in records}
    assert deltas == {1e-6, 0.0, None}  # None marks the b=2 reference
    assert {r.block_size for r in records} == {1, 2}


def test_ortho_and_simultaneous_and_schatten_fast_smoke():
    for preset in ("ortho_stability", "simultaneous", "schatten"):
        cfg = preset_config(preset, scale="fast", trials=2, base_seed=3)
        records = run_preset(cfg)
        assert records
        for r in records:
            assert r.eps_empirical_floored >= 1e-15
    cfg = preset_config("grid", scale="fast", trials=1, base_seed=4,
                        budgets=(20, 40), block_list=(1, 2))
    records = run_preset(cfg)
    assert len({r.spectrum_id for r in records}) == 8


def test_pair_coupled_perturbation_properties():
    sigma = np.sort(rng_from(0).uniform(0.5, 2.0, size=21))[::-1]
    delta = 1e-3
    op = PairCoupledPerturbedGram(sigma, delta, seed=5)
    # symmetric and within delta of the unperturbed operator in norm
    basis = np.eye(21)
    mat = np.column_stack([op.apply(basis[:, j]) for j in range(21)])
    np.testing.assert_allclose(mat, mat.T, atol=1e-12)
    amat = np.diag(sigma) + (
        np.column_stack([op._apply_noise(basis[:, j]) for j in range(21)]))
    noise = amat - np.diag(sigma)
    assert np.linalg.norm(noise, 2) <= delta * (1 + 1e-12)
    # eigenvectors genuinely rotate (unlike a co-diagonal perturbation)
    assert np.abs(noise - np.diag(np.diag(noise))).max() > 0
    zero = PairCoupledPerturbedGram(sigma, 0.0, seed=5)
    x = rng_from(6).normal(size=21)
    np.testing.assert_array_equal(zero.apply(x), (sigma**2) * x)


def test_estimate_tail_singular_value():
    sigma = np.array([4.0, 3.0, 2.0, 1.0, 0.5, 0.25, 0.1, 0.05])
    op = DiagonalGram(sigma)
    est = estimate_tail_singular_value(op, k=3, seed=0)
    assert est == pytest.approx(1.0, rel=1e-6)
