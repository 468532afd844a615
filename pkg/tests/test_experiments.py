"""Synthetic generators and study runners."""

import numpy as np
import pytest

from mvanova.errors import InputValidationError
from mvanova.experiments import (
    SyntheticSpec,
    default_planted_effects,
    equal_block_clusters,
    generate,
    recovery_study,
    specificity_study,
    study_long_format,
)
from mvanova.model import ModelLayout, population_marginal
from mvanova.sampler import SamplerConfig


def test_default_spec_shapes_and_cells():
    spec = SyntheticSpec()  # paper-style defaults
    data, truth = generate(spec)
    assert data.x.shape == (40, 200) and data.y.shape == (40, 200)
    counts = data.cell_counts()
    assert all(c == 10 for c in counts.values())
    assert np.array_equal(truth.effects["alpha_1"], [2.0, 0.0, 0.0])
    assert np.array_equal(truth.effects["beta_1"], [0.0, 0.0, 2.0])
    assert np.array_equal(truth.effects["alphabeta_1_1"], [0.0, 2.0, 0.0])
    assert np.all(truth.resid_var_x == 1.0)


def test_default_planted_effects_requires_dim_kinds():
    with pytest.raises(InputValidationError):
        default_planted_effects(ModelLayout(k_shared=1, k_xspec=0, k_yspec=1))


def test_equal_block_clusters():
    assert np.array_equal(equal_block_clusters(7, 3), [0, 0, 0, 1, 1, 1, 2])


def test_frozen_w_stable_across_draws_and_n():
    spec = SyntheticSpec(p_x=12, p_y=12)
    w1 = spec.frozen_w()
    _, truth_a = generate(spec, data_seed=1)
    _, truth_b = generate(spec, data_seed=2, n_per_cell=7)
    assert np.array_equal(truth_a.w_x, w1[0])
    assert np.array_equal(truth_b.w_x, w1[0])
    assert np.array_equal(truth_a.w_y, truth_b.w_y)


def test_noiseless_limit_reproduces_cell_means_exactly():
    layout = ModelLayout(k_shared=1, k_xspec=1, k_yspec=1, k_clusters_x=3, k_clusters_y=3)
    spec = SyntheticSpec(
        n_per_cell=2, p_x=3, p_y=3, layout=layout,
        noise_sd=0.0, psi_scale=0.0, z_sd=0.0,
        w_x=np.eye(3) * np.array([1.0, 1.0, 0.0]),
        w_y=np.eye(3) * np.array([1.0, 0.0, 1.0]),
        clusters_x=np.arange(3), clusters_y=np.arange(3),
    )
    data, truth = generate(spec)
    from mvanova.model import cell_mean, cluster_matrix

    for j in range(data.n):
        m = cell_mean(truth.effects, int(data.a[j]), int(data.b[j]), 3)
        v = cluster_matrix(truth.clusters_x, truth.scales_x, 3)
        assert np.allclose(data.x[j], v @ (truth.w_x @ m), atol=1e-12)


def test_generated_population_means_match_marginal_oracle():
    spec = SyntheticSpec(p_x=10, p_y=8, seed=4)
    big_n = 25_000
    data, truth = generate(spec, data_seed=8, n_per_cell=big_n // 4)
    for cell in ((0, 0), (1, 1)):
        marg = population_marginal(truth, spec.layout, cell)
        rows = (data.a == cell[0]) & (data.b == cell[1])
        emp = np.concatenate([data.x[rows].mean(axis=0), data.y[rows].mean(axis=0)])
        sd = np.sqrt(np.diag(marg.cov))
        assert np.all(np.abs(emp - marg.mean) < 4.5 * sd / np.sqrt(rows.sum()))


def test_recovery_study_table_and_determinism():
    spec = SyntheticSpec(p_x=12, p_y=12, seed=3)
    cfg = SamplerConfig(burn_in=40, n_samples=20, thin=1)
    t1, meta1 = recovery_study(spec, n_grid=(12, 20), config=cfg, seed=5)
    t2, _ = recovery_study(spec, n_grid=(12, 20), config=cfg, seed=5)
    assert sorted(t1.n.unique()) == [12, 20]
    assert len(t1) == 2 * 3 * 3  # n x effects x dims
    assert {"effect", "dim", "dim_kind", "mean", "q2.5", "q97.5", "found", "truth"} <= set(t1.columns)
    assert t1.equals(t2)
    assert meta1["spec"]["seed"] == 3
    long = study_long_format(t1)
    assert len(long) == len(t1) * 6
    assert {"stat", "value"} <= set(long.columns)


def test_write_study_emits_csv_and_sidecar(tmp_path):
    import json

    import pandas as pd

    from mvanova.experiments import write_study

    spec = SyntheticSpec(p_x=10, p_y=10, seed=3)
    frame, meta = recovery_study(spec, n_grid=(12,), config=SamplerConfig(20, 10, 1), seed=1)
    paths = write_study(frame, meta, tmp_path, name="recovery")
    long = pd.read_csv(paths["csv"])
    assert len(long) == len(frame) * 6
    assert {"n", "effect", "dim", "stat", "value"} <= set(long.columns)
    side = json.loads((tmp_path / "recovery_meta.json").read_text())
    assert side["spec"]["seed"] == 3
    assert "w_x" in side["spec"]


def test_recovery_study_rejects_empty_cells():
    spec = SyntheticSpec(p_x=8, p_y=8)
    with pytest.raises(InputValidationError):
        recovery_study(spec, n_grid=(2,), config=SamplerConfig(5, 5, 1))


def test_specificity_study_swap_symmetry():
    """Swapping the roles of the views swaps the findings."""
    cfg = SamplerConfig(burn_in=300, n_samples=200, thin=1)
    spec_x = SyntheticSpec(p_x=30, p_y=30, n_per_cell=30, seed=6,
                           effects={"alpha_1": [0.0, 2.0, 0.0]})
    tx, _ = specificity_study(spec_x, config=cfg, n_runs=1, seed=9)
    spec_y = SyntheticSpec(p_x=30, p_y=30, n_per_cell=30, seed=6,
                           effects={"alpha_1": [0.0, 0.0, 2.0]})
    ty, _ = specificity_study(spec_y, config=cfg, n_runs=1, seed=9)

    def found(frame, kind):
        row = frame[(frame.effect == "alpha_1") & (frame.dim_kind == kind)].iloc[0]
        return bool(row["found"])

    assert found(tx, "x_specific") and not found(tx, "y_specific")
    assert found(ty, "y_specific") and not found(ty, "x_specific")
    assert not found(tx, "shared") and not found(ty, "shared")
