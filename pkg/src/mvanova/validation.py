"""Sampler correctness tooling.

Two independent checks of the derived full conditionals:

1. Log-density identity: for any block value change s -> s' with everything else
   held fixed, log p(block' | rest) - log p(block | rest) must equal
   log_joint(s') - log_joint(s). Exercised per block on random small instances.

2. Joint-distribution comparison ("getting it right"): the ancestral simulator of
   (state, data) and the loop {data | state; state | data via one Gibbs sweep}
   target the same joint, so scalar statistics must match between the two paths.

Both are consumed by the test suite and the acceptance harness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import (
    invgamma_logpdf,
    invwishart_logpdf,
    log_softmax,
    normal_logpdf,
    scaled_inv_chi2_logpdf,
    spd_cholesky,
)
from .model import (
    Hyperparameters,
    ModelLayout,
    ModelState,
    PairedDataset,
    draw_dataset,
    draw_state_from_prior,
    effect_names,
    log_joint,
    sample_from_model,
)
from .sampler import (
    cluster_log_probs,
    effect_conditional,
    effective_sample_size,
    gibbs_sweep,
    latent_conditional,
    ard_posterior,
    psi_posterior,
    resid_var_posterior,
    update_ard,
    update_clusters,
    update_effects,
    update_latents_fa,
    update_psi,
    update_resid_var,
    update_w,
    update_z,
    w_column_conditional,
    z_conditional,
)

# Hyperparameters with enough prior mass concentration for finite-variance
# statistics and overflow-free ancestral draws; correctness of the conditionals
# does not depend on the values.
MODERATE_HYPERS = Hyperparameters(
    ard_shape=3.0,
    ard_scale=2.0,
    resid_dof=6.0,
    resid_scale=0.5,
    dirichlet_conc=1.0,
    effect_prior_var=1.0,
)


def _mvn_logpdf_prec(value, mean, prec) -> float:
    """Normalized Gaussian log density in precision form."""
    value = np.atleast_2d(value)
    mean = np.atleast_2d(mean)
    chol = spd_cholesky(prec, "conditional precision")
    dev = value - mean
    maha = np.sum((dev @ chol) ** 2, axis=1)  # dev P dev' via P = L L'
    d = value.shape[1]
    logdet_prec = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(np.sum(-0.5 * (d * np.log(2.0 * np.pi) - logdet_prec + maha)))


def block_conditional_logpdf(
    state: ModelState,
    data: PairedDataset,
    layout: ModelLayout,
    hypers: Hyperparameters,
    block: str,
    view: str | None = None,
    unit=None,
) -> float:
    """Normalized log density of the block's current value under its full conditional.

    ``unit`` selects the sub-unit for blocks updated sequentially: a column index
    for w/ard, an effect name for effects.
    """
    if block == "z":
        dims = None if unit is None else [unit]
        prec, means = z_conditional(state, data.a, data.b, layout, dims=dims)
        value = state.z if unit is None else state.z[:, [unit]]
        return _mvn_logpdf_prec(value, means, prec)
    if block == "effects":
        var, mean = effect_conditional(state, data.a, data.b, unit, hypers.effect_prior_var)
        return float(np.sum(normal_logpdf(state.effects[unit], mean, var)))
    if block == "latents":
        prec, means = latent_conditional(state, data, layout, view)
        return _mvn_logpdf_prec(state.lat(view), means, prec)
    if block == "w":
        prec, mean = w_column_conditional(state, layout, hypers, view, unit)
        return _mvn_logpdf_prec(state.field("w", view)[:, unit], mean, prec)
    if block == "ard":
        shape, scale = ard_posterior(state, hypers, view, unit)
        return float(invgamma_logpdf(state.field("ard", view)[unit], shape, scale))
    if block == "psi":
        scale, dof = psi_posterior(state, layout, hypers, view)
        return float(invwishart_logpdf(state.field("psi", view), scale, dof))
    if block == "clusters":
        log_probs = log_softmax(cluster_log_probs(state, data, layout, view))
        v = state.field("clusters", view)
        return float(np.sum(log_probs[np.arange(len(v)), v]))
    if block == "resid_var":
        dof, scale_sq = resid_var_posterior(state, data, hypers, view)
        return float(np.sum(scaled_inv_chi2_logpdf(state.field("resid_var", view), dof, scale_sq)))
    raise ValueError(f"unknown block {block!r}")


def apply_block_update(
    state: ModelState,
    data: PairedDataset,
    layout: ModelLayout,
    hypers: Hyperparameters,
    rng,
    block: str,
    view: str | None = None,
    unit=None,
) -> ModelState:
    """Run one block update restricted to the given sub-unit."""
    if block == "z":
        return update_z(state, data, layout, rng, dims=None if unit is None else [unit])
    if block == "effects":
        return update_effects(state, data, hypers, rng, names=[unit])
    if block == "latents":
        return update_latents_fa(state, data, layout, view, rng)
    if block == "w":
        return update_w(state, layout, hypers, view, rng, columns=[unit])
    if block == "ard":
        return update_ard(state, layout, hypers, view, rng, columns=[unit])
    if block == "psi":
        return update_psi(state, layout, hypers, view, rng)
    if block == "clusters":
        return update_clusters(state, data, layout, view, rng)
    if block == "resid_var":
        return update_resid_var(state, data, layout, hypers, view, rng)
    raise ValueError(f"unknown block {block!r}")


def block_units(layout: ModelLayout, data: PairedDataset, block: str, view: str | None):
    """Sub-units a block is updated over (None when the block is one unit).

    For z the single-coordinate conditionals (the deflation path) are listed
    alongside the full-row update."""
    if block == "w" or block == "ard":
        return list(layout.free_columns(view))
    if block == "effects":
        return effect_names(data.n_levels_a, data.n_levels_b)
    if block == "z":
        return [None] + list(range(layout.k_z))
    return [None]


BLOCK_INSTANCES = (
    ("clusters", "x"),
    ("clusters", "y"),
    ("resid_var", "x"),
    ("resid_var", "y"),
    ("latents", "x"),
    ("latents", "y"),
    ("w", "x"),
    ("w", "y"),
    ("ard", "x"),
    ("ard", "y"),
    ("psi", "x"),
    ("psi", "y"),
    ("z", None),
    ("effects", None),
)


def random_instance(rng, k_shared: int = 1):
    """Small random (layout, hypers, state, data) tuple for oracle checks."""
    layout = ModelLayout(
        k_shared=k_shared,
        k_xspec=int(rng.integers(0, 3)),
        k_yspec=int(rng.integers(0, 3)),
        k_clusters_x=int(rng.integers(1, 4)),
        k_clusters_y=int(rng.integers(1, 4)),
    )
    n = int(rng.integers(3, 9))
    p_x = int(rng.integers(layout.k_clusters_x, layout.k_clusters_x + 5))
    p_y = int(rng.integers(layout.k_clusters_y, layout.k_clusters_y + 5))
    n_levels_a = int(rng.integers(1, 3))
    n_levels_b = int(rng.integers(1, 3))
    a = rng.integers(0, n_levels_a + 1, size=n)
    b = rng.integers(0, n_levels_b + 1, size=n)
    hypers = MODERATE_HYPERS
    state, data = sample_from_model(layout, hypers, a, b, p_x, p_y, rng)
    return layout, hypers, state, data


def check_block_identity(
    block: str,
    view: str | None,
    n_instances: int = 100,
    seed: int = 0,
    tol: float = 1e-8,
) -> float:
    """Max |conditional log-density difference - log_joint difference| over random
    instances; raises AssertionError when the identity fails beyond ``tol``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(n_instances):
        k_shared = 1 if trial % 3 else 2  # include deflated-layout shapes
        layout, hypers, state, data = random_instance(rng, k_shared=k_shared)
        units = block_units(layout, data, block, view)
        unit = units[int(rng.integers(0, len(units)))] if units else None
        if block == "w" and len(layout.free_columns(view)) == 0:
            continue
        before_joint = log_joint(state, data, layout, hypers)
        before_cond = block_conditional_logpdf(state, data, layout, hypers, block, view, unit)
        new_state = apply_block_update(state, data, layout, hypers, rng, block, view, unit)
        after_joint = log_joint(new_state, data, layout, hypers)
        after_cond = block_conditional_logpdf(new_state, data, layout, hypers, block, view, unit)
        diff = abs((after_cond - before_cond) - (after_joint - before_joint))
        worst = max(worst, diff)
        if not diff < tol:
            raise AssertionError(
                f"full-conditional identity failed for block {block}({view}), unit {unit}: "
                f"discrepancy {diff:.3e} at trial {trial}"
            )
    return worst


# ---------------------------------------------------------------------------
# Joint-distribution (two-simulator) comparison


def scalar_statistics(state: ModelState, data: PairedDataset, layout: ModelLayout) -> dict[str, float]:
    """Scalar test functions of (state, data) with finite variance under
    MODERATE_HYPERS; used to compare the two simulators."""
    free_x = layout.free_columns("x")
    stats = {
        "z_mean": float(state.z.mean()),
        "z_sq_mean": float((state.z**2).mean()),
        "alpha1_mean": float(state.effects["alpha_1"].mean()),
        "effects_sq_sum": float(sum((v**2).sum() for v in state.effects.values())),
        "w_x_free_mean": float(state.w_x[:, free_x].mean()),
        "w_x_free_sq_mean": float((state.w_x[:, free_x] ** 2).mean()),
        "psi_x_trace": float(np.trace(state.psi_x)),
        "psi_x_logdet": float(np.linalg.slogdet(state.psi_x)[1]),
        "psi_y_trace": float(np.trace(state.psi_y)),
        "log_resid_var_x_mean": float(np.log(state.resid_var_x).mean()),
        "log_resid_var_y_mean": float(np.log(state.resid_var_y).mean()),
        "log_ard_x_free_mean": float(np.log(state.ard_x[free_x]).mean()),
        "xlat_sq_mean": float((state.xlat**2).mean()),
        "clusters_x_frac0": float(np.mean(state.clusters_x == 0)),
        "x_mean": float(data.x.mean()),
        "x_sq_mean": float((data.x**2).mean()),
        "xy_cross": float(np.mean(data.x[:, 0] * data.y[:, 0])),
    }
    return stats


@dataclass(frozen=True)
class GewekeResult:
    names: tuple[str, ...]
    mean_marginal: np.ndarray
    mean_successive: np.ndarray
    z_scores: np.ndarray

    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z_scores)))


def geweke_compare(
    layout: ModelLayout,
    hypers: Hyperparameters,
    a,
    b,
    p_x: int,
    p_y: int,
    n_iter: int = 10_000,
    seed: int = 0,
) -> GewekeResult:
    """Run both simulators for ``n_iter`` draws each and z-compare every statistic.

    The successive-conditional path alternates a data draw given the state with
    one Gibbs sweep given the data; its standard errors are autocorrelation
    adjusted. Initialization is an exact prior draw (no scale clamping), so the
    chain is stationary from the first iterate.
    """
    a = np.asarray(a, dtype=int)
    b = np.asarray(b, dtype=int)
    seed_mc, seed_sc = np.random.SeedSequence(seed).spawn(2)
    rng_mc = np.random.default_rng(seed_mc)
    rng_sc = np.random.default_rng(seed_sc)

    rows_mc = []
    for _ in range(n_iter):
        state, data = sample_from_model(layout, hypers, a, b, p_x, p_y, rng_mc)
        rows_mc.append(scalar_statistics(state, data, layout))

    state = draw_state_from_prior(layout, hypers, a, b, p_x, p_y, rng_sc, scale_clamp=None)
    rows_sc = []
    for _ in range(n_iter):
        data = draw_dataset(state, a, b, rng_sc)
        state = gibbs_sweep(state, data, layout, hypers, rng_sc)
        rows_sc.append(scalar_statistics(state, data, layout))

    names = tuple(rows_mc[0].keys())
    mc = np.array([[r[k] for k in names] for r in rows_mc])
    sc = np.array([[r[k] for k in names] for r in rows_sc])

    z = np.zeros(len(names))
    for j in range(len(names)):
        se_mc = np.std(mc[:, j], ddof=1) / np.sqrt(n_iter)
        ess = effective_sample_size(sc[:, j])
        se_sc = np.std(sc[:, j], ddof=1) / np.sqrt(max(ess, 1.0))
        denom = np.sqrt(se_mc**2 + se_sc**2)
        z[j] = 0.0 if denom == 0 else (mc[:, j].mean() - sc[:, j].mean()) / denom
    return GewekeResult(
        names=names,
        mean_marginal=mc.mean(axis=0),
        mean_successive=sc.mean(axis=0),
        z_scores=z,
    )


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Adjusted Rand index between two partitions (order-independent)."""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    n = len(labels_a)
    cats_a, inv_a = np.unique(labels_a, return_inverse=True)
    cats_b, inv_b = np.unique(labels_b, return_inverse=True)
    table = np.zeros((len(cats_a), len(cats_b)), dtype=np.int64)
    np.add.at(table, (inv_a, inv_b), 1)

    def comb2(arr):
        return float(np.sum(arr * (arr - 1) / 2.0))

    sum_cells = comb2(table)
    sum_rows = comb2(table.sum(axis=1))
    sum_cols = comb2(table.sum(axis=0))
    total = n * (n - 1) / 2.0
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
