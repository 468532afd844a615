"""Model-complexity selection by cross-validated predictive likelihood.

For every candidate cluster-count pair the model is fit on the training folds and
each held-out sample is scored under the exact Gaussian marginal of its covariate
cell (latents integrated analytically), averaged over posterior states before
taking the log (a posterior-predictive density, not a plug-in). Folds are
stratified by covariate cell so every training set retains every population.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from .distributions import mvn_logpdf_dev, spd_cholesky
from .errors import InfeasibleDesignError, InputValidationError
from .model import (
    Hyperparameters,
    ModelLayout,
    PairedDataset,
    population_marginal,
)
from .sampler import PosteriorChain, SamplerConfig, gibbs_run


@dataclass(frozen=True)
class SelectionGrid:
    cluster_counts_x: tuple[int, ...] = (2, 3, 4, 5)
    cluster_counts_y: tuple[int, ...] = (2, 3, 4, 5)
    folds: int = 10
    sampler: SamplerConfig = field(default_factory=lambda: SamplerConfig(burn_in=200, n_samples=100, thin=2))

    def __post_init__(self):
        object.__setattr__(self, "cluster_counts_x", tuple(int(k) for k in self.cluster_counts_x))
        object.__setattr__(self, "cluster_counts_y", tuple(int(k) for k in self.cluster_counts_y))
        if min(self.cluster_counts_x + self.cluster_counts_y, default=1) < 1:
            raise InputValidationError("cluster counts must be at least 1")
        if self.folds < 2:
            raise InputValidationError("need at least 2 folds")

    def configs(self) -> list[tuple[int, int]]:
        return [(kx, ky) for kx in self.cluster_counts_x for ky in self.cluster_counts_y]


def subset_dataset(data: PairedDataset, idx: np.ndarray) -> PairedDataset:
    return PairedDataset(
        x=data.x[idx],
        y=data.y[idx],
        a=data.a[idx],
        b=data.b[idx],
        variable_names_x=data.variable_names_x,
        variable_names_y=data.variable_names_y,
        sample_ids=tuple(np.asarray(data.sample_ids)[idx]),
    )


def stratified_folds(a, b, folds: int, seed: int = 0) -> np.ndarray:
    """Fold id per sample; a partition stratified by covariate cell.

    Every cell must keep at least one training sample in every fold, which
    round-robin dealing guarantees when each cell holds >= 2 samples.
    """
    a = np.asarray(a, dtype=int)
    b = np.asarray(b, dtype=int)
    n = len(a)
    if folds > n:
        raise InfeasibleDesignError(f"cannot build {folds} folds from {n} samples")
    rng = np.random.default_rng(seed)
    fold_id = np.full(n, -1, dtype=int)
    cells = sorted({(int(ia), int(ib)) for ia, ib in zip(a, b)})
    for rank, (ia, ib) in enumerate(cells):
        idx = np.flatnonzero((a == ia) & (b == ib))
        if len(idx) < 2:
            raise InfeasibleDesignError(
                f"covariate cell (a={ia}, b={ib}) has {len(idx)} sample(s); "
                f"needs >= 2 for cross-validation"
            )
        idx = rng.permutation(idx)
        # rotate the starting fold per cell so small cells do not pile onto fold 0
        fold_id[idx] = (np.arange(len(idx)) + rank) % folds
    return fold_id


def heldout_log_densities(
    chain: PosteriorChain, heldout: PairedDataset
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Posterior-predictive log density per held-out sample: joint, x-only, y-only.

    log p(v) = log mean_s N(v | marginal_s(cell(v))) with the covariance shared
    across cells within a state (effects move only the mean)."""
    n_states = len(chain.states)
    m = heldout.n
    cells = sorted({(int(ia), int(ib)) for ia, ib in zip(heldout.a, heldout.b)})
    lp = {key: np.empty((n_states, m)) for key in ("joint", "x", "y")}
    p_x = heldout.p_x
    for s_idx, state in enumerate(chain.states):
        base = population_marginal(state, chain.layout, cells[0])
        chol = {
            "joint": spd_cholesky(base.cov, "held-out joint covariance"),
            "x": spd_cholesky(base.cov_xx, "held-out x covariance"),
            "y": spd_cholesky(base.cov_yy, "held-out y covariance"),
        }
        for cell in cells:
            rows = np.flatnonzero((heldout.a == cell[0]) & (heldout.b == cell[1]))
            marg = population_marginal(state, chain.layout, cell)
            dev_joint = np.hstack([heldout.x[rows], heldout.y[rows]]) - marg.mean
            lp["joint"][s_idx, rows] = mvn_logpdf_dev(dev_joint, chol["joint"])
            lp["x"][s_idx, rows] = mvn_logpdf_dev(dev_joint[:, :p_x], chol["x"])
            lp["y"][s_idx, rows] = mvn_logpdf_dev(dev_joint[:, p_x:], chol["y"])
    out = tuple(logsumexp(lp[key], axis=0) - np.log(n_states) for key in ("joint", "x", "y"))
    return out


@dataclass(frozen=True)
class SelectionResult:
    table: pd.DataFrame
    chosen: tuple[int, int]
    scores: dict[tuple[int, int], float]


def cv_select(
    data: PairedDataset,
    grid: SelectionGrid,
    hypers: Hyperparameters,
    layout_template: ModelLayout,
    seed: int = 0,
) -> SelectionResult:
    """Score every grid point by 10-fold (by default) cross-validated predictive
    likelihood and pick the argmax; ties break toward fewer clusters."""
    fold_id = stratified_folds(data.a, data.b, grid.folds, seed=seed)
    root = np.random.SeedSequence(seed)
    configs = grid.configs()
    # one seed per fold, shared across grid points: common random numbers make
    # the between-config score differences far less noisy
    fold_seeds = [int(s.generate_state(1)[0]) for s in root.spawn(grid.folds)]

    rows = []
    totals: dict[tuple[int, int], float] = {}
    for kx, ky in configs:
        layout = replace(layout_template, k_clusters_x=kx, k_clusters_y=ky)
        total = 0.0
        for fold in range(grid.folds):
            train = subset_dataset(data, np.flatnonzero(fold_id != fold))
            held = subset_dataset(data, np.flatnonzero(fold_id == fold))
            chain = gibbs_run(train, layout, hypers, replace(grid.sampler, seed=fold_seeds[fold]))
            lp_joint, lp_x, lp_y = heldout_log_densities(chain, held)
            total += float(lp_joint.sum())
            rows.append(
                {
                    "k_clusters_x": kx,
                    "k_clusters_y": ky,
                    "fold": fold,
                    "n_heldout": held.n,
                    "heldout_loglik": float(lp_joint.mean()),
                    "heldout_loglik_x": float(lp_x.mean()),
                    "heldout_loglik_y": float(lp_y.mean()),
                }
            )
        totals[(kx, ky)] = total / data.n

    chosen = min(totals, key=lambda cfg: (-totals[cfg], cfg[0] + cfg[1], cfg[0], cfg[1]))
    return SelectionResult(table=pd.DataFrame(rows), chosen=chosen, scores=totals)
