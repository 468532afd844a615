"""Gibbs sampler: block full-conditional updates, chain control, sign fixing, deflation.

Every update block is a pure function state -> state' drawing from the exact full
conditional of its block given everything else. The conditional parameters are
computed by dedicated ``*_conditional``/``*_posterior`` helpers that the validation
oracle evaluates as densities, so a derivation error in either the draw or the
density shows up against the joint log density.

Sweep order (fixed): clusters(x,y) -> resid_var(x,y) -> latents(x,y) -> w(x,y)
-> ard(x,y) -> psi(x,y) -> z -> effects.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve

from .distributions import (
    categorical_draw,
    invgamma_draw,
    invwishart_draw,
    mvn_draw_from_prec,
    scaled_inv_chi2_draw,
    spd_cholesky,
)
from .cluster_utils import average_linkage_partition, correlation_similarity
from .errors import InfeasibleDesignError, InputValidationError, NumericalError
from .model import (
    Hyperparameters,
    ModelLayout,
    ModelState,
    PairedDataset,
    VIEWS,
    draw_state_from_prior,
    effect_names,
    effect_sample_mask,
    sample_cell_means,
    replace_view,
    validate_state,
)


@dataclass(frozen=True)
class SamplerConfig:
    """Chain control.

    ``init`` modes: "warm_start" (data-driven moment matching, the default),
    "from_prior" (ancestral draw, variance draws clipped by init_scale_clamp),
    "supplied_state" (caller provides the starting state).
    """

    burn_in: int = 1000
    n_samples: int = 1000
    thin: int = 1
    seed: int = 0
    init: str = "warm_start"
    init_scale_clamp: tuple[float, float] | None = (1e-3, 1e3)

    def __post_init__(self):
        if self.burn_in < 0 or self.n_samples < 1 or self.thin < 1:
            raise InputValidationError("need burn_in >= 0, n_samples >= 1, thin >= 1")
        if self.init not in ("warm_start", "from_prior", "supplied_state"):
            raise InputValidationError(f"unknown init mode {self.init!r}")


@dataclass(frozen=True)
class PosteriorChain:
    """Ordered post-burn-in (thinned) states plus the settings that produced them."""

    states: tuple[ModelState, ...]
    config: SamplerConfig
    layout: ModelLayout
    sign_flips: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "sign_flips", np.asarray(self.sign_flips, dtype=int))

    def __len__(self) -> int:
        return len(self.states)

    def effect_draws(self, name: str) -> np.ndarray:
        """(n_states, k_z) matrix of one effect vector across the chain."""
        return np.array([s.effects[name] for s in self.states])

    def effect_names(self) -> list[str]:
        return sorted(self.states[0].effects.keys()) if self.states else []


# ---------------------------------------------------------------------------
# Full-conditional parameter helpers


def z_conditional(state: ModelState, a, b, layout: ModelLayout, dims=None):
    """Conditional of z[:, dims] given everything else.

    Returns (prec, means): the (d, d) conditional precision shared by all samples
    and the (n, d) per-sample conditional means. With dims=None the whole z rows
    are the block; a subset conditions on the remaining coordinates.
    """
    k_z = layout.k_z
    prec = np.eye(k_z)
    rhs = sample_cell_means(state.effects, a, b, k_z)
    for view in VIEWS:
        w = state.field("w", view)
        psi_chol = spd_cholesky(state.field("psi", view), f"psi_{view}")
        psi_inv_w = cho_solve((psi_chol, True), w, check_finite=False)
        prec = prec + w.T @ psi_inv_w
        rhs = rhs + state.lat(view) @ psi_inv_w
    if dims is None:
        chol = spd_cholesky(prec, "z conditional precision")
        means = cho_solve((chol, True), rhs.T, check_finite=False).T
        return prec, means
    dims = np.asarray(dims, dtype=int)
    other = np.setdiff1d(np.arange(k_z), dims)
    prec_dd = prec[np.ix_(dims, dims)]
    adj = rhs[:, dims] - state.z[:, other] @ prec[np.ix_(other, dims)]
    chol = spd_cholesky(prec_dd, "z conditional precision")
    means = cho_solve((chol, True), adj.T, check_finite=False).T
    return prec_dd, means


def update_z(state: ModelState, data: PairedDataset, layout: ModelLayout, rng, dims=None) -> ModelState:
    prec, means = z_conditional(state, data.a, data.b, layout, dims=dims)
    chol = spd_cholesky(prec, "z conditional precision")
    draws = mvn_draw_from_prec(rng, chol, means)
    if dims is None:
        return replace(state, z=draws)
    z = state.z.copy()
    z[:, np.asarray(dims, dtype=int)] = draws
    return replace(state, z=z)


def effect_conditional(state: ModelState, a, b, name: str, effect_prior_var: float, dims=None):
    """Conditional of one effect vector given z and the other effects.

    Coordinates are independent; returns (var, mean) with mean restricted to
    ``dims`` when given. Empty covariate groups fall back to the prior.
    """
    k_z = state.k_z
    mask = effect_sample_mask(name, np.asarray(a), np.asarray(b))
    n_grp = int(mask.sum())
    if n_grp == 0:
        var = effect_prior_var
        mean = np.zeros(k_z)
    else:
        means_all = sample_cell_means(state.effects, np.asarray(a)[mask], np.asarray(b)[mask], k_z)
        resid = state.z[mask] - (means_all - state.effects[name])
        var = 1.0 / (n_grp + 1.0 / effect_prior_var)
        mean = resid.sum(axis=0) * var
    if dims is not None:
        mean = mean[np.asarray(dims, dtype=int)]
    return var, mean


def update_effects(
    state: ModelState,
    data: PairedDataset,
    hypers: Hyperparameters,
    rng,
    names=None,
    dims=None,
) -> ModelState:
    """Sequential conjugate draws for each (selected) effect vector; baseline cells
    have no effect variables and stay exactly zero."""
    order = effect_names(data.n_levels_a, data.n_levels_b)
    if names is not None:
        wanted = set(names)
        order = [nm for nm in order if nm in wanted]
    effects = dict(state.effects)
    cur = replace(state, effects=effects)
    idx = np.arange(state.k_z) if dims is None else np.asarray(dims, dtype=int)
    for name in order:
        var, mean = effect_conditional(cur, data.a, data.b, name, hypers.effect_prior_var, dims=idx)
        vec = effects[name].copy()
        vec[idx] = mean + rng.standard_normal(len(idx)) * np.sqrt(var)
        effects[name] = vec
        cur = replace(cur, effects=effects)
    return cur


def latent_conditional(state: ModelState, data: PairedDataset, layout: ModelLayout, view: str):
    """Conditional of the view's factor scores given data, z and parameters.

    Returns (prec, means): shared (k, k) precision, per-sample (n, k) means.
    Clusters with no assigned variables get no likelihood term (prior-only).
    """
    k_cl = layout.k_clusters(view)
    obs = data.view(view)
    clusters = state.field("clusters", view)
    scales = state.field("scales", view)
    var = state.field("resid_var", view)
    one_hot = np.zeros((obs.shape[1], k_cl))
    one_hot[np.arange(obs.shape[1]), clusters] = 1.0

    d_diag = one_hot.T @ (scales**2 / var)
    h = ((obs - state.field("mu", view)) * (scales / var)) @ one_hot

    psi_chol = spd_cholesky(state.field("psi", view), f"psi_{view}")
    psi_inv = cho_solve((psi_chol, True), np.eye(k_cl), check_finite=False)
    prec = psi_inv + np.diag(d_diag)
    w = state.field("w", view)
    rhs = state.z @ (psi_inv @ w).T + h
    chol = spd_cholesky(prec, "factor-score conditional precision")
    means = cho_solve((chol, True), rhs.T, check_finite=False).T
    return prec, means


def update_latents_fa(state: ModelState, data: PairedDataset, layout: ModelLayout, view: str, rng) -> ModelState:
    prec, means = latent_conditional(state, data, layout, view)
    chol = spd_cholesky(prec, "factor-score conditional precision")
    draws = mvn_draw_from_prec(rng, chol, means)
    return replace(state, **{("xlat" if view == "x" else "ylat"): draws})


def w_column_conditional(state: ModelState, layout: ModelLayout, hypers: Hyperparameters, view: str, col: int):
    """Conditional of one free projection column given z, the factor scores,
    psi, the other columns, and its ARD variance. Returns (prec, mean)."""
    w = state.field("w", view)
    lat = state.lat(view)
    z_col = state.z[:, col]
    resid = lat - state.z @ w.T + np.outer(z_col, w[:, col])
    psi_chol = spd_cholesky(state.field("psi", view), f"psi_{view}")
    psi_inv = cho_solve((psi_chol, True), np.eye(w.shape[0]), check_finite=False)
    s_zz = float(z_col @ z_col)
    prec = s_zz * psi_inv + np.eye(w.shape[0]) / state.field("ard", view)[col]
    rhs = psi_inv @ (resid.T @ z_col)
    chol = spd_cholesky(prec, "w conditional precision")
    mean = cho_solve((chol, True), rhs, check_finite=False)
    return prec, mean


def update_w(
    state: ModelState, layout: ModelLayout, hypers: Hyperparameters, view: str, rng, columns=None
) -> ModelState:
    """Per-column conjugate draws over the view's free columns; masked columns stay zero."""
    free = layout.free_columns(view)
    if columns is not None:
        columns = np.asarray(columns, dtype=int)
        if not np.all(np.isin(columns, free)):
            raise InputValidationError(f"columns {columns} include masked columns for view {view}")
        free = columns
    cur = state
    for col in free:
        prec, mean = w_column_conditional(cur, layout, hypers, view, int(col))
        chol = spd_cholesky(prec, "w conditional precision")
        draw = mvn_draw_from_prec(rng, chol, mean)
        w = cur.field("w", view).copy()
        w[:, col] = draw
        cur = replace_view(cur, view, w=w)
    return cur


def ard_posterior(state: ModelState, hypers: Hyperparameters, view: str, col: int):
    """Inverse-gamma posterior (shape, scale) for one free column's ARD variance."""
    w_col = state.field("w", view)[:, col]
    shape = hypers.ard_shape + 0.5 * len(w_col)
    scale = hypers.ard_scale + 0.5 * float(w_col @ w_col)
    return shape, scale


def update_ard(
    state: ModelState, layout: ModelLayout, hypers: Hyperparameters, view: str, rng, columns=None
) -> ModelState:
    free = layout.free_columns(view) if columns is None else np.asarray(columns, dtype=int)
    ard = state.field("ard", view).copy()
    for col in free:
        shape, scale = ard_posterior(state, hypers, view, int(col))
        ard[col] = invgamma_draw(rng, shape, scale)
    return replace_view(state, view, ard=ard)


def psi_posterior(state: ModelState, layout: ModelLayout, hypers: Hyperparameters, view: str):
    """Inverse-Wishart posterior (scale, dof) from the factor-score residuals."""
    resid = state.lat(view) - state.z @ state.field("w", view).T
    scale = hypers.iw_scale(view, layout) + resid.T @ resid
    dof = hypers.iw_dof(view, layout) + resid.shape[0]
    return 0.5 * (scale + scale.T), dof


def update_psi(state: ModelState, layout: ModelLayout, hypers: Hyperparameters, view: str, rng) -> ModelState:
    scale, dof = psi_posterior(state, layout, hypers, view)
    return replace_view(state, view, psi=invwishart_draw(rng, scale, dof))


def cluster_log_probs(state: ModelState, data: PairedDataset, layout: ModelLayout, view: str):
    """Unnormalized (p, k) log probabilities of each variable's cluster assignment.

    The Dirichlet weight is collapsed: with one multinomial observation per
    variable the predictive is the (symmetric, hence uniform) normalized
    concentration, so only the Gaussian likelihood varies across clusters.
    """
    obs = data.view(view)
    lat = state.lat(view)
    scales = state.field("scales", view)
    var = state.field("resid_var", view)
    centered = obs - state.field("mu", view)

    col_sq = np.sum(centered**2, axis=0)
    cross = centered.T @ lat
    lat_sq = np.sum(lat**2, axis=0)
    quad = col_sq[:, None] - 2.0 * scales[:, None] * cross + (scales**2)[:, None] * lat_sq[None, :]
    log_lik = -0.5 * quad / var[:, None]
    n = obs.shape[0]
    log_lik = log_lik - 0.5 * n * np.log(2.0 * np.pi * var)[:, None]
    return log_lik - np.log(layout.k_clusters(view))


def update_clusters(state: ModelState, data: PairedDataset, layout: ModelLayout, view: str, rng) -> ModelState:
    log_probs = cluster_log_probs(state, data, layout, view)
    draws = categorical_draw(rng, log_probs)
    return replace_view(state, view, clusters=draws)


def resid_var_posterior(state: ModelState, data: PairedDataset, hypers: Hyperparameters, view: str):
    """Scaled-Inv-chi2 posterior (dof, scale_sq vector) for the view's residual variances."""
    v = state.field("clusters", view)
    resid = data.view(view) - state.field("mu", view) - state.field("scales", view) * state.lat(view)[:, v]
    ssr = np.sum(resid**2, axis=0)
    dof = hypers.resid_dof + data.n
    scale_sq = (hypers.resid_dof * hypers.resid_scale + ssr) / dof
    return dof, scale_sq


def update_resid_var(
    state: ModelState, data: PairedDataset, layout: ModelLayout, hypers: Hyperparameters, view: str, rng
) -> ModelState:
    dof, scale_sq = resid_var_posterior(state, data, hypers, view)
    draws = scaled_inv_chi2_draw(rng, dof, scale_sq)
    return replace_view(state, view, resid_var=draws)


# ---------------------------------------------------------------------------
# Sweeps and chains

def _check_finite(state: ModelState, block: str, view: str | None, sweep: int) -> None:
    if block == "latents":
        arr = state.lat(view)
    elif block == "z":
        arr = state.z
    elif block == "effects":
        arr = np.concatenate(list(state.effects.values())) if state.effects else np.zeros(0)
    else:
        arr = state.field(block, view)
    if not np.all(np.isfinite(arr)):
        label = block if view is None else f"{block}({view})"
        raise NumericalError(f"non-finite values in block {label} at sweep {sweep}")


def gibbs_sweep(
    state: ModelState, data: PairedDataset, layout: ModelLayout, hypers: Hyperparameters, rng, sweep: int = -1
) -> ModelState:
    """One full pass over all blocks in the documented order."""
    for view in VIEWS:
        state = update_clusters(state, data, layout, view, rng)
        _check_finite(state, "clusters", view, sweep)
    for view in VIEWS:
        state = update_resid_var(state, data, layout, hypers, view, rng)
        _check_finite(state, "resid_var", view, sweep)
    for view in VIEWS:
        state = update_latents_fa(state, data, layout, view, rng)
        _check_finite(state, "latents", view, sweep)
    for view in VIEWS:
        state = update_w(state, layout, hypers, view, rng)
        _check_finite(state, "w", view, sweep)
    for view in VIEWS:
        state = update_ard(state, layout, hypers, view, rng)
        _check_finite(state, "ard", view, sweep)
    for view in VIEWS:
        state = update_psi(state, layout, hypers, view, rng)
        _check_finite(state, "psi", view, sweep)
    state = update_z(state, data, layout, rng)
    _check_finite(state, "z", None, sweep)
    state = update_effects(state, data, hypers, rng)
    _check_finite(state, "effects", None, sweep)
    return state


def _fix_sign(vec: np.ndarray) -> np.ndarray:
    """Deterministic sign convention: the largest-magnitude entry is positive."""
    lead = vec[int(np.argmax(np.abs(vec)))]
    return -vec if lead < 0 else vec


def _standardized(scores: np.ndarray) -> np.ndarray:
    sd = float(scores.std())
    return scores / (sd if sd > 1e-12 else 1.0)


def warm_start_state(data: PairedDataset, layout: ModelLayout, hypers: Hyperparameters) -> ModelState:
    """Deterministic moment-matched starting point.

    Latent-variable models of this kind have well-separated labeling modes that
    plain Gibbs cannot cross, so the chain starts from a data-driven
    configuration: correlation clustering of variables, cluster means as factor
    scores, the leading cross-view covariance direction as the shared dimension
    and leading residual principal directions as view-specific dimensions.
    Expects control-standardized data (means 0, scales 1).
    """
    k_z = layout.k_z
    n = data.n
    lats = {}
    clusters = {}
    for view in VIEWS:
        mat = data.view(view)
        labels = average_linkage_partition(correlation_similarity(mat), layout.k_clusters(view))
        clusters[view] = labels
        one_hot = np.zeros((mat.shape[1], layout.k_clusters(view)))
        one_hot[np.arange(mat.shape[1]), labels] = 1.0
        lats[view] = mat @ (one_hot / one_hot.sum(axis=0))

    z = np.zeros((n, k_z))
    shared = [d for d in range(k_z) if layout.dim_kind(d) == "shared"]
    if shared:
        cross = lats["x"].T @ lats["y"] / n
        u_mat, _, vt_mat = np.linalg.svd(cross, full_matrices=False)
        for rank, dim in enumerate(shared[: min(len(shared), u_mat.shape[1])]):
            lead = u_mat[:, rank][int(np.argmax(np.abs(u_mat[:, rank])))]
            sgn = -1.0 if lead < 0 else 1.0  # u and v flip together
            u = u_mat[:, rank] * sgn
            v = vt_mat[rank] * sgn
            z[:, dim] = _standardized(0.5 * (_standardized(lats["x"] @ u) + _standardized(lats["y"] @ v)))

    for view in VIEWS:
        spec = [d for d in range(k_z) if layout.dim_kind(d) == f"{view}_specific"]
        if not spec:
            continue
        if shared:
            coef, *_ = np.linalg.lstsq(z[:, shared], lats[view], rcond=None)
            resid = lats[view] - z[:, shared] @ coef
        else:
            resid = lats[view]
        _, _, vt = np.linalg.svd(resid, full_matrices=False)
        for rank, dim in enumerate(spec[: min(len(spec), vt.shape[0])]):
            direction = _fix_sign(vt[rank])
            z[:, dim] = _standardized(resid @ direction)

    parts = {}
    for view in VIEWS:
        lat = lats[view]
        free = layout.free_columns(view)
        w = np.zeros((layout.k_clusters(view), k_z))
        coef, *_ = np.linalg.lstsq(z[:, free], lat, rcond=None)
        w[:, free] = coef.T
        resid_lat = lat - z @ w.T
        psi = resid_lat.T @ resid_lat / n + 1e-2 * np.eye(layout.k_clusters(view))
        obs_resid = data.view(view) - lat[:, clusters[view]]
        resid_var = np.maximum(obs_resid.var(axis=0), 1e-6)
        ard = np.ones(k_z)
        ard[free] = np.maximum((w[:, free] ** 2).mean(axis=0), 1e-3)
        p = data.view(view).shape[1]
        parts.update(
            {
                f"clusters_{view}": clusters[view],
                f"scales_{view}": np.ones(p),
                f"mu_{view}": np.zeros(p),
                f"resid_var_{view}": resid_var,
                f"w_{view}": w,
                f"ard_{view}": ard,
                f"psi_{view}": 0.5 * (psi + psi.T),
            }
        )

    effects = {name: np.zeros(k_z) for name in effect_names(data.n_levels_a, data.n_levels_b)}
    state = ModelState(effects=effects, z=z, xlat=lats["x"], ylat=lats["y"], **parts)
    validate_state(state, layout, n, data.p_x, data.p_y)
    return state


def check_layout_feasible(data: PairedDataset, layout: ModelLayout) -> None:
    if layout.k_shared != 1:
        raise InfeasibleDesignError(
            "a single run supports exactly one shared dimension; add more via deflate_add_component"
        )
    if layout.k_clusters_x > data.p_x or layout.k_clusters_y > data.p_y:
        raise InfeasibleDesignError("cannot have more clusters than variables")


def gibbs_run(
    data: PairedDataset,
    layout: ModelLayout,
    hypers: Hyperparameters,
    config: SamplerConfig,
    init_state: ModelState | None = None,
) -> PosteriorChain:
    """Run one chain; bit-reproducible given (seed, data, layout, hypers, config)."""
    check_layout_feasible(data, layout)
    if not (np.all(np.isfinite(data.x)) and np.all(np.isfinite(data.y))):
        raise InputValidationError("data contains non-finite values")
    rng = np.random.default_rng(config.seed)
    if config.init == "supplied_state":
        if init_state is None:
            raise InputValidationError("init='supplied_state' requires init_state")
        validate_state(init_state, layout, data.n, data.p_x, data.p_y)
        state = init_state
    elif config.init == "warm_start":
        state = warm_start_state(data, layout, hypers)
    else:
        state = draw_state_from_prior(
            layout, hypers, data.a, data.b, data.p_x, data.p_y, rng, scale_clamp=config.init_scale_clamp
        )

    states: list[ModelState] = []
    total = config.burn_in + config.n_samples * config.thin
    for sweep in range(total):
        state = gibbs_sweep(state, data, layout, hypers, rng, sweep)
        kept = sweep - config.burn_in + 1
        if kept > 0 and kept % config.thin == 0:
            states.append(state)
    return PosteriorChain(states=tuple(states), config=config, layout=layout, sign_flips=np.ones(layout.k_z, dtype=int))


# ---------------------------------------------------------------------------
# Sign fixing


def flip_state_dims(state: ModelState, flips) -> ModelState:
    """Apply per-latent-dimension sign flips jointly to z, both w matrices and all
    effect vectors; an exact symmetry of the joint density."""
    flips = np.asarray(flips, dtype=float)
    return replace(
        state,
        z=state.z * flips,
        w_x=state.w_x * flips,
        w_y=state.w_y * flips,
        effects={name: vec * flips for name, vec in state.effects.items()},
    )


def sign_fix(chain: PosteriorChain, anchor: str | None = None) -> PosteriorChain:
    """Resolve the per-dimension sign ambiguity across the chain.

    With ``anchor`` given, each dimension flips by the sign of that effect's
    posterior-mean coordinate. By default each dimension is anchored to the
    effect with the largest |posterior mean| on it, so every reported posterior
    is mirrored to a positive mean. Idempotent; log densities are unchanged.
    """
    if not chain.states:
        raise InputValidationError("cannot sign-fix an empty chain")
    names = chain.effect_names()
    means = {name: chain.effect_draws(name).mean(axis=0) for name in names}
    k_z = chain.layout.k_z
    flips = np.ones(k_z)
    for dim in range(k_z):
        if anchor is not None:
            if anchor not in means:
                raise InputValidationError(f"anchor effect {anchor!r} not present in the chain")
            ref = means[anchor][dim]
        else:
            ref = max((means[name][dim] for name in names), key=abs, default=1.0)
        if ref < 0:
            flips[dim] = -1.0
    if np.all(flips == 1.0):
        return chain
    states = tuple(flip_state_dims(s, flips) for s in chain.states)
    return PosteriorChain(
        states=states,
        config=chain.config,
        layout=chain.layout,
        sign_flips=chain.sign_flips * flips.astype(int),
    )


# ---------------------------------------------------------------------------
# Deflation: add one shared component to a converged chain


def _embed_state(state: ModelState, layout_old: ModelLayout, hypers: Hyperparameters, rng, clamp) -> ModelState:
    """Insert a fresh shared dimension (prior-initialized) after the existing shared dims."""
    pos = layout_old.k_shared
    def grow_cols(mat):
        return np.insert(mat, pos, 0.0, axis=1)

    ard_new = {}
    w_new = {}
    for view in VIEWS:
        ard = np.insert(state.field("ard", view), pos, 1.0)
        draw = invgamma_draw(rng, hypers.ard_shape, hypers.ard_scale)
        if clamp is not None:
            draw = float(np.clip(draw, *clamp))
        ard[pos] = draw
        ard_new[view] = ard
        w = grow_cols(state.field("w", view))
        w[:, pos] = rng.standard_normal(w.shape[0]) * np.sqrt(ard[pos])
        w_new[view] = w
    effects = {name: np.insert(vec, pos, rng.standard_normal() * np.sqrt(hypers.effect_prior_var))
               for name, vec in state.effects.items()}
    z = grow_cols(state.z)
    z[:, pos] = rng.standard_normal(z.shape[0])  # effect terms enter on the first mini-sweep
    return replace(
        state,
        z=z,
        w_x=w_new["x"],
        w_y=w_new["y"],
        ard_x=ard_new["x"],
        ard_y=ard_new["y"],
        effects=effects,
    )


def _align_new_component(states: list[ModelState], pos: int) -> list[ModelState]:
    """Flip each state's new component so its loading direction agrees with the
    pooled consensus; per-state exact symmetry, applied before chain-level sign_fix."""
    loadings = np.array([np.concatenate([s.w_x[:, pos], s.w_y[:, pos]]) for s in states])
    ref = loadings[0]
    for _ in range(2):
        signs = np.sign(loadings @ ref)
        signs[signs == 0] = 1.0
        ref = (loadings * signs[:, None]).mean(axis=0)
    signs = np.sign(loadings @ ref)
    signs[signs == 0] = 1.0
    out = []
    for s, sgn in zip(states, signs):
        if sgn > 0:
            out.append(s)
        else:
            flips = np.ones(s.k_z)
            flips[pos] = -1.0
            out.append(flip_state_dims(s, flips))
    return out


def deflate_add_component(
    chain: PosteriorChain,
    data: PairedDataset,
    layout_new: ModelLayout,
    hypers: Hyperparameters,
    config: SamplerConfig,
) -> PosteriorChain:
    """Estimate one additional shared component, holding everything already
    estimated fixed.

    Each stored state seeds a fresh short chain (burn_in + n_samples sweeps of
    the new component's blocks only: its w columns, their ARD scales, its z
    coordinate, its effect coordinates); the last state of each short chain is
    collected. New-component signs are aligned across the collected states.
    """
    old = chain.layout
    expected = replace(old, k_shared=old.k_shared + 1)
    if layout_new != expected:
        raise InputValidationError("layout_new must extend the chain layout by exactly one shared dimension")
    if not chain.states:
        raise InputValidationError("cannot deflate an empty chain")

    pos = old.k_shared
    sweeps = config.burn_in + config.n_samples
    root = np.random.SeedSequence(config.seed)
    seeds = root.spawn(len(chain.states))
    collected: list[ModelState] = []
    for seed, state in zip(seeds, chain.states):
        rng = np.random.default_rng(seed)
        cur = _embed_state(state, old, hypers, rng, config.init_scale_clamp)
        for _ in range(sweeps):
            for view in VIEWS:
                cur = update_w(cur, layout_new, hypers, view, rng, columns=[pos])
                cur = update_ard(cur, layout_new, hypers, view, rng, columns=[pos])
            cur = update_z(cur, data, layout_new, rng, dims=[pos])
            cur = update_effects(cur, data, hypers, rng, dims=[pos])
        if not np.all(np.isfinite(cur.z)):
            raise NumericalError("non-finite values during deflation")
        collected.append(cur)

    collected = _align_new_component(collected, pos)
    return PosteriorChain(
        states=tuple(collected),
        config=config,
        layout=layout_new,
        sign_flips=np.ones(layout_new.k_z, dtype=int),
    )


# ---------------------------------------------------------------------------
# Chain diagnostics


def autocovariance(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = len(x)
    dev = x - x.mean()
    m = 1
    while m < 2 * n:
        m <<= 1
    f = np.fft.rfft(dev, m)
    acov = np.fft.irfft(f * np.conj(f))[:n].real / n
    return acov


def effective_sample_size(x: np.ndarray) -> float:
    """Initial-positive-sequence estimator on paired autocovariances."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 4 or np.allclose(x, x[0]):
        return float(n)
    acov = autocovariance(x)
    rho = acov / acov[0]
    tau = 1.0
    for k in range(1, n // 2):
        pair = rho[2 * k - 1] + rho[2 * k] if 2 * k < n else rho[2 * k - 1]
        if pair < 0:
            break
        tau += 2.0 * pair
    return float(n / max(tau, 1.0 / n))


def geweke_zscore(x: np.ndarray, first: float = 0.1, last: float = 0.5) -> float:
    """Classic single-chain mean-stationarity z: early segment vs late segment."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    a = x[: max(int(first * n), 2)]
    b = x[-max(int(last * n), 2):]
    va = np.var(a, ddof=1) / effective_sample_size(a)
    vb = np.var(b, ddof=1) / effective_sample_size(b)
    denom = np.sqrt(va + vb)
    if denom == 0:
        return 0.0
    return float((a.mean() - b.mean()) / denom)


def diagnostics(chain: PosteriorChain) -> dict:
    """Effective sample sizes and Geweke z-scores for every effect coordinate."""
    out = {"ess": {}, "geweke_z": {}}
    for name in chain.effect_names():
        draws = chain.effect_draws(name)
        for dim in range(draws.shape[1]):
            key = f"{name}[{dim}]"
            out["ess"][key] = effective_sample_size(draws[:, dim])
            out["geweke_z"][key] = geweke_zscore(draws[:, dim])
    return out
