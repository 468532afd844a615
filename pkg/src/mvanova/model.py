"""Core model: domain types, ancestral sampling, joint log density, population marginals.

The generative hierarchy, per sample j with covariate cell (a, b):

    effects      alpha_a, beta_b, alphabeta_ab ~ N(0, effect_prior_var * I)  (a, b >= 1;
                 any index 0 is a structural zero: the control cell is the baseline)
    z_j          ~ N(alpha_a + beta_b + alphabeta_ab, I)        shared latent space (k_z dims)
    xlat_j       ~ N(w_x z_j, psi_x)                            per-view latent factor scores
    x_ji         ~ N(mu_x_i + scales_x_i * xlat_j[v_i], resid_var_x_i)   v_i = cluster of variable i

and analogously for y. Latent dimensions are ordered [shared | x-specific | y-specific];
w_x columns for y-specific dimensions are structurally zero, and vice versa.

Priors: free w columns N(0, ard_l I) with ard_l ~ IG(ard_shape, ard_scale); psi ~ IW(S0, nu0);
resid_var scaled-Inv-chi2(resid_dof, resid_scale); cluster assignments follow a symmetric
Dirichlet-multinomial with the Dirichlet weight integrated out (uniform over clusters).
mu and scales are fixed constants (0 and 1 after control standardization), not sampled.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import numpy as np

from .distributions import (
    invgamma_draw,
    invgamma_logpdf,
    invwishart_draw,
    invwishart_logpdf,
    mvn_logpdf_dev,
    normal_logpdf,
    scaled_inv_chi2_draw,
    scaled_inv_chi2_logpdf,
    spd_cholesky,
)
from .errors import InputValidationError, NumericalError

VIEWS = ("x", "y")


# ---------------------------------------------------------------------------
# Layout and masks


@dataclass(frozen=True)
class ModelLayout:
    """Latent-space partition and per-view cluster counts."""

    k_shared: int = 1
    k_xspec: int = 1
    k_yspec: int = 1
    k_clusters_x: int = 3
    k_clusters_y: int = 3

    def __post_init__(self):
        if min(self.k_shared, self.k_xspec, self.k_yspec) < 0:
            raise InputValidationError("latent dimension counts must be non-negative")
        if self.k_z < 1:
            raise InputValidationError("layout needs at least one latent dimension")
        if min(self.k_clusters_x, self.k_clusters_y) < 1:
            raise InputValidationError("cluster counts must be at least 1")

    @property
    def k_z(self) -> int:
        return self.k_shared + self.k_xspec + self.k_yspec

    def k_clusters(self, view: str) -> int:
        return self.k_clusters_x if view == "x" else self.k_clusters_y

    def dim_kind(self, dim: int) -> str:
        if dim < self.k_shared:
            return "shared"
        if dim < self.k_shared + self.k_xspec:
            return "x_specific"
        return "y_specific"

    def free_columns(self, view: str) -> np.ndarray:
        """Indices of projection columns that are unmasked for this view."""
        kinds = np.array([self.dim_kind(d) for d in range(self.k_z)])
        masked = "y_specific" if view == "x" else "x_specific"
        return np.flatnonzero(kinds != masked)

    def column_mask(self, view: str) -> np.ndarray:
        """Boolean (k_z,): True where the view's projection column is free."""
        mask = np.zeros(self.k_z, dtype=bool)
        mask[self.free_columns(view)] = True
        return mask


# ---------------------------------------------------------------------------
# Hyperparameters


@dataclass(frozen=True)
class Hyperparameters:
    """Prior parameters. None for the inverse-Wishart entries means 'derive from layout'
    (identity scale, dof = cluster count + 2)."""

    ard_shape: float = 1e-3
    ard_scale: float = 1e-3
    iw_scale_x: np.ndarray | None = None
    iw_scale_y: np.ndarray | None = None
    iw_dof_x: float | None = None
    iw_dof_y: float | None = None
    resid_dof: float = 1e-3
    resid_scale: float = 1.0
    dirichlet_conc: float = 1.0
    effect_prior_var: float = 1.0

    def __post_init__(self):
        for name in ("ard_shape", "ard_scale", "resid_dof", "resid_scale", "dirichlet_conc", "effect_prior_var"):
            if not getattr(self, name) > 0:
                raise InputValidationError(f"hyperparameter {name} must be strictly positive")

    def iw_scale(self, view: str, layout: ModelLayout) -> np.ndarray:
        given = self.iw_scale_x if view == "x" else self.iw_scale_y
        k = layout.k_clusters(view)
        if given is None:
            return np.eye(k)
        given = np.asarray(given, dtype=float)
        if given.shape != (k, k):
            raise InputValidationError(f"iw_scale_{view} must be {k}x{k}, got {given.shape}")
        return given

    def iw_dof(self, view: str, layout: ModelLayout) -> float:
        given = self.iw_dof_x if view == "x" else self.iw_dof_y
        k = layout.k_clusters(view)
        dof = float(k + 2) if given is None else float(given)
        if dof <= k - 1:
            raise InputValidationError(f"iw_dof_{view} must exceed {k - 1}, got {dof}")
        return dof


# ---------------------------------------------------------------------------
# Effects


_EFFECT_RE = re.compile(r"^(alpha_(\d+)|beta_(\d+)|alphabeta_(\d+)_(\d+))$")


def effect_names(n_levels_a: int, n_levels_b: int) -> list[str]:
    """Canonical ordering of the non-baseline effect names for an (A, B) design."""
    names = [f"alpha_{a}" for a in range(1, n_levels_a + 1)]
    names += [f"beta_{b}" for b in range(1, n_levels_b + 1)]
    names += [
        f"alphabeta_{a}_{b}"
        for a in range(1, n_levels_a + 1)
        for b in range(1, n_levels_b + 1)
    ]
    return names


def parse_effect_name(name: str) -> tuple[int, int]:
    """Return (a, b) indices; 0 marks 'not this covariate' (e.g. alpha_2 -> (2, 0))."""
    m = _EFFECT_RE.match(name)
    if m is None:
        raise InputValidationError(f"not an effect name: {name!r}")
    if m.group(2) is not None:
        return int(m.group(2)), 0
    if m.group(3) is not None:
        return 0, int(m.group(3))
    return int(m.group(4)), int(m.group(5))


def effect_sample_mask(name: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Boolean mask of the samples whose cell mean contains this effect term."""
    ia, ib = parse_effect_name(name)
    if ia and ib:
        return (a == ia) & (b == ib)
    if ia:
        return a == ia
    return b == ib


def cell_mean(effects: dict[str, np.ndarray], a: int, b: int, k_z: int) -> np.ndarray:
    """Latent prior mean for covariate cell (a, b); exact zeros for the control cell."""
    m = np.zeros(k_z)
    try:
        if a > 0:
            m = m + effects[f"alpha_{a}"]
        if b > 0:
            m = m + effects[f"beta_{b}"]
        if a > 0 and b > 0:
            m = m + effects[f"alphabeta_{a}_{b}"]
    except KeyError as exc:
        raise InputValidationError(f"no effect variables for covariate cell ({a}, {b})") from exc
    return m


def sample_cell_means(effects: dict[str, np.ndarray], a: np.ndarray, b: np.ndarray, k_z: int) -> np.ndarray:
    """(n, k_z) matrix of per-sample latent prior means."""
    out = np.zeros((len(a), k_z))
    for name, vec in effects.items():
        out[effect_sample_mask(name, a, b)] += vec
    return out


# ---------------------------------------------------------------------------
# Data and state


@dataclass(frozen=True)
class PairedDataset:
    """Two paired sample-by-variable matrices plus per-sample covariate labels."""

    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    b: np.ndarray
    variable_names_x: tuple[str, ...] = ()
    variable_names_y: tuple[str, ...] = ()
    sample_ids: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        a = np.asarray(self.a, dtype=int)
        b = np.asarray(self.b, dtype=int)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if x.ndim != 2 or y.ndim != 2:
            raise InputValidationError("x and y must be 2-d sample-by-variable matrices")
        if x.shape[0] != y.shape[0]:
            raise InputValidationError(
                f"paired views need identical sample counts, got {x.shape[0]} and {y.shape[0]}"
            )
        if a.shape != (x.shape[0],) or b.shape != (x.shape[0],):
            raise InputValidationError("covariate vectors must have one entry per sample")
        if a.min(initial=0) < 0 or b.min(initial=0) < 0:
            raise InputValidationError("covariate levels must be non-negative integers")
        if not self.variable_names_x:
            object.__setattr__(self, "variable_names_x", tuple(f"x{i}" for i in range(x.shape[1])))
        if not self.variable_names_y:
            object.__setattr__(self, "variable_names_y", tuple(f"y{i}" for i in range(y.shape[1])))
        if not self.sample_ids:
            object.__setattr__(self, "sample_ids", tuple(f"s{i}" for i in range(x.shape[0])))
        if len(self.variable_names_x) != x.shape[1] or len(self.variable_names_y) != y.shape[1]:
            raise InputValidationError("variable name counts must match matrix widths")
        if len(self.sample_ids) != x.shape[0]:
            raise InputValidationError("sample id count must match sample count")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p_x(self) -> int:
        return self.x.shape[1]

    @property
    def p_y(self) -> int:
        return self.y.shape[1]

    @property
    def n_levels_a(self) -> int:
        return int(self.a.max(initial=0))

    @property
    def n_levels_b(self) -> int:
        return int(self.b.max(initial=0))

    def view(self, view: str) -> np.ndarray:
        return self.x if view == "x" else self.y

    def cell_counts(self) -> dict[tuple[int, int], int]:
        counts: dict[tuple[int, int], int] = {}
        for ia in range(self.n_levels_a + 1):
            for ib in range(self.n_levels_b + 1):
                counts[(ia, ib)] = int(np.sum((self.a == ia) & (self.b == ib)))
        return counts


@dataclass(frozen=True)
class ModelState:
    """One joint configuration of every latent variable and parameter.

    Cluster labels are 0-based in memory (1-based in the JSON interchange format).
    Masked w entries are exact zeros; ard entries of masked columns are inert 1.0
    placeholders (those columns have no projection entries in that view, hence no
    scale parameter).
    """

    clusters_x: np.ndarray
    clusters_y: np.ndarray
    scales_x: np.ndarray
    scales_y: np.ndarray
    resid_var_x: np.ndarray
    resid_var_y: np.ndarray
    w_x: np.ndarray
    w_y: np.ndarray
    ard_x: np.ndarray
    ard_y: np.ndarray
    psi_x: np.ndarray
    psi_y: np.ndarray
    effects: dict[str, np.ndarray]
    z: np.ndarray
    xlat: np.ndarray
    ylat: np.ndarray
    mu_x: np.ndarray
    mu_y: np.ndarray

    def field(self, name: str, view: str) -> np.ndarray:
        return getattr(self, f"{name}_{view}")

    def lat(self, view: str) -> np.ndarray:
        return self.xlat if view == "x" else self.ylat

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def k_z(self) -> int:
        return self.z.shape[1]


def validate_state(state: ModelState, layout: ModelLayout, n: int, p_x: int, p_y: int) -> None:
    """Check shapes and structural invariants (masks, baseline zeros, symmetry)."""
    k_z = layout.k_z
    expected = {
        "clusters_x": (p_x,),
        "clusters_y": (p_y,),
        "scales_x": (p_x,),
        "scales_y": (p_y,),
        "resid_var_x": (p_x,),
        "resid_var_y": (p_y,),
        "w_x": (layout.k_clusters_x, k_z),
        "w_y": (layout.k_clusters_y, k_z),
        "ard_x": (k_z,),
        "ard_y": (k_z,),
        "psi_x": (layout.k_clusters_x, layout.k_clusters_x),
        "psi_y": (layout.k_clusters_y, layout.k_clusters_y),
        "z": (n, k_z),
        "xlat": (n, layout.k_clusters_x),
        "ylat": (n, layout.k_clusters_y),
        "mu_x": (p_x,),
        "mu_y": (p_y,),
    }
    for name, shape in expected.items():
        arr = getattr(state, name)
        if np.asarray(arr).shape != shape:
            raise InputValidationError(f"state.{name} has shape {np.asarray(arr).shape}, expected {shape}")
    for view in VIEWS:
        clusters = state.field("clusters", view)
        if clusters.min(initial=0) < 0 or clusters.max(initial=0) >= layout.k_clusters(view):
            raise InputValidationError(f"clusters_{view} entries out of range")
        w = state.field("w", view)
        masked = ~layout.column_mask(view)
        if np.any(w[:, masked] != 0.0):
            raise InputValidationError(f"masked w_{view} columns must be exactly zero")
        if np.any(state.field("resid_var", view) < 0):
            raise InputValidationError(f"resid_var_{view} must be non-negative")
        psi = state.field("psi", view)
        if not np.allclose(psi, psi.T):
            raise InputValidationError(f"psi_{view} must be symmetric")
    for name, vec in state.effects.items():
        parse_effect_name(name)
        if np.asarray(vec).shape != (k_z,):
            raise InputValidationError(f"effect {name} has wrong length")


def _as_effect_dict(effects, n_levels_a: int, n_levels_b: int, k_z: int) -> dict[str, np.ndarray]:
    out = {}
    for name in effect_names(n_levels_a, n_levels_b):
        vec = np.zeros(k_z) if effects is None or name not in effects else np.asarray(effects[name], dtype=float)
        if vec.shape != (k_z,):
            raise InputValidationError(f"effect {name} must have length {k_z}")
        out[name] = vec
    if effects is not None:
        unknown = set(effects) - set(out)
        if unknown:
            raise InputValidationError(f"effect names outside the design: {sorted(unknown)}")
    return out


# ---------------------------------------------------------------------------
# Ancestral sampling


def _clamp(arr: np.ndarray, bounds) -> np.ndarray:
    if bounds is None:
        return arr
    lo, hi = bounds
    return np.clip(arr, lo, hi)


def draw_state_from_prior(
    layout: ModelLayout,
    hypers: Hyperparameters,
    a,
    b,
    p_x: int,
    p_y: int,
    rng: np.random.Generator,
    fixed: dict | None = None,
    scale_clamp: tuple[float, float] | None = None,
) -> ModelState:
    """Ancestral draw of a full state (no data), honoring any ``fixed`` components.

    ``fixed`` maps ModelState field names to values; fixed components are used
    as-is and their prior draw is skipped. ``scale_clamp`` optionally clips
    variance-type draws (ard, resid_var) into a numeric range; pass None for
    exact prior draws.
    """
    a = np.asarray(a, dtype=int)
    b = np.asarray(b, dtype=int)
    n = len(a)
    fixed = dict(fixed or {})
    k_z = layout.k_z

    def take(name, draw_fn, shape):
        if name in fixed:
            val = np.asarray(fixed.pop(name), dtype=float if name not in ("clusters_x", "clusters_y") else int)
            if val.shape != shape:
                raise InputValidationError(f"fixed {name} has shape {val.shape}, expected {shape}")
            return val
        return draw_fn()

    parts: dict[str, np.ndarray] = {}
    for view, p in (("x", p_x), ("y", p_y)):
        k_cl = layout.k_clusters(view)
        # collapsed symmetric Dirichlet-multinomial predictive: uniform over clusters
        parts[f"clusters_{view}"] = take(
            f"clusters_{view}", lambda k_cl=k_cl, p=p: rng.integers(0, k_cl, size=p), (p,)
        )
        parts[f"scales_{view}"] = take(f"scales_{view}", lambda p=p: np.ones(p), (p,))
        parts[f"mu_{view}"] = take(f"mu_{view}", lambda p=p: np.zeros(p), (p,))
        parts[f"resid_var_{view}"] = take(
            f"resid_var_{view}",
            lambda p=p: _clamp(scaled_inv_chi2_draw(rng, hypers.resid_dof, hypers.resid_scale, size=p), scale_clamp),
            (p,),
        )
        free = layout.column_mask(view)
        if f"ard_{view}" in fixed:
            ard = take(f"ard_{view}", None, (k_z,))
        else:
            ard = np.ones(k_z)
            ard[free] = _clamp(
                invgamma_draw(rng, hypers.ard_shape, hypers.ard_scale, size=int(free.sum())), scale_clamp
            )
        parts[f"ard_{view}"] = ard
        if f"w_{view}" in fixed:
            w = take(f"w_{view}", None, (k_cl, k_z))
        else:
            w = np.zeros((k_cl, k_z))
            w[:, free] = rng.standard_normal((k_cl, int(free.sum()))) * np.sqrt(ard[free])
        parts[f"w_{view}"] = w
        parts[f"psi_{view}"] = take(
            f"psi_{view}",
            lambda view=view: invwishart_draw(rng, hypers.iw_scale(view, layout), hypers.iw_dof(view, layout)),
            (k_cl, k_cl),
        )

    n_levels_a, n_levels_b = int(a.max(initial=0)), int(b.max(initial=0))
    if "effects" in fixed:
        effects = _as_effect_dict(fixed.pop("effects"), n_levels_a, n_levels_b, k_z)
    else:
        sd = np.sqrt(hypers.effect_prior_var)
        effects = {name: rng.standard_normal(k_z) * sd for name in effect_names(n_levels_a, n_levels_b)}

    means = sample_cell_means(effects, a, b, k_z)
    parts["z"] = take("z", lambda: means + rng.standard_normal((n, k_z)), (n, k_z))

    for view, latname in (("x", "xlat"), ("y", "ylat")):
        psi = parts[f"psi_{view}"]
        w = parts[f"w_{view}"]
        prior_mean = parts["z"] @ w.T
        k_cl = layout.k_clusters(view)

        def draw_lat(prior_mean=prior_mean, psi=psi, k_cl=k_cl):
            if not np.any(psi):
                return prior_mean.copy()
            chol = spd_cholesky(psi, f"psi_{view}")
            return prior_mean + rng.standard_normal((n, k_cl)) @ chol.T

        parts[latname] = take(latname, draw_lat, (n, k_cl))

    if fixed:
        raise InputValidationError(f"unknown fixed component(s): {sorted(fixed)}")

    state = ModelState(effects=effects, **parts)
    validate_state(state, layout, n, p_x, p_y)
    return state


def draw_dataset(
    state: ModelState,
    a,
    b,
    rng: np.random.Generator,
    variable_names_x=(),
    variable_names_y=(),
) -> PairedDataset:
    """Draw observed data given a full state (the bottom level of the hierarchy)."""
    mats = {}
    for view in VIEWS:
        lat = state.lat(view)
        v = state.field("clusters", view)
        mean = state.field("mu", view) + state.field("scales", view) * lat[:, v]
        sd = np.sqrt(state.field("resid_var", view))
        mats[view] = mean + rng.standard_normal(mean.shape) * sd
    return PairedDataset(
        x=mats["x"], y=mats["y"], a=a, b=b,
        variable_names_x=tuple(variable_names_x), variable_names_y=tuple(variable_names_y),
    )


def sample_from_model(
    layout: ModelLayout,
    hypers: Hyperparameters,
    a,
    b,
    p_x: int,
    p_y: int,
    rng_seed,
    fixed: dict | None = None,
) -> tuple[ModelState, PairedDataset]:
    """Ancestral draw of (state, dataset) for the given covariate design.

    ``rng_seed`` may be an int, SeedSequence, or Generator. ``fixed`` pins any
    subset of state components (by field name) instead of drawing them.
    """
    rng = np.random.default_rng(rng_seed)
    state = draw_state_from_prior(layout, hypers, a, b, p_x, p_y, rng, fixed=fixed, scale_clamp=None)
    data = draw_dataset(state, a, b, rng)
    return state, data


# ---------------------------------------------------------------------------
# Joint log density


def data_loglik(state: ModelState, data: PairedDataset, view: str) -> float:
    """Gaussian observation log likelihood of one view."""
    var = state.field("resid_var", view)
    if np.any(var <= 0):
        raise NumericalError(f"resid_var_{view} must be strictly positive for density evaluation")
    v = state.field("clusters", view)
    mean = state.field("mu", view) + state.field("scales", view) * state.lat(view)[:, v]
    return float(np.sum(normal_logpdf(data.view(view), mean, var)))


def log_joint(state: ModelState, data: PairedDataset, layout: ModelLayout, hypers: Hyperparameters) -> float:
    """Sum of every log prior and log likelihood term of the hierarchy."""
    validate_state(state, layout, data.n, data.p_x, data.p_y)
    total = 0.0

    # effects prior
    for vec in state.effects.values():
        total += float(np.sum(normal_logpdf(vec, 0.0, hypers.effect_prior_var)))

    # latent prior around the cell means
    means = sample_cell_means(state.effects, data.a, data.b, layout.k_z)
    total += float(np.sum(normal_logpdf(state.z, means, 1.0)))

    for view in VIEWS:
        w = state.field("w", view)
        psi = state.field("psi", view)
        chol = spd_cholesky(psi, f"psi_{view}")

        # factor scores around their projection of z
        dev = state.lat(view) - state.z @ w.T
        total += float(np.sum(mvn_logpdf_dev(dev, chol)))

        # observations
        total += data_loglik(state, data, view)

        # projection columns and their ARD scales (free columns only)
        ard = state.field("ard", view)
        free = layout.free_columns(view)
        if np.any(ard[free] <= 0):
            raise NumericalError(f"ard_{view} must be strictly positive")
        total += float(np.sum(normal_logpdf(w[:, free], 0.0, ard[free][None, :])))
        total += float(np.sum(invgamma_logpdf(ard[free], hypers.ard_shape, hypers.ard_scale)))

        # covariance and residual-variance priors
        total += float(invwishart_logpdf(psi, hypers.iw_scale(view, layout), hypers.iw_dof(view, layout)))
        total += float(
            np.sum(scaled_inv_chi2_logpdf(state.field("resid_var", view), hypers.resid_dof, hypers.resid_scale))
        )

        # collapsed Dirichlet-multinomial assignment prior (uniform under a symmetric weight)
        p = len(state.field("clusters", view))
        total += -p * np.log(layout.k_clusters(view))

    if not np.isfinite(total):
        raise NumericalError("log_joint is not finite")
    return total


# ---------------------------------------------------------------------------
# Population marginals


@dataclass(frozen=True)
class PopulationMarginal:
    """Exact Gaussian marginal of (x, y) for one covariate cell, latents integrated out."""

    mean_x: np.ndarray
    mean_y: np.ndarray
    cov_xx: np.ndarray
    cov_yy: np.ndarray
    cov_xy: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        return np.concatenate([self.mean_x, self.mean_y])

    @property
    def cov(self) -> np.ndarray:
        return np.block([[self.cov_xx, self.cov_xy], [self.cov_xy.T, self.cov_yy]])


def cluster_matrix(clusters: np.ndarray, scales: np.ndarray, k_clusters: int) -> np.ndarray:
    """Dense (p, k) assignment/loading matrix with one nonzero per row."""
    p = len(clusters)
    v = np.zeros((p, k_clusters))
    v[np.arange(p), clusters] = scales
    return v


def population_marginal(state: ModelState, layout: ModelLayout, population: tuple[int, int]) -> PopulationMarginal:
    """Mean and covariance of (x, y) for covariate cell ``population``, integrating
    z and the factor scores analytically."""
    ia, ib = population
    m = cell_mean(state.effects, ia, ib, layout.k_z)

    pieces = {}
    for view in VIEWS:
        v = cluster_matrix(state.field("clusters", view), state.field("scales", view), layout.k_clusters(view))
        w = state.field("w", view)
        mean = state.field("mu", view) + v @ (w @ m)
        lat_cov = w @ w.T + state.field("psi", view)
        cov = v @ lat_cov @ v.T + np.diag(state.field("resid_var", view))
        pieces[view] = (v, w, mean, 0.5 * (cov + cov.T))

    v_x, w_x, mean_x, cov_xx = pieces["x"]
    v_y, w_y, mean_y, cov_yy = pieces["y"]
    cov_xy = v_x @ (w_x @ w_y.T) @ v_y.T
    return PopulationMarginal(mean_x=mean_x, mean_y=mean_y, cov_xx=cov_xx, cov_yy=cov_yy, cov_xy=cov_xy)


# ---------------------------------------------------------------------------
# JSON interchange for states


def state_to_dict(state: ModelState) -> dict:
    """JSON-ready dict; cluster labels are 1-based in this format."""
    out = {}
    for view in VIEWS:
        out[f"clusters_{view}"] = (state.field("clusters", view) + 1).tolist()
        for name in ("scales", "resid_var", "ard", "mu"):
            out[f"{name}_{view}"] = state.field(name, view).tolist()
        for name in ("w", "psi"):
            out[f"{name}_{view}"] = state.field(name, view).tolist()
    out["effects"] = {name: vec.tolist() for name, vec in sorted(state.effects.items())}
    out["z"] = state.z.tolist()
    out["xlat"] = state.xlat.tolist()
    out["ylat"] = state.ylat.tolist()
    return out


def state_from_dict(d: dict) -> ModelState:
    kwargs = {}
    for view in VIEWS:
        kwargs[f"clusters_{view}"] = np.asarray(d[f"clusters_{view}"], dtype=int) - 1
        for name in ("scales", "resid_var", "ard", "mu", "w", "psi"):
            kwargs[f"{name}_{view}"] = np.asarray(d[f"{name}_{view}"], dtype=float)
    effects = {name: np.asarray(vec, dtype=float) for name, vec in d["effects"].items()}
    return ModelState(
        effects=effects,
        z=np.asarray(d["z"], dtype=float),
        xlat=np.asarray(d["xlat"], dtype=float),
        ylat=np.asarray(d["ylat"], dtype=float),
        **kwargs,
    )


def replace_view(state: ModelState, view: str, **updates) -> ModelState:
    """dataclasses.replace with per-view field name suffixing."""
    return replace(state, **{f"{name}_{view}": val for name, val in updates.items()})
