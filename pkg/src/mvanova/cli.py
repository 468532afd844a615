"""Command-line pipeline: preprocess -> select -> fit -> report, plus synth.

Exit codes: 0 success, 2 input validation, 3 numerical failure, 4 infeasible
design. Every output is deterministic given the seed and inputs; reports carry
no timestamps so reruns are byte-identical.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import io
from .errors import InfeasibleDesignError, InputValidationError, MvanovaError
from .experiments import SyntheticSpec, generate
from .model import Hyperparameters, ModelLayout, state_to_dict
from .preprocess import center_scale_by_control
from .reporting import build_effect_report
from .sampler import SamplerConfig, gibbs_run, sign_fix
from .selection import SelectionGrid, cv_select

DEFAULT_CONFIG = {
    "seed": 0,
    "burn_in": 1000,
    "samples": 1000,
    "thin": 1,
    "init": "warm_start",
    "anchor": None,
    "k_shared": 1,
    "k_xspec": 1,
    "k_yspec": 1,
    "clusters_x": 3,
    "clusters_y": 3,
    "ard_shape": 1e-3,
    "ard_scale": 1e-3,
    "iw_dof_x": None,
    "iw_dof_y": None,
    "resid_dof": 1e-3,
    "resid_scale": 1.0,
    "dirichlet_conc": 1.0,
    "effect_prior_var": 1.0,
    "grid_clusters_x": [2, 3, 4, 5],
    "grid_clusters_y": [2, 3, 4, 5],
    "folds": 10,
    "select_burn_in": 200,
    "select_samples": 100,
    "select_thin": 2,
    "dominance_frac": 0.5,
    "membership_threshold": 0.5,
    "synth_n_per_cell": 10,
    "synth_p_x": 200,
    "synth_p_y": 200,
    "synth_noise_sd": 1.0,
    "synth_psi_scale": 1.0,
    "synth_effects": None,
    "synth_seed": 20,
}


def load_config(path: str | None, **overrides) -> dict:
    cfg = dict(DEFAULT_CONFIG)
    if path is not None:
        user = io.load_json(path)
        unknown = set(user) - set(cfg)
        if unknown:
            raise InputValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(user)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def layout_from_config(cfg: dict) -> ModelLayout:
    return ModelLayout(
        k_shared=int(cfg["k_shared"]),
        k_xspec=int(cfg["k_xspec"]),
        k_yspec=int(cfg["k_yspec"]),
        k_clusters_x=int(cfg["clusters_x"]),
        k_clusters_y=int(cfg["clusters_y"]),
    )


def hypers_from_config(cfg: dict) -> Hyperparameters:
    return Hyperparameters(
        ard_shape=float(cfg["ard_shape"]),
        ard_scale=float(cfg["ard_scale"]),
        iw_dof_x=None if cfg["iw_dof_x"] is None else float(cfg["iw_dof_x"]),
        iw_dof_y=None if cfg["iw_dof_y"] is None else float(cfg["iw_dof_y"]),
        resid_dof=float(cfg["resid_dof"]),
        resid_scale=float(cfg["resid_scale"]),
        dirichlet_conc=float(cfg["dirichlet_conc"]),
        effect_prior_var=float(cfg["effect_prior_var"]),
    )


def sampler_from_config(cfg: dict) -> SamplerConfig:
    return SamplerConfig(
        burn_in=int(cfg["burn_in"]),
        n_samples=int(cfg["samples"]),
        thin=int(cfg["thin"]),
        seed=int(cfg["seed"]),
        init=str(cfg["init"]),
    )


def validate_design_for_fit(data) -> None:
    if data.n_levels_a < 1 or data.n_levels_b < 1:
        raise InfeasibleDesignError(
            "covariate cell empty: each covariate needs at least levels 0 and 1 "
            f"(observed max a={data.n_levels_a}, max b={data.n_levels_b})"
        )
    for cell, count in data.cell_counts().items():
        if count == 0:
            raise InfeasibleDesignError(f"covariate cell empty: no samples with (a, b) = {cell}")


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MvanovaError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(getattr(exc, "exit_code", 1))
        except FileNotFoundError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _print_config(ctx, param, value):
    if not value or ctx.resilient_parsing:
        return
    click.echo(json.dumps(DEFAULT_CONFIG, indent=2, sort_keys=True))
    ctx.exit(0)


data_options = [
    click.option("--x", "x_path", required=True, type=click.Path(), help="x-view CSV (samples x variables)"),
    click.option("--y", "y_path", required=True, type=click.Path(), help="y-view CSV (samples x variables)"),
    click.option("--covariates", "cov_path", required=True, type=click.Path(), help="covariate CSV (sample_id, a, b)"),
]


def add_options(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return deco


@click.group()
@click.option(
    "--print-config",
    is_flag=True,
    callback=_print_config,
    expose_value=False,
    is_eager=True,
    help="Print the full default configuration as JSON and exit.",
)
def main():
    """Multi-way covariate effects in paired multi-view data."""


@main.command()
@add_options(data_options)
@click.option("--out", "out_dir", required=True, type=click.Path(), help="output directory")
@guarded
def preprocess(x_path, y_path, cov_path, out_dir):
    """Standardize every variable against the control population (a=0, b=0)."""
    raw = io.read_dataset(x_path, y_path, cov_path)
    transformed, report = center_scale_by_control(raw)
    paths = io.write_dataset(transformed, out_dir)
    io.dump_json(report.to_dict(), Path(out_dir) / "preprocess_report.json")
    click.echo(
        f"standardized {transformed.p_x}+{transformed.p_y} variables against "
        f"{report.n_control} control samples; dropped {len(report.dropped_variables)}"
    )
    for path in paths.values():
        click.echo(path)


@main.command()
@add_options(data_options)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--grid", default=None, help="comma-separated cluster counts for both views, e.g. 2,3,4,5")
@click.option("--seed", type=int, default=None)
@guarded
def select(x_path, y_path, cov_path, out_dir, config_path, grid, seed):
    """Choose per-view cluster counts by cross-validated predictive likelihood."""
    cfg = load_config(config_path, seed=seed)
    if grid is not None:
        counts = [int(tok) for tok in grid.split(",") if tok.strip()]
        cfg["grid_clusters_x"] = counts
        cfg["grid_clusters_y"] = counts
    data = io.read_dataset(x_path, y_path, cov_path)
    validate_design_for_fit(data)
    sel_grid = SelectionGrid(
        cluster_counts_x=tuple(cfg["grid_clusters_x"]),
        cluster_counts_y=tuple(cfg["grid_clusters_y"]),
        folds=int(cfg["folds"]),
        sampler=SamplerConfig(
            burn_in=int(cfg["select_burn_in"]),
            n_samples=int(cfg["select_samples"]),
            thin=int(cfg["select_thin"]),
            init=str(cfg["init"]),
        ),
    )
    result = cv_select(data, sel_grid, hypers_from_config(cfg), layout_from_config(cfg), seed=int(cfg["seed"]))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.table.to_csv(out / "score_table.csv", index=False)
    io.dump_json(
        {
            "chosen": {"k_clusters_x": result.chosen[0], "k_clusters_y": result.chosen[1]},
            "scores": {f"{kx},{ky}": score for (kx, ky), score in sorted(result.scores.items())},
            "folds": sel_grid.folds,
            "seed": int(cfg["seed"]),
        },
        out / "selection.json",
    )
    click.echo(f"chosen clusters: x={result.chosen[0]} y={result.chosen[1]}")
    click.echo(str(out / "score_table.csv"))


def run_fit(cfg: dict, data, out_dir) -> None:
    validate_design_for_fit(data)
    layout = layout_from_config(cfg)
    hypers = hypers_from_config(cfg)
    chain = gibbs_run(data, layout, hypers, sampler_from_config(cfg))
    chain = sign_fix(chain, anchor=cfg["anchor"])
    report = build_effect_report(
        chain,
        data.variable_names_x,
        data.variable_names_y,
        dominance_frac=float(cfg["dominance_frac"]),
        membership_threshold=float(cfg["membership_threshold"]),
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    extras = {
        "variable_names_x": list(data.variable_names_x),
        "variable_names_y": list(data.variable_names_y),
        "sample_ids": list(data.sample_ids),
        "covariates_a": data.a.tolist(),
        "covariates_b": data.b.tolist(),
        "report_params": {
            "dominance_frac": float(cfg["dominance_frac"]),
            "membership_threshold": float(cfg["membership_threshold"]),
            "anchor": cfg["anchor"],
        },
    }
    io.write_chain(out / "chain.jsonl", chain, extras=extras)
    io.dump_json(report.to_dict(), out / "report.json")
    report.quantile_frame().to_csv(out / "quantiles.csv", index=False)
    found = [f"{e['effect']}[{e['dim_kind']}]" for e in report.entries if e["found"]]
    click.echo(f"found effects: {', '.join(found) if found else 'none'}")
    click.echo(str(out / "chain.jsonl"))


@main.command()
@add_options(data_options)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--burn-in", "burn_in", type=int, default=None)
@click.option("--samples", type=int, default=None)
@click.option("--clusters-x", "clusters_x", type=int, default=None)
@click.option("--clusters-y", "clusters_y", type=int, default=None)
@guarded
def fit(x_path, y_path, cov_path, out_dir, config_path, seed, burn_in, samples, clusters_x, clusters_y):
    """Run the Gibbs sampler and write the chain checkpoint plus effect report."""
    cfg = load_config(
        config_path,
        seed=seed,
        burn_in=burn_in,
        samples=samples,
        clusters_x=clusters_x,
        clusters_y=clusters_y,
    )
    data = io.read_dataset(x_path, y_path, cov_path)
    run_fit(cfg, data, out_dir)


@main.command()
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None, help="overrides the spec seed (frozen truth + data)")
@guarded
def synth(out_dir, config_path, seed):
    """Generate a synthetic dataset with known planted effects and ground truth."""
    cfg = load_config(config_path, synth_seed=seed)
    layout = layout_from_config(cfg)
    effects = cfg["synth_effects"]
    if effects is not None:
        effects = {name: np.asarray(vec, dtype=float) for name, vec in effects.items()}
    spec = SyntheticSpec(
        n_per_cell=int(cfg["synth_n_per_cell"]),
        p_x=int(cfg["synth_p_x"]),
        p_y=int(cfg["synth_p_y"]),
        layout=layout,
        effects=effects,
        noise_sd=float(cfg["synth_noise_sd"]),
        psi_scale=float(cfg["synth_psi_scale"]),
        seed=int(cfg["synth_seed"]),
    )
    data, truth = generate(spec)
    paths = io.write_dataset(data, out_dir)
    io.dump_json(
        {"state": state_to_dict(truth), "spec": spec.to_metadata()},
        Path(out_dir) / "ground_truth.json",
    )
    click.echo(f"generated {data.n} paired samples ({data.p_x}+{data.p_y} variables)")
    for path in paths.values():
        click.echo(path)


@main.command()
@click.argument("chain_path", type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@guarded
def report(chain_path, out_dir):
    """Regenerate the effect report from a stored chain checkpoint."""
    chain, extras = io.read_chain(chain_path)
    params = extras.get("report_params", {})
    effect_report = build_effect_report(
        chain,
        extras["variable_names_x"],
        extras["variable_names_y"],
        dominance_frac=float(params.get("dominance_frac", DEFAULT_CONFIG["dominance_frac"])),
        membership_threshold=float(params.get("membership_threshold", DEFAULT_CONFIG["membership_threshold"])),
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.dump_json(effect_report.to_dict(), out / "report.json")
    effect_report.quantile_frame().to_csv(out / "quantiles.csv", index=False)
    found = [f"{e['effect']}[{e['dim_kind']}]" for e in effect_report.entries if e["found"]]
    click.echo(f"found effects: {', '.join(found) if found else 'none'}")


if __name__ == "__main__":
    main()
