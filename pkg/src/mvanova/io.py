"""File formats.

View CSVs are samples x variables with a header row of variable names and a
leading sample_id column; the covariate CSV has columns (sample_id, a, b).
Chain checkpoints are JSON lines: a header record (layout, sampler config, sign
flips, dataset metadata) followed by one state record per stored draw, cluster
labels 1-based. All floats are written with shortest round-trip formatting, so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import InputValidationError
from .model import ModelLayout, PairedDataset, state_from_dict, state_to_dict
from .sampler import PosteriorChain, SamplerConfig

CHAIN_FORMAT = "mvanova-chain"
CHAIN_VERSION = 1


def dump_json(obj, path) -> None:
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8"
    )


def load_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Dataset CSVs


def write_view_csv(path, mat, variable_names, sample_ids) -> None:
    frame = pd.DataFrame(np.asarray(mat, dtype=float), index=list(sample_ids), columns=list(variable_names))
    frame.to_csv(path, index_label="sample_id")


def read_view_csv(path) -> tuple[np.ndarray, tuple[str, ...], tuple[str, ...]]:
    # round_trip parsing: the default fast parser can be one ulp off, which
    # would break the exact CSV -> matrix -> CSV contract
    frame = pd.read_csv(path, index_col=0, float_precision="round_trip")
    try:
        mat = frame.to_numpy(dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputValidationError(f"{path}: non-numeric values in data matrix") from exc
    ids = tuple(str(i) for i in frame.index)
    if len(set(ids)) != len(ids):
        raise InputValidationError(f"{path}: duplicate sample ids")
    return mat, tuple(str(c) for c in frame.columns), ids


def write_covariates_csv(path, a, b, sample_ids) -> None:
    frame = pd.DataFrame({"sample_id": list(sample_ids), "a": np.asarray(a, int), "b": np.asarray(b, int)})
    frame.to_csv(path, index=False)


def read_covariates_csv(path) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    frame = pd.read_csv(path)
    missing = {"sample_id", "a", "b"} - set(frame.columns)
    if missing:
        raise InputValidationError(f"{path}: covariate file lacks columns {sorted(missing)}")
    try:
        a = frame["a"].to_numpy(dtype=int)
        b = frame["b"].to_numpy(dtype=int)
    except (TypeError, ValueError) as exc:
        raise InputValidationError(f"{path}: covariate levels must be integers") from exc
    if (a < 0).any() or (b < 0).any():
        raise InputValidationError(f"{path}: covariate levels must be non-negative")
    ids = tuple(str(i) for i in frame["sample_id"])
    if len(set(ids)) != len(ids):
        raise InputValidationError(f"{path}: duplicate sample ids")
    return ids, a, b


def read_dataset(x_path, y_path, cov_path) -> PairedDataset:
    """Load and align the three files by sample id (x's row order wins)."""
    x, names_x, ids_x = read_view_csv(x_path)
    y, names_y, ids_y = read_view_csv(y_path)
    ids_c, a, b = read_covariates_csv(cov_path)
    for label, ids in (("y view", ids_y), ("covariates", ids_c)):
        if set(ids) != set(ids_x):
            raise InputValidationError(
                f"misaligned sample ids: {label} file does not match the x view "
                f"(x has {len(ids_x)} ids, {label} has {len(ids)}; "
                f"symmetric difference size {len(set(ids) ^ set(ids_x))})"
            )
    y_order = [ids_y.index(i) for i in ids_x]
    c_order = [ids_c.index(i) for i in ids_x]
    data = PairedDataset(
        x=x,
        y=y[y_order],
        a=a[c_order],
        b=b[c_order],
        variable_names_x=names_x,
        variable_names_y=names_y,
        sample_ids=ids_x,
    )
    if not (np.all(np.isfinite(data.x)) and np.all(np.isfinite(data.y))):
        raise InputValidationError("non-finite input values in the data matrices")
    return data


def write_dataset(data: PairedDataset, out_dir, prefix: str = "") -> dict[str, str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "x": out / f"{prefix}x.csv",
        "y": out / f"{prefix}y.csv",
        "covariates": out / f"{prefix}covariates.csv",
    }
    write_view_csv(paths["x"], data.x, data.variable_names_x, data.sample_ids)
    write_view_csv(paths["y"], data.y, data.variable_names_y, data.sample_ids)
    write_covariates_csv(paths["covariates"], data.a, data.b, data.sample_ids)
    return {k: str(v) for k, v in paths.items()}


# ---------------------------------------------------------------------------
# Chain checkpoints


def _compact(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_chain(path, chain: PosteriorChain, extras: dict | None = None) -> None:
    config = asdict(chain.config)
    if config["init_scale_clamp"] is not None:
        config["init_scale_clamp"] = list(config["init_scale_clamp"])
    header = {
        "format": CHAIN_FORMAT,
        "version": CHAIN_VERSION,
        "layout": asdict(chain.layout),
        "config": config,
        "sign_flips": chain.sign_flips.tolist(),
        "extras": extras or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_compact(header) + "\n")
        for state in chain.states:
            fh.write(_compact(state_to_dict(state)) + "\n")


def read_chain(path) -> tuple[PosteriorChain, dict]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise InputValidationError(f"{path}: empty checkpoint file")
    header = json.loads(lines[0])
    if header.get("format") != CHAIN_FORMAT:
        raise InputValidationError(f"{path}: not a chain checkpoint")
    config = dict(header["config"])
    if config.get("init_scale_clamp") is not None:
        config["init_scale_clamp"] = tuple(config["init_scale_clamp"])
    chain = PosteriorChain(
        states=tuple(state_from_dict(json.loads(line)) for line in lines[1:]),
        config=SamplerConfig(**config),
        layout=ModelLayout(**header["layout"]),
        sign_flips=np.asarray(header["sign_flips"], dtype=int),
    )
    return chain, header.get("extras", {})
