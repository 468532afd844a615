"""Posterior summaries: effect quantiles, found flags, cluster co-occurrence and
effect-to-cluster traceback."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .cluster_utils import average_linkage_partition
from .errors import InputValidationError
from .sampler import PosteriorChain

QUANTILE_LEVELS = (0.025, 0.25, 0.5, 0.75, 0.975)
QUANTILE_COLUMNS = ("q2.5", "q25", "q50", "q75", "q97.5")


def effect_rows(chain: PosteriorChain) -> list[dict]:
    """Per effect x latent dimension: posterior mean, equal-tailed quantiles and
    the found flag (95% interval excludes 0). Plain-python values, JSON-safe."""
    rows = []
    layout = chain.layout
    for name in chain.effect_names():
        draws = chain.effect_draws(name)
        qs = np.quantile(draws, QUANTILE_LEVELS, axis=0)
        means = draws.mean(axis=0)
        for dim in range(layout.k_z):
            row = {
                "effect": name,
                "dim": int(dim),
                "dim_kind": layout.dim_kind(dim),
                "mean": float(means[dim]),
            }
            for col, q in zip(QUANTILE_COLUMNS, qs[:, dim]):
                row[col] = float(q)
            row["found"] = bool(row["q2.5"] > 0 or row["q97.5"] < 0)
            rows.append(row)
    return rows


def effect_quantiles(chain: PosteriorChain) -> pd.DataFrame:
    return pd.DataFrame(effect_rows(chain))


def cluster_membership(chain: PosteriorChain, view: str) -> np.ndarray:
    """(p, k) posterior frequency of each variable's assignment to each cluster."""
    k = chain.layout.k_clusters(view)
    first = chain.states[0].field("clusters", view)
    counts = np.zeros((len(first), k))
    for state in chain.states:
        labels = state.field("clusters", view)
        counts[np.arange(len(labels)), labels] += 1.0
    return counts / len(chain.states)


def co_occurrence(chain: PosteriorChain, view: str) -> np.ndarray:
    """(p, p) posterior probability that two variables share a cluster;
    invariant to cluster label switching."""
    first = chain.states[0].field("clusters", view)
    p = len(first)
    co = np.zeros((p, p))
    for state in chain.states:
        labels = state.field("clusters", view)
        co += labels[:, None] == labels[None, :]
    return co / len(chain.states)


def co_occurrence_partition(co: np.ndarray, k: int) -> np.ndarray:
    """Consensus partition extracted from a co-occurrence matrix (average linkage)."""
    return average_linkage_partition(co, k)


@dataclass(frozen=True)
class EffectReport:
    """Quantile table plus per-found-effect traceback to variable clusters."""

    entries: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {"entries": [dict(e) for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "EffectReport":
        return cls(entries=tuple(d["entries"]))

    def quantile_frame(self) -> pd.DataFrame:
        cols = ["effect", "dim", "dim_kind", "mean", *QUANTILE_COLUMNS, "found"]
        return pd.DataFrame([{c: e[c] for c in cols} for e in self.entries])


def build_effect_report(
    chain: PosteriorChain,
    variable_names_x,
    variable_names_y,
    dominance_frac: float = 0.5,
    membership_threshold: float = 0.5,
) -> EffectReport:
    """Summarize a (sign-fixed) chain.

    Traceback follows the loading path: for a found effect coordinate, the
    dominant rows of the posterior-mean projection identify the responsible
    factor-score components, i.e. variable clusters; members are the variables
    assigned there with posterior frequency >= membership_threshold.
    """
    if not chain.states:
        raise InputValidationError("cannot report on an empty chain")
    names = {"x": tuple(variable_names_x), "y": tuple(variable_names_y)}
    layout = chain.layout
    w_means = {v: np.mean([s.field("w", v) for s in chain.states], axis=0) for v in ("x", "y")}
    membership = {v: cluster_membership(chain, v) for v in ("x", "y")}
    for view in ("x", "y"):
        if len(names[view]) != membership[view].shape[0]:
            raise InputValidationError(f"variable_names_{view} length does not match the chain")

    entries = []
    for row in effect_rows(chain):
        entry = dict(row)
        traceback = []
        if entry["found"]:
            dim = entry["dim"]
            for view in ("x", "y"):
                if dim not in layout.free_columns(view):
                    continue
                loadings = np.abs(w_means[view][:, dim])
                top = loadings.max()
                if top <= 0:
                    continue
                for k in np.flatnonzero(loadings >= dominance_frac * top):
                    members = np.flatnonzero(membership[view][:, k] >= membership_threshold)
                    traceback.append(
                        {
                            "view": view,
                            "cluster": int(k) + 1,  # 1-based, matching the interchange format
                            "loading": float(w_means[view][k, dim]),
                            "variables": [names[view][i] for i in members],
                        }
                    )
        entry["traceback"] = traceback
        entries.append(entry)
    return EffectReport(entries=tuple(entries))
