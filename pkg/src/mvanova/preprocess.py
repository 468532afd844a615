"""Control-population standardization.

Each variable is centered by the control cell's (a=0, b=0) mean and scaled by its
control standard deviation, which fixes the model's per-variable means to zero and
cluster scales to one. Variables whose control sd is numerically zero cannot be
scaled and are dropped with a reason.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleDesignError
from .model import PairedDataset

ZERO_SD = 1e-12


@dataclass(frozen=True)
class PreprocessReport:
    control_means_x: np.ndarray
    control_means_y: np.ndarray
    control_sds_x: np.ndarray
    control_sds_y: np.ndarray
    n_control: int
    dropped_variables: tuple[tuple[str, str, str], ...]  # (view, name, reason)

    def to_dict(self) -> dict:
        return {
            "control_means_x": self.control_means_x.tolist(),
            "control_means_y": self.control_means_y.tolist(),
            "control_sds_x": self.control_sds_x.tolist(),
            "control_sds_y": self.control_sds_y.tolist(),
            "n_control": self.n_control,
            "dropped_variables": [list(t) for t in self.dropped_variables],
        }


def center_scale_by_control(raw: PairedDataset) -> tuple[PairedDataset, PreprocessReport]:
    """Standardize every variable against the control population.

    Control statistics use the unbiased (n-1) sd. Raises when the control cell
    has fewer than 2 samples (sd undefined).
    """
    control = (raw.a == 0) & (raw.b == 0)
    n_control = int(control.sum())
    if n_control == 0:
        raise InfeasibleDesignError("covariate cell empty: control cell (a=0, b=0) has no samples")
    if n_control < 2:
        raise InfeasibleDesignError("control cell needs at least 2 samples to estimate a standard deviation")

    kept_mats = {}
    kept_names = {}
    stats = {}
    dropped: list[tuple[str, str, str]] = []
    for view, names in (("x", raw.variable_names_x), ("y", raw.variable_names_y)):
        mat = raw.view(view)
        means = mat[control].mean(axis=0)
        sds = mat[control].std(axis=0, ddof=1)
        keep = sds > ZERO_SD
        for i in np.flatnonzero(~keep):
            dropped.append((view, names[i], "zero control-population standard deviation"))
        kept_mats[view] = (mat[:, keep] - means[keep]) / sds[keep]
        kept_names[view] = tuple(np.asarray(names)[keep])
        stats[view] = (means[keep], sds[keep])

    transformed = PairedDataset(
        x=kept_mats["x"],
        y=kept_mats["y"],
        a=raw.a,
        b=raw.b,
        variable_names_x=kept_names["x"],
        variable_names_y=kept_names["y"],
        sample_ids=raw.sample_ids,
    )
    report = PreprocessReport(
        control_means_x=stats["x"][0],
        control_means_y=stats["y"][0],
        control_sds_x=stats["x"][1],
        control_sds_y=stats["y"][1],
        n_control=n_control,
        dropped_variables=tuple(dropped),
    )
    return transformed, report
