"""Fast joint-distribution comparison of the two simulators (the full-length
version runs in the acceptance suite)."""

import numpy as np

from mvanova.model import ModelLayout
from mvanova.validation import MODERATE_HYPERS, geweke_compare, scalar_statistics
from mvanova.model import sample_from_model


def test_scalar_statistics_cover_all_blocks():
    layout = ModelLayout(1, 1, 1, 2, 2)
    a = np.array([0, 1, 0, 1])
    b = np.array([0, 0, 1, 1])
    state, data = sample_from_model(layout, MODERATE_HYPERS, a, b, 3, 3, 0)
    stats = scalar_statistics(state, data, layout)
    assert len(stats) >= 10
    assert all(np.isfinite(v) for v in stats.values())


def test_geweke_two_simulators_agree_fast():
    layout = ModelLayout(k_shared=1, k_xspec=1, k_yspec=1, k_clusters_x=2, k_clusters_y=2)
    a = np.array([0, 1, 0, 1])
    b = np.array([0, 0, 1, 1])
    res = geweke_compare(layout, MODERATE_HYPERS, a, b, p_x=3, p_y=3, n_iter=2500, seed=11)
    assert len(res.names) >= 10
    assert res.max_abs_z() < 4.0


def test_geweke_detects_a_broken_update(monkeypatch):
    """Sanity that the harness has power: biasing one update must blow up |z|."""
    import mvanova.validation as validation
    import mvanova.sampler as sampler

    original = sampler.update_resid_var

    def biased(state, data, layout, hypers, view, rng):
        out = original(state, data, layout, hypers, view, rng)
        from mvanova.model import replace_view

        return replace_view(out, view, resid_var=2.0 * out.field("resid_var", view))

    monkeypatch.setattr(sampler, "update_resid_var", biased)
    layout = ModelLayout(1, 1, 1, 2, 2)
    a = np.array([0, 1, 0, 1])
    b = np.array([0, 0, 1, 1])
    res = validation.geweke_compare(layout, MODERATE_HYPERS, a, b, p_x=3, p_y=3, n_iter=1500, seed=1)
    assert res.max_abs_z() > 6.0
