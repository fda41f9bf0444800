import math

import pytest

from oistlab import ConfigError, Prior
from oistlab.config import (
    DEFAULT_CONFIG,
    build_discrete_prior,
    build_grid,
    build_pde_config,
    grid_times,
    initial_overlap,
    load_config,
    resolve_bin_edges,
    resolve_theta,
    validate_config,
)


def default_cfg():
    return load_config(None)


def test_defaults_are_reference_experiment():
    cfg = default_cfg()
    assert cfg["model"]["rho"] == 0.05
    assert cfg["algorithm"]["tau"] == 0.5
    assert cfg["algorithm"]["beta"] == 0.27
    assert cfg["model"]["omega"] == 1.0
    assert cfg["model"]["p"] == 10000
    validate_config(cfg)


def test_grid_times_cover_range():
    assert grid_times(15.0) == [round(0.5 * i, 12) for i in range(31)]
    assert grid_times(1.2)[-1] == 1.2


def test_initial_overlap_reference():
    cfg = default_cfg()
    assert initial_overlap(cfg) == pytest.approx(math.sqrt(0.05 / 2.0), abs=1e-12)


def test_resolved_defaults():
    cfg = default_cfg()
    edges = resolve_bin_edges(cfg)
    assert edges[0] == -2.0
    assert edges[-1] == pytest.approx(2.0 + 1.0 / math.sqrt(0.05))
    assert len(edges) == 102
    assert resolve_theta(cfg) == pytest.approx(0.5 / math.sqrt(0.05))


def test_grid_extends_for_wide_atoms():
    cfg = default_cfg()
    cfg["model"]["rho"] = 0.01  # atom at 10, outside [-6, 8]
    prior = build_discrete_prior(cfg)
    grid = build_grid(cfg, prior)
    assert grid.x_max >= 10.0 + 3.5
    base = build_grid(default_cfg(), build_discrete_prior(default_cfg()))
    assert grid.dx == pytest.approx(base.dx)


def test_build_pde_config_auto_dt():
    cfg = default_cfg()
    pde_cfg = build_pde_config(cfg, build_discrete_prior(cfg))
    assert pde_cfg.dt == "auto"


def test_validate_rejects_bad_fields():
    for section, key, value in [
        ("model", "rho", 0.0),
        ("model", "p", 1),
        ("model", "omega", -1.0),
        ("algorithm", "tau", 0.0),
        ("algorithm", "threshold", "hard"),
        ("simulation", "replicas", 0),
        ("pde", "n", 10),
        ("pde", "dt", -0.1),
        ("steady", "damping", 0.0),
        ("sweep", "n_points", 1),
        ("output", "format", "xml"),
    ]:
        cfg = default_cfg()
        cfg[section][key] = value
        with pytest.raises(ConfigError):
            validate_config(cfg)


def test_discrete_prior_requires_atoms():
    cfg = default_cfg()
    cfg["model"]["prior"] = "discrete"
    with pytest.raises(ConfigError):
        validate_config(cfg)
    cfg["model"]["atoms"] = [[0.0, 0.5], [math.sqrt(2.0), 0.5]]
    validate_config(cfg)
    prior = build_discrete_prior(cfg)
    assert isinstance(prior, Prior)
    assert prior.rho == pytest.approx(0.5)


def test_default_config_unchanged_by_load():
    before = DEFAULT_CONFIG["pde"]["n"]
    cfg = default_cfg()
    cfg["pde"]["n"] = 1
    assert DEFAULT_CONFIG["pde"]["n"] == before
