import pytest

from nematicflow.grid import GridSpec
from nematicflow.params import (SimulationParams, ConfigError, parse_config,
                                format_config, validate_params, with_overrides)


def test_defaults_validate_clean():
    rep = validate_params(SimulationParams())
    assert rep.passed
    assert rep.warnings == []


def test_violations_reported_not_raised():
    p = SimulationParams(mu=-1.0, dt=0.0, potential_coeffs=(1.0, -1.0),
                         noise_mode_count=0)
    rep = validate_params(p)
    assert not rep.passed
    joined = " ".join(rep.violations)
    assert "mu" in joined
    assert "dt" in joined
    assert "leading coefficient" in joined


def test_warning_for_unnormalized_constants():
    rep = validate_params(SimulationParams(mu=2.0))
    assert rep.passed
    assert any("normalized" in w for w in rep.warnings)


def test_warning_for_large_h():
    rep = validate_params(SimulationParams(h_vec=(1.0, 1.0, 1.0)))
    assert any("|h|" in w for w in rep.warnings)


def test_mode_count_capped_by_grid():
    p = SimulationParams(grid=GridSpec(8, 8), noise_mode_count=17)
    assert not validate_params(p).passed


def test_parse_config_round_trip():
    p = SimulationParams(grid=GridSpec(16, 24, 2.0, 3.0), dt=2.5e-3,
                         potential_coeffs=(-1.0, 0.5, 2.0), potential_degree=2,
                         h_vec=(0.1, 0.0, -0.2), seed=99)
    assert parse_config(format_config(p)) == p


def test_parse_config_comments_and_spacing():
    p = parse_config("""
    # a comment
    dt = 1e-2   # trailing comment
    seed=42
    """)
    assert p.dt == 1e-2
    assert p.seed == 42


@pytest.mark.parametrize("text", [
    "unknown_key = 3",
    "dt = 1e-3\ndt = 2e-3",
    "just some words",
    "h_vec = 1, 2",
    "grid = 16, 16",
    "dt = banana",
])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_with_overrides():
    p = SimulationParams()
    q = with_overrides(p, seed=7, dt=1e-4)
    assert q.seed == 7 and q.dt == 1e-4
    assert p.seed == 1  # original untouched
