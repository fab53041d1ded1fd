import math

import numpy as np
import pytest

from coupledlob.exceptions import ConfigurationError
from coupledlob.lattice import (
    LatticeConfig,
    TimeGrid,
    base_dt,
    build_lattice,
    grid_to_rows,
    sample_time_grid,
    step_length,
)


def test_grid_points_span_the_system():
    cfg = LatticeConfig(L=200.0, M=400, x0=130.0)
    grid = build_lattice(cfg)
    assert len(grid) == 401
    assert grid[0] == 130.0
    assert grid[-1] == 330.0
    assert cfg.dx == 0.5
    steps = np.diff(grid)
    assert np.allclose(steps, 0.5, rtol=0, atol=1e-12)


def test_base_dt_reference_values():
    # r * dx^2 / (2 D) with r=0.5, dx=0.5, D=1 is exactly 1/16
    cfg = LatticeConfig(L=200.0, M=400, x0=130.0, r=0.5, D_alpha=1.0, alpha=1.0)
    assert base_dt(cfg) == 0.0625
    # fractional exponent: ratio ** (1/alpha), exact for alpha = 1/2
    half = LatticeConfig(L=200.0, M=400, x0=130.0, r=0.5, D_alpha=1.0, alpha=0.5)
    assert base_dt(half) == 0.0625**2
    # compat mode skips the exponent
    assert base_dt(half, paper_compat=True) == 0.0625


def test_base_dt_inverts_the_diffusion_relation():
    for d, r, alpha in [(0.27, 0.5, 0.57), (2.0, 0.9, 1.0), (0.5, 0.3, 0.8)]:
        cfg = LatticeConfig(r=r, D_alpha=d, alpha=alpha)
        dt = base_dt(cfg)
        # plugging dt back must recover D_alpha
        recovered = (r / 2.0) * cfg.dx**2 / dt**alpha
        assert recovered == pytest.approx(d, rel=1e-12)


def test_step_length_stays_on_the_diffusion_curve():
    cfg = LatticeConfig(r=0.5, D_alpha=0.27, alpha=0.57)
    rng = np.random.default_rng(7)
    grid = sample_time_grid(cfg, rate=8.0, horizon=20.0, rng=rng)
    recovered = (cfg.r / 2.0) * grid.dx**2 / grid.dt**cfg.alpha
    assert np.allclose(recovered, cfg.D_alpha, rtol=1e-12, atol=0)


def test_uniform_grid_is_exact():
    cfg = LatticeConfig(D_alpha=1.0, alpha=1.0)
    grid = sample_time_grid(cfg, rate=16.0, horizon=1.0, uniform=True)
    assert len(grid) == 16
    assert np.all(grid.dt == 0.0625)
    assert grid.t[0] == 0.0
    assert grid.t[-1] == 1.0
    # constant dt means constant jump length
    assert np.all(grid.dx == grid.dx[0])
    assert grid.dx[0] == step_length(cfg, 0.0625)


def test_exponential_grid_structure():
    cfg = LatticeConfig()
    rng = np.random.default_rng(3)
    horizon = 50.0
    grid = sample_time_grid(cfg, rate=4.0, horizon=horizon, rng=rng)
    assert grid.t[0] == 0.0
    assert np.all(np.diff(grid.t) > 0)
    assert grid.t[-1] <= horizon
    # cumsum-then-diff reassociates the additions, so exact equality is
    # not available; the error is bounded by rounding at the horizon scale
    assert np.allclose(np.diff(grid.t), grid.dt, rtol=0, atol=1e-9)
    assert len(grid.t) == len(grid.dt) + 1 == len(grid.dx) + 1
    # mean increment should sit near 1/rate (5 sigma band)
    n = len(grid.dt)
    assert abs(grid.dt.mean() - 0.25) < 5 * 0.25 / math.sqrt(n)


def test_exponential_grid_reproducible_per_seed():
    cfg = LatticeConfig()
    a = sample_time_grid(cfg, 8.0, 10.0, rng=np.random.default_rng(11))
    b = sample_time_grid(cfg, 8.0, 10.0, rng=np.random.default_rng(11))
    c = sample_time_grid(cfg, 8.0, 10.0, rng=np.random.default_rng(12))
    assert np.array_equal(a.t, b.t)
    assert not np.array_equal(a.t, c.t)


def test_grid_requires_rng_for_exponential_mode():
    with pytest.raises(ConfigurationError):
        sample_time_grid(LatticeConfig(), 8.0, 10.0)


def test_grid_rejects_bad_rate_and_horizon():
    with pytest.raises(ConfigurationError):
        sample_time_grid(LatticeConfig(), 0.0, 10.0, uniform=True)
    with pytest.raises(ConfigurationError):
        sample_time_grid(LatticeConfig(), 8.0, -1.0, uniform=True)
    with pytest.raises(ConfigurationError):
        # horizon shorter than a single uniform step
        sample_time_grid(LatticeConfig(), 1.0, 0.5, uniform=True)


def test_lattice_config_validation():
    with pytest.raises(ConfigurationError):
        LatticeConfig(L=0.0)
    with pytest.raises(ConfigurationError):
        LatticeConfig(M=1)
    with pytest.raises(ConfigurationError):
        LatticeConfig(r=0.0)
    with pytest.raises(ConfigurationError):
        LatticeConfig(r=1.5)
    with pytest.raises(ConfigurationError):
        LatticeConfig(D_alpha=0.0)
    with pytest.raises(ConfigurationError):
        LatticeConfig(alpha=0.0)
    with pytest.raises(ConfigurationError):
        LatticeConfig(alpha=1.2)


def test_time_grid_validation():
    t = np.array([0.0, 1.0, 2.0])
    dt = np.array([1.0, 1.0])
    dx = np.array([0.5, 0.5])
    TimeGrid(t=t, dt=dt, dx=dx)
    with pytest.raises(ConfigurationError):
        TimeGrid(t=t, dt=dt, dx=dx[:1])
    with pytest.raises(ConfigurationError):
        TimeGrid(t=t[:2], dt=dt, dx=dx)
    with pytest.raises(ConfigurationError):
        TimeGrid(t=t, dt=np.array([1.0, 0.0]), dx=dx)


def test_grid_rows_align_with_arrays():
    cfg = LatticeConfig()
    grid = sample_time_grid(cfg, 4.0, 2.0, uniform=True)
    rows = list(grid_to_rows(grid))
    assert len(rows) == len(grid)
    i, t, dt, dx = rows[0]
    assert i == 0 and t == grid.t[1] and dt == grid.dt[0] and dx == grid.dx[0]
