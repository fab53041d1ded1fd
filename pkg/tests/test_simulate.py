import numpy as np
import pytest
from dataclasses import replace

from coupledlob.book import BookParams
from coupledlob.config import (
    BookConfig,
    RunSettings,
    ShockSpec,
    default_config,
)
from coupledlob.exceptions import ConfigurationError, SimulationError
from coupledlob.simulate import (
    drift_coefficient,
    init_system,
    measure_impact,
    paths,
    simulate,
    step,
)


def single_book_config(horizon=15.0, burn_in=0, f_const=0.1):
    base = default_config()
    return replace(
        base,
        books=(BookConfig(),),
        dynamics=replace(
            base.dynamics,
            force_mode="constant",
            f_const=f_const,
            kernel_window=8,
        ),
        run=RunSettings(horizon=horizon, burn_in=burn_in, seed=0),
    )


def predict_update(phi, price, grid, dxn, dt, lat, dyn, book_cfg):
    """One update of the memoryless scheme, written independently.

    Off-lattice reads via np.interp on a zero-padded profile; source,
    decay, and drift assembled directly from their definitions.
    """
    h = grid[1] - grid[0]
    pad_x = np.concatenate(([grid[0] - h], grid, [grid[-1] + h]))
    pad_f = np.concatenate(([0.0], phi, [0.0]))
    right = np.interp(grid + dxn, pad_x, pad_f, left=0.0, right=0.0)
    left = np.interp(grid - dxn, pad_x, pad_f, left=0.0, right=0.0)
    r = lat.r
    f_bias = min(max(dyn.f_const, -r), r)
    y = grid - price
    creation = -book_cfg.lam * book_cfg.mu * y * np.exp(-book_cfg.mu * y * y)
    out = (
        0.5 * r * (left + right)
        - r * phi
        + f_bias * 0.5 * (left - right)
        + np.exp(-dyn.nu * dt) * phi
        + creation * dt
    )
    out[0] = 0.0
    out[-1] = 0.0
    return out


def test_update_matches_independent_single_step_scheme():
    cfg = single_book_config()
    system = init_system(cfg, seed=4)
    grid = system.grid
    tg = system.grids[0]
    for _ in range(100):
        assert system.has_events()
        n = int(system.ev_step[system.next_event])
        dt = float(tg.dt[n - 1])
        dxn = float(tg.dx[n - 1])
        expected = predict_update(
            system.books[0].phi.copy(),
            system.books[0].price,
            grid,
            dxn,
            dt,
            cfg.lattice,
            cfg.dynamics,
            cfg.books[0],
        )
        step(system)
        assert np.max(np.abs(system.books[0].phi - expected)) < 1e-12


def test_drift_coefficient_clamps_to_r():
    assert drift_coefficient(0.0, 0.1, 0.5, kappa=1.0, r=0.5) == 0.0
    assert drift_coefficient(1.0, 0.1, 0.5, kappa=1.0, r=0.5) == pytest.approx(0.2)
    assert drift_coefficient(100.0, 0.1, 0.5, kappa=1.0, r=0.5) == 0.5
    assert drift_coefficient(-100.0, 0.1, 0.5, kappa=1.0, r=0.5) == -0.5
    with pytest.raises(ConfigurationError):
        drift_coefficient(1.0, 0.0, 0.5, kappa=1.0, r=0.5)


def test_simulate_deterministic_per_seed():
    cfg = replace(default_config(), run=RunSettings(horizon=10.0, burn_in=0, seed=0))
    a = simulate(cfg, seed=5)
    b = simulate(cfg, seed=5)
    c = simulate(cfg, seed=6)
    assert len(a) == 2
    for pa, pb in zip(a, b):
        assert np.array_equal(pa.t, pb.t)
        assert np.array_equal(pa.p, pb.p)
    assert not np.array_equal(a[0].p, c[0].p)


def test_burn_in_only_trims_the_record():
    base = replace(default_config(), run=RunSettings(horizon=10.0, burn_in=0, seed=0))
    full = simulate(base, seed=9)[0]
    trimmed_cfg = replace(base, run=RunSettings(horizon=10.0, burn_in=25, seed=0))
    trimmed = simulate(trimmed_cfg, seed=9)[0]
    # burn-in drops the prefix without touching the dynamics
    assert np.array_equal(trimmed.t, full.t[25:])
    assert np.array_equal(trimmed.p, full.p[25:])


def test_returns_are_price_differences():
    cfg = replace(default_config(), run=RunSettings(horizon=5.0, burn_in=0, seed=0))
    path = simulate(cfg, seed=1)[0]
    assert np.array_equal(path.returns(), np.diff(path.p))


def test_zero_size_shock_leaves_the_run_unchanged():
    base = replace(default_config(), run=RunSettings(horizon=8.0, burn_in=0, seed=0))
    shocked = replace(
        base, shocks=(ShockSpec(book=0, size=0.0, location=-1.0, time=2.0),)
    )
    a = simulate(base, seed=3)[0]
    b = simulate(shocked, seed=3)[0]
    assert np.array_equal(a.p, b.p)


def test_sigma_zero_force_modes_coincide():
    base = default_config()
    run = RunSettings(horizon=8.0, burn_in=0, seed=0)
    variants = [
        replace(base, run=run, dynamics=replace(base.dynamics, sigma_v=0.0)),
        replace(
            base,
            run=run,
            dynamics=replace(base.dynamics, sigma_v=0.0, force_mode="independent"),
        ),
        replace(
            base,
            run=run,
            dynamics=replace(
                base.dynamics, force_mode="constant", f_const=0.0
            ),
        ),
    ]
    results = [simulate(v, seed=2)[0] for v in variants]
    assert np.array_equal(results[0].p, results[1].p)
    assert np.array_equal(results[0].p, results[2].p)


def test_measure_impact_zero_shock_is_exactly_zero():
    base = default_config()
    cfg = replace(base, run=RunSettings(horizon=50.0, burn_in=30, seed=0))
    rows = measure_impact(cfg, (0.0, 0.01), seed=7)
    assert rows[0] == (0.0, 0.0)
    q, dp = rows[1]
    assert q == 0.01
    assert np.isfinite(dp)


def test_one_sided_book_raises_simulation_error():
    # freeze the source and drive maximum rightward drift: the ask lobe is
    # absorbed at the pinned boundary and the crossing disappears
    base = default_config()
    cfg = replace(
        base,
        books=(BookConfig(p0=230.0),),
        lattice=replace(base.lattice, L=60.0, M=120, x0=200.0),
        dynamics=replace(
            base.dynamics,
            force_mode="constant",
            f_const=0.5,
            nu=0.0,
            kernel_window=1,
        ),
        run=RunSettings(horizon=40.0, burn_in=0, seed=0),
    )
    system = init_system(cfg, seed=1)
    system.books[0].params = BookParams(lam=0.0, mu=0.1, nu=0.0, p0=230.0)
    with pytest.raises(SimulationError) as exc:
        while system.has_events():
            step(system)
    snap = exc.value.snapshot
    assert snap["book"] == 0
    assert "phi" in snap and "time" in snap


def test_snapshots_record_density_slices():
    cfg = replace(
        default_config(),
        run=RunSettings(horizon=3.0, burn_in=0, seed=0, snapshot_every=4),
    )
    system = init_system(cfg, seed=0)
    while system.has_events():
        step(system)
    assert len(system.snapshots) > 0
    j, t, phi = system.snapshots[0]
    assert phi.shape == system.grid.shape
    recorded = paths(system)
    assert len(recorded) == 2
