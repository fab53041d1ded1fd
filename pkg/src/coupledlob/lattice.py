"""Background log-price lattice and diffusion-consistent time grids.

The lattice is a uniform grid of ``M + 1`` points spanning ``[x0, x0 + L]``.
Event times are either uniform or exponentially spaced; in both cases each
time increment ``dt`` carries a jump length ``dx = sqrt(2 * D_alpha * dt**alpha / r)``
so that the pair stays on the diffusion curve ``D_alpha = (r/2) * dx^2 / dt^alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError


@dataclass(frozen=True)
class LatticeConfig:
    """Static lattice parameters.

    Attributes
    ----------
    L : float
        System length in log-price units.
    M : int
        Number of grid divisions (``M + 1`` points).
    x0 : float
        Left edge of the grid.
    r : float
        Probability of a self jump, in (0, 1].
    D_alpha : float
        Anomalous diffusion rate.
    alpha : float
        Fractional time exponent, in (0, 1].
    """

    L: float = 200.0
    M: int = 400
    x0: float = 130.0
    r: float = 0.5
    D_alpha: float = 0.5
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ConfigurationError(f"L must be > 0, got {self.L}")
        if self.M < 2:
            raise ConfigurationError(f"M must be >= 2, got {self.M}")
        if not 0.0 < self.r <= 1.0:
            raise ConfigurationError(f"r must be in (0, 1], got {self.r}")
        if not self.D_alpha > 0:
            raise ConfigurationError(f"D_alpha must be > 0, got {self.D_alpha}")
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must be in (0, 1], got {self.alpha}")

    @property
    def dx(self) -> float:
        """Grid spacing L / M."""
        return self.L / self.M


@dataclass(frozen=True)
class TimeGrid:
    """Event times with their increments and diffusion-consistent jump lengths.

    ``t`` has ``n + 1`` entries starting at 0; ``dt`` and ``dx`` have ``n``.
    """

    t: np.ndarray
    dt: np.ndarray
    dx: np.ndarray

    def __post_init__(self) -> None:
        if len(self.dt) != len(self.dx):
            raise ConfigurationError("dt and dx must have equal length")
        if len(self.t) != len(self.dt) + 1:
            raise ConfigurationError("t must have len(dt) + 1 entries")
        if len(self.dt) and not np.all(self.dt > 0):
            raise ConfigurationError("all time increments must be positive")

    def __len__(self) -> int:
        return len(self.dt)


def build_lattice(config: LatticeConfig) -> np.ndarray:
    """Return the uniform grid of ``M + 1`` points ``x0 + i * (L / M)``."""
    return config.x0 + config.dx * np.arange(config.M + 1)


def base_dt(config: LatticeConfig, paper_compat: bool = False) -> float:
    """Reference time step solving the diffusion relation for dt.

    Inverts ``D_alpha = (r/2) * dx^2 / dt^alpha`` at ``dx = L / M``, i.e.
    ``dt = (r * dx^2 / (2 * D_alpha)) ** (1 / alpha)``.

    With ``paper_compat=True`` the 1/alpha exponent is skipped, reproducing
    published parameter tables that evaluate the relation as if alpha were 1.
    """
    ratio = config.r * config.dx**2 / (2.0 * config.D_alpha)
    if paper_compat:
        return ratio
    return ratio ** (1.0 / config.alpha)


def step_length(config: LatticeConfig, dt: np.ndarray | float) -> np.ndarray | float:
    """Jump length paired with a time increment on the diffusion curve."""
    return np.sqrt(2.0 * config.D_alpha * np.asarray(dt) ** config.alpha / config.r)


def sample_time_grid(
    config: LatticeConfig,
    rate: float,
    horizon: float,
    rng: np.random.Generator | None = None,
    uniform: bool = False,
) -> TimeGrid:
    """Generate an event-time grid up to ``horizon``.

    In the default mode increments are i.i.d. Exponential with mean
    ``1 / rate``; with ``uniform=True`` every increment equals ``1 / rate``
    exactly (the degenerate zero-variance clock). Times accumulate until the
    next event would pass the horizon.
    """
    if not rate > 0:
        raise ConfigurationError(f"rate must be > 0, got {rate}")
    if not horizon > 0:
        raise ConfigurationError(f"horizon must be > 0, got {horizon}")

    mean_dt = 1.0 / rate
    if uniform:
        n = int(np.floor(horizon / mean_dt))
        if n < 1:
            raise ConfigurationError("horizon shorter than one uniform step")
        dt = np.full(n, mean_dt)
        t = np.concatenate(([0.0], mean_dt * np.arange(1, n + 1)))
    else:
        if rng is None:
            raise ConfigurationError("exponential sampling requires an rng")
        # Draw in blocks until the horizon is covered.
        draws: list[np.ndarray] = []
        total = 0.0
        block = max(64, int(horizon * rate * 1.2) + 16)
        while total < horizon:
            d = rng.exponential(mean_dt, size=block)
            draws.append(d)
            total += float(d.sum())
        dt_all = np.concatenate(draws)
        t_all = np.cumsum(dt_all)
        n = int(np.searchsorted(t_all, horizon, side="right"))
        dt = dt_all[:n]
        t = np.concatenate(([0.0], t_all[:n]))
        if n < 1:
            raise ConfigurationError("horizon shorter than the first sampled step")

    dx = step_length(config, dt)
    return TimeGrid(t=t, dt=dt, dx=np.asarray(dx))


def grid_to_rows(grid: TimeGrid):
    """Yield (index, t, dt, dx) rows for CSV export."""
    for i in range(len(grid)):
        yield i, grid.t[i + 1], grid.dt[i], grid.dx[i]
