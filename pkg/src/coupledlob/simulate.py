"""Coupled-book evolution under the non-uniform update scheme with memory.

Books advance on a merged event queue, each on its own clock. One step of
book ``j`` from ``t_{n-1}`` to ``t_n`` computes, at every interior lattice
point,

    phi_n = sum_m K[n-m] * exp(-nu * (t_{n-1} - t_m)) * bracket_m
            + exp(-nu * dt) * phi_{n-1} + c * dt

where ``bracket_m`` combines left/right off-lattice reads of the stored
slice ``m`` at ``x_i -+ dx_m`` with jump weights ``(r +- F)/2`` and the
self-jump term ``-r * phi_m``. The bracket is linear in the drift bias F,
so each slice is cached as a symmetric part and an antisymmetric part and
the history sum reduces to two matrix-vector products over the ring buffer.
The creation term ``c`` is the book's own source plus the pairs-trader
coupling against the counterpart's latest price; shocks are injected
directly into the density at their event time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .book import (
    BookParams,
    BookState,
    COUPLING_GAP_FRACTION,
    Shock,
    apply_shock,
    coupling_term,
    extract_price,
    init_book,
    source_term,
)
from .config import RunConfig
from .exceptions import ConfigurationError, OneSidedBookError, SimulationError
from .kernels import build_kernel_table
from .lattice import base_dt, build_lattice, sample_time_grid


@dataclass
class PricePath:
    """Non-uniformly timestamped mid-price observations for one book."""

    t: np.ndarray
    p: np.ndarray
    book_id: int

    def returns(self) -> np.ndarray:
        """First differences of the (log-price) path."""
        return np.diff(self.p)


def drift_coefficient(
    force_increment: float, dt: float, dx: float, kappa: float, r: float
) -> float:
    """Jump bias ``F = clamp(kappa * dV * dt / dx, -r, +r)``."""
    if dt <= 0 or dx <= 0:
        raise ConfigurationError("dt and dx must be positive")
    f = kappa * force_increment * dt / dx
    return -r if f < -r else (r if f > r else float(f))


def _shift_read(phi: np.ndarray, shift: int) -> np.ndarray:
    """Values of ``phi`` read at index ``i + shift`` with zero fill outside."""
    n = len(phi)
    if abs(shift) >= n:
        return np.zeros_like(phi)
    out = np.empty_like(phi)
    if shift > 0:
        out[:-shift] = phi[shift:]
        out[-shift:] = 0.0
    elif shift < 0:
        out[-shift:] = phi[:shift]
        out[:-shift] = 0.0
    else:
        out[:] = phi
    return out


def _interp_read(phi: np.ndarray, inner: int, outer: int, frac: float) -> np.ndarray:
    """``(1 - frac) * phi[i + inner] + frac * phi[i + outer]`` with zero fill."""
    if frac == 0.0:
        return _shift_read(phi, inner)
    out = _shift_read(phi, inner)
    out *= 1.0 - frac
    tmp = _shift_read(phi, outer)
    tmp *= frac
    out += tmp
    return out


def _slice_parts(
    phi: np.ndarray, step_dx: float, grid_dx: float, r: float
) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric and antisymmetric bracket parts of one history slice.

    Off-lattice reads at ``x_i -+ step_dx`` use linear interpolation on the
    background grid with zero beyond the boundaries. Returns
    ``S = (r/2) (L + R) - r phi`` and ``A = (L - R) / 2`` so the bracket for
    drift bias F is ``S + F * A``.
    """
    s = step_dx / grid_dx
    k0 = int(np.floor(s))
    frac = s - k0
    right = _interp_read(phi, k0, k0 + 1, frac)
    left = _interp_read(phi, -k0, -(k0 + 1), frac)
    sym = left + right
    sym *= 0.5 * r
    sym -= r * phi
    # left and right are owned copies, safe to reuse in place
    left -= right
    left *= 0.5
    return sym, left


class _History:
    """Ring buffer of bracket parts for one book's past density slices.

    Symmetric and antisymmetric parts live side by side in one matrix so
    the weighted sum is a single matrix-vector product.
    """

    def __init__(self, window: int, npoints: int):
        self.window = window
        self.npoints = npoints
        self.parts = np.zeros((window, 2 * npoints))
        self.m_index = np.full(window, -1, dtype=np.int64)
        self.m_time = np.zeros(window)

    def push(self, m: int, t_m: float, sym: np.ndarray, anti: np.ndarray) -> None:
        slot = m % self.window
        self.parts[slot, : self.npoints] = sym
        self.parts[slot, self.npoints :] = anti
        self.m_index[slot] = m
        self.m_time[slot] = t_m

    def weighted_sums(
        self, n: int, t_prev: float, kernel: np.ndarray, nu: float
    ) -> tuple[np.ndarray, np.ndarray]:
        """``sum_m w_m * sym_m`` and ``sum_m w_m * anti_m`` over stored slices.

        ``w_m = K[n - m] * exp(-nu * (t_prev - t_m))`` with slices older than
        the kernel window carrying zero weight.
        """
        ages = n - self.m_index
        if n > self.window and len(kernel) >= self.window:
            # warm ring: every slot holds a live slice with age in range
            w = kernel[ages - 1] * np.exp(-nu * (t_prev - self.m_time))
        else:
            valid = (self.m_index >= 0) & (ages >= 1) & (ages <= len(kernel))
            w = np.zeros(self.window)
            w[valid] = kernel[ages[valid] - 1] * np.exp(
                -nu * (t_prev - self.m_time[valid])
            )
        both = w @ self.parts
        return both[: self.npoints], both[self.npoints :]


@dataclass
class CoupledSystem:
    """Mutable state of a coupled simulation on a shared lattice."""

    config: RunConfig
    grid: np.ndarray
    books: list[BookState]
    grids: list
    kernel: np.ndarray
    histories: list[_History]
    rng: np.random.Generator
    # merged event schedule
    ev_time: np.ndarray
    ev_book: np.ndarray
    ev_step: np.ndarray
    next_event: int = 0
    clock: float = 0.0
    # shared Brownian potential
    v_value: float = 0.0
    v_time: float = 0.0
    v_last: list[float] | None = None
    steps_done: list[int] | None = None
    last_F: list[float] | None = None
    recorded_t: list | None = None
    recorded_p: list | None = None
    shock_queue: list | None = None
    snapshots: list | None = None

    def has_events(self) -> bool:
        return self.next_event < len(self.ev_time)


def init_system(
    config: RunConfig, horizon: float | None = None, seed: int | None = None
) -> CoupledSystem:
    """Build lattice, clocks, kernel table, and initial book states."""
    lat = config.lattice
    horizon = config.run.horizon if horizon is None else horizon
    seed = config.run.seed if seed is None else seed

    grid = build_lattice(lat)
    dt_bar = base_dt(lat, paper_compat=config.dynamics.paper_dt_compat)
    children = np.random.SeedSequence(seed).spawn(len(config.books) + 1)
    uniform = config.run.sampling == "uniform"

    grids = []
    for j, bk in enumerate(config.books):
        rate = bk.rate if bk.rate is not None else 1.0 / dt_bar
        rng_j = np.random.default_rng(children[j])
        grids.append(
            sample_time_grid(lat, rate, horizon, rng=rng_j, uniform=uniform)
        )

    table = build_kernel_table(lat.alpha, window=config.dynamics.kernel_window)

    books = []
    for bk in config.books:
        params = BookParams(
            lam=bk.lam, mu=bk.mu, nu=config.dynamics.nu, p0=bk.p0
        )
        books.append(init_book(grid, params, nu_floor=config.dynamics.nu_floor))

    npoints = len(grid)
    histories = [_History(table.window, npoints) for _ in config.books]

    times = np.concatenate([g.t[1:] for g in grids])
    book_ids = np.concatenate(
        [np.full(len(g), j, dtype=np.int64) for j, g in enumerate(grids)]
    )
    step_ids = np.concatenate(
        [np.arange(1, len(g) + 1, dtype=np.int64) for g in grids]
    )
    order = np.lexsort((book_ids, times))

    shock_queue = [
        sorted(
            (Shock(size=s.size, location=s.location, time=s.time) for s in config.shocks if s.book == j),
            key=lambda s: s.time,
        )
        for j in range(len(config.books))
    ]

    return CoupledSystem(
        config=config,
        grid=grid,
        books=books,
        grids=grids,
        kernel=table.K,
        histories=histories,
        rng=np.random.default_rng(children[-1]),
        ev_time=times[order],
        ev_book=book_ids[order],
        ev_step=step_ids[order],
        v_last=[0.0] * len(config.books),
        steps_done=[0] * len(config.books),
        last_F=[0.0] * len(config.books),
        recorded_t=[[] for _ in config.books],
        recorded_p=[[] for _ in config.books],
        shock_queue=shock_queue,
        snapshots=[],
    )


def _force_increment(system: CoupledSystem, j: int, t_new: float, dt: float) -> float:
    """Brownian potential increment seen by book ``j`` over its step."""
    dyn = system.config.dynamics
    if dyn.force_mode == "constant":
        return 0.0
    if dyn.sigma_v == 0.0:
        return 0.0
    if dyn.force_mode == "independent":
        return float(system.rng.normal(0.0, dyn.sigma_v * np.sqrt(dt)))
    # shared: advance the single potential to the event time, then difference
    if t_new > system.v_time:
        system.v_value += float(
            system.rng.normal(0.0, dyn.sigma_v * np.sqrt(t_new - system.v_time))
        )
        system.v_time = t_new
    dv = system.v_value - system.v_last[j]
    system.v_last[j] = system.v_value
    return dv


def step(system: CoupledSystem, rng: np.random.Generator | None = None) -> CoupledSystem:
    """Advance the earliest pending book event; mutates and returns the system."""
    if not system.has_events():
        raise SimulationError("no events left in the schedule")
    if rng is not None:
        system.rng = rng

    cfg = system.config
    lat = cfg.lattice
    dyn = cfg.dynamics
    e = system.next_event
    j = int(system.ev_book[e])
    n = int(system.ev_step[e])
    t_new = float(system.ev_time[e])
    system.next_event = e + 1

    tg = system.grids[j]
    t_prev = float(tg.t[n - 1])
    dt = float(tg.dt[n - 1])
    dxn = float(tg.dx[n - 1])
    book = system.books[j]
    hist = system.histories[j]

    # The newest slice's off-lattice shift depends on the step being taken,
    # so it is finalized only now.
    sym, anti = _slice_parts(book.phi, dxn, lat.dx, lat.r)
    hist.push(n - 1, t_prev, sym, anti)

    dv = _force_increment(system, j, t_new, dt)
    if dyn.force_mode == "constant":
        f_bias = float(np.clip(dyn.f_const, -lat.r, lat.r))
    else:
        f_bias = drift_coefficient(dv, dt, dxn, kappa=dyn.kappa, r=lat.r)
    system.last_F[j] = f_bias

    mem_sym, mem_anti = hist.weighted_sums(n, t_prev, system.kernel, dyn.nu)

    creation = source_term(system.grid, book.price, book.params.lam, book.params.mu)
    if dyn.coupling and len(system.books) > 1:
        cutoff = COUPLING_GAP_FRACTION * lat.dx
        for k, other in enumerate(system.books):
            if k == j:
                continue
            creation = creation + coupling_term(
                system.grid, book.price, other.price,
                book.params.lam, book.params.mu, cutoff,
            )

    phi_new = (
        mem_sym
        + f_bias * mem_anti
        + np.exp(-dyn.nu * dt) * book.phi
        + creation * dt
    )
    phi_new[0] = 0.0
    phi_new[-1] = 0.0
    book.phi = phi_new

    queue = system.shock_queue[j]
    while queue and queue[0].time <= t_new:
        apply_shock(book, queue.pop(0), system.grid)

    try:
        book.price = extract_price(book, system.grid)
    except OneSidedBookError as err:
        raise SimulationError(
            f"price extraction failed for book {j} at t={t_new:.6g}",
            snapshot={
                "book": j,
                "step": n,
                "time": t_new,
                "phi": book.phi.copy(),
                "price": book.price,
            },
        ) from err

    system.steps_done[j] = n
    system.clock = t_new

    if n >= cfg.run.burn_in:
        system.recorded_t[j].append(t_new)
        system.recorded_p[j].append(book.price)
    every = cfg.run.snapshot_every
    if every and n % every == 0:
        system.snapshots.append((j, t_new, book.phi.copy()))
    return system


def paths(system: CoupledSystem) -> list[PricePath]:
    """Recorded post-burn-in price paths, one per book."""
    out = []
    for j in range(len(system.books)):
        out.append(
            PricePath(
                t=np.asarray(system.recorded_t[j]),
                p=np.asarray(system.recorded_p[j]),
                book_id=j,
            )
        )
    return out


def simulate(
    config: RunConfig, horizon: float | None = None, seed: int | None = None
) -> list[PricePath]:
    """Run burn-in plus recording over the full horizon; deterministic per seed."""
    system = init_system(config, horizon=horizon, seed=seed)
    if config.run.burn_in == 0:
        for j, book in enumerate(system.books):
            system.recorded_t[j].append(0.0)
            system.recorded_p[j].append(book.price)
    while system.has_events():
        step(system)
    return paths(system)


def measure_impact(
    config: RunConfig,
    q_values,
    seed: int | None = None,
) -> list[tuple[float, float]]:
    """Price response to shocks of each size in ``q_values``.

    Each shocked run shares its seed (and therefore clocks and noise) with a
    single no-shock baseline, so the common wander cancels in the
    difference. The response is averaged over a window of events starting
    ``settle_events`` after the shock: long enough for the injected bump
    itself to decay, short enough that the displacement it caused is still
    present (the matched paths slowly re-synchronize under the shared
    force, so an arbitrarily late window would always read zero).
    """
    seed = config.run.seed if seed is None else seed
    imp = config.impact
    dt_bar = base_dt(config.lattice, paper_compat=config.dynamics.paper_dt_compat)
    shock_time = imp.time
    if shock_time is None:
        shock_time = (config.run.burn_in + 10) * dt_bar
    horizon = shock_time + (imp.settle_events + imp.window_events + 20) * dt_bar * 1.25

    base_cfg = replace(config, shocks=())
    baseline = simulate(base_cfg, horizon=horizon, seed=seed)[0]
    after_shock = baseline.t >= shock_time
    if not np.any(after_shock):
        raise ConfigurationError("shock time falls after the recorded horizon")
    i0 = int(np.argmax(after_shock))
    tail = slice(i0 + imp.settle_events, i0 + imp.settle_events + imp.window_events)
    if len(baseline.t[tail]) < imp.window_events:
        raise ConfigurationError("averaging window extends past the recorded horizon")
    base_level = float(np.mean(baseline.p[tail]))

    from .config import ShockSpec

    rows = []
    for q in q_values:
        if q == 0.0:
            rows.append((0.0, 0.0))
            continue
        shocked_cfg = replace(
            config,
            shocks=(
                ShockSpec(book=0, size=float(q), location=imp.location, time=shock_time),
            ),
        )
        path = simulate(shocked_cfg, horizon=horizon, seed=seed)[0]
        rows.append((float(q), float(np.mean(path.p[tail]) - base_level)))
    return rows
