"""Single order book density: creation terms, shocks, and mid-price extraction.

The signed density ``phi`` lives on the background lattice: positive values
are bids (below the price), negative values are asks. The mid-price is the
interior zero crossing of ``phi``. Creation is split into a symmetric source
centred on the book's own price, a pairs-trading coupling driven by the price
gap to a counterpart book, and optional shock injections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, OneSidedBookError

# Price-gap cutoff below which the coupling is treated as zero, as a fraction
# of the grid spacing. Avoids dividing by a vanishing gap.
COUPLING_GAP_FRACTION = 0.1


@dataclass(frozen=True)
class BookParams:
    """Per-book creation/cancellation parameters.

    ``lam`` is the source intensity (orders per unit time), ``mu`` the source
    rate (inverse squared log-price), ``nu`` the cancellation rate, ``p0``
    the initial price.
    """

    lam: float = 1.0
    mu: float = 0.1
    nu: float = 14.0
    p0: float = 230.0

    def __post_init__(self) -> None:
        # lam = 0 switches the source off entirely (transport-only runs)
        if not self.lam >= 0:
            raise ConfigurationError(f"lambda must be >= 0, got {self.lam}")
        if not self.mu > 0:
            raise ConfigurationError(f"mu must be > 0, got {self.mu}")
        if self.nu < 0:
            raise ConfigurationError(f"nu must be >= 0, got {self.nu}")


@dataclass
class BookState:
    """Mutable state of one book: density on the lattice plus its mid-price."""

    phi: np.ndarray
    price: float
    params: BookParams
    diagnostics: dict = field(default_factory=dict)

    def copy(self) -> "BookState":
        return BookState(
            phi=self.phi.copy(),
            price=self.price,
            params=self.params,
            diagnostics=dict(self.diagnostics),
        )


@dataclass(frozen=True)
class Shock:
    """An injected order bump: signed volume, offset from the price, and time."""

    size: float
    location: float
    time: float = 0.0


def source_term(
    grid: np.ndarray, price: float, lam: float, mu: float
) -> np.ndarray:
    """Lit-book deposition rate ``-lam * mu * (x - p) * exp(-mu * (x - p)^2)``.

    Odd about the price: bids are deposited below it, asks above, so the net
    created volume is zero and the boundary values vanish.
    """
    y = grid - price
    return -lam * mu * y * np.exp(-mu * y * y)


def _g(y: np.ndarray, lam: float, mu: float) -> np.ndarray:
    return -lam * mu * y * np.exp(-mu * y * y)


def coupling_term(
    grid: np.ndarray,
    p_own: float,
    p_other: float,
    lam: float,
    mu: float,
    gap_cutoff: float,
) -> np.ndarray:
    """Pairs-trader deposition rate driven by the price gap ``p_own - p_other``.

    On the side of ``p_own`` facing away from the counterpart the profile is
    ``g(x - p_own) * |gap|``; on the facing side the argument is rescaled by
    ``1 / |gap|`` and the sign flipped, with the amplitude likewise scaled
    by ``|gap|``. Both arms then press the price toward the counterpart with
    strength proportional to the gap: the book above the other receives sell
    pressure on both sides of its price, the book below receives buy
    pressure, and the whole term is odd under mirroring the configuration.
    Gaps below ``gap_cutoff`` give an identically zero term.
    """
    gap = p_own - p_other
    out = np.zeros_like(grid)
    if abs(gap) < gap_cutoff:
        return out
    y = grid - p_own
    size = abs(gap)
    if gap > 0:
        above = y > 0
        out[above] = _g(y[above], lam, mu) * size
        out[~above] = -_g(y[~above] / size, lam, mu) * size
    else:
        below = y <= 0
        out[below] = _g(y[below], lam, mu) * size
        out[~below] = -_g(y[~below] / size, lam, mu) * size
    return out


def gaussian_bump(
    grid: np.ndarray, center: float, sigma: float, volume: float
) -> np.ndarray:
    """Gaussian density profile normalized so the trapezoid integral is ``volume``."""
    shape = np.exp(-0.5 * ((grid - center) / sigma) ** 2)
    dx = grid[1] - grid[0]
    total = shape.sum() * dx
    if total <= 0:
        raise ConfigurationError("bump support does not overlap the grid")
    return volume * shape / total


def apply_shock(state: BookState, shock: Shock, grid: np.ndarray) -> BookState:
    """Add a shock bump of integrated volume ``shock.size`` to the density.

    The bump is a Gaussian of standard deviation one grid spacing centred at
    ``price + shock.location``; volume is conserved exactly by discrete
    normalization. Mutates and returns ``state``.
    """
    if shock.size == 0:
        return state
    center = state.price + shock.location
    if not grid[0] <= center <= grid[-1]:
        raise ConfigurationError(
            f"shock location {center} outside grid [{grid[0]}, {grid[-1]}]"
        )
    dx = grid[1] - grid[0]
    total_volume = float(np.abs(state.phi).sum() * dx)
    if abs(shock.size) >= total_volume > 0:
        raise ConfigurationError(
            f"shock size {shock.size} not below total book volume {total_volume}"
        )
    state.phi = state.phi + gaussian_bump(grid, center, dx, shock.size)
    return state


def zero_crossings(phi: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Interior x-positions where the density changes sign (or touches zero).

    Sign changes whose bracketing values are both below a relative noise
    floor are ignored: far from the book the density decays to rounding
    dust whose sign flickers, and the pinned boundary zeros must not read
    as crossings. Results are restricted to the open interior of the grid.
    """
    mag = np.abs(phi)
    floor = 1e-9 * mag.max()
    sgn = np.sign(phi)
    # sign-change pairs: strictly opposite signs, or exactly one zero;
    # equal signs (including a zero-zero pair) are not crossings
    mask = (sgn[:-1] != sgn[1:]) & (np.maximum(mag[:-1], mag[1:]) > floor)
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return np.empty(0)
    a = phi[idx]
    b = phi[idx + 1]
    # a != b on every selected pair, so the division is safe
    dx = grid[1] - grid[0]
    out = grid[idx] + (a / (a - b)) * dx
    # A zero sitting exactly on a grid point shows up in two adjacent
    # pairs; the positions are already sorted, so deduplicate neighbours.
    if out.size > 1:
        out = out[np.concatenate(([True], out[1:] != out[:-1]))]
    return out[(out > grid[0]) & (out < grid[-1])]


_SEARCH_CELLS = 25


def extract_price(state: BookState, grid: np.ndarray) -> float:
    """Mid-price: the zero crossing of ``phi`` nearest the previous price.

    Raises :class:`OneSidedBookError` when the density has no sign change.
    Multiple crossings are resolved toward the previous price and counted in
    ``state.diagnostics['multiple_crossings']``.
    """
    # The nearest crossing almost always sits within a few cells of the
    # previous price; scan a local window first and fall back to the full
    # grid only when the window is empty. Any crossing found inside the
    # window is closer than everything outside it, so the result is the
    # same as a full scan.
    i0 = int(np.searchsorted(grid, state.price))
    lo = max(i0 - _SEARCH_CELLS, 0)
    hi = min(i0 + _SEARCH_CELLS, len(grid))
    if hi - lo > 1:
        seg = state.phi[lo:hi]
        idx = np.flatnonzero(seg[:-1] * seg[1:] < 0.0)
        if idx.size == 1:
            # single strict sign change: compute the crossing with scalar
            # arithmetic, matching the vector formula bit for bit
            k = int(idx[0])
            a = float(seg[k])
            b = float(seg[k + 1])
            if max(abs(a), abs(b)) > 1e-9 * np.abs(seg).max():
                x = float(grid[lo + k] + (a / (a - b)) * (grid[lo + 1] - grid[lo]))
                if grid[lo] < x < grid[hi - 1]:
                    return x
        crossings = zero_crossings(seg, grid[lo:hi])
    else:
        crossings = ()
    if len(crossings) == 0:
        crossings = zero_crossings(state.phi, grid)
        if crossings.size == 0:
            raise OneSidedBookError(
                "book one-sided: density has no interior zero crossing"
            )
    if crossings.size == 1:
        return float(crossings[0])
    state.diagnostics["multiple_crossings"] = (
        state.diagnostics.get("multiple_crossings", 0) + 1
    )
    return float(crossings[np.argmin(np.abs(crossings - state.price))])


def balance_profile(
    grid: np.ndarray, params: BookParams, nu_floor: float = 1.0
) -> np.ndarray:
    """Creation/annihilation balance ``s(x; p0) / max(nu, nu_floor)``.

    Used as the initial density: it is stationary under source plus decay and
    crosses zero exactly at ``p0``.
    """
    nu_eff = max(params.nu, nu_floor)
    return source_term(grid, params.p0, params.lam, params.mu) / nu_eff


def init_book(
    grid: np.ndarray, params: BookParams, nu_floor: float = 1.0
) -> BookState:
    """Book at the balance profile with its price at ``p0``."""
    span = (grid[0], grid[-1])
    if not span[0] < params.p0 < span[1]:
        raise ConfigurationError(f"p0 {params.p0} outside grid span {span}")
    phi = balance_profile(grid, params, nu_floor)
    phi[0] = 0.0
    phi[-1] = 0.0
    state = BookState(phi=phi, price=params.p0, params=params)
    state.price = extract_price(state, grid)
    return state
