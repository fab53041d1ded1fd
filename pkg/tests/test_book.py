import numpy as np
import pytest

from coupledlob.book import (
    BookParams,
    BookState,
    COUPLING_GAP_FRACTION,
    Shock,
    apply_shock,
    balance_profile,
    coupling_term,
    extract_price,
    gaussian_bump,
    init_book,
    source_term,
    zero_crossings,
)
from coupledlob.exceptions import ConfigurationError, OneSidedBookError


def test_book_params_validation():
    BookParams(lam=0.0)  # transport-only runs are allowed
    with pytest.raises(ConfigurationError):
        BookParams(lam=-0.1)
    with pytest.raises(ConfigurationError):
        BookParams(mu=0.0)
    with pytest.raises(ConfigurationError):
        BookParams(nu=-1.0)


def test_source_term_hand_values():
    grid = np.array([228.0, 230.0, 232.0])
    s = source_term(grid, 230.0, lam=1.0, mu=0.1)
    # -lam * mu * y * exp(-mu y^2) at y = -2, 0, 2
    expected = 0.2 * np.exp(-0.4)
    assert s[1] == 0.0
    assert s[0] == pytest.approx(expected, rel=1e-14)
    assert s[2] == pytest.approx(-expected, rel=1e-14)


def test_source_term_is_odd_and_net_zero():
    grid = np.linspace(200.0, 260.0, 601)
    s = source_term(grid, 230.0, lam=1.3, mu=0.1)
    assert np.allclose(s, -s[::-1], rtol=0, atol=1e-15)
    # bids deposited below the price, asks above
    assert np.all(s[grid < 230.0] > 0)
    assert np.all(s[grid > 230.0] < 0)
    assert abs(np.trapezoid(s, grid)) < 1e-12


def test_balance_profile_is_source_over_decay():
    grid = np.linspace(200.0, 260.0, 241)
    params = BookParams(lam=1.0, mu=0.1, nu=14.0, p0=230.0)
    prof = balance_profile(grid, params)
    assert np.allclose(prof, source_term(grid, 230.0, 1.0, 0.1) / 14.0, rtol=1e-15)
    # the nu floor guards the nu -> 0 limit
    free = balance_profile(grid, BookParams(lam=1.0, mu=0.1, nu=0.0, p0=230.0))
    assert np.allclose(free, source_term(grid, 230.0, 1.0, 0.1), rtol=1e-15)


def test_init_book_puts_the_price_at_p0():
    grid = 130.0 + 0.5 * np.arange(401)
    state = init_book(grid, BookParams())
    assert state.price == 230.0
    assert state.phi[0] == 0.0 and state.phi[-1] == 0.0
    with pytest.raises(ConfigurationError):
        init_book(grid, BookParams(p0=500.0))


def test_gaussian_bump_integrates_to_volume():
    grid = np.linspace(0.0, 10.0, 101)
    bump = gaussian_bump(grid, center=5.0, sigma=0.5, volume=0.25)
    dx = grid[1] - grid[0]
    assert bump.sum() * dx == pytest.approx(0.25, rel=1e-12)
    with pytest.raises(ConfigurationError):
        gaussian_bump(grid, center=5000.0, sigma=0.5, volume=0.25)


def test_zero_crossings_hand_cases():
    grid = np.array([0.0, 1.0])
    assert list(zero_crossings(np.array([1.0, -1.0]), grid)) == [0.5]
    # asymmetric bracket: crossing at a / (a - b) of the way across
    assert zero_crossings(np.array([2.0, -1.0]), grid)[0] == pytest.approx(
        2.0 / 3.0, rel=1e-15
    )
    # exact zero on a node is one crossing, not two
    grid3 = np.array([0.0, 1.0, 2.0])
    hits = zero_crossings(np.array([1.0, 0.0, -1.0]), grid3)
    assert list(hits) == [1.0]


def test_zero_crossings_ignores_rounding_noise():
    grid = np.arange(6, dtype=float)
    phi = np.array([1e-15, -1e-15, 1e-15, 1.0, -1.0, -2.0])
    hits = zero_crossings(phi, grid)
    # only the macroscopic sign change survives the relative floor
    assert len(hits) == 1
    assert 3.0 < hits[0] < 4.0


def test_zero_crossings_excludes_the_boundary():
    grid = np.array([0.0, 1.0, 2.0])
    assert len(zero_crossings(np.array([0.0, -1.0, -2.0]), grid)) == 0
    assert len(zero_crossings(np.array([2.0, 1.0, 0.0]), grid)) == 0


def test_extract_price_picks_crossing_nearest_previous_price():
    grid = np.arange(0.0, 11.0)
    # sign pattern with crossings at 2.5, 5.5, and 8.5
    phi = np.array([1.0, 1, 1, -1, -1, -1, 1, 1, 1, -1, -1])
    state = BookState(phi=phi, price=5.2, params=BookParams(p0=5.0))
    assert extract_price(state, grid) == 5.5
    assert state.diagnostics["multiple_crossings"] == 1
    state.price = 8.8
    assert extract_price(state, grid) == 8.5


def test_extract_price_one_sided_book_raises():
    grid = np.arange(0.0, 11.0)
    state = BookState(phi=np.ones(11), price=5.0, params=BookParams(p0=5.0))
    with pytest.raises(OneSidedBookError):
        extract_price(state, grid)


def test_extract_price_far_from_search_window():
    # previous price far from the sole crossing: the full-grid fallback
    # must still find it
    grid = np.arange(0.0, 201.0)
    phi = np.ones(201)
    phi[100:] = -1.0
    state = BookState(phi=phi, price=5.0, params=BookParams(p0=5.0))
    assert extract_price(state, grid) == 99.5


def test_coupling_presses_the_upper_book_down():
    grid = np.linspace(100.0, 140.0, 801)
    cut = COUPLING_GAP_FRACTION * (grid[1] - grid[0])
    down = coupling_term(grid, 122.0, 118.0, lam=1.0, mu=0.1, gap_cutoff=cut)
    assert np.all(down <= 0)
    assert down.min() < 0
    up = coupling_term(grid, 118.0, 122.0, lam=1.0, mu=0.1, gap_cutoff=cut)
    assert np.all(up >= 0)
    assert up.max() > 0


def test_coupling_is_odd_under_mirroring():
    # reflect prices about the grid centre: the term flips sign and side
    centre = 120.0
    grid = np.linspace(100.0, 140.0, 801)
    cut = COUPLING_GAP_FRACTION * (grid[1] - grid[0])
    a = coupling_term(grid, centre + 1.0, centre - 2.0, 1.0, 0.1, cut)
    b = coupling_term(grid, centre - 1.0, centre + 2.0, 1.0, 0.1, cut)
    assert np.allclose(a, -b[::-1], rtol=0, atol=1e-14)


def test_coupling_dead_zone():
    grid = np.linspace(100.0, 140.0, 801)
    dx = grid[1] - grid[0]
    cut = COUPLING_GAP_FRACTION * dx
    quiet = coupling_term(grid, 120.0, 120.0 + 0.5 * cut, 1.0, 0.1, cut)
    assert np.all(quiet == 0.0)
    live = coupling_term(grid, 120.0, 120.0 + 2.0 * cut, 1.0, 0.1, cut)
    assert np.any(live != 0.0)


def test_apply_shock_adds_the_requested_volume():
    grid = 130.0 + 0.5 * np.arange(401)
    state = init_book(grid, BookParams())
    dx = 0.5
    before = state.phi.sum() * dx
    apply_shock(state, Shock(size=0.01, location=-1.0), grid)
    after = state.phi.sum() * dx
    assert after - before == pytest.approx(0.01, rel=1e-10)


def test_apply_shock_zero_size_is_identity():
    grid = 130.0 + 0.5 * np.arange(401)
    state = init_book(grid, BookParams())
    phi0 = state.phi.copy()
    apply_shock(state, Shock(size=0.0, location=-1.0), grid)
    assert np.array_equal(state.phi, phi0)


def test_apply_shock_guards():
    grid = 130.0 + 0.5 * np.arange(401)
    state = init_book(grid, BookParams())
    with pytest.raises(ConfigurationError):
        apply_shock(state, Shock(size=0.01, location=500.0), grid)
    with pytest.raises(ConfigurationError):
        # bigger than the whole resting book
        apply_shock(state, Shock(size=10.0, location=-1.0), grid)
