import numpy as np
import pytest
from scipy.special import gammaln

from coupledlob.kernels import (
    KernelTable,
    build_kernel_table,
    kernel_rows,
    memory_kernel,
    sibuya,
)


def test_sibuya_hand_values_alpha_half():
    psi, phi = sibuya(0.5, 3)
    assert psi == pytest.approx([0.5, 0.125, 0.0625], rel=1e-15)
    assert phi == pytest.approx([1.0, 0.5, 0.375, 0.3125], rel=1e-15)


def test_sibuya_matches_gamma_closed_form():
    # psi(n) = alpha * Gamma(n - alpha) / (Gamma(1 - alpha) * n!)
    # phi(n) = Gamma(n + 1 - alpha) / (Gamma(1 - alpha) * n!)
    for alpha in (0.4, 0.57, 0.8, 0.99):
        n = 400
        psi, phi = sibuya(alpha, n)
        ns = np.arange(1, n + 1)
        log_psi = (
            np.log(alpha) + gammaln(ns - alpha) - gammaln(1.0 - alpha) - gammaln(ns + 1)
        )
        assert np.allclose(psi, np.exp(log_psi), rtol=1e-11, atol=0)
        log_phi = gammaln(ns + 1 - alpha) - gammaln(1.0 - alpha) - gammaln(ns + 1)
        assert np.allclose(phi[1:], np.exp(log_phi), rtol=1e-10, atol=1e-15)
        assert phi[0] == 1.0


def test_sibuya_trial_product_form():
    # psi(n) = (alpha / n) * prod_{k<n} (1 - alpha / k)
    alpha = 0.57
    psi, _ = sibuya(alpha, 50)
    for n in range(1, 51):
        expected = alpha / n * np.prod(1.0 - alpha / np.arange(1, n))
        assert psi[n - 1] == pytest.approx(expected, rel=1e-13)


def test_sibuya_is_a_probability_sequence():
    for alpha in (0.4, 0.7):
        psi, phi = sibuya(alpha, 2000)
        assert np.all(psi > 0)
        assert np.all(np.diff(psi) < 0)
        assert np.all(phi[:-1] >= phi[1:])
        # partial sums approach 1 from below
        assert 0.0 < psi.sum() <= 1.0 + 1e-12
    # the memoryless edge: all mass on the first step
    psi, phi = sibuya(1.0, 10)
    assert psi[0] == 1.0
    assert np.all(psi[1:] == 0.0)
    assert np.all(phi[1:] == 0.0)


def test_memory_kernel_deconvolves_psi():
    # the kernel is defined by psi = K * Phi; convolving back must recover psi
    for alpha in (0.4, 0.57, 0.8, 1.0):
        n = 512
        psi, phi = sibuya(alpha, n)
        k = memory_kernel(alpha, n)
        recon = np.convolve(k, phi)[:n]
        assert np.max(np.abs(recon - psi)) < 1e-12


def test_memoryless_limit_has_single_tap():
    k = memory_kernel(1.0, 64)
    assert k[0] == 1.0
    assert np.max(np.abs(k[1:])) < 1e-12


def test_kernel_table_truncates_dead_tail():
    table = build_kernel_table(1.0, window=512)
    assert isinstance(table, KernelTable)
    assert table.window == 1
    assert table.K[0] == 1.0


def test_kernel_table_keeps_live_tail():
    table = build_kernel_table(0.57, window=256)
    assert table.window > 100
    assert table.alpha == 0.57
    assert len(table.K) == table.window
    # first weight is alpha itself
    assert table.K[0] == pytest.approx(0.57, rel=1e-15)


def test_kernel_rows_are_one_indexed():
    table = build_kernel_table(0.7, window=8)
    rows = list(kernel_rows(table))
    assert rows[0][0] == 1
    n, psi1, phi1, k1 = rows[0]
    assert psi1 == table.psi[0]
    assert k1 == table.K[0]
    assert len(rows) == table.window
