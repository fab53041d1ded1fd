"""Sibuya waiting-time distribution and the discrete memory kernel.

The waiting-time law has mass ``psi(1) = alpha`` and ratio recurrence
``psi(n) = psi(n-1) * (n - 1 - alpha) / n``; its survival function decays
like ``n**-alpha``. The memory kernel ``K`` is the deconvolution of ``psi``
by the survival function, ``psi = K * Phi``, which is the weight sequence
coupling the current density update to the stored history. At ``alpha = 1``
the law is memoryless and ``K`` collapses to a single unit weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ConfigurationError(f"alpha must be in (0, 1], got {alpha}")


def sibuya(alpha: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Probability masses ``psi(1..n)`` and survival values ``Phi(0..n)``.

    ``Phi(0) = 1`` and ``Phi(k) = Phi(k-1) - psi(k)``.
    """
    _check_alpha(alpha)
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    psi = np.empty(n)
    psi[0] = alpha
    for k in range(1, n):
        # psi index k corresponds to waiting time k + 1
        psi[k] = psi[k - 1] * (k - alpha) / (k + 1)
    phi = np.empty(n + 1)
    phi[0] = 1.0
    phi[1:] = 1.0 - np.cumsum(psi)
    return psi, phi


def memory_kernel(alpha: float, n: int) -> np.ndarray:
    """Kernel weights ``K(1..n)`` defined by the deconvolution ``psi = K * Phi``.

    Forward recurrence: ``K(1) = psi(1) = alpha`` and
    ``K(m) = psi(m) - sum_{j<m} K(j) * Phi(m - j)``.
    """
    psi, phi = sibuya(alpha, n)
    k = np.empty(n)
    k[0] = psi[0]
    for m in range(1, n):
        # Phi(m - j) for j = 1..m-1 maps to phi[m], .., phi[1] against k[0..m-1]
        k[m] = psi[m] - float(np.dot(k[:m], phi[m:0:-1]))
    return k


@dataclass(frozen=True)
class KernelTable:
    """Precomputed Sibuya law and memory kernel, truncated to a window.

    Immutable after construction; safe to share across threads. ``window``
    is the number of retained kernel weights: history older than ``window``
    steps drops out of the update sum.
    """

    alpha: float
    K: np.ndarray
    psi: np.ndarray
    phi: np.ndarray

    @property
    def window(self) -> int:
        return len(self.K)


def build_kernel_table(
    alpha: float, window: int = 512, tail_cutoff: float = 1e-10
) -> KernelTable:
    """Build a :class:`KernelTable` truncated at ``window`` weights.

    The kernel is computed out to ``window`` terms and then shortened at the
    first index where ``|K|`` stays below ``tail_cutoff``; the memoryless
    ``alpha = 1`` case truncates to a single weight.
    """
    _check_alpha(alpha)
    if window < 1:
        raise ConfigurationError(f"window must be >= 1, got {window}")
    psi, phi = sibuya(alpha, window)
    k = memory_kernel(alpha, window)
    small = np.nonzero(np.abs(k) >= tail_cutoff)[0]
    keep = int(small[-1]) + 1 if small.size else 1
    return KernelTable(alpha=alpha, K=k[:keep], psi=psi[:keep], phi=phi[: keep + 1])


def kernel_rows(table: KernelTable):
    """Yield (n, psi, Phi, K) rows for the diagnostic CSV dump."""
    for i in range(table.window):
        yield i + 1, table.psi[i], table.phi[i + 1], table.K[i]
