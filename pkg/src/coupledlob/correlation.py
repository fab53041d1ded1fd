"""Correlation of asynchronous price paths across sampling scales.

Return increments observed at non-uniform event times are pushed through a
type-1 non-uniform FFT (Gaussian gridding onto an oversampled uniform grid,
FFT, deconvolution), and integrated covariances come from the sharp-cutoff
Fourier estimator: cov = 2*pi/(2N+1) * Re sum_{|k|<=N} c_k(a) conj(c_k(b)).
The frequency cutoff N maps to an averaging scale via N = floor(T / (2 dt)),
so sweeping dt traces out a correlation-versus-scale (Epps) curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import fft, next_fast_len

from .exceptions import ConfigurationError


@dataclass(frozen=True)
class FourierCoefficients:
    """Fourier coefficients of return increments at integer frequencies -N..N."""

    k: np.ndarray
    c_k: np.ndarray
    T: float

    @property
    def N(self) -> int:
        return (len(self.k) - 1) // 2


@dataclass(frozen=True)
class EppsCurve:
    """Correlation estimates per sampling scale, averaged over replications."""

    scales: np.ndarray
    rho: np.ndarray
    stderr: np.ndarray
    reps: int
    per_rep: np.ndarray = field(repr=False, default=None)


def fgg_nufft(
    times: np.ndarray,
    values: np.ndarray,
    N: int,
    T: float | None = None,
    oversampling: float = 2.0,
    spread_width: int = 12,
) -> FourierCoefficients:
    """Coefficients ``c_k = sum_j v_j exp(-i k 2 pi t_j / T)`` for k = -N..N.

    Each source point is spread onto the ``spread_width`` nearest points on
    either side of a uniform grid oversampled by ``oversampling`` using a
    periodic Gaussian, followed by one FFT and division by the Gaussian's
    transform. Wider spreading buys accuracy: width 12 measures ~7e-11
    against the direct sum on 200-point inputs, width 24 ~2e-11
    (rounding-dominated).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) == 0:
        raise ConfigurationError("empty input to nufft")
    if len(times) != len(values):
        raise ConfigurationError("times and values length mismatch")
    if N < 1:
        raise ConfigurationError("frequency cutoff N must be >= 1")
    if oversampling <= 1.0:
        raise ConfigurationError("oversampling must exceed 1")
    if T is None:
        T = float(times.max())
    if T <= 0:
        T = 1.0
    if times.min() < 0 or times.max() > T * (1 + 1e-12):
        raise ConfigurationError("times must lie within [0, T]")

    if spread_width < 1:
        raise ConfigurationError("spread_width must be at least 1")
    modes = 2 * N + 1
    half_width = spread_width
    grid_size = next_fast_len(
        max(int(np.ceil(oversampling * modes)), 2 * half_width + 2)
    )
    h = 2.0 * np.pi / grid_size
    tau = (
        np.pi
        * half_width
        / (modes**2 * oversampling * (oversampling - 0.5))
    )

    x = (2.0 * np.pi / T) * times
    nearest = np.rint(x / h).astype(np.int64)
    offsets = np.arange(-half_width, half_width + 1)
    idx = (nearest[:, None] + offsets[None, :]) % grid_size
    # distance to the unwrapped grid point: periodic images handled by the
    # index wrap while the Gaussian argument stays unwrapped
    dist = x[:, None] - h * (nearest[:, None] + offsets[None, :])
    taps = values[:, None] * np.exp(-(dist**2) / (4.0 * tau))
    spread = np.bincount(idx.ravel(), weights=taps.ravel(), minlength=grid_size)

    transform = fft(spread)
    k = np.arange(-N, N + 1)
    c = transform[k % grid_size] * (h / (2.0 * np.sqrt(np.pi * tau))) * np.exp(
        k.astype(float) ** 2 * tau
    )
    return FourierCoefficients(k=k, c_k=c, T=T)


def direct_nudft(
    times: np.ndarray, values: np.ndarray, N: int, T: float | None = None
) -> FourierCoefficients:
    """O(N * len(times)) reference sum, for small sizes and cross-checks."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) == 0:
        raise ConfigurationError("empty input to nudft")
    if T is None:
        T = float(times.max())
    if T <= 0:
        T = 1.0
    k = np.arange(-N, N + 1)
    phases = np.exp(-1j * np.outer(k, (2.0 * np.pi / T) * times))
    return FourierCoefficients(k=k, c_k=phases @ values.astype(complex), T=T)


def _return_coefficients(path, N, t0, T, oversampling, spread_width):
    if len(path.t) < 2:
        raise ConfigurationError("need at least 2 events for return increments")
    # increments attributed to the right endpoint of their interval
    return fgg_nufft(
        path.t[1:] - t0,
        np.diff(path.p),
        N,
        T=T,
        oversampling=oversampling,
        spread_width=spread_width,
    )


def fourier_covariance(
    path_a,
    path_b,
    N: int,
    oversampling: float = 2.0,
    spread_width: int = 12,
) -> tuple[float, float, float]:
    """Integrated covariance and variances of two paths at cutoff N."""
    t0 = min(path_a.t[0], path_b.t[0])
    T = max(path_a.t[-1], path_b.t[-1]) - t0
    if T <= 0:
        raise ConfigurationError("paths carry no time span")
    ca = _return_coefficients(path_a, N, t0, T, oversampling, spread_width)
    cb = _return_coefficients(path_b, N, t0, T, oversampling, spread_width)
    norm = 2.0 * np.pi / (2 * N + 1)
    cov = norm * float(np.real(np.sum(ca.c_k * np.conj(cb.c_k))))
    var_a = norm * float(np.sum(np.abs(ca.c_k) ** 2))
    var_b = norm * float(np.sum(np.abs(cb.c_k) ** 2))
    return cov, var_a, var_b


def correlation_at_scale(
    path_a, path_b, scale: float, oversampling: float = 2.0, spread_width: int = 12
) -> float:
    """Correlation estimate with cutoff ``N = floor(T / (2 scale))``."""
    t0 = min(path_a.t[0], path_b.t[0])
    T = max(path_a.t[-1], path_b.t[-1]) - t0
    N = int(np.floor(T / (2.0 * scale)))
    if N < 1:
        raise ConfigurationError(
            f"scale {scale} exceeds T/2 = {T / 2:.6g}; no admissible frequency"
        )
    cov, va, vb = fourier_covariance(
        path_a, path_b, N, oversampling=oversampling, spread_width=spread_width
    )
    if va <= 0 or vb <= 0:
        raise ConfigurationError("zero-variance path in correlation")
    rho = cov / np.sqrt(va * vb)
    if abs(rho) > 1.0 + 1e-6:
        raise ConfigurationError(f"correlation estimate {rho} outside [-1, 1]")
    return float(rho)


def epps_curve(
    pairs,
    scales,
    reps: int = 10,
    oversampling: float = 2.0,
    spread_width: int = 12,
) -> EppsCurve:
    """Correlation vs scale, averaged over replications.

    ``pairs`` is either a single (path_a, path_b) tuple (used once, reps
    ignored) or a callable ``rep_index -> (path_a, path_b)`` supplying one
    independent pair per replication.
    """
    scales = np.asarray(scales, dtype=float)
    if len(scales) == 0 or np.any(scales <= 0):
        raise ConfigurationError("scales must be positive")
    if np.any(np.diff(scales) <= 0):
        raise ConfigurationError("scales must be strictly increasing")
    if callable(pairs):
        factory = pairs
    else:
        pair = tuple(pairs)
        reps = 1
        factory = lambda _rep: pair
    if reps < 1:
        raise ConfigurationError("reps must be at least 1")

    table = np.empty((reps, len(scales)))
    for rep in range(reps):
        a, b = factory(rep)
        for s, scale in enumerate(scales):
            table[rep, s] = correlation_at_scale(
                a, b, scale, oversampling=oversampling, spread_width=spread_width
            )
    rho = table.mean(axis=0)
    if reps > 1:
        stderr = table.std(axis=0, ddof=1) / np.sqrt(reps)
    else:
        stderr = np.zeros_like(rho)
    return EppsCurve(scales=scales, rho=rho, stderr=stderr, reps=reps, per_rep=table)


def power_spectrum(
    path, N: int, oversampling: float = 2.0, spread_width: int = 12
) -> tuple[np.ndarray, np.ndarray, float]:
    """Periodogram of return increments plus a log-log trend slope.

    Returns (k, |c_k|^2) for k = 1..N and the OLS slope of log power against
    log k; near-zero slope means white increments, negative means decay.
    """
    if len(path.t) < 2:
        raise ConfigurationError("need at least 2 events for a spectrum")
    t0 = path.t[0]
    T = path.t[-1] - t0
    coeffs = fgg_nufft(
        path.t[1:] - t0,
        np.diff(path.p),
        N,
        T=T,
        oversampling=oversampling,
        spread_width=spread_width,
    )
    positive = coeffs.k > 0
    k = coeffs.k[positive]
    power = np.abs(coeffs.c_k[positive]) ** 2
    safe = np.maximum(power, 1e-300)
    slope = float(np.polyfit(np.log(k.astype(float)), np.log(safe), 1)[0])
    return k, power, slope


def brownian_pair(
    n: int,
    T: float,
    rho: float,
    seed: int | None = None,
    rate_ratio: float = 1.0,
):
    """Two correlated Brownian paths on independent exponential clocks.

    Null-case helper: ``rho`` is the correlation of the driving increments
    (0 gives independent paths). Returns two PricePath objects.
    """
    from .simulate import PricePath

    if not (-1.0 <= rho <= 1.0):
        raise ConfigurationError("rho must lie in [-1, 1]")
    rng = np.random.default_rng(seed)
    out = []
    # common fine grid carrying the latent correlated pair
    fine = 4 * n
    dt = T / fine
    z = rng.standard_normal((2, fine))
    z[1] = rho * z[0] + np.sqrt(1.0 - rho**2) * z[1]
    w = np.cumsum(z * np.sqrt(dt), axis=1)
    t_fine = dt * np.arange(1, fine + 1)
    for j in range(2):
        rate = (n / T) * (rate_ratio if j == 1 else 1.0)
        t = np.cumsum(rng.exponential(1.0 / rate, size=2 * n))
        t = t[t <= T]
        idx = np.searchsorted(t_fine, t)
        idx = np.clip(idx, 0, fine - 1)
        out.append(PricePath(t=t, p=w[j][idx], book_id=j))
    return out[0], out[1]
