"""Simulated minimum distance calibration of (D_alpha, nu, alpha).

The model is matched to an empirical return series through a battery of
nine summary statistics. An objective g'Wg, with g the gap between
averaged simulated moments and the empirical ones, is minimised by a
hybrid optimizer that interleaves single Nelder-Mead simplex moves with
single threshold-accepting moves under a geometrically cooling
threshold. Confidence intervals come from the Hessian of a local
quadratic surface fitted by least squares around the optimum, which
smooths simulation jaggedness and ignores constraint-penalty values.

Moment estimators (each a standard textbook form):

* mean, standard deviation (ddof=1), excess kurtosis (Fisher)
* Kolmogorov-Smirnov two-sample statistic against the reference returns
* Hurst exponent by aggregated variance: block means over size m have
  variance ~ m^(2H-2); H from the log-log slope
* GPH long-memory estimate d on |returns|: regression of the
  log-periodogram on log(4 sin^2(freq/2)) over the first sqrt(n)
  Fourier frequencies
* augmented Dickey-Fuller t statistic, constant term, one lag
* GARCH(1,1) persistence a+b by Gaussian quasi-maximum likelihood
* Hill tail-index estimate over the top 5% of |returns|

Reproducibility: every simulation seed is derived from the master seed
and the replication index alone, so the objective is a deterministic
function of theta (common random numbers across the whole search).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace as dc_replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize, signal, stats
from statsmodels.tsa.stattools import adfuller

from .config import RunConfig, with_theta
from .exceptions import ConfigurationError, DataError, SimulationError
from .lattice import base_dt
from .simulate import simulate

PARAM_NAMES = ("d_alpha", "nu", "alpha")
MOMENT_NAMES = (
    "mean",
    "std",
    "excess_kurtosis",
    "ks_stat",
    "hurst",
    "gph",
    "adf_stat",
    "garch_persistence",
    "hill",
)

# fewest returns a series may have before its moments are meaningless
MIN_RETURNS = 500

# objective assigned where the sampled clock yields too few events; large
# and shortfall-graded so the optimizer is pushed back toward viable theta
SHORTFALL_PENALTY = 1e8

# objective values at or above this are constraint penalties, not moment
# distances; interval estimation must not read them as curvature
PENALTY_WALL = 1e-2 * SHORTFALL_PENALTY

# simplex restart control: normalized-volume floor and the number of
# simplex moves to wait between restarts
RESTART_VOLUME = 1e-2
RESTART_COOLDOWN = 5


@dataclass(frozen=True)
class MomentVector:
    """The nine summary statistics of one return series."""

    mean: float
    std: float
    excess_kurtosis: float
    ks_stat: float
    hurst: float
    gph: float
    adf_stat: float
    garch_persistence: float
    hill: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in MOMENT_NAMES])


@dataclass(frozen=True)
class CalibrationResult:
    """Optimum, trace, and (optionally) confidence intervals.

    ``objective_trace[k]`` is the best objective seen up to iteration k
    (entry 0 is the initial simplex best), so the trace is
    non-increasing by construction. CI fields are filled by the full
    calibration pipeline and stay None when only the optimizer ran.
    """

    theta_hat: tuple
    objective_trace: np.ndarray
    ci_lower: Optional[tuple] = None
    ci_upper: Optional[tuple] = None
    replications: int = 0
    evaluations: int = 0
    initial_values: tuple = ()

    @property
    def best_objective(self) -> float:
        return float(self.objective_trace[-1])


def hurst_aggregated_variance(x) -> float:
    """Aggregated-variance Hurst estimate.

    Splits the series into blocks of size m, takes the variance of the
    block means for a log-spaced range of m, and reads H from the slope
    2H - 2 of log variance against log m.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 100:
        raise DataError("too few observations for a Hurst estimate")
    sizes = np.unique(np.geomspace(5, max(6, n // 10), 12).astype(int))
    log_m, log_v = [], []
    for m in sizes:
        nb = n // m
        if nb < 4:
            continue
        means = x[: nb * m].reshape(nb, m).mean(axis=1)
        v = means.var(ddof=1)
        if v > 0.0:
            log_m.append(np.log(m))
            log_v.append(np.log(v))
    if len(log_m) < 3:
        raise DataError("degenerate series: aggregated variances vanish")
    slope = np.polyfit(log_m, log_v, 1)[0]
    return float(1.0 + slope / 2.0)


def gph_estimate(x) -> float:
    """Log-periodogram regression estimate of the memory parameter d.

    Uses the first floor(sqrt(n)) Fourier frequencies; the regressor is
    log(4 sin^2(freq/2)) and d is minus the slope.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 100:
        raise DataError("too few observations for a GPH estimate")
    centered = x - x.mean()
    m = int(np.sqrt(n))
    freqs = 2.0 * np.pi * np.arange(1, m + 1) / n
    spectrum = np.abs(np.fft.rfft(centered)[1 : m + 1]) ** 2 / (2.0 * np.pi * n)
    keep = spectrum > 0.0
    if np.count_nonzero(keep) < 3:
        raise DataError("degenerate series: periodogram vanishes")
    reg = np.log(4.0 * np.sin(freqs[keep] / 2.0) ** 2)
    slope = np.polyfit(reg, np.log(spectrum[keep]), 1)[0]
    return float(-slope)


def adf_statistic(x) -> float:
    """Augmented Dickey-Fuller t statistic, constant term, one lag."""
    return float(adfuller(np.asarray(x, dtype=float), maxlag=1, autolag=None)[0])


def garch_persistence(x) -> float:
    """GARCH(1,1) persistence a + b by Gaussian quasi-likelihood.

    The series is standardised first (persistence is scale invariant),
    the variance recursion is seeded with the sample variance, and the
    negative log-likelihood is minimised with L-BFGS-B over
    (omega, a, b) with a, b in [0, 0.999].
    """
    x = np.asarray(x, dtype=float)
    if x.size < 100:
        raise DataError("too few observations for a GARCH fit")
    sd = x.std()
    if sd <= 0.0:
        raise DataError("degenerate series: zero variance")
    z2 = ((x - x.mean()) / sd) ** 2
    var0 = float(z2.mean())

    def nll(params):
        omega, a, b = params
        drive = omega + a * z2[:-1]
        tail, _ = signal.lfilter([1.0], [1.0, -b], drive, zi=np.array([b * var0]))
        sig2 = np.concatenate(([var0], tail))
        if np.any(sig2 <= 0.0) or not np.all(np.isfinite(sig2)):
            return 1e12
        return float(0.5 * np.sum(np.log(sig2) + z2 / sig2))

    res = optimize.minimize(
        nll,
        x0=np.array([0.1, 0.1, 0.8]),
        method="L-BFGS-B",
        bounds=[(1e-8, 10.0), (0.0, 0.999), (0.0, 0.999)],
    )
    return float(res.x[1] + res.x[2])


def hill_estimate(x, tail_fraction: float = 0.05) -> float:
    """Hill tail-index over the top ``tail_fraction`` of |x|."""
    a = np.sort(np.abs(np.asarray(x, dtype=float)))[::-1]
    a = a[a > 0.0]
    k = max(10, int(tail_fraction * a.size))
    if a.size <= k:
        raise DataError("too few non-zero observations for a Hill estimate")
    excess = np.log(a[:k]) - np.log(a[k])
    mean_excess = float(excess.mean())
    if mean_excess <= 0.0:
        raise DataError("degenerate tail: identical extreme values")
    return 1.0 / mean_excess


def moments(returns, reference=None) -> MomentVector:
    """The nine-statistic battery for one return series.

    ``reference`` supplies the comparison sample for the KS entry;
    without it (the reference series scoring itself) the KS distance
    is zero by definition.
    """
    returns = np.asarray(returns, dtype=float)
    if returns.size < MIN_RETURNS:
        raise DataError(
            f"need at least {MIN_RETURNS} returns for the moment battery, got {returns.size}"
        )
    sd = float(returns.std(ddof=1))
    if sd <= 0.0:
        raise DataError("degenerate series: zero variance")
    if reference is None:
        ks = 0.0
    else:
        ks = float(stats.ks_2samp(returns, np.asarray(reference, dtype=float)).statistic)
    return MomentVector(
        mean=float(returns.mean()),
        std=sd,
        excess_kurtosis=float(stats.kurtosis(returns)),
        ks_stat=ks,
        hurst=hurst_aggregated_variance(returns),
        gph=gph_estimate(np.abs(returns)),
        adf_stat=adf_statistic(returns),
        garch_persistence=garch_persistence(returns),
        hill=hill_estimate(returns),
    )


def bootstrap_weight(
    returns,
    block_length: int = 100,
    resamples: int = 1000,
    seed: int = 0,
    mode: str = "bootstrap",
) -> np.ndarray:
    """Weight matrix from a moving-block bootstrap of the moment vector.

    Resamples overlapping blocks of the empirical returns, recomputes
    the battery per resample, and inverts the resulting covariance.
    ``mode`` selects the full inverse covariance ("bootstrap"), the
    inverse of its diagonal ("diagonal"), or the identity. A singular
    or ill-conditioned covariance falls back to the identity with a
    warning.
    """
    dim = len(MOMENT_NAMES)
    if mode == "identity":
        return np.eye(dim)
    if mode not in ("bootstrap", "diagonal"):
        raise DataError(f"unknown weight mode {mode!r}")
    returns = np.asarray(returns, dtype=float)
    n = returns.size
    block = min(block_length, n)
    n_blocks = -(-n // block)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 987654321]))
    rows = np.empty((resamples, dim))
    for i in range(resamples):
        starts = rng.integers(0, n - block + 1, size=n_blocks)
        xs = np.concatenate([returns[s : s + block] for s in starts])[:n]
        rows[i] = moments(xs, reference=returns).as_array()
    cov = np.cov(rows, rowvar=False)
    if mode == "diagonal":
        d = np.diag(cov).copy()
        bad = ~(d > 1e-300)
        if np.any(bad):
            warnings.warn("zero-variance bootstrap moments; unit weight used there")
            d[bad] = 1.0
        return np.diag(1.0 / d)
    try:
        cond = np.linalg.cond(cov)
        if not np.isfinite(cond) or cond > 1e12:
            raise np.linalg.LinAlgError(f"condition number {cond:.2e}")
        return np.linalg.inv(cov)
    except np.linalg.LinAlgError as err:
        warnings.warn(f"bootstrap covariance not invertible ({err}); identity weights")
        return np.eye(dim)


def replication_seed(master_seed: int, replication: int, attempt: int = 0) -> int:
    """Deterministic per-replication simulation seed.

    Depends only on (master seed, replication, attempt), never on the
    optimizer iteration, so repeated evaluations of the same theta see
    identical noise.
    """
    ss = np.random.SeedSequence([int(master_seed), int(replication), int(attempt)])
    return int(ss.generate_state(1, np.uint64)[0])


def _simulated_moments(cfg: RunConfig, master_seed, replication, reference):
    """One replication's moment array, or a return-count shortfall.

    A failed simulation or degenerate series is resampled once with a
    fresh derived seed; a second failure propagates. A too-short series
    is reported as ("short", n): resampling cannot fix an event rate,
    so the caller turns it into a penalty instead.
    """
    last = None
    for attempt in (0, 1):
        seed = replication_seed(master_seed, replication, attempt)
        try:
            paths = simulate(cfg, seed=seed)
        except (SimulationError, ConfigurationError) as err:
            last = err
            continue
        rets = paths[0].returns()
        if rets.size < MIN_RETURNS:
            return ("short", rets.size)
        try:
            return ("ok", moments(rets, reference=reference).as_array())
        except DataError as err:
            last = err
            continue
    raise SimulationError(
        f"replication {replication} failed after one resample: {last}"
    )


def smd_objective(
    theta,
    empirical_moments: MomentVector,
    weight: np.ndarray,
    sim_config: RunConfig,
    reference_returns,
    replications: int = 5,
    master_seed: int = 0,
    max_events: Optional[int] = None,
) -> float:
    """Simulated-distance objective g' W g at one parameter triple.

    Simulates ``replications`` independent paths, averages their moment
    vectors, and measures the gap to the empirical battery under the
    weight matrix. Deterministic in theta for a fixed master seed.
    """
    d_alpha, nu, alpha = (float(v) for v in theta)
    if d_alpha <= 1e-9 or alpha <= 1e-9:
        # dt = (r dx^2 / 2 D)^(1/alpha) diverges; grade the penalty so
        # boundary-projected candidates are uniformly repelled
        return 2.0 * SHORTFALL_PENALTY
    cfg = with_theta(sim_config, d_alpha, nu, alpha)
    # theta sets the clock rate; when the expected recorded event count
    # cannot reach the moment battery's minimum, skip simulating and
    # return a shortfall-graded penalty (smooth in theta)
    dt_bar = base_dt(cfg.lattice, paper_compat=cfg.dynamics.paper_dt_compat)
    rates = [bk.rate if bk.rate is not None else 1.0 / dt_bar for bk in cfg.books]
    expected = max(min(rates) * cfg.run.horizon - cfg.run.burn_in, 0.0)
    if expected < MIN_RETURNS:
        return SHORTFALL_PENALTY * (1.0 + (MIN_RETURNS - expected) / MIN_RETURNS)
    if max_events is not None:
        heaviest = max(rates) * cfg.run.horizon
        if heaviest > max_events:
            # fast-clock corner too expensive to simulate; repel with a
            # penalty graded by the excess
            return SHORTFALL_PENALTY * (1.0 + heaviest / max_events)
    arrays = []
    worst_short = None
    for i in range(replications):
        status, value = _simulated_moments(cfg, master_seed, i, reference_returns)
        if status == "short":
            worst_short = value if worst_short is None else min(worst_short, value)
        else:
            arrays.append(value)
    if worst_short is not None:
        return SHORTFALL_PENALTY * (1.0 + (MIN_RETURNS - worst_short) / MIN_RETURNS)
    gap = np.mean(arrays, axis=0) - empirical_moments.as_array()
    return float(gap @ weight @ gap)


def _as_limits(bounds):
    lower = np.array([-np.inf if b[0] is None else float(b[0]) for b in bounds])
    upper = np.array([np.inf if b[1] is None else float(b[1]) for b in bounds])
    if np.any(lower >= upper):
        raise DataError("each bound must satisfy lower < upper")
    return lower, upper


def nmta(
    objective: Callable,
    bounds: Sequence,
    iterations: int = 100,
    seed: int = 0,
    start=None,
    simplex_spread=None,
    p_nm: float = 0.5,
    ta_decay: float = 0.85,
    ta_scale=None,
) -> CalibrationResult:
    """Hybrid Nelder-Mead / threshold-accepting search within bounds.

    Keeps a 4-vertex simplex over the 3 parameters. Each iteration is a
    coin flip: with probability ``p_nm`` one simplex move (reflection,
    expansion, contraction, or shrink), otherwise one threshold-
    accepting move. The TA chain walks its own current point, accepting
    a random perturbation whenever the objective rises by less than the
    current threshold, and feeds a point back into the simplex only
    when that point beats the worst vertex, so exploration never
    degrades the simplex. The threshold starts at the initial simplex's
    objective spread; it and the perturbation scale decay geometrically
    per TA step. Every candidate is projected into the bounds before
    evaluation and the best evaluated point overall is returned;
    non-convergence shows up in the trace rather than raising.
    """
    lower, upper = _as_limits(bounds)
    dim = lower.size
    if start is None:
        start = np.where(
            np.isfinite(lower) & np.isfinite(upper),
            0.5 * (lower + upper),
            np.where(np.isfinite(lower), lower + 1.0, 0.0),
        )
    start = np.clip(np.asarray(start, dtype=float), lower, upper)
    if simplex_spread is None:
        simplex_spread = 0.1 * (1.0 + np.abs(start))
    spread = np.asarray(simplex_spread, dtype=float)
    if ta_scale is None:
        ta_scale = 0.25 * spread
    ta_scale = np.asarray(ta_scale, dtype=float)

    state = {"best_theta": None, "best_value": np.inf, "evals": 0}

    def evaluate(theta):
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < lower - 1e-12) or np.any(theta > upper + 1e-12):
            raise RuntimeError(f"candidate {theta} escaped the bounds")
        value = float(objective(theta))
        state["evals"] += 1
        if value < state["best_value"]:
            state["best_value"] = value
            state["best_theta"] = theta.copy()
        return value

    simplex = [start.copy()]
    for j in range(dim):
        vertex = start.copy()
        vertex[j] += spread[j]
        vertex = np.clip(vertex, lower, upper)
        if np.allclose(vertex, start):
            # started on a bound; step inward instead
            vertex = start.copy()
            vertex[j] -= spread[j]
            vertex = np.clip(vertex, lower, upper)
        simplex.append(vertex)
    values = [evaluate(v) for v in simplex]
    initial_values = tuple(values)

    tau = max(values) - min(values)
    if tau <= 0.0:
        tau = 1.0
    rng = np.random.default_rng(seed)
    trace = [state["best_value"]]
    ta_steps = 0
    ta_point = simplex[int(np.argmin(values))].copy()
    ta_value = min(values)

    cooldown = 0
    for _ in range(iterations):
        if rng.random() < p_nm:
            order = np.argsort(values)
            simplex = [simplex[i] for i in order]
            values = [values[i] for i in order]

            # injections and bound clipping can flatten the simplex
            # onto a lower-dimensional set, freezing an axis; restart
            # it axis-aligned around the incumbent at its current size
            edges = np.array([(v - simplex[0]) / spread for v in simplex[1:]])
            norms = np.linalg.norm(edges, axis=1)
            degenerate = np.any(norms < 1e-12) or abs(
                np.linalg.det(edges)
            ) < RESTART_VOLUME * np.prod(norms)
            if degenerate and cooldown == 0:
                size = max(float(norms.max()), 1e-3)
                for i in range(1, dim + 1):
                    vertex = simplex[0].copy()
                    j = i - 1
                    inward = 1.0 if vertex[j] - lower[j] < upper[j] - vertex[j] else -1.0
                    vertex[j] += inward * size * spread[j]
                    simplex[i] = np.clip(vertex, lower, upper)
                    values[i] = evaluate(simplex[i])
                cooldown = RESTART_COOLDOWN
                order = np.argsort(values)
                simplex = [simplex[i] for i in order]
                values = [values[i] for i in order]
            elif cooldown > 0:
                cooldown -= 1

            worst = simplex[-1]
            centroid = np.mean(simplex[:-1], axis=0)

            reflect = np.clip(centroid + (centroid - worst), lower, upper)
            f_reflect = evaluate(reflect)
            if f_reflect < values[0]:
                expand = np.clip(centroid + 2.0 * (centroid - worst), lower, upper)
                f_expand = evaluate(expand)
                if f_expand < f_reflect:
                    simplex[-1], values[-1] = expand, f_expand
                else:
                    simplex[-1], values[-1] = reflect, f_reflect
            elif f_reflect < values[-2]:
                simplex[-1], values[-1] = reflect, f_reflect
            else:
                if f_reflect < values[-1]:
                    contract = np.clip(centroid + 0.5 * (reflect - centroid), lower, upper)
                else:
                    contract = np.clip(centroid + 0.5 * (worst - centroid), lower, upper)
                f_contract = evaluate(contract)
                if f_contract < min(f_reflect, values[-1]):
                    simplex[-1], values[-1] = contract, f_contract
                else:
                    # shrink toward the best vertex
                    for i in range(1, dim + 1):
                        simplex[i] = np.clip(
                            simplex[0] + 0.5 * (simplex[i] - simplex[0]), lower, upper
                        )
                        values[i] = evaluate(simplex[i])
        else:
            decay = ta_decay**ta_steps
            if ta_value - state["best_value"] > tau * decay:
                # chain lost touch with the incumbent; restart there
                ta_point = state["best_theta"].copy()
                ta_value = state["best_value"]
            # proposals follow the cooling schedule but never fall
            # below the simplex's own resolution
            step = np.maximum(
                ta_scale * decay, 0.5 * np.ptp(np.asarray(simplex), axis=0)
            )
            candidate = np.clip(ta_point + rng.normal(size=dim) * step, lower, upper)
            f_candidate = evaluate(candidate)
            if f_candidate - ta_value < tau * decay:
                ta_point, ta_value = candidate, f_candidate
            wi = int(np.argmax(values))
            if f_candidate < values[wi]:
                # the simplex receives only strict improvements on its
                # worst vertex; chain wanderings stay out of it
                simplex[wi], values[wi] = candidate.copy(), f_candidate
            ta_steps += 1
        trace.append(state["best_value"])

    return CalibrationResult(
        theta_hat=tuple(float(v) for v in state["best_theta"]),
        objective_trace=np.asarray(trace),
        evaluations=state["evals"],
        initial_values=initial_values,
    )


def _axis_offsets(theta, h, lower, upper):
    """Per-axis offset pairs (s, t) staying inside the bounds.

    Central (s=+h, t=-h) where the margins allow, one-sided (t=2s)
    against a bound otherwise. Any two distinct offsets give an exact
    second difference on quadratics, so the CI oracle is unaffected.
    """
    margin_up = upper - theta
    margin_dn = theta - lower
    s = np.empty_like(theta)
    t = np.empty_like(theta)
    for i in range(theta.size):
        up = min(h[i], margin_up[i]) if np.isfinite(margin_up[i]) else h[i]
        dn = min(h[i], margin_dn[i]) if np.isfinite(margin_dn[i]) else h[i]
        if up >= 0.1 * h[i] and dn >= 0.1 * h[i]:
            s[i], t[i] = up, -dn
        elif dn > 0.0:
            t[i] = -min(h[i], margin_dn[i] / 2.0)
            s[i] = 2.0 * t[i]
        elif up > 0.0:
            s[i] = min(h[i], margin_up[i] / 2.0)
            t[i] = 2.0 * s[i]
        else:
            raise np.linalg.LinAlgError(f"parameter {i} has no room to differentiate")
    return s, t


def confidence_intervals(
    objective: Callable,
    theta_hat,
    rel_step: float = 0.1,
    bounds=None,
):
    """95% intervals from the Hessian of a smoothed quadratic surface.

    The objective is sampled on a bound-respecting stencil around
    ``theta_hat`` (full and half steps along each axis plus pairwise
    corners) and a quadratic is fitted by least squares; its Hessian
    gives SE = sqrt(diag(H^-1)) and the interval theta_hat +/- 1.96 SE,
    reported unclipped (lower ends may be negative). The fit smooths
    simulation jaggedness, and stencil points where the objective
    returns a constraint penalty instead of a moment distance (values
    at or above :data:`PENALTY_WALL`) are discarded so penalty walls do
    not read as curvature. On an exact quadratic the fitted Hessian is
    the true one. Failures (too few clean points, rank-deficient fit,
    singular or indefinite Hessian) yield infinite-width sentinel
    intervals with a warning.
    """
    theta = np.asarray(theta_hat, dtype=float)
    dim = theta.size
    if bounds is None:
        lower = np.full(dim, -np.inf)
        upper = np.full(dim, np.inf)
    else:
        lower, upper = _as_limits(bounds)
    h = rel_step * np.maximum(np.abs(theta), 1.0)

    def wide(reason):
        warnings.warn(f"confidence intervals unavailable: {reason}")
        return (
            tuple(float(v) for v in theta - np.inf),
            tuple(float(v) for v in theta + np.inf),
        )

    try:
        s, t = _axis_offsets(theta, h, lower, upper)
    except np.linalg.LinAlgError as err:
        return wide(err)

    offsets = [np.zeros(dim)]
    for i in range(dim):
        for a in (s[i], t[i], 0.5 * s[i], 0.5 * t[i]):
            d = np.zeros(dim)
            d[i] = a
            offsets.append(d)
    for i in range(dim):
        for j in range(i + 1, dim):
            for a in (s[i], t[i]):
                for b in (s[j], t[j]):
                    d = np.zeros(dim)
                    d[i] = a
                    d[j] = b
                    offsets.append(d)

    deltas = []
    values = []
    for d in offsets:
        v = float(objective(theta + d))
        if np.isfinite(v) and v < PENALTY_WALL:
            deltas.append(d)
            values.append(v)
    n_coeff = 1 + dim + dim * (dim + 1) // 2
    if len(values) < n_coeff + dim:
        return wide("too few stencil points clear of constraint penalties")

    # fit in step units z = delta / h for conditioning
    z = np.array(deltas) / h
    cols = [np.ones(len(values))]
    cols.extend(z[:, i] for i in range(dim))
    cols.extend(0.5 * z[:, i] ** 2 for i in range(dim))
    for i in range(dim):
        for j in range(i + 1, dim):
            cols.append(z[:, i] * z[:, j])
    design = np.column_stack(cols)
    coeff, _, rank, _ = np.linalg.lstsq(design, np.array(values), rcond=None)
    if rank < n_coeff:
        return wide("quadratic fit is rank deficient")
    hess_z = np.zeros((dim, dim))
    for i in range(dim):
        hess_z[i, i] = coeff[1 + dim + i]
    k = 1 + 2 * dim
    for i in range(dim):
        for j in range(i + 1, dim):
            hess_z[i, j] = hess_z[j, i] = coeff[k]
            k += 1
    hessian = hess_z / np.outer(h, h)

    if not np.all(np.isfinite(hessian)):
        return wide("non-finite Hessian entries")
    try:
        inverse = np.linalg.inv(hessian)
    except np.linalg.LinAlgError as err:
        return wide(err)
    variances = np.diag(inverse)
    if np.any(variances <= 0.0) or not np.all(np.isfinite(variances)):
        return wide("Hessian not positive definite at the optimum")
    half = 1.96 * np.sqrt(variances)
    return (
        tuple(float(v) for v in theta - half),
        tuple(float(v) for v in theta + half),
    )


def calibrate(empirical_returns, config: RunConfig, master_seed=None) -> CalibrationResult:
    """Full pipeline: weights, optimization, confidence intervals.

    The empirical series supplies the target moments and the bootstrap
    weight matrix; simulations run at the calibration section's horizon
    and kernel window. Deterministic for a fixed config and master
    seed.
    """
    cal = config.calibration
    returns = np.asarray(empirical_returns, dtype=float)
    master = config.run.seed if master_seed is None else int(master_seed)
    target = moments(returns)
    weight = bootstrap_weight(
        returns,
        block_length=cal.block_length,
        resamples=cal.bootstrap_resamples,
        seed=master,
        mode=cal.weights,
    )
    sim_config = dc_replace(
        config,
        run=dc_replace(
            config.run, horizon=cal.sim_horizon, burn_in=cal.sim_burn_in
        ),
        dynamics=dc_replace(config.dynamics, kernel_window=cal.kernel_window),
    )
    bounds = (cal.d_alpha_bounds, cal.nu_bounds, cal.alpha_bounds)

    def objective(theta):
        return smd_objective(
            theta,
            target,
            weight,
            sim_config,
            returns,
            replications=cal.replications,
            master_seed=master,
            max_events=cal.max_events,
        )

    result = nmta(
        objective,
        bounds,
        iterations=cal.iterations,
        seed=master,
        start=cal.start,
        simplex_spread=cal.simplex_spread,
        p_nm=cal.p_nm,
        ta_decay=cal.ta_decay,
        ta_scale=cal.ta_scale,
    )
    ci_lower, ci_upper = confidence_intervals(
        objective, result.theta_hat, rel_step=cal.ci_rel_step, bounds=bounds
    )
    return dc_replace(
        result,
        ci_lower=ci_lower,
        ci_upper=ci_upper,
        replications=cal.replications,
    )
