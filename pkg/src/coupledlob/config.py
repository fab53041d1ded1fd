"""Run configuration: nested dataclasses plus strict YAML loading.

The config file mirrors the model's parameter tables: lattice geometry and
diffusion constants, per-book source parameters, dynamics (cancellation,
drift force, kernel window), run control, shock list, and the analysis
sections (epps, impact, facts, ingest, calibration). Unknown keys anywhere
in the document are rejected so typos cannot silently fall back to
defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

import yaml

from .exceptions import ConfigurationError
from .lattice import LatticeConfig


@dataclass(frozen=True)
class BookConfig:
    """Source parameters and clock intensity for one book."""

    p0: float = 230.0
    lam: float = 1.0
    mu: float = 0.1
    rate: float | None = None  # event intensity; None means 1/base_dt

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigurationError("lambda must be positive")
        if self.mu <= 0:
            raise ConfigurationError("mu must be positive")
        if self.rate is not None and self.rate <= 0:
            raise ConfigurationError("rate must be positive when given")


@dataclass(frozen=True)
class DynamicsConfig:
    nu: float = 14.0
    kappa: float = 1.0
    sigma_v: float = 1.0
    kernel_window: int = 512
    coupling: bool = True
    force_mode: str = "shared"  # shared | independent | constant
    f_const: float = 0.0
    paper_dt_compat: bool = False
    nu_floor: float = 1.0

    def __post_init__(self):
        if self.nu < 0:
            raise ConfigurationError("nu must be non-negative")
        if self.sigma_v < 0:
            raise ConfigurationError("sigma_v must be non-negative")
        if self.kernel_window < 1:
            raise ConfigurationError("kernel_window must be at least 1")
        if self.force_mode not in ("shared", "independent", "constant"):
            raise ConfigurationError(f"unknown force_mode {self.force_mode!r}")
        if self.nu_floor <= 0:
            raise ConfigurationError("nu_floor must be positive")


@dataclass(frozen=True)
class RunSettings:
    horizon: float = 200.0
    burn_in: int = 200
    seed: int = 0
    sampling: str = "exponential"  # exponential | uniform
    snapshot_every: int = 0

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigurationError("horizon must be positive")
        if self.burn_in < 0:
            raise ConfigurationError("burn_in must be non-negative")
        if self.sampling not in ("exponential", "uniform"):
            raise ConfigurationError(f"unknown sampling mode {self.sampling!r}")
        if self.snapshot_every < 0:
            raise ConfigurationError("snapshot_every must be non-negative")


@dataclass(frozen=True)
class ShockSpec:
    book: int
    size: float
    location: float
    time: float = 0.0

    def __post_init__(self):
        if self.book < 0:
            raise ConfigurationError("shock book index must be non-negative")
        if self.time < 0:
            raise ConfigurationError("shock time must be non-negative")


@dataclass(frozen=True)
class ImpactConfig:
    # shock sizes are order volume; the equilibrium book holds about
    # lambda/(mu * nu) in total, so these stay well below one book
    q_values: tuple = (0.0, 0.005, 0.01, 0.02, 0.04)
    location: float = -1.0
    time: float | None = None  # None places the shock just after burn-in
    settle_events: int = 5
    window_events: int = 40

    def __post_init__(self):
        if self.settle_events < 0:
            raise ConfigurationError("settle_events must be non-negative")
        if self.window_events < 1:
            raise ConfigurationError("window_events must be positive")


@dataclass(frozen=True)
class EppsConfig:
    scales: tuple = (1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0)
    reps: int = 10
    oversampling: float = 2.0
    spread_width: int = 12

    def __post_init__(self):
        if len(self.scales) == 0 or any(s <= 0 for s in self.scales):
            raise ConfigurationError("scales must be positive")
        if list(self.scales) != sorted(self.scales):
            raise ConfigurationError("scales must be increasing")
        if self.reps < 1:
            raise ConfigurationError("reps must be at least 1")
        if self.oversampling <= 1.0:
            raise ConfigurationError("oversampling must exceed 1")
        if self.spread_width < 1:
            raise ConfigurationError("spread_width must be at least 1")


@dataclass(frozen=True)
class FactsConfig:
    lags: int = 50

    def __post_init__(self):
        if self.lags < 1:
            raise ConfigurationError("lags must be at least 1")


@dataclass(frozen=True)
class IngestConfig:
    # intraday auction pauses removed from the feed, as (start, end) "HH:MM:SS"
    auction_windows: tuple = ()

    def __post_init__(self):
        for w in self.auction_windows:
            if len(w) != 2:
                raise ConfigurationError("auction windows are (start, end) pairs")


@dataclass(frozen=True)
class CalibrationConfig:
    # bounds per parameter; None upper bound means unbounded above
    d_alpha_bounds: tuple = (0.0, None)
    nu_bounds: tuple = (0.0, None)
    alpha_bounds: tuple = (0.4, 1.0)
    start: tuple = (0.5, 10.0, 0.7)
    simplex_spread: tuple = (0.2, 4.0, 0.15)
    iterations: int = 100
    replications: int = 5
    p_nm: float = 0.5
    ta_decay: float = 0.85
    ta_scale: tuple = (0.1, 2.0, 0.08)
    block_length: int = 100
    bootstrap_resamples: int = 1000
    weights: str = "bootstrap"  # bootstrap | diagonal | identity
    sim_horizon: float = 150.0
    sim_burn_in: int = 100
    kernel_window: int = 256
    ci_rel_step: float = 0.1
    # cost guard: expected events per book beyond this is scored by a
    # penalty instead of simulated (fast-clock corners of theta space)
    max_events: int = 100000

    def __post_init__(self):
        if not (0.0 <= self.p_nm <= 1.0):
            raise ConfigurationError("p_nm must lie in [0, 1]")
        if not (0.0 < self.ta_decay < 1.0):
            raise ConfigurationError("ta_decay must lie in (0, 1)")
        if self.iterations < 1 or self.replications < 1:
            raise ConfigurationError("iterations and replications must be >= 1")
        if self.max_events < 1:
            raise ConfigurationError("max_events must be positive")
        if self.weights not in ("bootstrap", "diagonal", "identity"):
            raise ConfigurationError(f"unknown weights mode {self.weights!r}")
        for lo, hi in (self.d_alpha_bounds, self.nu_bounds, self.alpha_bounds):
            if hi is not None and hi <= lo:
                raise ConfigurationError("bound upper must exceed lower")


@dataclass(frozen=True)
class IoConfig:
    out_dir: str = "out"
    empirical: str | None = None
    empirical_b: str | None = None


@dataclass(frozen=True)
class RunConfig:
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    books: tuple = (BookConfig(), BookConfig())
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    run: RunSettings = field(default_factory=RunSettings)
    shocks: tuple = ()
    impact: ImpactConfig = field(default_factory=ImpactConfig)
    epps: EppsConfig = field(default_factory=EppsConfig)
    facts: FactsConfig = field(default_factory=FactsConfig)
    ingest: IngestConfig = field(default_factory=IngestConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    io: IoConfig = field(default_factory=IoConfig)

    def __post_init__(self):
        if len(self.books) < 1:
            raise ConfigurationError("at least one book is required")
        for s in self.shocks:
            if s.book >= len(self.books):
                raise ConfigurationError("shock book index out of range")
        lo, hi = self.lattice.x0, self.lattice.x0 + self.lattice.L
        for b in self.books:
            if not (lo < b.p0 < hi):
                raise ConfigurationError(
                    f"initial price {b.p0} outside lattice span ({lo}, {hi})"
                )


def default_config() -> RunConfig:
    return RunConfig()


# YAML key -> dataclass field renames (YAML uses the parameter-table names)
_RENAMES = {"lambda": "lam"}


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where}: expected a mapping")
    known = {f.name for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        name = _RENAMES.get(key, key)
        if name not in known:
            raise ConfigurationError(f"{where}: unknown key {key!r}")
        if isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        kwargs[name] = value
    return cls(**kwargs)


_SECTIONS = {
    "lattice": LatticeConfig,
    "dynamics": DynamicsConfig,
    "run": RunSettings,
    "impact": ImpactConfig,
    "epps": EppsConfig,
    "facts": FactsConfig,
    "ingest": IngestConfig,
    "calibration": CalibrationConfig,
    "io": IoConfig,
}


def config_from_dict(doc: dict) -> RunConfig:
    """Build a validated RunConfig from a nested plain-dict document."""
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be a mapping")
    allowed = set(_SECTIONS) | {"books", "shocks"}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigurationError(f"unknown top-level keys {sorted(unknown)!r}")

    kwargs = {}
    lattice_doc = dict(doc.get("lattice", {}) or {})
    book_docs = doc.get("books")
    if book_docs is None:
        books = (BookConfig(), BookConfig())
    else:
        books = tuple(
            _build(BookConfig, b, f"books[{i}]") for i, b in enumerate(book_docs)
        )
    kwargs["books"] = books

    # x0 omitted or null: centre the mean initial price on the lattice
    x0 = lattice_doc.pop("x0", None)
    lat_defaults = LatticeConfig()
    length = float(lattice_doc.get("L", lat_defaults.L))
    if x0 is None:
        x0 = sum(b.p0 for b in books) / len(books) - length / 2.0
    lattice_doc["x0"] = x0
    kwargs["lattice"] = _build(LatticeConfig, lattice_doc, "lattice")

    shock_docs = doc.get("shocks", ())
    kwargs["shocks"] = tuple(
        _build(ShockSpec, s, f"shocks[{i}]") for i, s in enumerate(shock_docs or ())
    )

    for section, cls in _SECTIONS.items():
        if section == "lattice":
            continue
        if section in doc:
            kwargs[section] = _build(cls, doc[section] or {}, section)

    return RunConfig(**kwargs)


def load_config(path: str) -> RunConfig:
    """Parse and validate a YAML config file."""
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}")
    except yaml.YAMLError as err:
        raise ConfigurationError(f"config file {path} is not valid YAML: {err}")
    return config_from_dict(doc)


def with_theta(config: RunConfig, d_alpha: float, nu: float, alpha: float) -> RunConfig:
    """Config with the calibration parameters replaced."""
    if d_alpha <= 0:
        # the diffusion constant enters as dt = (r dx^2 / 2 D)^(1/alpha)
        raise ConfigurationError("D_alpha must be positive to simulate")
    if not (0.0 < alpha <= 1.0):
        raise ConfigurationError("alpha must lie in (0, 1]")
    if nu < 0:
        raise ConfigurationError("nu must be non-negative")
    return replace(
        config,
        lattice=replace(config.lattice, D_alpha=d_alpha, alpha=alpha),
        dynamics=replace(config.dynamics, nu=nu),
    )
