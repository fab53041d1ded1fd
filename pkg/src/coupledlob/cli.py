"""Command-line front end.

One YAML config plus one master seed drives every subcommand; identical
inputs produce byte-identical output files. Artifacts are computed fully
in memory before anything is written, so a failed run never leaves a
partial file behind. Every output carries the master seed in its header.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .calibrate import calibrate
from .config import RunConfig, default_config, load_config
from .correlation import brownian_pair, epps_curve, power_spectrum
from .exceptions import (
    ConfigurationError,
    DataError,
    OneSidedBookError,
    SimulationError,
)
from .facts import facts, tick_rule_signs
from .ingest import (
    clean,
    compact,
    micro_price_series,
    read_taq_csv,
    write_taq_csv,
)
from .lattice import base_dt
from .simulate import PricePath, init_system, measure_impact, paths, step


def _fmt(value) -> str:
    """Stable shortest decimal form; empty cells stay empty."""
    if value is None:
        return ""
    return repr(float(value))


def _write_csv(path, header_lines, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def _rep_seed(master: int, rep: int) -> int:
    return int(np.random.SeedSequence([master, rep]).generate_state(1)[0])


def _resolve(args) -> tuple[RunConfig, int, str]:
    """(config, master seed, out dir) after applying the common flags."""
    if args.config is not None:
        config = load_config(args.config)
    else:
        config = default_config()
    master = config.run.seed if args.seed is None else int(args.seed)
    config = replace(config, run=replace(config.run, seed=master))
    if getattr(args, "uniform", False):
        config = replace(config, run=replace(config.run, sampling="uniform"))
    out_dir = args.out_dir if args.out_dir is not None else config.io.out_dir
    return config, master, out_dir


def _run_recorded(config: RunConfig, seed: int):
    """Like simulate() but keeps the system so snapshots survive."""
    system = init_system(config, seed=seed)
    if config.run.burn_in == 0:
        for j, book in enumerate(system.books):
            system.recorded_t[j].append(0.0)
            system.recorded_p[j].append(book.price)
    while system.has_events():
        step(system)
    return paths(system), system.snapshots


def cmd_simulate(args) -> int:
    config, master, out_dir = _resolve(args)
    price_paths, snapshots = _run_recorded(config, master)

    os.makedirs(out_dir, exist_ok=True)
    for path in price_paths:
        _write_csv(
            os.path.join(out_dir, f"prices_book{path.book_id}.csv"),
            [f"seed={master}", f"book={path.book_id}",
             f"sampling={config.run.sampling}"],
            ("t", "p"),
            zip(path.t, path.p),
        )
    if snapshots:
        grid = np.linspace(
            config.lattice.x0,
            config.lattice.x0 + config.lattice.L,
            config.lattice.M + 1,
        )
        for j in range(len(config.books)):
            mine = [(t, phi) for (b, t, phi) in snapshots if b == j]
            if not mine:
                continue
            _write_csv(
                os.path.join(out_dir, f"density_book{j}.csv"),
                [f"seed={master}", f"book={j}"],
                ("t",) + tuple(_fmt(x) for x in grid),
                ((t,) + tuple(phi) for t, phi in mine),
            )
    return 0


def _empirical_pair(config: RunConfig):
    names = (config.io.empirical, config.io.empirical_b)
    out = []
    for j, name in enumerate(names):
        records, rejects = read_taq_csv(name)
        if rejects:
            raise DataError(
                f"{name}: {len(rejects)} unparseable rows; run ingest first"
            )
        t, m = micro_price_series(records)
        if np.any(m <= 0):
            raise DataError(f"{name}: nonpositive micro prices")
        out.append(PricePath(t=t - t[0], p=np.log(m), book_id=j))
    return out[0], out[1]


def cmd_epps(args) -> int:
    config, master, out_dir = _resolve(args)
    ec = config.epps
    horizon = config.run.horizon

    if args.null == "brownian":
        mode = "null-brownian"
        n = max(int(round(horizon / base_dt(config.lattice))), 16)

        def factory(rep):
            # independent-increment pair: correlation 0 at every scale
            return brownian_pair(n, horizon, 0.0, seed=_rep_seed(master, rep))

        reps = ec.reps
    elif config.io.empirical and config.io.empirical_b:
        mode = "empirical"
        pair = _empirical_pair(config)
        factory = lambda _rep: pair
        reps = 1
    else:
        if len(config.books) < 2:
            raise ConfigurationError("epps needs two books or two input files")
        mode = "simulated"

        def factory(rep):
            from .simulate import simulate

            pp = simulate(config, seed=_rep_seed(master, rep))
            return pp[0], pp[1]

        reps = ec.reps

    curve = epps_curve(
        factory,
        ec.scales,
        reps=reps,
        oversampling=ec.oversampling,
        spread_width=ec.spread_width,
    )
    path_a = factory(0)[0]
    span = path_a.t[-1] - path_a.t[0]
    n_freq = max(int(np.floor(span / (2.0 * ec.scales[0]))), 1)
    k, power, slope = power_spectrum(
        path_a, n_freq, oversampling=ec.oversampling, spread_width=ec.spread_width
    )

    os.makedirs(out_dir, exist_ok=True)
    _write_csv(
        os.path.join(out_dir, "epps.csv"),
        [f"seed={master}", f"mode={mode}", f"reps={curve.reps}",
         f"sampling={config.run.sampling}"],
        ("scale", "rho", "stderr"),
        zip(curve.scales, curve.rho, curve.stderr),
    )
    _write_csv(
        os.path.join(out_dir, "spectrum.csv"),
        [f"seed={master}", f"mode={mode}", f"loglog_slope={_fmt(slope)}"],
        ("k", "power"),
        zip(k, power),
    )
    return 0


def cmd_impact(args) -> int:
    config, master, out_dir = _resolve(args)
    rows = measure_impact(config, config.impact.q_values, seed=master)
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(
        os.path.join(out_dir, "impact.csv"),
        [f"seed={master}", f"location={_fmt(config.impact.location)}",
         f"settle_events={config.impact.settle_events}",
         f"window_events={config.impact.window_events}"],
        ("q", "dp"),
        rows,
    )
    return 0


def cmd_ingest(args) -> int:
    config, master, out_dir = _resolve(args)
    prepared = []
    for name in args.inputs:
        records, parse_rejects = read_taq_csv(name)
        kept, counts = clean(records, config.ingest.auction_windows)
        prepared.append((name, compact(kept), parse_rejects, counts))

    os.makedirs(out_dir, exist_ok=True)
    for name, compacted, parse_rejects, counts in prepared:
        stem = os.path.splitext(os.path.basename(name))[0]
        write_taq_csv(
            os.path.join(out_dir, f"{stem}_clean.csv"),
            compacted,
            header_lines=[f"seed={master}", f"source={os.path.basename(name)}"],
        )
        reject_rows = [
            (f"dropped_{k}", str(v), "", "") for k, v in sorted(counts.items())
        ]
        reject_rows += [
            ("parse_error", "1", str(line_no), raw)
            for line_no, raw, _reason in parse_rejects
        ]
        _write_csv(
            os.path.join(out_dir, f"{stem}_rejects.csv"),
            [f"seed={master}", f"source={os.path.basename(name)}"],
            ("reason", "count", "line", "raw"),
            reject_rows,
        )
    return 0


def _read_price_csv(path):
    """Price series from either a feed file or a (t, p) table."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines:
        raise DataError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].strip().split(",")]
    if "kind" in header:
        records, rejects = read_taq_csv(path)
        if rejects:
            raise DataError(
                f"{path}: {len(rejects)} unparseable rows; run ingest first"
            )
        t, m = micro_price_series(records)
        trade_prices = [
            r.price for r in records if r.kind == "trade" and r.price > 0
        ]
        return t, m, np.asarray(trade_prices)
    if "p" not in header:
        raise DataError(f"{path}: expected a 'p' column or a feed-format file")
    reader = csv.DictReader(lines)
    t = []
    p = []
    for i, row in enumerate(reader):
        p.append(float(row["p"]))
        t.append(float(row["t"]) if "t" in header else float(i))
    if not p:
        raise DataError(f"{path}: no data rows")
    return np.asarray(t), np.asarray(p), None


def cmd_facts(args) -> int:
    config, master, out_dir = _resolve(args)
    _t, prices, trade_prices = _read_price_csv(args.input)
    signs = None
    if trade_prices is not None and len(trade_prices) >= 3:
        signs = tick_rule_signs(trade_prices)
    report = facts(prices, orderflow_signs=signs, lags=config.facts.lags)

    os.makedirs(out_dir, exist_ok=True)
    source = os.path.basename(args.input)
    moment_rows = [(k, v) for k, v in sorted(report.return_moments.items())]
    moment_rows += [
        ("n_returns", str(report.n)),
        ("white_noise_band", report.white_noise_band),
    ]
    _write_csv(
        os.path.join(out_dir, "facts_moments.csv"),
        [f"seed={master}", f"source={source}"],
        ("statistic", "value"),
        moment_rows,
    )
    _write_csv(
        os.path.join(out_dir, "facts_acf.csv"),
        [f"seed={master}", f"source={source}",
         f"white_noise_band={_fmt(report.white_noise_band)}"],
        ("lag", "returns", "abs_returns", "orderflow"),
        report.rows(),
    )
    _write_csv(
        os.path.join(out_dir, "facts_qq.csv"),
        [f"seed={master}", f"source={source}"],
        ("theoretical", "empirical"),
        report.qq_points,
    )
    return 0


def cmd_calibrate(args) -> int:
    config, master, out_dir = _resolve(args)
    source = args.input if args.input is not None else config.io.empirical
    if source is None:
        raise ConfigurationError(
            "calibrate needs a price series: pass a path or set io.empirical"
        )
    _t, prices, trades = _read_price_csv(source)
    if trades is not None:
        # feed input: micro-price log returns
        if np.any(prices <= 0):
            raise DataError(f"{source}: nonpositive micro prices")
        returns = np.diff(np.log(prices))
    else:
        # simulated path input: the model's own return convention
        returns = np.diff(prices)
    result = calibrate(returns, config, master_seed=master)

    os.makedirs(out_dir, exist_ok=True)
    names = ("D_alpha", "nu", "alpha")
    doc = {
        "seed": master,
        "source": os.path.basename(source),
        "theta_hat": dict(zip(names, result.theta_hat)),
        "ci_lower": dict(zip(names, result.ci_lower)),
        "ci_upper": dict(zip(names, result.ci_upper)),
        "best_objective": result.best_objective,
        "initial_simplex_values": list(result.initial_values),
        "replications": result.replications,
        "evaluations": result.evaluations,
        "iterations": len(result.objective_trace) - 1,
    }
    with open(os.path.join(out_dir, "calibration.json"), "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_csv(
        os.path.join(out_dir, "calibration_trace.csv"),
        [f"seed={master}", f"source={os.path.basename(source)}"],
        ("iteration", "best_objective"),
        ((str(i), v) for i, v in enumerate(result.objective_trace)),
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coupledlob",
        description="Coupled order book simulation, correlation analysis, "
        "data ingestion, and calibration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML config file (defaults when omitted)")
        sp.add_argument("--seed", type=int, help="master seed override")
        sp.add_argument("--out-dir", help="output directory override")

    sp = sub.add_parser("simulate", help="run the coupled books, write price paths")
    common(sp)
    sp.add_argument("--uniform", action="store_true",
                    help="constant time steps instead of exponential clocks")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("epps", help="correlation vs sampling scale plus spectrum")
    common(sp)
    sp.add_argument("--uniform", action="store_true",
                    help="constant time steps instead of exponential clocks")
    sp.add_argument("--null", choices=("brownian",),
                    help="replace the books with an independent Brownian pair")
    sp.set_defaults(func=cmd_epps)

    sp = sub.add_parser("impact", help="price response to a shock size sweep")
    common(sp)
    sp.set_defaults(func=cmd_impact)

    sp = sub.add_parser("ingest", help="clean and compact raw trade-and-quote files")
    common(sp)
    sp.add_argument("inputs", nargs="+", metavar="CSV", help="raw feed files")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("facts", help="stylised-facts report for a price series")
    common(sp)
    sp.add_argument("input", metavar="CSV", help="price path or cleaned feed file")
    sp.set_defaults(func=cmd_facts)

    sp = sub.add_parser("calibrate", help="fit (D_alpha, nu, alpha) to a series")
    common(sp)
    sp.add_argument("input", nargs="?", metavar="CSV",
                    help="price series; defaults to io.empirical from the config")
    sp.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, DataError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (SimulationError, OneSidedBookError) as err:
        print(f"simulation failed: {err}", file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
