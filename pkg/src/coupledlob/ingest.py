"""Trade-and-quote ingestion: cleaning, compacting, micro-prices.

The expected feed is a CSV with header

    timestamp,kind,trade_type,price,volume,bid,ask,bid_vol,ask_vol

where ``timestamp`` is a timezone-naive intraday time ``HH:MM:SS`` or
``HH:MM:SS.mmm`` (millisecond resolution), ``kind`` is ``trade`` or
``quote``, and ``trade_type`` is the venue code (``AT`` automated trade,
``LT`` late trade, ``LC`` late correction, ``IP`` intraday auction price,
empty for quotes). Trade rows fill price/volume; quote rows fill
bid/ask/bid_vol/ask_vol. Unparseable rows are collected into a rejects
report rather than aborting the run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .exceptions import DataError

SESSION_START = "09:00:00"
SESSION_END = "16:50:00"
FIRST_MINUTE_END = "09:01:00"

# trade codes removed by the cleaning pass
EXCLUDED_TRADE_TYPES = ("LT", "LC", "IP")


def parse_time_ms(text: str) -> int:
    """``HH:MM:SS[.mmm]`` to integer milliseconds since midnight."""
    parts = text.strip().split(":")
    if len(parts) != 3:
        raise DataError(f"bad timestamp {text!r}")
    try:
        hours = int(parts[0])
        minutes = int(parts[1])
        if "." in parts[2]:
            sec_text, frac = parts[2].split(".", 1)
            millis = int(round(float("0." + frac) * 1000.0))
        else:
            sec_text, millis = parts[2], 0
        seconds = int(sec_text)
    except ValueError:
        raise DataError(f"bad timestamp {text!r}")
    if not (0 <= hours < 24 and 0 <= minutes < 60 and 0 <= seconds < 60):
        raise DataError(f"timestamp out of range {text!r}")
    return ((hours * 60 + minutes) * 60 + seconds) * 1000 + millis


def format_time_ms(ms: int) -> str:
    sec, millis = divmod(int(ms), 1000)
    minutes, seconds = divmod(sec, 60)
    hours, minutes = divmod(minutes, 60)
    if millis:
        return f"{hours:02d}:{minutes:02d}:{seconds:02d}.{millis:03d}"
    return f"{hours:02d}:{minutes:02d}:{seconds:02d}"


@dataclass(frozen=True)
class TaqRecord:
    """One trade or quote event."""

    timestamp_ms: int
    kind: str  # trade | quote
    trade_type: str = ""
    price: float = 0.0
    volume: float = 0.0
    bid: float = 0.0
    ask: float = 0.0
    bid_vol: float = 0.0
    ask_vol: float = 0.0

    def __post_init__(self):
        if self.kind not in ("trade", "quote"):
            raise DataError(f"unknown record kind {self.kind!r}")
        if self.kind == "trade":
            if self.price <= 0 or self.volume <= 0:
                raise DataError("trades need positive price and volume")
        else:
            if self.bid > self.ask:
                raise DataError("crossed quote: bid above ask")


def micro_price(quote: TaqRecord) -> float:
    """Volume-weighted best price with swapped weights.

    The ask volume weights the bid and vice versa, so a heavy bid side pulls
    the value toward the ask: ``(ask_vol*bid + bid_vol*ask) / (bid_vol +
    ask_vol)``.
    """
    total = quote.bid_vol + quote.ask_vol
    if total <= 0:
        raise DataError("micro price undefined for zero total quote volume")
    return (quote.ask_vol * quote.bid + quote.bid_vol * quote.ask) / total


def clean(
    records,
    auction_windows=(),
    session_start: str = SESSION_START,
    session_end: str = SESSION_END,
    first_minute_end: str = FIRST_MINUTE_END,
):
    """Session filtering pass; returns (kept_records, drop_counts).

    Keeps records inside [session_start, session_end], drops the opening
    minute, drops trades whose type is not AT, and drops anything inside a
    configured auction window. Input is sorted by timestamp first (stable).
    """
    start = parse_time_ms(session_start)
    end = parse_time_ms(session_end)
    first_cut = parse_time_ms(first_minute_end)
    windows = [(parse_time_ms(a), parse_time_ms(b)) for a, b in auction_windows]

    counts = {
        "outside_session": 0,
        "first_minute": 0,
        "excluded_trade_type": 0,
        "auction_window": 0,
    }
    kept = []
    for rec in sorted(records, key=lambda r: r.timestamp_ms):
        t = rec.timestamp_ms
        if t < start or t > end:
            counts["outside_session"] += 1
            continue
        if t < first_cut:
            counts["first_minute"] += 1
            continue
        if any(a <= t <= b for a, b in windows):
            counts["auction_window"] += 1
            continue
        if rec.kind == "trade" and rec.trade_type != "AT":
            counts["excluded_trade_type"] += 1
            continue
        kept.append(rec)
    return kept, counts


def compact(records):
    """Per-timestamp reduction: last quote wins, same-type trades VWAP-merge.

    Output is ordered by (timestamp, quote-before-trade, trade_type), which
    makes the pass idempotent.
    """
    quotes = {}
    trades = {}
    for rec in records:
        if rec.kind == "quote":
            quotes[rec.timestamp_ms] = rec  # later records overwrite
        else:
            trades.setdefault((rec.timestamp_ms, rec.trade_type), []).append(rec)

    out = list(quotes.values())
    for (t, trade_type), group in trades.items():
        volume = sum(r.volume for r in group)
        vwap = sum(r.price * r.volume for r in group) / volume
        out.append(
            TaqRecord(
                timestamp_ms=t,
                kind="trade",
                trade_type=trade_type,
                price=vwap,
                volume=volume,
            )
        )
    out.sort(key=lambda r: (r.timestamp_ms, r.kind != "quote", r.trade_type))
    return out


_COLUMNS = (
    "timestamp",
    "kind",
    "trade_type",
    "price",
    "volume",
    "bid",
    "ask",
    "bid_vol",
    "ask_vol",
)


def _parse_row(row: dict) -> TaqRecord:
    def num(name):
        text = (row.get(name) or "").strip()
        return float(text) if text else 0.0

    return TaqRecord(
        timestamp_ms=parse_time_ms(row.get("timestamp", "")),
        kind=(row.get("kind") or "").strip(),
        trade_type=(row.get("trade_type") or "").strip(),
        price=num("price"),
        volume=num("volume"),
        bid=num("bid"),
        ask=num("ask"),
        bid_vol=num("bid_vol"),
        ask_vol=num("ask_vol"),
    )


def read_taq_csv(path: str):
    """Parse a feed file; returns (records, rejects).

    ``rejects`` rows are (line_number, raw_line, reason); parse failures are
    reported there, never raised.
    """
    records = []
    rejects = []
    with open(path, newline="") as fh:
        # leading comment lines (e.g. reproducibility headers) are skipped
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        missing = set(_COLUMNS) - set(reader.fieldnames)
        if missing:
            raise DataError(f"{path}: missing columns {sorted(missing)}")
        for line_no, row in enumerate(reader, start=2):
            try:
                records.append(_parse_row(row))
            except (DataError, ValueError) as err:
                raw = ",".join((row.get(c) or "") for c in _COLUMNS)
                rejects.append((line_no, raw, str(err)))
    return records, rejects


def write_taq_csv(path: str, records, header_lines=()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    format_time_ms(r.timestamp_ms),
                    r.kind,
                    r.trade_type,
                    _fmt(r.price),
                    _fmt(r.volume),
                    _fmt(r.bid),
                    _fmt(r.ask),
                    _fmt(r.bid_vol),
                    _fmt(r.ask_vol),
                ]
            )


def _fmt(x: float) -> str:
    return "" if x == 0.0 else repr(float(x))


def micro_price_series(records):
    """(times_in_seconds, micro_prices) over the quote records."""
    import numpy as np

    t = []
    m = []
    for rec in records:
        if rec.kind == "quote" and rec.bid_vol + rec.ask_vol > 0:
            t.append(rec.timestamp_ms / 1000.0)
            m.append(micro_price(rec))
    if not t:
        raise DataError("no usable quotes in input")
    return np.asarray(t), np.asarray(m)
