"""Ingestion of real forward-quote panels and joint observation windows.

Quotes arrive as ``quote_date,delivery_start,price`` CSV rows.  Contracts are
bookkept by the calendar month of their delivery start; for every run of d
consecutive delivery months, the quote dates on which all d contracts are
quoted form one estimation window (a fixed set of delivery dates observed
jointly, typically 7 - d months of working days).  Windows are mapped onto a
regular grid in years: delta is the window span divided by the number of
increments, a deliberate simplification of the working-day calendar that is
recorded in the window metadata.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date
from typing import Optional, Sequence

import numpy as np

from .errors import DataFormatError, DataValidationError
from .grids import DAYS_PER_YEAR, MaturityGrid
from .simulate import PricePanel


@dataclass(frozen=True)
class ContractQuote:
    quote_date: date
    delivery_start: date
    price: float

    def __post_init__(self):
        if self.delivery_start <= self.quote_date:
            raise DataValidationError(
                f"delivery_start {self.delivery_start} not after quote_date {self.quote_date}"
            )
        if not (self.price > 0.0):
            raise DataValidationError(f"price must be positive, got {self.price}")


@dataclass(frozen=True)
class EstimationWindow:
    """One joint observation window: fixed delivery dates, shared quote dates."""

    dates: tuple[date, ...]
    maturities: tuple[date, ...]
    log_panel: PricePanel

    @property
    def start(self) -> date:
        return self.dates[0]


EXPECTED_HEADER = ["quote_date", "delivery_start", "price"]


def load_quotes(path) -> list[ContractQuote]:
    """Parse and validate a quote CSV; duplicates and bad rows are rejected."""
    quotes: list[ContractQuote] = []
    seen: set[tuple[date, date]] = set()
    bad_rows: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if [h.strip() for h in header] != EXPECTED_HEADER:
            raise DataFormatError(
                f"{path}:1: expected header {','.join(EXPECTED_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise DataFormatError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                q = date.fromisoformat(row[0].strip())
                ds = date.fromisoformat(row[1].strip())
                price = float(row[2])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: {exc}") from None
            try:
                quote = ContractQuote(quote_date=q, delivery_start=ds, price=price)
            except DataValidationError as exc:
                bad_rows.append(f"line {lineno}: {exc}")
                continue
            key = (q, ds)
            if key in seen:
                bad_rows.append(f"line {lineno}: duplicate quote for {q} / {ds}")
                continue
            seen.add(key)
            quotes.append(quote)
    if bad_rows:
        raise DataValidationError(
            f"{path}: {len(bad_rows)} invalid row(s):\n  " + "\n  ".join(bad_rows)
        )
    return quotes


def _month_key(day: date) -> int:
    return day.year * 12 + (day.month - 1)


def build_windows(
    quotes: Sequence[ContractQuote],
    d: int,
    min_dates: int = 15,
    report: Optional[dict] = None,
) -> list[EstimationWindow]:
    """Collect the joint observation windows for d consecutive delivery months.

    Blocks whose joint window has fewer than ``min_dates`` quote dates are
    skipped (and counted in ``report`` when a dict is passed).
    """
    if not (2 <= d <= 6):
        raise DataValidationError("contract count d must lie in [2, 6]")
    by_date: dict[date, dict[date, float]] = {}
    month_delivery: dict[int, date] = {}
    for q in quotes:
        by_date.setdefault(q.quote_date, {})[q.delivery_start] = q.price
        mk = _month_key(q.delivery_start)
        if mk not in month_delivery or q.delivery_start < month_delivery[mk]:
            month_delivery[mk] = q.delivery_start

    months = sorted(month_delivery)
    windows: list[EstimationWindow] = []
    skipped = 0
    blocks = 0
    for m0 in months:
        block_months = [m0 + j for j in range(d)]
        if not all(m in month_delivery for m in block_months):
            continue
        blocks += 1
        deliveries = tuple(month_delivery[m] for m in block_months)
        dates = sorted(
            t
            for t, quoted in by_date.items()
            if t < deliveries[0] and all(ds in quoted for ds in deliveries)
        )
        if len(dates) < min_dates:
            skipped += 1
            continue
        t0 = dates[0]
        horizon = (dates[-1] - t0).days / DAYS_PER_YEAR
        maturities = tuple((ds - t0).days / DAYS_PER_YEAR for ds in deliveries)
        n_obs = len(dates) - 1
        grid = MaturityGrid(maturities=maturities, horizon=horizon, n_obs=n_obs)
        values = np.empty((d, n_obs + 1))
        for col, t in enumerate(dates):
            quoted = by_date[t]
            for row, ds in enumerate(deliveries):
                values[row, col] = math.log(quoted[ds])
        panel = PricePanel(
            grid=grid,
            values=values,
            meta={
                "window_start": t0.isoformat(),
                "irregular_calendar": "delta is span/n over working days",
            },
        )
        windows.append(
            EstimationWindow(dates=tuple(dates), maturities=deliveries, log_panel=panel)
        )
    if report is not None:
        report["blocks"] = blocks
        report["skipped"] = skipped
    return windows
