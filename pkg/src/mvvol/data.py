"""Return panels: CSV ingestion, simple returns, calendar alignment, summary tables."""

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import (
    DegenerateColumn,
    EmptyIntersection,
    InputError,
    NonPositivePrice,
    ParseError,
    TooShort,
)
from .meanmodel import ljung_box


@dataclass(frozen=True)
class ReturnPanel:
    """T x k matrix of percentage returns with asset labels and time stamps.

    ``times`` is either an int64 array or a ``datetime64[D]`` array and must be
    strictly increasing.
    """

    assets: tuple
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        times = np.asarray(self.times)
        object.__setattr__(self, "assets", tuple(str(a) for a in self.assets))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        values.setflags(write=False)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise InputError(f"panel needs T >= 1 and k >= 1, got shape {values.shape}")
        if len(self.assets) != values.shape[1]:
            raise InputError("number of asset labels does not match the columns")
        if times.shape != (values.shape[0],):
            raise InputError("one time stamp per row is required")
        if not np.all(np.isfinite(values)):
            raise InputError("panel contains missing or non-finite cells")
        if times.size > 1 and not np.all(times[1:] > times[:-1]):
            raise InputError("time stamps must be strictly increasing")

    @property
    def T(self):
        return self.values.shape[0]

    @property
    def k(self):
        return self.values.shape[1]

    @classmethod
    def from_array(cls, values, assets=None, times=None):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if assets is None:
            assets = [f"x{i + 1}" for i in range(values.shape[1])]
        if times is None:
            times = np.arange(1, values.shape[0] + 1, dtype=np.int64)
        return cls(tuple(assets), np.asarray(times), values)


def simple_returns(prices, assets=None, times=None):
    """Percentage simple returns ``100 * (P_t / P_{t-1} - 1)``.

    ``prices`` may be a ``ReturnPanel`` holding price levels or a T x k array.
    The result has ``T - 1`` rows stamped with the later time of each pair.
    """
    if isinstance(prices, ReturnPanel):
        assets, times, p = prices.assets, prices.times, prices.values
    else:
        p = np.asarray(prices, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
    if p.shape[0] < 2:
        raise TooShort("need at least two prices")
    if np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise NonPositivePrice("prices must be finite and strictly positive")
    r = 100.0 * (p[1:] / p[:-1] - 1.0)
    if times is None:
        times = np.arange(1, p.shape[0] + 1, dtype=np.int64)
    return ReturnPanel.from_array(r, assets=assets, times=np.asarray(times)[1:])


def align_panels(panels):
    """Inner-join panels on their time stamps; columns keep the input order."""
    panels = list(panels)
    if not panels:
        raise InputError("no panels given")
    common = panels[0].times
    for p in panels[1:]:
        if p.times.dtype.kind != common.dtype.kind:
            raise InputError("panels use incompatible time stamp types")
        common = np.intersect1d(common, p.times)
    if common.size == 0:
        raise EmptyIntersection("the panels share no time stamps")
    cols, assets = [], []
    for p in panels:
        idx = np.searchsorted(p.times, common)
        cols.append(p.values[idx])
        assets.extend(p.assets)
    return ReturnPanel(tuple(assets), common, np.hstack(cols))


@dataclass
class DescriptiveStats:
    """Per-asset summary statistics.

    ``std`` is the sample standard deviation (divisor ``T - 1``).  Skewness
    and excess kurtosis are the plain moment ratios ``m3 / m2**1.5`` and
    ``m4 / m2**2 - 3`` with divisor ``T``.
    """

    assets: tuple
    mean: np.ndarray
    std: np.ndarray
    skewness: np.ndarray
    excess_kurtosis: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray
    q12: np.ndarray
    q12_pvalue: np.ndarray
    lag: int = field(default=12)

    columns = ("mean", "std", "skewness", "excess_kurtosis", "minimum",
               "maximum", "q12", "q12_pvalue")

    def rows(self):
        """One dict per asset, in column order."""
        out = []
        for i, a in enumerate(self.assets):
            row = {"asset": a}
            for c in self.columns:
                row[c] = float(getattr(self, c)[i])
            out.append(row)
        return out


def describe(panel, lag=12):
    """Moment statistics and univariate Box-Ljung ``Q(lag)`` for each column."""
    x = panel.values if isinstance(panel, ReturnPanel) else np.asarray(panel, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    assets = panel.assets if isinstance(panel, ReturnPanel) else tuple(
        f"x{i + 1}" for i in range(x.shape[1]))
    T = x.shape[0]
    if T < lag + 1:
        raise TooShort(f"need at least {lag + 1} observations for Q({lag})")
    xc = x - x.mean(axis=0)
    m2 = np.mean(xc**2, axis=0)
    if np.any(m2 <= 0):
        bad = [assets[i] for i in np.flatnonzero(m2 <= 0)]
        raise DegenerateColumn(f"zero variance in {bad}")
    m3 = np.mean(xc**3, axis=0)
    m4 = np.mean(xc**4, axis=0)
    q = np.empty(x.shape[1])
    pv = np.empty(x.shape[1])
    for i in range(x.shape[1]):
        q[i], pv[i] = ljung_box(x[:, i], lag)
    return DescriptiveStats(
        assets=tuple(assets),
        mean=x.mean(axis=0),
        std=x.std(axis=0, ddof=1),
        skewness=m3 / m2**1.5,
        excess_kurtosis=m4 / m2**2 - 3.0,
        minimum=x.min(axis=0),
        maximum=x.max(axis=0),
        q12=q,
        q12_pvalue=pv,
        lag=lag,
    )


# --------------------------------------------------------------------------
# CSV I/O


def _parse_time(text):
    try:
        return int(text)
    except ValueError:
        return np.datetime64(dt.date.fromisoformat(text), "D")


def _format_time(t):
    if isinstance(t, np.datetime64):
        return str(np.datetime_as_string(t, unit="D"))
    return str(int(t))


def read_panel(path, kind="returns", drop_missing=False):
    """Load a CSV panel.

    The first column holds ISO-8601 dates or integer indices, the remaining
    columns numbers; a header row is required.  Empty cells are an error
    unless ``drop_missing`` is set, in which case those rows are dropped.

    Parameters
    ----------
    kind : {"returns", "prices"}
        With ``"prices"`` the file is converted through ``simple_returns``.
    """
    if kind not in ("returns", "prices"):
        raise InputError(f"unknown panel kind {kind!r}")
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(str(exc), path=path) from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise ParseError("empty file (a header row is required)", path=path, line=1)
        if len(header) < 2:
            raise ParseError("need a time column and at least one data column",
                             path=path, line=1)
        assets = [h.strip() for h in header[1:]]
        times, rows = [], []
        for rec in reader:
            line = reader.line_num
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(rec)}",
                                 path=path, line=line)
            cells = [c.strip() for c in rec[1:]]
            if any(c == "" for c in cells):
                if drop_missing:
                    continue
                raise ParseError("missing cell", path=path, line=line)
            try:
                t = _parse_time(rec[0].strip())
            except ValueError:
                raise ParseError(f"bad time stamp {rec[0]!r}", path=path, line=line) from None
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                raise ParseError("non-numeric cell", path=path, line=line) from None
            times.append(t)
            rows.append(vals)
    if not rows:
        raise ParseError("no data rows", path=path)
    kinds = {type(t) for t in times}
    if len(kinds) > 1:
        raise ParseError("mixed date and integer time stamps", path=path)
    times = np.array(times) if int in kinds else np.array(times, dtype="datetime64[D]")
    try:
        panel = ReturnPanel(tuple(assets), times, np.array(rows))
    except InputError as exc:
        raise ParseError(str(exc), path=path) from exc
    if kind == "prices":
        panel = simple_returns(panel)
    return panel


def write_panel(panel, path):
    """Write a panel in the format ``read_panel`` accepts."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["time", *panel.assets])
        for t, row in zip(panel.times, panel.values):
            w.writerow([_format_time(t), *(repr(float(v)) for v in row)])


LONG_COLUMNS = ("time", "series", "method", "value")


def write_long(rows, path):
    """Write ``(time, series, method, value)`` plot-data rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(LONG_COLUMNS)
        for t, series, method, value in rows:
            w.writerow([_format_time(t), series, method, repr(float(value))])


def read_long(path):
    """Read a file written by ``write_long`` back into a list of tuples."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(str(exc), path=path) from exc
    out = []
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != LONG_COLUMNS:
            raise ParseError(f"header must be {','.join(LONG_COLUMNS)}", path=path, line=1)
        for rec in reader:
            if not rec:
                continue
            if len(rec) != 4:
                raise ParseError("expected 4 fields", path=path, line=reader.line_num)
            try:
                out.append((_parse_time(rec[0].strip()), rec[1], rec[2], float(rec[3])))
            except ValueError:
                raise ParseError("bad time stamp or value", path=path,
                                 line=reader.line_num) from None
    return out
