"""Panel ingestion and preparation.

A panel is a T x n matrix of observations (rows = time, columns = series)
together with series labels and a time index.  Preparation runs in a fixed
order: load, stationarity transform via per-series tcodes, head/tail
trimming of missing values, outlier imputation, standardization.  After
preparation the panel contains no missing values.
"""

from dataclasses import dataclass, field, replace
from datetime import datetime

import numpy as np

from .errors import DataError, DomainError, ParseError

# FRED-MD style transformation codes:
#   1 level, 2 first difference, 3 second difference, 4 log,
#   5 log first difference, 6 log second difference,
#   7 first difference of exact percentage change
TCODE_DIFF_ORDER = {1: 0, 2: 1, 3: 2, 4: 0, 5: 1, 6: 2, 7: 2}

_DATE_FORMATS = ("%m/%d/%Y", "%Y-%m-%d", "%Y-%m")


@dataclass(frozen=True)
class SeriesMeta:
    """Per-series metadata: transformation code and label."""

    tcode: int
    name: str

    def __post_init__(self):
        if self.tcode not in TCODE_DIFF_ORDER:
            raise DataError(f"series {self.name!r}: tcode must be in 1..7, got {self.tcode}")


@dataclass(frozen=True)
class Panel:
    """Rectangular observation panel.

    ``means`` and ``sds`` record the affine transform applied by
    :func:`standardize` so it is exactly invertible; they are ``None``
    while the panel is unstandardized.
    """

    values: np.ndarray
    series_ids: tuple
    time_index: tuple
    standardized: bool = False
    means: np.ndarray = None
    sds: np.ndarray = None

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise DataError("panel values must be a 2-d array")
        if v.shape[0] < 2 or v.shape[1] < 1:
            raise DataError(f"panel needs T >= 2 and n >= 1, got shape {v.shape}")
        if len(self.series_ids) != v.shape[1]:
            raise DataError("series_ids length does not match column count")
        if len(self.time_index) != v.shape[0]:
            raise DataError("time_index length does not match row count")

    @property
    def T(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]


@dataclass
class OutlierReport:
    """Imputations applied by :func:`clean_outliers`.

    ``records`` holds one (series_id, time, original_value) triple per
    imputed observation; ``degenerate_series`` lists series whose IQR was
    zero and were therefore screened with the leave-one-out fallback rule.
    """

    records: list = field(default_factory=list)
    degenerate_series: list = field(default_factory=list)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("series,time,original_value\n")
            for sid, t, val in self.records:
                fh.write(f"{sid},{t},{val!r}\n")


def _parse_date(token):
    token = token.strip()
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(token, fmt).strftime("%Y-%m")
        except ValueError:
            continue
    return None


def _parse_cell(cell, row, col):
    cell = cell.strip()
    if cell == "" or cell.upper() in ("NA", "NAN"):
        return np.nan
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"unparseable number {cell!r}", row=row, column=col) from None


def load_csv(path, layout="plain"):
    """Read a panel from CSV.

    ``layout='plain'``: header of series ids, then data rows; tcodes
    default to 1 and the time index is integer ticks.  ``layout='fredmd'``:
    first column holds dates, the second row holds tcodes; rows whose date
    does not parse are rejected.

    Returns (Panel, list[SeriesMeta]).  The returned panel is raw: missing
    values may be present until :func:`trim_missing` runs.
    """
    if layout not in ("plain", "fredmd"):
        raise DataError(f"unknown layout {layout!r}")
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip() != ""]
    if len(rows) < 2:
        raise ParseError("CSV needs a header row and at least one data row")

    header = [c.strip() for c in rows[0]]
    if layout == "plain":
        ids = header
        ncol = len(ids)
        data, ticks = [], []
        for r, row in enumerate(rows[1:], start=2):
            if len(row) != ncol:
                raise ParseError(f"ragged row: expected {ncol} fields, got {len(row)}", row=r)
            data.append([_parse_cell(c, r, j + 1) for j, c in enumerate(row)])
            ticks.append(len(ticks))
        meta = [SeriesMeta(tcode=1, name=s) for s in ids]
        values = np.asarray(data, dtype=np.float64)
        return Panel(values, tuple(ids), tuple(ticks)), meta

    ids = header[1:]
    ncol = len(header)
    if len(rows) < 3:
        raise ParseError("fredmd layout needs a tcode row and at least one data row")
    tcode_row = rows[1]
    if len(tcode_row) != ncol:
        raise ParseError(f"ragged tcode row: expected {ncol} fields, got {len(tcode_row)}", row=2)
    try:
        tcodes = [int(float(c)) for c in tcode_row[1:]]
    except ValueError:
        raise ParseError("tcode row contains non-integer entries", row=2) from None
    meta = [SeriesMeta(tcode=tc, name=s) for tc, s in zip(tcodes, ids)]

    data, dates = [], []
    for r, row in enumerate(rows[2:], start=3):
        if len(row) != ncol:
            raise ParseError(f"ragged row: expected {ncol} fields, got {len(row)}", row=r)
        date = _parse_date(row[0])
        if date is None:
            continue
        data.append([_parse_cell(c, r, j + 2) for j, c in enumerate(row[1:])])
        dates.append(date)
    if len(data) < 2:
        raise ParseError("fewer than two rows with parseable dates")
    values = np.asarray(data, dtype=np.float64)
    return Panel(values, tuple(ids), tuple(dates)), meta


def _transform_series(x, tcode, name):
    if tcode in (4, 5, 6) and np.nanmin(x) <= 0.0:
        bad = int(np.nanargmin(x))
        raise DomainError(f"series {name!r}: log transform needs positive values, row {bad} has {x[bad]!r}")
    if tcode == 1:
        return x
    if tcode == 2:
        return np.concatenate([[np.nan], np.diff(x)])
    if tcode == 3:
        return np.concatenate([[np.nan, np.nan], np.diff(x, 2)])
    if tcode == 4:
        return np.log(x)
    if tcode == 5:
        return np.concatenate([[np.nan], np.diff(np.log(x))])
    if tcode == 6:
        return np.concatenate([[np.nan, np.nan], np.diff(np.log(x), 2)])
    if tcode == 7:
        pct = x[1:] / x[:-1] - 1.0
        return np.concatenate([[np.nan, np.nan], np.diff(pct)])
    raise DataError(f"series {name!r}: unknown tcode {tcode}")


def apply_tcodes(panel, meta):
    """Apply per-series stationarity transforms.

    Leading rows lost to differencing are dropped uniformly across series
    (at most 2), keeping the panel rectangular.
    """
    if len(meta) != panel.n:
        raise DataError("one SeriesMeta per series required")
    loss = max(TCODE_DIFF_ORDER[m.tcode] for m in meta)
    out = np.empty_like(panel.values)
    for j, m in enumerate(meta):
        out[:, j] = _transform_series(panel.values[:, j], m.tcode, m.name)
    if panel.T - loss < 2:
        raise DataError("panel too short after differencing")
    return replace(panel, values=out[loss:], time_index=panel.time_index[loss:])


def trim_missing(panel):
    """Drop head/tail rows containing missing values.

    Interior missing values are an error: the estimators need a complete
    balanced panel.
    """
    bad = np.any(np.isnan(panel.values), axis=1)
    if not bad.any():
        return panel
    keep = np.nonzero(~bad)[0]
    if keep.size < 2:
        raise DataError("fewer than two complete rows after trimming")
    lo, hi = keep[0], keep[-1] + 1
    if bad[lo:hi].any():
        t = int(np.nonzero(bad[lo:hi])[0][0] + lo)
        raise DataError(f"interior missing value at row {panel.time_index[t]!r}")
    return replace(panel, values=panel.values[lo:hi], time_index=panel.time_index[lo:hi])


def clean_outliers(panel, threshold_iqr=10.0):
    """Impute outlying observations by the per-series non-outlier mean.

    An observation is an outlier when it deviates from the series median
    by more than ``threshold_iqr`` interquartile ranges.  Series with zero
    IQR are flagged degenerate and screened with a leave-one-out mean/sd
    rule instead (a point deviating from the rest by more than
    ``threshold_iqr`` standard deviations of the rest is an outlier; any
    deviation counts when the rest is constant).

    Returns (cleaned Panel, OutlierReport).
    """
    if threshold_iqr <= 0:
        raise DataError("threshold_iqr must be positive")
    if np.isnan(panel.values).any():
        raise DataError("clean_outliers requires a complete panel; run trim_missing first")
    values = panel.values.copy()
    report = OutlierReport()
    T = panel.T
    for j, sid in enumerate(panel.series_ids):
        x = values[:, j]
        q1, med, q3 = np.percentile(x, [25.0, 50.0, 75.0])
        iqr = q3 - q1
        if iqr > 0.0:
            mask = np.abs(x - med) > threshold_iqr * iqr
        else:
            report.degenerate_series.append(sid)
            s, q = x.sum(), (x * x).sum()
            loo_mean = (s - x) / (T - 1)
            loo_var = np.maximum((q - x * x) / (T - 1) - loo_mean**2, 0.0)
            dev = np.abs(x - loo_mean)
            loo_sd = np.sqrt(loo_var)
            mask = dev > threshold_iqr * loo_sd
        if not mask.any() or mask.all():
            continue
        fill = x[~mask].mean()
        for t in np.nonzero(mask)[0]:
            report.records.append((sid, panel.time_index[t], float(x[t])))
        x[mask] = fill
    return replace(panel, values=values), report


def standardize(panel):
    """Center and scale each series to zero mean and unit variance.

    The variance uses denominator T (population convention), matching the
    covariance convention of the factor estimators.  The applied means and
    sds are stored on the result for exact inversion.
    """
    if np.isnan(panel.values).any():
        raise DataError("standardize requires a complete panel")
    means = panel.values.mean(axis=0)
    sds = panel.values.std(axis=0)
    for j, s in enumerate(sds):
        if s <= 0.0:
            raise DomainError(f"series {panel.series_ids[j]!r} has zero variance")
    values = (panel.values - means) / sds
    return replace(panel, values=values, standardized=True, means=means, sds=sds)


def unstandardize(panel):
    """Invert :func:`standardize` exactly using the stored moments."""
    if not panel.standardized:
        raise DataError("panel is not standardized")
    values = panel.values * panel.sds + panel.means
    return replace(panel, values=values, standardized=False, means=None, sds=None)


def prepare(panel, meta, threshold_iqr=10.0):
    """Full preparation chain: tcodes, trim, outlier imputation, standardize.

    Returns (prepared Panel, OutlierReport).
    """
    p = apply_tcodes(panel, meta)
    p = trim_missing(p)
    p, report = clean_outliers(p, threshold_iqr=threshold_iqr)
    return standardize(p), report
