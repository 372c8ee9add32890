"""Time-series ingestion: CSV loading, resampling, scaling, day alignment.

Input files follow one schema: a ``timestamp,value`` header, ISO-8601
timestamps with offset (``Z`` accepted, naive treated as UTC), decimal values
with a ``.`` separator, UTF-8 with LF or CRLF endings.  All timestamps are
normalized to UTC at parse time; calendar grouping happens in a configurable
label timezone only inside :func:`align`.

A series is represented by the samples it actually has: gaps are missing
timestamps, never NaN values.  Resampling fills sub-step gaps by linear
interpolation and drops anything it cannot honestly produce; the day-alignment
stage then discards incomplete days with a warning.
"""

from __future__ import annotations

import csv
import datetime as dt
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

QUANTITIES = ("load", "irradiance", "carbon_intensity", "price_cons", "price_inj")

# Upsampling policy per quantity: prices, load and carbon intensity hold the
# previous value; irradiance is interpolated linearly (it varies smoothly
# within an hour, step-holding it would bias surface energy).
_UPSAMPLE_LINEAR = frozenset({"irradiance"})

_PER_UNIT_TOLERANCE = 0.05


class IngestError(ValueError):
    """Base class for ingestion failures."""


class ParseError(IngestError):
    """A CSV row could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class NonMonotonicTimestamps(IngestError):
    """Timestamps are not strictly increasing."""


class EmptySeries(IngestError):
    """The file contains a header but no data rows."""


class IncompatibleResolution(IngestError):
    """Target resolution is neither a multiple nor a divisor of the native one."""


class OutOfRange(IngestError):
    """A per-unit load value falls outside [0, 1.05]."""


class NoOverlap(IngestError):
    """The series share no complete calendar day."""


class IncompleteDayWarning(UserWarning):
    """A calendar day was dropped because samples were missing."""


@dataclass(frozen=True, eq=False)
class RawTimeSeries:
    """A single quantity sampled on a regular grid, possibly with gaps.

    Attributes:
        timestamps: UTC epoch seconds, strictly increasing int64.
        values: float64 samples, finite everywhere.
        resolution_minutes: native sampling period (median timestamp delta);
            0 for a single-sample series.
        quantity: one of ``QUANTITIES``.
    """

    timestamps: np.ndarray
    values: np.ndarray
    resolution_minutes: float
    quantity: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "timestamps",
                           np.ascontiguousarray(np.asarray(self.timestamps, dtype=np.int64)))
        object.__setattr__(self, "values",
                           np.ascontiguousarray(np.asarray(self.values, dtype=np.float64)))

    def __len__(self) -> int:
        return self.timestamps.size


def _parse_timestamp(text: str, line_number: int) -> int:
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        stamp = dt.datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ParseError(f"line {line_number}: bad timestamp {text!r} ({exc})",
                         line_number) from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=dt.timezone.utc)
    return int(stamp.timestamp())


def load_series(path, quantity: str) -> RawTimeSeries:
    """Parse one ``timestamp,value`` CSV into a RawTimeSeries.

    Args:
        path: CSV file path.
        quantity: tag from ``QUANTITIES`` describing what the file holds.

    Raises:
        ParseError: malformed header/row (line number reported).
        NonMonotonicTimestamps: duplicate or decreasing timestamps.
        EmptySeries: no data rows.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")

    stamps: list[int] = []
    values: list[float] = []
    with open(path, "r", encoding="utf-8-sig", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise EmptySeries(f"{path}: file is empty")
        if [c.strip().lower() for c in header] != ["timestamp", "value"]:
            raise ParseError(f"{path}: line 1: expected header 'timestamp,value', "
                             f"got {','.join(header)!r}", 1)
        for line_number, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}: line {line_number}: expected 2 fields, got {len(row)}",
                                 line_number)
            stamp = _parse_timestamp(row[0], line_number)
            try:
                value = float(row[1])
            except ValueError:
                raise ParseError(f"{path}: line {line_number}: bad value {row[1]!r}",
                                 line_number) from None
            if not np.isfinite(value):
                raise ParseError(f"{path}: line {line_number}: non-finite value {row[1]!r}",
                                 line_number)
            if stamps and stamp <= stamps[-1]:
                raise NonMonotonicTimestamps(
                    f"{path}: line {line_number}: timestamp {row[0].strip()!r} does not "
                    f"increase over the previous sample")
            stamps.append(stamp)
            values.append(value)

    if not stamps:
        raise EmptySeries(f"{path}: no data rows")

    deltas = np.diff(np.asarray(stamps, dtype=np.int64))
    resolution = float(np.median(deltas)) / 60.0 if deltas.size else 0.0
    return RawTimeSeries(np.asarray(stamps, dtype=np.int64),
                         np.asarray(values, dtype=np.float64),
                         resolution, quantity)


def _regular_grid(series: RawTimeSeries) -> tuple[np.ndarray, int]:
    """Place samples on the regular native grid; gaps become NaN.

    Returns (values on grid, grid start epoch seconds).
    """
    step_s = int(round(series.resolution_minutes * 60.0))
    start = int(series.timestamps[0])
    offsets = series.timestamps - start
    slots, remainder = np.divmod(offsets, step_s)
    if np.any(remainder != 0):
        bad = int(np.flatnonzero(remainder != 0)[0])
        raise IncompatibleResolution(
            f"sample {bad} is off the regular {series.resolution_minutes:g}-minute grid")
    grid = np.full(int(slots[-1]) + 1, np.nan)
    grid[slots] = series.values
    return grid, start


def _fill_short_gaps(grid: np.ndarray, native_minutes: float, target_minutes: float) -> np.ndarray:
    """Linearly interpolate NaN runs shorter than one target step."""
    missing = np.isnan(grid)
    if not missing.any():
        return grid
    filled = grid.copy()
    idx = np.arange(grid.size)
    valid = ~missing
    edges = np.diff(missing.astype(np.int8))
    run_starts = np.flatnonzero(edges == 1) + 1
    run_ends = np.flatnonzero(edges == -1)
    if missing[0]:
        run_starts = np.concatenate(([0], run_starts))
    if missing[-1]:
        run_ends = np.concatenate((run_ends, [grid.size - 1]))
    for start, end in zip(run_starts, run_ends):
        # The grid spans first..last sample, so runs never touch the edges.
        if (end - start + 1) * native_minutes < target_minutes:
            filled[start:end + 1] = np.interp(idx[start:end + 1], idx[valid], grid[valid])
    return filled


def resample(series: RawTimeSeries, step_hours: float) -> RawTimeSeries:
    """Re-grid a series to ``step_hours`` resolution.

    Downsampling takes the mean over each target bin (bins anchored to the
    epoch, i.e. to midnight UTC whenever the step divides 24 h) and keeps only
    bins with every native slot present.  Upsampling holds the previous value,
    except irradiance which is interpolated linearly.  Gaps shorter than one
    target step are interpolated away first; longer gaps survive as missing
    timestamps for the alignment stage to judge.

    Raises:
        IncompatibleResolution: target is neither an integer multiple nor an
            integer divisor of the native resolution.
    """
    target_minutes = step_hours * 60.0
    native_minutes = series.resolution_minutes
    if target_minutes <= 0:
        raise IncompatibleResolution(f"target step must be positive, got {step_hours!r} h")
    if native_minutes <= 0:
        raise IncompatibleResolution("series is too short to infer a native resolution")

    ratio = target_minutes / native_minutes
    if abs(ratio - 1.0) < 1e-9:
        return RawTimeSeries(series.timestamps.copy(), series.values.copy(),
                             target_minutes, series.quantity)

    grid, start = _regular_grid(series)
    grid = _fill_short_gaps(grid, native_minutes, target_minutes)
    native_s = int(round(native_minutes * 60.0))
    target_s = int(round(target_minutes * 60.0))

    if ratio > 1.0:   # downsample: mean over bins of k native slots
        if abs(ratio - round(ratio)) > 1e-9:
            raise IncompatibleResolution(
                f"{target_minutes:g} min is not an integer multiple of the native "
                f"{native_minutes:g} min resolution")
        k = int(round(ratio))
        # Epoch-anchored bins: skip leading slots until the first bin boundary.
        lead = (-start // native_s) % k
        first_bin_start = start + lead * native_s
        usable = grid[lead:]
        n_bins = usable.size // k
        if n_bins == 0:
            raise EmptySeries("series shorter than one target bin")
        binned = usable[:n_bins * k].reshape(n_bins, k)
        means = binned.mean(axis=1)   # NaN when any slot missing
        keep = np.isfinite(means)
        stamps = first_bin_start + target_s * np.flatnonzero(keep)
        return RawTimeSeries(stamps.astype(np.int64), means[keep],
                             target_minutes, series.quantity)

    # upsample: k target slots per native slot
    inv = native_minutes / target_minutes
    if abs(inv - round(inv)) > 1e-9:
        raise IncompatibleResolution(
            f"{target_minutes:g} min is not an integer divisor of the native "
            f"{native_minutes:g} min resolution")
    k = int(round(inv))
    n_native = grid.size
    sub_stamps = start + target_s * np.arange(n_native * k, dtype=np.int64)
    slot = np.arange(n_native * k) // k
    phase = np.arange(n_native * k) % k
    if series.quantity in _UPSAMPLE_LINEAR:
        position = np.arange(n_native * k) / k
        sub_values = np.interp(position, np.arange(n_native), grid)
        next_slot = np.minimum(slot + 1, n_native - 1)
        keep = np.isfinite(grid[slot]) & (np.isfinite(grid[next_slot]) | (phase == 0))
    else:
        sub_values = grid[slot]
        keep = np.isfinite(grid[slot])
    return RawTimeSeries(sub_stamps[keep], sub_values[keep],
                         target_minutes, series.quantity)


def scale_load(series: RawTimeSeries, rated_power: float) -> RawTimeSeries:
    """Convert a per-unit load series to kW at the given rated power.

    Raises:
        OutOfRange: any per-unit value outside [0, 1.05].
    """
    if series.quantity != "load":
        raise ValueError(f"scale_load expects a load series, got {series.quantity!r}")
    too_high = series.values > 1.0 + _PER_UNIT_TOLERANCE
    negative = series.values < 0.0
    if too_high.any() or negative.any():
        bad = int(np.flatnonzero(too_high | negative)[0])
        raise OutOfRange(
            f"per-unit load sample {bad} = {series.values[bad]:g} outside "
            f"[0, {1.0 + _PER_UNIT_TOLERANCE:g}]")
    return RawTimeSeries(series.timestamps.copy(), series.values * rated_power,
                         series.resolution_minutes, series.quantity)


@dataclass(frozen=True, eq=False)
class AlignedDataset:
    """All quantities on a shared calendar of complete days.

    ``values[q]`` has shape (n_days, samples_per_day); ``dates[d]`` is the
    calendar date (in ``timezone``) of row d.
    """

    dates: tuple[dt.date, ...]
    values: dict[str, np.ndarray]
    step_hours: float
    timezone: str

    @property
    def n_days(self) -> int:
        return len(self.dates)

    @property
    def samples_per_day(self) -> int:
        return next(iter(self.values.values())).shape[1]

    def quantity(self, name: str) -> np.ndarray:
        return self.values[name]


def _tzinfo(name: str) -> dt.tzinfo:
    if name.upper() == "UTC":
        return dt.timezone.utc
    from zoneinfo import ZoneInfo
    return ZoneInfo(name)


def align(series_list: Sequence[RawTimeSeries], step_hours: float,
          tz: str = "UTC") -> AlignedDataset:
    """Restrict all series to the intersection of their complete days.

    A day is complete for a series when it holds exactly 24/step_hours
    samples in the label timezone ``tz``; incomplete days (including DST
    transition days in zones that observe it) are dropped with an
    :class:`IncompleteDayWarning`.

    Raises:
        IncompatibleResolution: a series is not at ``step_hours`` resolution.
        NoOverlap: no complete day is shared by every series.
        ValueError: duplicate or empty quantity list.
    """
    if not series_list:
        raise ValueError("align requires at least one series")
    quantities = [s.quantity for s in series_list]
    if len(set(quantities)) != len(quantities):
        raise ValueError(f"duplicate quantities in {quantities}")

    samples_per_day = 24.0 / step_hours
    if abs(samples_per_day - round(samples_per_day)) > 1e-9:
        raise IncompatibleResolution(
            f"step of {step_hours:g} h does not divide a 24 h day")
    samples_per_day = int(round(samples_per_day))
    zone = _tzinfo(tz)

    per_series_days: list[dict[dt.date, np.ndarray]] = []
    for series in series_list:
        if abs(series.resolution_minutes - step_hours * 60.0) > 1e-9:
            raise IncompatibleResolution(
                f"{series.quantity}: resolution {series.resolution_minutes:g} min "
                f"!= configured step {step_hours * 60.0:g} min; resample first")
        local_dates = np.asarray([
            dt.datetime.fromtimestamp(int(t), tz=zone).date() for t in series.timestamps
        ], dtype=object)
        day_values: dict[dt.date, np.ndarray] = {}
        dropped: list[dt.date] = []
        # Timestamps are strictly increasing, so each day's samples are contiguous.
        unique_dates, starts = np.unique(local_dates, return_index=True)
        boundaries = np.append(np.sort(starts), local_dates.size)
        for date, begin, end in zip(unique_dates[np.argsort(starts)],
                                    boundaries[:-1], boundaries[1:]):
            if end - begin == samples_per_day:
                day_values[date] = series.values[begin:end]
            else:
                dropped.append(date)
        if dropped:
            preview = ", ".join(str(d) for d in dropped[:3])
            warnings.warn(
                f"{series.quantity}: dropped {len(dropped)} incomplete day(s) "
                f"(expected {samples_per_day} samples): {preview}"
                + ("..." if len(dropped) > 3 else ""),
                IncompleteDayWarning, stacklevel=2)
        per_series_days.append(day_values)

    shared = set(per_series_days[0])
    for day_values in per_series_days[1:]:
        shared &= set(day_values)
    if not shared:
        raise NoOverlap("series share no complete calendar day")

    dates = tuple(sorted(shared))
    values = {
        series.quantity: np.vstack([day_values[d] for d in dates])
        for series, day_values in zip(series_list, per_series_days)
    }
    return AlignedDataset(dates=dates, values=values, step_hours=step_hours,
                          timezone=tz)
