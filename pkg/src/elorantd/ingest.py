"""Corpus parsing and alignment.

Four text formats: station registry CSV, hourly weather CSV, 1 Hz TD CSV,
and ESRI ASCII DEM rasters.  Floats are written with repr() so every
parse -> serialize -> parse round trip is exact.  Timestamps are UTC
ISO-8601 with a trailing Z.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import (
    DuplicateStationError,
    EmptyIntersectionError,
    InconsistentDimensionsError,
    OutOfRangeError,
    ParseError,
    UnknownStationError,
)
from .types import (
    ALL_FACTORS,
    EpochHour,
    FactorSet,
    GeoPoint,
    MetFactor,
    factor_set,
    parse_utc,
    validate_factor_value,
    validate_td_ns,
)

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

# half an hour of 1 Hz data; hours with fewer samples are dropped
DEFAULT_MIN_SAMPLES_PER_HOUR = 1800


def format_timestamp(t: datetime) -> str:
    return t.strftime(TIMESTAMP_FORMAT)


@dataclass(frozen=True)
class StationRegistry:
    """Station ids with their coordinates; file order is preserved."""

    entries: tuple[tuple[str, GeoPoint], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("registry must contain at least one station")
        ids = [sid for sid, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("registry station ids must be unique")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(sid for sid, _ in self.entries)

    def location(self, station_id: str) -> GeoPoint:
        for sid, loc in self.entries:
            if sid == station_id:
                return loc
        raise UnknownStationError(station_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, station_id: str) -> bool:
        return any(sid == station_id for sid, _ in self.entries)


class WeatherSeries:
    """Per (station, hour) partial records of factor values.

    Missing values are genuinely absent; there are no sentinel numbers.
    """

    def __init__(self):
        self._data: dict[str, dict[EpochHour, dict[MetFactor, float]]] = {}

    def put(self, station_id: str, epoch: EpochHour, factor: MetFactor, value: float):
        self._data.setdefault(station_id, {}).setdefault(epoch, {})[factor] = value

    def value(self, station_id: str, epoch: EpochHour, factor: MetFactor) -> float | None:
        return self._data.get(station_id, {}).get(epoch, {}).get(factor)

    def record(self, station_id: str, epoch: EpochHour) -> dict[MetFactor, float]:
        return dict(self._data.get(station_id, {}).get(epoch, {}))

    def station_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self._data))

    def epochs(self) -> tuple[EpochHour, ...]:
        seen = set()
        for per_station in self._data.values():
            seen.update(per_station)
        return tuple(sorted(seen, key=lambda e: e.instant))

    def __eq__(self, other) -> bool:
        return isinstance(other, WeatherSeries) and self._data == other._data


@dataclass(frozen=True)
class HourlyTdSeries:
    """Hourly-mean TD values with per-hour sample counts, epoch-sorted."""

    epochs: tuple[EpochHour, ...]
    values: np.ndarray
    counts: np.ndarray

    @classmethod
    def from_mapping(cls, mapping: dict[EpochHour, tuple[float, int]]) -> "HourlyTdSeries":
        epochs = tuple(sorted(mapping, key=lambda e: e.instant))
        values = np.array([mapping[e][0] for e in epochs], dtype=float)
        counts = np.array([mapping[e][1] for e in epochs], dtype=int)
        return cls(epochs, values, counts)

    def value(self, epoch: EpochHour) -> float | None:
        try:
            return float(self.values[self.epochs.index(epoch)])
        except ValueError:
            return None

    def as_dict(self) -> dict[EpochHour, float]:
        return {e: float(v) for e, v in zip(self.epochs, self.values)}

    def __len__(self) -> int:
        return len(self.epochs)


@dataclass(frozen=True)
class AlignedDataset:
    """Epochs where TD and every requested factor at every station exist.

    values has shape (n_epochs, n_stations, n_factors) with factor columns
    in canonical order and stations in registry order.
    """

    epochs: tuple[EpochHour, ...]
    station_ids: tuple[str, ...]
    factors: FactorSet
    values: np.ndarray
    td: np.ndarray

    def __len__(self) -> int:
        return len(self.epochs)


@dataclass(frozen=True)
class ElevationGrid:
    """Row-major elevation raster; row 0 is the northernmost row.

    origin is the lower-left corner of the raster footprint (ESRI
    convention); absent cells are NaN internally and serialize back to
    the recorded nodata sentinel.
    """

    origin: GeoPoint
    cellsize: float
    values: np.ndarray
    nodata: float = -9999.0

    def __post_init__(self):
        if self.cellsize <= 0:
            raise ValueError("cellsize must be positive")
        if self.values.ndim != 2 or min(self.values.shape) < 1:
            raise ValueError("elevation raster must be 2-d and nonempty")

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]

    def cell_center(self, row: int, col: int) -> GeoPoint:
        lat = self.origin.lat + (self.nrows - row - 0.5) * self.cellsize
        lon = self.origin.lon + (col + 0.5) * self.cellsize
        return GeoPoint(lat, lon)

    def contains(self, p: GeoPoint) -> bool:
        return (
            self.origin.lat <= p.lat <= self.origin.lat + self.nrows * self.cellsize
            and self.origin.lon <= p.lon <= self.origin.lon + self.ncols * self.cellsize
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ElevationGrid)
            and self.origin == other.origin
            and self.cellsize == other.cellsize
            and self.nodata == other.nodata
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values, equal_nan=True))
        )


# -- station registry --------------------------------------------------------

def parse_station_registry(path) -> StationRegistry:
    entries: list[tuple[str, GeoPoint]] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["station_id", "lat", "lon"]:
            raise ParseError(path, 1, f"expected header station_id,lat,lon, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(path, lineno, f"expected 3 fields, got {len(row)}")
            sid = row[0].strip()
            if not sid:
                raise ParseError(path, lineno, "empty station id")
            if sid in seen:
                raise DuplicateStationError(sid)
            seen.add(sid)
            try:
                loc = GeoPoint(float(row[1]), float(row[2]))
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            entries.append((sid, loc))
    if not entries:
        raise ParseError(path, 2, "registry has no data rows")
    return StationRegistry(tuple(entries))


def write_station_registry(registry: StationRegistry, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "lat", "lon"])
        for sid, loc in registry.entries:
            writer.writerow([sid, repr(loc.lat), repr(loc.lon)])


# -- weather ------------------------------------------------------------------

def parse_weather_csv(path, registry: StationRegistry) -> WeatherSeries:
    series = WeatherSeries()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["station_id", "timestamp"]:
            raise ParseError(path, 1, "expected header starting station_id,timestamp")
        try:
            columns = [MetFactor.from_column(name) for name in header[2:]]
        except ValueError as exc:
            raise ParseError(path, 1, str(exc)) from None
        if not columns:
            raise ParseError(path, 1, "no factor columns declared")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(columns) + 2:
                raise ParseError(
                    path, lineno, f"expected {len(columns) + 2} fields, got {len(row)}"
                )
            sid = row[0].strip()
            if sid not in registry:
                raise UnknownStationError(sid)
            try:
                epoch = EpochHour.parse(row[1])
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            for factor, cell in zip(columns, row[2:]):
                cell = cell.strip()
                if not cell:
                    continue
                try:
                    value = validate_factor_value(factor, float(cell))
                except (ValueError, OutOfRangeError) as exc:
                    if isinstance(exc, OutOfRangeError):
                        raise
                    raise ParseError(path, lineno, f"bad number {cell!r}") from None
                series.put(sid, epoch, factor, value)
    return series


def write_weather_csv(series: WeatherSeries, path, factors: FactorSet = ALL_FACTORS) -> None:
    factors = factor_set(factors)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station_id", "timestamp"] + [f.column for f in factors])
        for sid in series.station_ids():
            epochs = sorted(
                (e for e in series.epochs() if series.record(sid, e)),
                key=lambda e: e.instant,
            )
            for epoch in epochs:
                record = series.record(sid, epoch)
                row = [sid, epoch.isoformat()]
                row += ["" if f not in record else repr(record[f]) for f in factors]
                writer.writerow(row)


# -- 1 Hz TD ------------------------------------------------------------------

def parse_td_csv(path) -> list[tuple[datetime, float]]:
    samples: list[tuple[datetime, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp", "td_ns"]:
            raise ParseError(path, 1, f"expected header timestamp,td_ns, got {header}")
        prev: datetime | None = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(path, lineno, f"expected 2 fields, got {len(row)}")
            try:
                when = parse_utc(row[0])
                value = validate_td_ns(float(row[1]))
            except (ValueError, OutOfRangeError) as exc:
                if isinstance(exc, OutOfRangeError):
                    raise
                raise ParseError(path, lineno, str(exc)) from None
            if prev is not None and when <= prev:
                raise ParseError(path, lineno, "timestamps must be strictly increasing")
            prev = when
            samples.append((when, value))
    return samples


def write_td_csv(samples, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "td_ns"])
        for when, value in samples:
            writer.writerow([format_timestamp(when), repr(float(value))])


def aggregate_hourly(samples, min_samples: int = DEFAULT_MIN_SAMPLES_PER_HOUR) -> HourlyTdSeries:
    """Mean TD per whole UTC hour; hours with < min_samples are omitted.

    Values are sorted before summation so the result is independent of
    within-hour sample order.
    """
    buckets: dict[EpochHour, list[float]] = {}
    for when, value in samples:
        hour = EpochHour(when.replace(minute=0, second=0, microsecond=0))
        buckets.setdefault(hour, []).append(float(value))
    mapping: dict[EpochHour, tuple[float, int]] = {}
    for hour, values in buckets.items():
        if len(values) < min_samples:
            continue
        ordered = np.sort(np.asarray(values, dtype=float))
        mapping[hour] = (float(ordered.sum() / ordered.size), len(values))
    return HourlyTdSeries.from_mapping(mapping)


# -- alignment ----------------------------------------------------------------

def align_epochs(
    weather: WeatherSeries,
    td: HourlyTdSeries,
    factors: FactorSet,
    stations: StationRegistry,
) -> AlignedDataset:
    """Intersect TD hours with hours fully covered at every station."""
    factors = factor_set(factors)
    ids = stations.ids
    kept: list[EpochHour] = []
    for epoch in td.epochs:
        complete = all(
            all(weather.value(sid, epoch, f) is not None for f in factors) for sid in ids
        )
        if complete:
            kept.append(epoch)
    if not kept:
        raise EmptyIntersectionError(
            "no epoch has TD plus every requested factor at every station"
        )
    kept.sort(key=lambda e: e.instant)
    values = np.empty((len(kept), len(ids), len(factors)), dtype=float)
    for t, epoch in enumerate(kept):
        for s, sid in enumerate(ids):
            for i, f in enumerate(factors):
                values[t, s, i] = weather.value(sid, epoch, f)
    td_map = td.as_dict()
    td_values = np.array([td_map[e] for e in kept], dtype=float)
    return AlignedDataset(tuple(kept), ids, factors, values, td_values)


# -- DEM ----------------------------------------------------------------------

_DEM_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def parse_dem(path) -> ElevationGrid:
    """ESRI ASCII grid: six header lines then row-major values, north first."""
    header: dict[str, float] = {}
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lineno = 0
    for lineno, line in enumerate(lines[:6], start=1):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(path, lineno, f"bad header line {line!r}")
        key = parts[0].lower()
        if key not in _DEM_HEADER_KEYS:
            raise ParseError(path, lineno, f"unknown header keyword {parts[0]!r}")
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise ParseError(path, lineno, f"bad header value {parts[1]!r}") from None
    missing = [k for k in _DEM_HEADER_KEYS if k not in header]
    if missing:
        raise ParseError(path, lineno, f"missing header keywords {missing}")
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    if ncols < 1 or nrows < 1:
        raise ParseError(path, 1, "ncols and nrows must be >= 1")
    nodata = header["nodata_value"]
    for lineno, line in enumerate(lines[6:], start=7):
        if not line.strip():
            continue
        try:
            rows.append([float(v) for v in line.split()])
        except ValueError:
            raise ParseError(path, lineno, "bad elevation value") from None
    if len(rows) != nrows or any(len(r) != ncols for r in rows):
        raise InconsistentDimensionsError(
            f"{path}: declared {nrows}x{ncols}, found "
            f"{len(rows)} rows of widths {sorted({len(r) for r in rows})}"
        )
    values = np.array(rows, dtype=float)
    values[values == nodata] = np.nan
    if not np.all(np.isfinite(values) | np.isnan(values)):
        raise ParseError(path, 7, "non-finite elevation value")
    return ElevationGrid(
        origin=GeoPoint(header["yllcorner"], header["xllcorner"]),
        cellsize=header["cellsize"],
        values=values,
        nodata=nodata,
    )


def write_dem(grid: ElevationGrid, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"ncols {grid.ncols}\n")
        fh.write(f"nrows {grid.nrows}\n")
        fh.write(f"xllcorner {repr(grid.origin.lon)}\n")
        fh.write(f"yllcorner {repr(grid.origin.lat)}\n")
        fh.write(f"cellsize {repr(grid.cellsize)}\n")
        fh.write(f"NODATA_value {repr(grid.nodata)}\n")
        for row in grid.values:
            cells = [repr(grid.nodata) if math.isnan(v) else repr(float(v)) for v in row]
            fh.write(" ".join(cells) + "\n")
