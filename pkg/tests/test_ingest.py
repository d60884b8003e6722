from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from elorantd.errors import (
    DuplicateStationError,
    EmptyIntersectionError,
    InconsistentDimensionsError,
    OutOfRangeError,
    ParseError,
    UnknownStationError,
)
from elorantd.ingest import (
    ElevationGrid,
    HourlyTdSeries,
    StationRegistry,
    WeatherSeries,
    aggregate_hourly,
    align_epochs,
    parse_dem,
    parse_station_registry,
    parse_td_csv,
    parse_weather_csv,
    write_dem,
    write_station_registry,
    write_td_csv,
    write_weather_csv,
)
from elorantd.types import EpochHour, GeoPoint, MetFactor, factor_set


def utc(*args):
    return datetime(*args, tzinfo=timezone.utc)


def hours_after(start: EpochHour, h: int) -> EpochHour:
    return EpochHour.from_hours(start.hours_since_epoch + h)


@pytest.fixture
def registry():
    return StationRegistry(
        (
            ("ST01", GeoPoint(36.0, 127.0)),
            ("ST02", GeoPoint(36.5, 127.5)),
        )
    )


# -- station registry ---------------------------------------------------------


def test_parse_station_registry_ten_rows(tmp_path):
    path = tmp_path / "stations.csv"
    lines = ["station_id,lat,lon"]
    for k in range(10):
        lines.append(f"S{k:02d},{36.0 + 0.1 * k},{127.0 + 0.1 * k}")
    path.write_text("\n".join(lines) + "\n")
    reg = parse_station_registry(path)
    assert len(reg) == 10
    assert reg.ids[0] == "S00"
    assert reg.location("S03") == GeoPoint(36.3, 127.3)


def test_parse_station_registry_empty_data(tmp_path):
    path = tmp_path / "stations.csv"
    path.write_text("station_id,lat,lon\n")
    with pytest.raises(ParseError):
        parse_station_registry(path)


def test_parse_station_registry_duplicate(tmp_path):
    path = tmp_path / "stations.csv"
    path.write_text("station_id,lat,lon\nA,36,127\nA,36.5,127.5\n")
    with pytest.raises(DuplicateStationError):
        parse_station_registry(path)


def test_parse_station_registry_bad_header(tmp_path):
    path = tmp_path / "stations.csv"
    path.write_text("id,lat,lon\nA,36,127\n")
    with pytest.raises(ParseError):
        parse_station_registry(path)


def test_station_registry_roundtrip(tmp_path, registry):
    path = tmp_path / "out.csv"
    write_station_registry(registry, path)
    again = parse_station_registry(path)
    assert again == registry


# -- weather ------------------------------------------------------------------


def test_parse_weather_row_stored(tmp_path, registry):
    path = tmp_path / "weather.csv"
    path.write_text(
        "station_id,timestamp,humidity_pct\nST01,2024-10-01T00:00:00Z,55\n"
    )
    series = parse_weather_csv(path, registry)
    epoch = EpochHour.parse("2024-10-01T00:00:00Z")
    assert series.value("ST01", epoch, MetFactor.HUMIDITY) == 55.0


def test_parse_weather_unknown_station(tmp_path, registry):
    path = tmp_path / "weather.csv"
    path.write_text(
        "station_id,timestamp,humidity_pct\nNOPE,2024-10-01T00:00:00Z,55\n"
    )
    with pytest.raises(UnknownStationError):
        parse_weather_csv(path, registry)


def test_parse_weather_cloud_cover_bounds(tmp_path, registry):
    ok = tmp_path / "ok.csv"
    ok.write_text(
        "station_id,timestamp,cloud_cover_unitless\nST01,2024-10-01T00:00:00Z,10\n"
    )
    series = parse_weather_csv(ok, registry)
    epoch = EpochHour.parse("2024-10-01T00:00:00Z")
    assert series.value("ST01", epoch, MetFactor.CLOUD_COVER) == 10.0

    bad = tmp_path / "bad.csv"
    bad.write_text(
        "station_id,timestamp,cloud_cover_unitless\nST01,2024-10-01T00:00:00Z,11\n"
    )
    with pytest.raises(OutOfRangeError):
        parse_weather_csv(bad, registry)


def test_parse_weather_blank_cell_absent(tmp_path, registry):
    path = tmp_path / "weather.csv"
    path.write_text(
        "station_id,timestamp,temperature_c,humidity_pct\n"
        "ST01,2024-10-01T00:00:00Z,,55\n"
    )
    series = parse_weather_csv(path, registry)
    epoch = EpochHour.parse("2024-10-01T00:00:00Z")
    assert series.value("ST01", epoch, MetFactor.TEMPERATURE) is None
    assert series.value("ST01", epoch, MetFactor.HUMIDITY) == 55.0


def test_weather_roundtrip(tmp_path, registry):
    series = WeatherSeries()
    factors = factor_set([MetFactor.TEMPERATURE, MetFactor.HUMIDITY])
    e0 = EpochHour.parse("2024-10-01T00:00:00Z")
    e1 = EpochHour.parse("2024-10-01T01:00:00Z")
    series.put("ST01", e0, MetFactor.TEMPERATURE, 12.345678901234567)
    series.put("ST01", e0, MetFactor.HUMIDITY, 55.0)
    series.put("ST02", e1, MetFactor.TEMPERATURE, -3.25)
    path = tmp_path / "weather.csv"
    write_weather_csv(series, path, factors)
    again = parse_weather_csv(path, registry)
    assert again == series


# -- TD -----------------------------------------------------------------------


def test_parse_td_strictly_increasing(tmp_path):
    path = tmp_path / "td.csv"
    path.write_text(
        "timestamp,td_ns\n"
        "2024-10-01T00:00:00Z,100.0\n"
        "2024-10-01T00:00:00Z,101.0\n"
    )
    with pytest.raises(ParseError):
        parse_td_csv(path)


def test_td_roundtrip(tmp_path):
    samples = [
        (utc(2024, 10, 1, 0, 0, 0), 100.25),
        (utc(2024, 10, 1, 0, 0, 1), 101.5),
        (utc(2024, 10, 1, 0, 0, 2), 99.0),
    ]
    path = tmp_path / "td.csv"
    write_td_csv(samples, path)
    assert parse_td_csv(path) == samples


def test_aggregate_hourly_constant_hour():
    base = utc(2024, 10, 1, 5)
    samples = [(base + timedelta(seconds=s), 100.0) for s in range(3600)]
    hourly = aggregate_hourly(samples, min_samples=1800)
    epoch = EpochHour(base)
    assert hourly.value(epoch) == 100.0
    assert hourly.counts[hourly.epochs.index(epoch)] == 3600


def test_aggregate_hourly_arithmetic_series():
    # one sample per second valued 0..3599 -> mean (0 + 3599) / 2 = 1799.5
    base = utc(2024, 10, 1, 5)
    samples = [(base + timedelta(seconds=s), float(s)) for s in range(3600)]
    hourly = aggregate_hourly(samples, min_samples=1800)
    assert hourly.value(EpochHour(base)) == pytest.approx(1799.5, abs=1e-12)


def test_aggregate_hourly_drops_thin_hours():
    base = utc(2024, 10, 1, 5)
    samples = [(base + timedelta(seconds=s), 10.0) for s in range(10)]
    hourly = aggregate_hourly(samples, min_samples=1800)
    assert len(hourly) == 0
    assert hourly.value(EpochHour(base)) is None


def test_aggregate_hourly_order_invariant():
    rng = np.random.default_rng(3)
    base = utc(2024, 10, 1, 5)
    values = rng.normal(100.0, 20.0, size=2000)
    samples = [(base + timedelta(seconds=s), float(v)) for s, v in enumerate(values)]
    shuffled = list(samples)
    rng.shuffle(shuffled)
    a = aggregate_hourly(samples, min_samples=1800)
    b = aggregate_hourly(shuffled, min_samples=1800)
    assert a.value(EpochHour(base)) == b.value(EpochHour(base))


# -- alignment ----------------------------------------------------------------


def _weather_grid(registry, factors, epochs, holes=()):
    series = WeatherSeries()
    for sid, _ in registry.entries:
        for e in epochs:
            for f in factors:
                if (sid, e, f) in holes:
                    continue
                series.put(sid, e, f, 10.0)
    return series


def test_align_epochs_intersection(registry):
    factors = factor_set([MetFactor.TEMPERATURE])
    weather_epochs = [hours_after(EpochHour.parse("2024-10-01T00:00:00Z"), h) for h in range(6)]
    weather = _weather_grid(registry, factors, weather_epochs)
    td = HourlyTdSeries.from_mapping(
        {weather_epochs[2]: (100.0, 3600), weather_epochs[4]: (90.0, 3600)}
    )
    dataset = align_epochs(weather, td, factors, registry)
    assert dataset.epochs == (weather_epochs[2], weather_epochs[4])
    assert dataset.values.shape == (2, 2, 1)
    np.testing.assert_array_equal(dataset.td, [100.0, 90.0])


def test_align_epochs_excludes_partial(registry):
    factors = factor_set([MetFactor.TEMPERATURE, MetFactor.HUMIDITY])
    epochs = [hours_after(EpochHour.parse("2024-10-01T00:00:00Z"), h) for h in range(3)]
    holes = {("ST02", epochs[1], MetFactor.HUMIDITY)}
    weather = _weather_grid(registry, factors, epochs, holes)
    td = HourlyTdSeries.from_mapping({e: (50.0, 3600) for e in epochs})
    dataset = align_epochs(weather, td, factors, registry)
    assert epochs[1] not in dataset.epochs
    assert dataset.epochs == (epochs[0], epochs[2])


def test_align_epochs_empty_intersection(registry):
    factors = factor_set([MetFactor.TEMPERATURE])
    epochs = [EpochHour.parse("2024-10-01T00:00:00Z")]
    weather = _weather_grid(registry, factors, epochs)
    td = HourlyTdSeries.from_mapping(
        {EpochHour.parse("2025-03-01T00:00:00Z"): (1.0, 3600)}
    )
    with pytest.raises(EmptyIntersectionError):
        align_epochs(weather, td, factors, registry)


def test_align_epochs_matches_naive_reference(registry):
    rng = np.random.default_rng(11)
    factors = factor_set([MetFactor.TEMPERATURE, MetFactor.PRESSURE])
    start = EpochHour.parse("2024-10-01T00:00:00Z")
    epochs = [hours_after(start, h) for h in range(24)]
    series = WeatherSeries()
    present: dict[tuple[str, EpochHour], set[MetFactor]] = {}
    for sid, _ in registry.entries:
        for e in epochs:
            for f in factors:
                if rng.random() < 0.8:
                    series.put(sid, e, f, float(rng.normal()))
                    present.setdefault((sid, e), set()).add(f)
    td_epochs = [e for e in epochs if rng.random() < 0.7]
    td = HourlyTdSeries.from_mapping({e: (float(rng.normal()), 3600) for e in td_epochs})

    expected = {
        e
        for e in td_epochs
        if all(
            present.get((sid, e), set()) >= set(factors) for sid in registry.ids
        )
    }
    if not expected:
        pytest.skip("random draw produced empty intersection")
    dataset = align_epochs(series, td, factors, registry)
    assert set(dataset.epochs) == expected


# -- DEM ----------------------------------------------------------------------


DEM_TEXT = """ncols 2
nrows 2
xllcorner 127.0
yllcorner 36.0
cellsize 0.5
NODATA_value -9999
10.0 20.0
30.0 40.0
"""


def test_parse_dem_two_by_two(tmp_path):
    path = tmp_path / "dem.asc"
    path.write_text(DEM_TEXT)
    grid = parse_dem(path)
    assert grid.nrows == 2 and grid.ncols == 2
    assert grid.cellsize == 0.5
    assert grid.origin == GeoPoint(36.0, 127.0)
    # first file row is the northernmost
    np.testing.assert_array_equal(grid.values, [[10.0, 20.0], [30.0, 40.0]])


def test_parse_dem_inconsistent_dimensions(tmp_path):
    path = tmp_path / "dem.asc"
    path.write_text(
        "ncols 3\nnrows 1\nxllcorner 127.0\nyllcorner 36.0\ncellsize 0.5\n"
        "NODATA_value -9999\n1.0 2.0\n"
    )
    with pytest.raises(InconsistentDimensionsError):
        parse_dem(path)


def test_parse_dem_bad_header(tmp_path):
    path = tmp_path / "dem.asc"
    path.write_text("ncols 2\nnrows 2\nbogus 1\nyllcorner 36.0\ncellsize 0.5\nNODATA_value -9999\n1 2\n3 4\n")
    with pytest.raises(ParseError):
        parse_dem(path)


def test_dem_roundtrip_with_nodata(tmp_path):
    values = np.array([[10.0, np.nan, 5.5], [1.25, 2.0, 3.0]])
    grid = ElevationGrid(
        origin=GeoPoint(36.0, 127.0), cellsize=0.25, values=values, nodata=-9999.0
    )
    path = tmp_path / "dem.asc"
    write_dem(grid, path)
    again = parse_dem(path)
    assert again == grid
    assert np.isnan(again.values[0, 1])


def test_dem_header_case_insensitive(tmp_path):
    path = tmp_path / "dem.asc"
    path.write_text(DEM_TEXT.replace("ncols", "NCOLS").replace("cellsize", "CELLSIZE"))
    grid = parse_dem(path)
    assert grid.ncols == 2
