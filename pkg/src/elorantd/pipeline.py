"""Corpus loading, feature construction, model dispatch, and evaluation.

This is the glue between the library modules and the CLI: everything
here is deterministic given its inputs, so command outputs can be
byte-compared across runs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import baselines, lasso, wlr_agrnn
from .artifacts import ConstantModel, LookupModel
from .errors import (
    AxisMismatchError,
    ConfigError,
    DataError,
    EmptyIntersectionError,
)
from .gridmap import GridSpec, build_path_tensor, elevation_profile, sample_path
from .ingest import (
    DEFAULT_MIN_SAMPLES_PER_HOUR,
    ElevationGrid,
    StationRegistry,
    WeatherSeries,
    aggregate_hourly,
    align_epochs,
    parse_dem,
    parse_station_registry,
    parse_td_csv,
    parse_weather_csv,
)
from .stats import anova_oneway, mae, rmse
from .types import EpochHour, FactorSet, GeoPoint, factor_set

MODEL_NAMES = ("lasso_mpr", "wlr_agrnn", "bpnn", "grnn", "moe")
LOCATION_MODES = ("receiver_only", "stations", "path")
HOURS_PER_FOLD = 168  # contiguous weekly folds for the ANOVA comparison


@dataclass(frozen=True)
class Corpus:
    """Raw parsed corpus directory contents."""

    directory: Path
    registry: StationRegistry
    weather: WeatherSeries
    td_samples: tuple
    dem: ElevationGrid
    meta: dict | None = None

    def tx_rx(self) -> tuple[GeoPoint, GeoPoint]:
        if not self.meta or "tx" not in self.meta or "rx" not in self.meta:
            raise ConfigError(
                "corpus metadata lacks tx/rx; pass transmitter and receiver "
                "coordinates in the run config"
            )
        return GeoPoint(*self.meta["tx"]), GeoPoint(*self.meta["rx"])


def load_corpus(directory) -> Corpus:
    """Parse stations.csv, weather.csv, td.csv, dem.asc (+ scenario.meta)."""
    root = Path(directory)
    for fname in ("stations.csv", "weather.csv", "td.csv", "dem.asc"):
        if not (root / fname).is_file():
            raise DataError(f"corpus {root} is missing {fname}")
    registry = parse_station_registry(root / "stations.csv")
    weather = parse_weather_csv(root / "weather.csv", registry)
    td_samples = tuple(parse_td_csv(root / "td.csv"))
    dem = parse_dem(root / "dem.asc")
    meta = None
    meta_path = root / "scenario.meta"
    if meta_path.is_file():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    return Corpus(
        directory=root,
        registry=registry,
        weather=weather,
        td_samples=td_samples,
        dem=dem,
        meta=meta,
    )


@dataclass(frozen=True)
class FeatureBundle:
    """Aligned per-epoch features in both tensor and flat layouts.

    tensor is (T, l, n); flat is (T, l*n) with location-major column
    order, matching the mixture model's contiguous location groups.
    """

    epochs: tuple[EpochHour, ...]
    factors: FactorSet
    location_mode: str
    points: tuple[GeoPoint, ...]
    elevations: np.ndarray
    tensor: np.ndarray
    td: np.ndarray

    def __post_init__(self):
        t, l, n = self.tensor.shape
        if t != len(self.epochs) or l != len(self.points) or n != len(self.factors):
            raise ValueError(
                f"tensor {self.tensor.shape} inconsistent with axes "
                f"({len(self.epochs)}, {len(self.points)}, {len(self.factors)})"
            )
        if self.td.shape != (t,):
            raise ValueError(f"td shape {self.td.shape} != ({t},)")

    @property
    def n_locations(self) -> int:
        return self.tensor.shape[1]

    @property
    def flat(self) -> np.ndarray:
        t = self.tensor.shape[0]
        return self.tensor.reshape(t, -1)

    def flat_labels(self) -> list[str]:
        if self.n_locations == 1:
            return [f.column for f in self.factors]
        return [
            f"{f.column}@{j}" for j in range(self.n_locations) for f in self.factors
        ]

    def subset(self, mask: np.ndarray) -> "FeatureBundle":
        mask = np.asarray(mask, dtype=bool)
        epochs = tuple(e for e, keep in zip(self.epochs, mask) if keep)
        return replace(self, epochs=epochs, tensor=self.tensor[mask], td=self.td[mask])


def location_points(
    mode: str, corpus: Corpus, l: int, tx: GeoPoint, rx: GeoPoint
) -> tuple[GeoPoint, ...]:
    if mode == "receiver_only":
        return (rx,)
    if mode == "stations":
        return tuple(corpus.registry.location(sid) for sid in corpus.registry.ids)
    if mode == "path":
        return sample_path(tx, rx, l)
    raise ConfigError(f"unknown location mode {mode!r}")


def build_features(
    corpus: Corpus,
    factors: FactorSet,
    location_mode: str,
    tx: GeoPoint,
    rx: GeoPoint,
    l: int = 198,
    min_samples: int = DEFAULT_MIN_SAMPLES_PER_HOUR,
    cellsize: float = 0.01,
    padding: float = 0.05,
) -> FeatureBundle:
    """Aggregate, align, grid-map, and sample a corpus into model inputs."""
    factors = factor_set(factors)
    hourly = aggregate_hourly(corpus.td_samples, min_samples)
    aligned = align_epochs(corpus.weather, hourly, factors, corpus.registry)
    spec = GridSpec.around(tx, rx, padding, cellsize)
    points = location_points(location_mode, corpus, l, tx, rx)
    tensor = build_path_tensor(aligned, corpus.registry, spec, points)
    elevations = elevation_profile(corpus.dem, points)
    return FeatureBundle(
        epochs=aligned.epochs,
        factors=factors,
        location_mode=location_mode,
        points=points,
        elevations=elevations,
        tensor=tensor.values,
        td=aligned.td,
    )


# -- date-range splits ---------------------------------------------------------

def parse_range_list(text: str) -> tuple[tuple[EpochHour, EpochHour], ...]:
    """Comma list of half-open ranges 'START..END' (ISO dates or hours)."""
    ranges = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ".." not in chunk:
            raise ConfigError(f"range {chunk!r} must look like START..END")
        lo_text, hi_text = chunk.split("..", 1)
        try:
            lo = _parse_range_edge(lo_text.strip())
            hi = _parse_range_edge(hi_text.strip())
        except ValueError as exc:
            raise ConfigError(f"bad range {chunk!r}: {exc}") from None
        if not lo < hi:
            raise ConfigError(f"range {chunk!r} is empty (start must precede end)")
        ranges.append((lo, hi))
    if not ranges:
        raise ConfigError("no ranges given")
    return tuple(ranges)


def _parse_range_edge(text: str) -> EpochHour:
    if "T" in text or ":" in text:
        return EpochHour.parse(text)
    year, month, day = (int(v) for v in text.split("-"))
    return EpochHour.of(year, month, day)


def mask_for_ranges(epochs, ranges) -> np.ndarray:
    out = np.zeros(len(epochs), dtype=bool)
    for i, e in enumerate(epochs):
        out[i] = any(lo <= e < hi for lo, hi in ranges)
    return out


def check_disjoint(train_ranges, test_ranges) -> None:
    for lo_a, hi_a in train_ranges:
        for lo_b, hi_b in test_ranges:
            if lo_a < hi_b and lo_b < hi_a:
                raise ConfigError(
                    f"train range {lo_a.isoformat()}..{hi_a.isoformat()} overlaps "
                    f"test range {lo_b.isoformat()}..{hi_b.isoformat()}"
                )


def split_bundle(bundle: FeatureBundle, train_ranges, test_ranges):
    check_disjoint(train_ranges, test_ranges)
    train_mask = mask_for_ranges(bundle.epochs, train_ranges)
    test_mask = mask_for_ranges(bundle.epochs, test_ranges)
    if not train_mask.any():
        raise EmptyIntersectionError("no aligned epoch falls in the train ranges")
    if not test_mask.any():
        raise EmptyIntersectionError("no aligned epoch falls in the test ranges")
    return bundle.subset(train_mask), bundle.subset(test_mask)


def holdout_split(bundle: FeatureBundle, fraction: float = 0.25):
    """Chronological tail holdout used by hyperparameter sweeps."""
    t = len(bundle.epochs)
    cut = int(round(t * (1.0 - fraction)))
    if cut < 1 or cut >= t:
        raise DataError(f"cannot hold out {fraction:.0%} of {t} epochs")
    mask = np.zeros(t, dtype=bool)
    mask[:cut] = True
    return bundle.subset(mask), bundle.subset(~mask)


# -- model dispatch --------------------------------------------------------------

def train_model(name: str, bundle: FeatureBundle, options: dict | None = None):
    """Train one model by name on a feature bundle.

    options are the per-model hyperparameters (already typed); unknown
    keys are a config error so CLI typos cannot silently fall back to
    defaults.
    """
    options = dict(options or {})
    seed = int(options.pop("seed", 0))
    meta = {
        "train_start": bundle.epochs[0].isoformat(),
        "train_end": bundle.epochs[-1].isoformat(),
        "n_train": len(bundle.epochs),
        "n_locations": bundle.n_locations,
        "seed": seed,
    }
    if name == "lasso_mpr":
        allowed = {"degree", "alpha", "tol", "max_sweeps"}
        _check_options(name, options, allowed)
        return lasso.train(
            bundle.flat,
            bundle.td,
            bundle.factors,
            degree=int(options.get("degree", lasso.DEFAULT_DEGREE)),
            alpha=float(options.get("alpha", lasso.DEFAULT_ALPHA)),
            tol=float(options.get("tol", lasso.DEFAULT_TOL)),
            max_sweeps=int(options.get("max_sweeps", lasso.DEFAULT_MAX_SWEEPS)),
            location_mode=bundle.location_mode,
            meta=meta,
        )
    if name == "wlr_agrnn":
        allowed = {
            "hidden",
            "learning_rate",
            "max_iterations",
            "tol",
            "patience",
            "elevation_mode",
            "weight_scheme",
            "sigma_tol",
        }
        _check_options(name, options, allowed)
        cfg = wlr_agrnn.TrainConfig(
            hidden=int(options.get("hidden", wlr_agrnn.DEFAULT_HIDDEN)),
            learning_rate=float(
                options.get("learning_rate", wlr_agrnn.DEFAULT_LEARNING_RATE)
            ),
            max_iterations=int(
                options.get("max_iterations", wlr_agrnn.DEFAULT_MAX_ITERATIONS)
            ),
            tol=float(options.get("tol", wlr_agrnn.DEFAULT_TOL)),
            patience=int(options.get("patience", wlr_agrnn.DEFAULT_PATIENCE)),
            elevation_mode=str(options.get("elevation_mode", "floored_normalized")),
            weight_scheme=str(options.get("weight_scheme", "uniform")),
            sigma_tol=float(options.get("sigma_tol", wlr_agrnn.DEFAULT_SIGMA_TOL)),
            seed=seed,
        )
        return wlr_agrnn.train(
            bundle.tensor,
            bundle.td,
            bundle.elevations,
            cfg,
            factors=bundle.factors,
            location_mode=bundle.location_mode,
            points=bundle.points,
            meta=meta,
        )
    if name in ("bpnn", "moe"):
        allowed = {"hidden", "experts", "expert_hidden", "learning_rate", "max_iterations", "tol", "patience"}
        _check_options(name, options, allowed)
        cfg = baselines.BaselineConfig(
            hidden=int(options.get("hidden", 16)),
            experts=int(options.get("experts", 4)),
            expert_hidden=int(options.get("expert_hidden", 8)),
            learning_rate=float(options.get("learning_rate", 0.001)),
            max_iterations=int(options.get("max_iterations", 2000)),
            tol=float(options.get("tol", 1e-8)),
            patience=int(options.get("patience", 5)),
            seed=seed,
        )
        if name == "bpnn":
            return baselines.train_bpnn(
                bundle.flat, bundle.td, cfg,
                factors=bundle.factors, location_mode=bundle.location_mode, meta=meta,
            )
        n_loc = bundle.n_locations
        experts = cfg.experts if n_loc == 1 else min(cfg.experts, n_loc)
        slices = baselines.default_group_slices(
            bundle.flat.shape[1], experts, n_locations=n_loc
        )
        cfg = replace(cfg, experts=experts)
        return baselines.train_moe(
            bundle.flat, bundle.td, cfg, group_slices=slices,
            factors=bundle.factors, location_mode=bundle.location_mode, meta=meta,
        )
    if name == "grnn":
        allowed = {"sigma"}
        _check_options(name, options, allowed)
        sigma = options.get("sigma")
        return baselines.train_grnn(
            bundle.flat, bundle.td,
            sigma=None if sigma is None else float(sigma),
            factors=bundle.factors, location_mode=bundle.location_mode, meta=meta,
        )
    raise ConfigError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")


def _check_options(name: str, options: dict, allowed: set) -> None:
    unknown = sorted(set(options) - allowed)
    if unknown:
        raise ConfigError(f"unknown {name} option(s): {', '.join(unknown)}")


def predict_model(model, bundle: FeatureBundle) -> np.ndarray:
    """Per-epoch predictions for any artifact kind on a feature bundle."""
    if isinstance(model, LookupModel):
        return np.array([model.predict_epoch(e) for e in bundle.epochs], dtype=float)
    if isinstance(model, ConstantModel):
        return np.full(len(bundle.epochs), model.value, dtype=float)
    if isinstance(model, wlr_agrnn.WlrAgrnnModel):
        _check_axes(model, bundle, expect_tensor=True)
        return model.predict_batch(bundle.tensor)
    _check_axes(model, bundle, expect_tensor=False)
    out = model.predict(bundle.flat)
    return np.asarray(out, dtype=float).reshape(-1)


def _check_axes(model, bundle: FeatureBundle, expect_tensor: bool) -> None:
    if tuple(model.factors) != tuple(bundle.factors):
        raise AxisMismatchError(
            f"artifact factors {[f.column for f in model.factors]} != "
            f"corpus factors {[f.column for f in bundle.factors]}"
        )
    if expect_tensor:
        want = model.n_locations
        if bundle.n_locations != want:
            raise AxisMismatchError(
                f"artifact has {want} locations, features have {bundle.n_locations}"
            )
    else:
        want = model.standardizer.mean.size
        if bundle.flat.shape[1] != want:
            raise AxisMismatchError(
                f"artifact expects {want} flat features, got {bundle.flat.shape[1]}"
            )
    if model.location_mode != bundle.location_mode:
        raise AxisMismatchError(
            f"artifact location mode {model.location_mode!r} != {bundle.location_mode!r}"
        )


# -- evaluation ------------------------------------------------------------------

@dataclass(frozen=True)
class EvalRow:
    name: str
    kind: str
    rmse: float
    mae: float
    n_samples: int
    fold_rmse: tuple[float, ...] = ()


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]
    anova: object = None  # AnovaResult when >= 2 models and >= 2 folds
    fold_edges: tuple[str, ...] = ()


def weekly_folds(epochs) -> list[np.ndarray]:
    """Indices grouped into contiguous 168-hour blocks from the first epoch."""
    base = epochs[0].hours_since_epoch
    buckets: dict[int, list[int]] = {}
    for i, e in enumerate(epochs):
        buckets.setdefault((e.hours_since_epoch - base) // HOURS_PER_FOLD, []).append(i)
    return [np.array(buckets[k], dtype=int) for k in sorted(buckets)]


def evaluate_models(named_models, bundle: FeatureBundle) -> EvalReport:
    """RMSE/MAE per model on the bundle, plus across-model ANOVA over
    per-fold RMSE populations when that comparison is meaningful."""
    if not named_models:
        raise DataError("nothing to evaluate")
    folds = weekly_folds(bundle.epochs)
    rows = []
    for name, model in named_models:
        pred = predict_model(model, bundle)
        fold_rmse = tuple(
            rmse(pred[idx], bundle.td[idx]) for idx in folds if idx.size >= 2
        )
        rows.append(
            EvalRow(
                name=name,
                kind=type(model).__name__,
                rmse=rmse(pred, bundle.td),
                mae=mae(pred, bundle.td),
                n_samples=len(bundle.epochs),
                fold_rmse=fold_rmse,
            )
        )
    anova = None
    if len(rows) >= 2 and all(len(r.fold_rmse) >= 2 for r in rows):
        anova = anova_oneway([list(r.fold_rmse) for r in rows])
    edges = tuple(
        bundle.epochs[idx[0]].isoformat() for idx in folds if idx.size >= 2
    )
    return EvalReport(rows=tuple(rows), anova=anova, fold_edges=edges)
