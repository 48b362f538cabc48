"""Gridded nature-run data model, ``.nrg`` file I/O and synthetic scenarios.

A ``.nrg`` file is plain text::

    NRG1
    {"lat_edges": [...], "lon_edges": [...], "timestamps": ["2005-07-15T00:00:00Z", ...],
     "variables": [{"name": "LWTUP", "units": "W m-2"}, ...]}
    <row for time 0, variable 0>
    <row for time 0, variable 1>
    ...

Each data row holds J*I comma-separated floats in lat-outer, lon-inner order.
Floats are written with Python's shortest round-trip repr, so a grid survives
save/load bit-exactly.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from stormkl import kernels
from stormkl.kernels import EARTH_RADIUS_KM

NRG_MAGIC = "NRG1"
DEFAULT_UNITS = {"PRECTOT": "kg m-2 s-1", "LWTUP": "W m-2"}


class DataFormatError(ValueError):
    """Malformed or inconsistent dataset, with the location of the problem."""


# ---------------------------------------------------------------------------
# time helpers

def parse_utc(text):
    """ISO-8601 string (``Z`` or offset allowed) to ``datetime64[s]`` in UTC."""
    if isinstance(text, np.datetime64):
        return text.astype("datetime64[s]")
    s = str(text).strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return np.datetime64(dt, "s")


def format_utc(t):
    return str(np.datetime64(t, "s")) + "Z"


def to_unix_seconds(times):
    return np.asarray(times, dtype="datetime64[s]").astype(np.int64).astype(np.float64)


# ---------------------------------------------------------------------------
# grid model

@dataclass(frozen=True)
class GridAxis:
    """Cell boundaries along one axis, in degrees."""

    edges: np.ndarray
    kind: str = "lat"

    def __post_init__(self):
        edges = np.array(self.edges, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError(f"{self.kind} axis needs at least two edges")
        if not np.all(np.diff(edges) > 0):
            raise ValueError(f"{self.kind} edges must be strictly increasing")
        limit = 90.0 if self.kind == "lat" else 180.0
        if edges[0] < -limit or edges[-1] > limit:
            raise ValueError(f"{self.kind} edges must lie within [-{limit:g}, {limit:g}]")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def __len__(self):
        return self.edges.size - 1


@dataclass(frozen=True, eq=False)
class NatureRunGrid:
    """Time-indexed 2-D fields on a lat/lon grid.

    ``variables`` maps a name to an array shaped ``[time, lat, lon]``.
    Arrays are copied and frozen on construction.
    """

    lat_axis: GridAxis
    lon_axis: GridAxis
    timestamps: np.ndarray
    variables: dict
    units: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.array(self.timestamps, dtype="datetime64[s]")
        if times.ndim != 1 or times.size == 0:
            raise ValueError("grid needs at least one timestamp")
        if times.size > 1:
            steps = np.diff(times).astype(np.int64)
            if np.any(steps <= 0):
                raise ValueError("timestamps must be strictly increasing")
            if np.any(steps != steps[0]):
                raise ValueError("timestamps must be uniformly spaced")
        times.setflags(write=False)
        object.__setattr__(self, "timestamps", times)

        shape = (times.size, len(self.lat_axis), len(self.lon_axis))
        frozen = {}
        for name, values in self.variables.items():
            arr = np.array(values, dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"variable {name!r} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"variable {name!r} contains non-finite values")
            arr.setflags(write=False)
            frozen[name] = arr
        if "PRECTOT" in frozen and np.any(frozen["PRECTOT"] < 0):
            raise ValueError("PRECTOT must be non-negative")
        if "LWTUP" in frozen and np.any(frozen["LWTUP"] <= 0):
            raise ValueError("LWTUP must be strictly positive")
        object.__setattr__(self, "variables", frozen)
        units = {name: self.units.get(name, DEFAULT_UNITS.get(name, "")) for name in frozen}
        object.__setattr__(self, "units", units)

    @property
    def shape(self):
        return (self.timestamps.size, len(self.lat_axis), len(self.lon_axis))

    @property
    def time_step(self):
        if self.timestamps.size < 2:
            return np.timedelta64(0, "s")
        return self.timestamps[1] - self.timestamps[0]

    @property
    def time_range(self):
        return self.timestamps[0], self.timestamps[-1]

    def cell_areas(self):
        """Cell areas in km^2, shape ``[lat, lon]``."""
        return cell_areas(self.lat_axis.edges, self.lon_axis.edges)

    def replace_variable(self, name, values):
        """New grid with one variable swapped out."""
        variables = dict(self.variables)
        variables[name] = values
        return dataclasses.replace(self, variables=variables)


def cell_area(lat_lo, lat_hi, lon_lo, lon_hi):
    """Area in km^2 of a lat/lon box on a sphere of radius 6371 km."""
    if not -90.0 <= lat_lo < lat_hi <= 90.0:
        raise ValueError(f"invalid latitude bounds ({lat_lo}, {lat_hi})")
    if not lon_lo < lon_hi:
        raise ValueError(f"invalid longitude bounds ({lon_lo}, {lon_hi})")
    dlon = math.radians(lon_hi - lon_lo)
    return EARTH_RADIUS_KM ** 2 * dlon * (
        math.sin(math.radians(lat_hi)) - math.sin(math.radians(lat_lo)))


def cell_areas(lat_edges, lon_edges):
    lat_edges = np.radians(np.asarray(lat_edges, dtype=np.float64))
    lon_edges = np.radians(np.asarray(lon_edges, dtype=np.float64))
    band = np.diff(np.sin(lat_edges))
    dlon = np.diff(lon_edges)
    return EARTH_RADIUS_KM ** 2 * band[:, None] * dlon[None, :]


# ---------------------------------------------------------------------------
# .nrg I/O

def save_dataset(grid, path):
    path = Path(path)
    meta = {
        "lat_edges": grid.lat_axis.edges.tolist(),
        "lon_edges": grid.lon_axis.edges.tolist(),
        "timestamps": [format_utc(t) for t in grid.timestamps],
        "variables": [{"name": name, "units": grid.units.get(name, "")}
                      for name in grid.variables],
    }
    names = list(grid.variables)
    with path.open("w", encoding="ascii", newline="\n") as fh:
        fh.write(NRG_MAGIC + "\n")
        fh.write(json.dumps(meta) + "\n")
        for t in range(grid.timestamps.size):
            for name in names:
                row = grid.variables[name][t].ravel().tolist()
                fh.write(",".join(map(repr, row)))
                fh.write("\n")
    return path


def load_dataset(path):
    """Read a ``.nrg`` file into a validated :class:`NatureRunGrid`."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    with path.open("r", encoding="ascii") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()

    if not lines or lines[0].strip() != NRG_MAGIC:
        raise DataFormatError(f"{path}:1: expected header line {NRG_MAGIC!r}")
    if len(lines) < 2:
        raise DataFormatError(f"{path}:2: missing metadata line")
    try:
        meta = json.loads(lines[1])
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}:2: metadata is not valid JSON ({exc.msg})") from None
    for key in ("lat_edges", "lon_edges", "timestamps", "variables"):
        if key not in meta:
            raise DataFormatError(f"{path}:2: metadata missing key {key!r}")

    try:
        lat_axis = GridAxis(meta["lat_edges"], "lat")
        lon_axis = GridAxis(meta["lon_edges"], "lon")
    except ValueError as exc:
        raise DataFormatError(f"{path}:2: {exc}") from None
    try:
        times = np.array([parse_utc(s) for s in meta["timestamps"]], dtype="datetime64[s]")
    except ValueError as exc:
        raise DataFormatError(f"{path}:2: bad timestamp ({exc})") from None
    if times.size > 1 and np.any(np.diff(times).astype(np.int64) <= 0):
        bad = int(np.argmax(np.diff(times).astype(np.int64) <= 0)) + 1
        raise DataFormatError(
            f"{path}:2: timestamps not strictly increasing at index {bad} ({meta['timestamps'][bad]})")

    var_meta = meta["variables"]
    if isinstance(var_meta, dict):
        var_meta = [{"name": k, "units": v} for k, v in var_meta.items()]
    names = [v["name"] for v in var_meta]
    units = {v["name"]: v.get("units", "") for v in var_meta}

    n_t, n_j, n_i = times.size, len(lat_axis), len(lon_axis)
    rows = lines[2:]
    expected = n_t * len(names)
    if len(rows) != expected:
        raise DataFormatError(
            f"{path}:{len(lines)}: shape mismatch, expected {expected} data rows "
            f"({n_t} times x {len(names)} variables), found {len(rows)}")

    data = {name: np.empty((n_t, n_j, n_i)) for name in names}
    for k, row in enumerate(rows):
        lineno = k + 3
        t, v = divmod(k, len(names))
        try:
            values = np.array(row.split(","), dtype=np.float64)
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: non-numeric value in data row") from None
        if values.size != n_j * n_i:
            raise DataFormatError(
                f"{path}:{lineno}: shape mismatch, expected {n_j * n_i} values, found {values.size}")
        data[names[v]][t] = values.reshape(n_j, n_i)

    try:
        return NatureRunGrid(lat_axis, lon_axis, times, data, units)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# synthetic scenarios

@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of a seeded synthetic nature run.

    Storm birth times follow a von Mises distribution in local solar time
    (UTC + lon/15 h) centred on ``peak_local_hour``; ``concentration`` is the
    von Mises kappa (0 gives a uniform diurnal cycle). Storms born near the
    peak hour are larger and rain harder, scaled by
    ``exp(diurnal_amplitude * (cos(phase) - 1))``.
    """

    lat_min: float = 28.0
    lat_max: float = 42.0
    lon_min: float = -125.0
    lon_max: float = -95.0
    resolution_deg: float = 0.5
    start: str = "2005-07-15T00:00:00Z"
    end: str = "2005-09-15T00:00:00Z"
    step_minutes: float = 30.0
    storm_rate: float = 3.0
    peak_local_hour: float = 17.0
    concentration: float = 2.0
    diurnal_amplitude: float = 0.7
    radius_km_median: float = 90.0
    radius_sigma: float = 0.35
    precip_median: float = 2.0e-3
    precip_sigma: float = 0.5
    lifetime_steps_min: int = 1
    lifetime_steps_max: int = 4
    clear_sky_flux: float = 260.0
    core_flux: float = 90.0
    seed: int = 0

    def __post_init__(self):
        if not self.resolution_deg > 0:
            raise ValueError("resolution_deg must be positive")
        if not self.step_minutes > 0:
            raise ValueError("step_minutes must be positive")
        if self.storm_rate < 0 or self.concentration < 0:
            raise ValueError("storm_rate and concentration must be non-negative")
        if not 0 <= self.peak_local_hour < 24:
            raise ValueError("peak_local_hour must be in [0, 24)")
        if not 1 <= self.lifetime_steps_min <= self.lifetime_steps_max:
            raise ValueError("need 1 <= lifetime_steps_min <= lifetime_steps_max")
        if not self.core_flux < self.clear_sky_flux:
            raise ValueError("core_flux must be below clear_sky_flux")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown scenario keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self):
        return dataclasses.asdict(self)

    def axes(self):
        res = self.resolution_deg
        n_lat = int(math.floor((self.lat_max - self.lat_min) / res + 1e-9))
        n_lon = int(math.floor((self.lon_max - self.lon_min) / res + 1e-9))
        if n_lat < 1 or n_lon < 1:
            raise ValueError("degenerate region: no grid cells fit inside the bounds")
        lat = GridAxis(self.lat_min + res * np.arange(n_lat + 1), "lat")
        lon = GridAxis(self.lon_min + res * np.arange(n_lon + 1), "lon")
        return lat, lon

    def timestamps(self):
        start, end = parse_utc(self.start), parse_utc(self.end)
        step = np.timedelta64(int(round(self.step_minutes * 60)), "s")
        if step > end - start:
            raise ValueError("time step is larger than the time range")
        return np.arange(start, end, step)


def _sample_storms(spec, rng, times, lat_axis, lon_axis):
    """Draw storm-steps: arrays of (time index, lat, lon, radius km, precip)."""
    step_s = float((times[1] - times[0]).astype(np.int64)) if times.size > 1 else spec.step_minutes * 60
    t0 = times[0].astype("datetime64[D]")
    offset0 = float((times[0] - t0.astype("datetime64[s]")).astype(np.int64))
    n_days = int(math.ceil((offset0 + times.size * step_s) / 86400.0))
    # births are placed on days -1..n_days so that edge days are not starved
    span_days = n_days + 2
    expected = spec.storm_rate * times.size * span_days / max(n_days, 1)
    n = int(rng.poisson(expected))

    lat = rng.uniform(lat_axis.edges[0], lat_axis.edges[-1], n)
    lon = rng.uniform(lon_axis.edges[0], lon_axis.edges[-1], n)
    phase = rng.vonmises(0.0, spec.concentration, n)
    local_hour = np.mod(spec.peak_local_hour + phase * 24.0 / (2 * math.pi), 24.0)
    day = rng.integers(-1, n_days + 1, n)
    life = rng.integers(spec.lifetime_steps_min, spec.lifetime_steps_max + 1, n)
    size_noise = rng.lognormal(0.0, spec.radius_sigma, n)
    rain_noise = rng.lognormal(0.0, spec.precip_sigma, n)

    utc_s = day * 86400.0 + (local_hour - lon / 15.0) * 3600.0
    birth = np.rint((utc_s - offset0) / step_s).astype(np.int64)

    strength = np.exp(spec.diurnal_amplitude * (np.cos(phase) - 1.0))
    radius = spec.radius_km_median * np.sqrt(strength) * size_noise
    peak_rain = spec.precip_median * strength * rain_noise

    idx = np.repeat(np.arange(n), life)
    age = np.arange(idx.size) - np.repeat(np.cumsum(life) - life, life)
    t_idx = birth[idx] + age
    keep = (t_idx >= 0) & (t_idx < times.size)
    idx, age, t_idx = idx[keep], age[keep], t_idx[keep]
    stage = np.sin(np.pi * (age + 0.5) / life[idx])
    return {
        "t_idx": t_idx,
        "lat": lat[idx],
        "lon": lon[idx],
        "radius": radius[idx] * (0.5 + 0.5 * stage),
        "amp": peak_rain[idx] * stage,
        "storm": idx,
    }


def generate_synthetic_scenario(spec):
    """Render a seeded synthetic nature run with LWTUP and PRECTOT fields."""
    lat_axis, lon_axis = spec.axes()
    times = spec.timestamps()
    rng = np.random.default_rng(spec.seed)
    shape = (times.size, len(lat_axis), len(lon_axis))

    background = spec.clear_sky_flux + rng.uniform(-5.0, 5.0, shape[1:])
    lwtup = np.broadcast_to(background, shape).copy()
    prectot = np.zeros(shape)

    storms = _sample_storms(spec, rng, times, lat_axis, lon_axis)
    kernels.paint_storms(
        lwtup, prectot, np.ascontiguousarray(background),
        np.ascontiguousarray(lat_axis.centers), np.ascontiguousarray(lon_axis.centers),
        storms["t_idx"], storms["lat"], storms["lon"], storms["radius"], storms["amp"],
        float(spec.core_flux), 0.1, 3.0,
    )
    return NatureRunGrid(lat_axis, lon_axis, times,
                         {"LWTUP": lwtup, "PRECTOT": prectot},
                         dict(DEFAULT_UNITS))
