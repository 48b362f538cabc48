"""Per-constellation scoring and ranking.

For each configuration the clusters are split into observed / unobserved,
KDEs of the chosen attribute are fit on the observed subset (f) and on all
clusters (g), and D_KL(f || g) is integrated between the 0th and 99th
percentile of the full attribute set. Lower is more representative.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from stormkl import orbit, stats
from stormkl.observe import NoTemporalOverlap, match_arrays, swath_reach
from stormkl.scenario import to_unix_seconds

DEFAULT_ATTRIBUTE = "total_weighted_prectot"
FLAG_TOO_FEW = "too_few_observed"
FLAG_DEGENERATE = "degenerate_data"


class NoComputableResults(ValueError):
    pass


@dataclass(frozen=True)
class ConstellationConfig:
    config_id: int
    name: str
    satellites: tuple

    def __post_init__(self):
        sats = tuple(self.satellites)
        if not sats:
            raise ValueError(f"configuration {self.config_id} has no satellites")
        object.__setattr__(self, "satellites", sats)

    @property
    def n_satellites(self):
        return len(self.satellites)

    def satellite_ids(self):
        return [f"{self.config_id}.{k + 1}" for k in range(self.n_satellites)]

    def tracks(self, times):
        return [orbit.propagate(spec, times, sid)
                for spec, sid in zip(self.satellites, self.satellite_ids())]

    def contains(self, other):
        """True when ``other``'s satellites are a sub-multiset of ours."""
        mine, theirs = Counter(self.satellites), Counter(other.satellites)
        return all(mine[s] >= n for s, n in theirs.items())

    def with_altitude(self, altitude_km):
        sats = [orbit.OrbitSpec(**{**s.to_dict(), "altitude_km": altitude_km})
                for s in self.satellites]
        return ConstellationConfig(self.config_id, self.name, tuple(sats))

    def to_dict(self):
        return {"config_id": self.config_id, "name": self.name,
                "satellites": [s.to_dict() for s in self.satellites]}

    @classmethod
    def from_dict(cls, data):
        unknown = sorted(set(data) - {"config_id", "name", "satellites"})
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")
        sats = tuple(orbit.OrbitSpec.from_dict(s) for s in data["satellites"])
        return cls(int(data["config_id"]), str(data.get("name", "")), sats)


def _pair(a, b):
    if a == b:
        b = orbit.OrbitSpec(**{**b.to_dict(), "true_anomaly_deg": 180.0})
    return (a, b)


def bundled_manifest(altitude_km=700.0, epoch=orbit.DEFAULT_EPOCH):
    """The 20 study configurations, numbered as in the reference ranking.

    Same-orbit pairs put the second satellite 180 deg ahead in true anomaly.
    Inclined orbits start with RAAN 0 at ``epoch``. Configurations 12 and 13
    share a description; 13 differs only in the inclined plane's RAAN
    (offset by 180 deg).
    """
    def inc(deg):
        return orbit.OrbitSpec("inclined", inclination_deg=deg, altitude_km=altitude_km, epoch=epoch)

    def sso(ltan):
        return orbit.OrbitSpec("sso", ltan=ltan, altitude_km=altitude_km, epoch=epoch)

    labels = {"i50": "50° Inclination", "i50r": "50° Inclination", "i55": "55° Inclination",
              "s20": "SSO 8:00 PM LTAN", "s22": "SSO 10:00 PM LTAN", "s00": "SSO 12:00 AM LTAN"}
    orbits = {"i50": inc(50.0), "i55": inc(55.0),
              "i50r": orbit.OrbitSpec("inclined", inclination_deg=50.0, raan_offset_deg=180.0,
                                      altitude_km=altitude_km, epoch=epoch),
              "s20": sso("20:00"), "s22": sso("22:00"), "s00": sso("00:00")}
    layout = [
        ("i50",), ("i55",), ("s20",), ("s22",), ("s00",),
        ("i50", "i50"), ("i55", "i55"), ("s20", "s20"), ("s22", "s22"), ("s00", "s00"),
        ("i50", "i55"), ("i50", "s20"), ("i50r", "s20"), ("i50", "s00"),
        ("i55", "s20"), ("i55", "s22"), ("i55", "s00"),
        ("s20", "s22"), ("s20", "s00"), ("s22", "s00"),
    ]
    configs = []
    for cid, keys in enumerate(layout, start=1):
        if len(keys) == 1:
            sats = (orbits[keys[0]],)
            name = f"1x {labels[keys[0]]}"
        elif keys[0] == keys[1]:
            sats = _pair(orbits[keys[0]], orbits[keys[1]])
            name = f"2x {labels[keys[0]]}"
        else:
            sats = (orbits[keys[0]], orbits[keys[1]])
            name = f"1x {labels[keys[0]]}, 1x {labels[keys[1]]}"
        configs.append(ConstellationConfig(cid, name, sats))
    return configs


@dataclass(frozen=True)
class EvaluationParams:
    swath_km: float = 1450.0
    cadence_minutes: float = 30.0
    time_tol_minutes: float = 15.0
    n_points: int = stats.DEFAULT_N_POINTS
    min_observed: int = 10
    reflect: bool = True
    lower_percentile: float = 0.0
    upper_percentile: float = 99.0
    attribute: str = DEFAULT_ATTRIBUTE

    def __post_init__(self):
        for name in ("swath_km", "cadence_minutes", "time_tol_minutes"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.min_observed < 2:
            raise ValueError("min_observed must be at least 2")


@dataclass(frozen=True, eq=False)
class ClusterSample:
    """Flat arrays of the cluster fields the scoring needs."""

    time_s: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    values: np.ndarray

    @classmethod
    def from_clusters(cls, clusters, attribute=DEFAULT_ATTRIBUTE):
        if not clusters:
            z = np.zeros(0)
            return cls(z, z, z, z)
        return cls(
            to_unix_seconds([c.timestamp for c in clusters]),
            np.array([c.centroid[0] for c in clusters]),
            np.array([c.centroid[1] for c in clusters]),
            np.array([c.attributes[attribute] for c in clusters], dtype=np.float64),
        )

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class TruthModel:
    bounds: stats.IntegrationBounds
    density: stats.DensityEstimate

    @classmethod
    def fit(cls, values, params):
        bounds = stats.integration_bounds(values, params.lower_percentile,
                                          params.upper_percentile, params.n_points)
        return cls(bounds, stats.fit_density(values, bounds.grid(), params.reflect))


@dataclass(eq=False)
class EvaluationResult:
    config_id: int
    name: str
    n_satellites: int
    n_total: int
    n_observed: int
    kl_divergence: float | None = None
    bandwidth_observed: float | None = None
    bandwidth_truth: float | None = None
    bounds: stats.IntegrationBounds | None = None
    flag: str = ""
    observed_by: np.ndarray | None = field(default=None, repr=False)
    observed_density: stats.DensityEstimate | None = field(default=None, repr=False)
    truth_density: stats.DensityEstimate | None = field(default=None, repr=False)

    @property
    def computable(self):
        return not self.flag and self.kl_divergence is not None

    def summary(self):
        b = self.bounds
        return {
            "config_id": self.config_id, "name": self.name, "n_satellites": self.n_satellites,
            "n_total": self.n_total, "n_observed": self.n_observed,
            "kl_divergence": self.kl_divergence, "bandwidth_observed": self.bandwidth_observed,
            "bandwidth_truth": self.bandwidth_truth,
            "bounds": None if b is None else [b.lower, b.upper, b.n_points],
            "flag": self.flag,
        }


def observation_matches(config, sample, time_range, params):
    """Per-cluster ``(sat_index, sample_index)`` plus the tracks used."""
    times = orbit.track_times(time_range[0], time_range[1], params.cadence_minutes)
    tracks = config.tracks(times)
    sat, idx = match_arrays(sample.time_s, sample.lat, sample.lon, tracks,
                            swath_reach(params.swath_km), params.time_tol_minutes * 60.0)
    return sat, idx, tracks


def evaluate_configuration(config, clusters, time_range, params=EvaluationParams(), truth=None):
    """Score one configuration; never raises for data-driven failures, flags instead.

    ``clusters`` is a list of attributed clusters or a :class:`ClusterSample`.
    ``time_range`` is the ``(start, end)`` window over which ground tracks are
    sampled. A precomputed :class:`TruthModel` may be passed to share work
    across configurations.
    """
    sample = clusters if isinstance(clusters, ClusterSample) else \
        ClusterSample.from_clusters(clusters, params.attribute)
    result = EvaluationResult(config.config_id, config.name, config.n_satellites,
                              len(sample), 0)
    try:
        sat, _, _ = observation_matches(config, sample, time_range, params)
    except NoTemporalOverlap:
        result.flag = FLAG_TOO_FEW
        result.observed_by = np.full(len(sample), -1, dtype=np.int64)
        return result
    result.observed_by = sat
    observed = sat >= 0
    result.n_observed = int(observed.sum())
    if result.n_observed < params.min_observed:
        result.flag = FLAG_TOO_FEW
        return result

    try:
        if truth is None:
            truth = TruthModel.fit(sample.values, params)
        f = stats.fit_density(sample.values[observed], truth.bounds.grid(), params.reflect)
    except (stats.DegenerateDataError, ValueError):
        result.flag = FLAG_DEGENERATE
        return result

    result.bounds = truth.bounds
    result.bandwidth_truth = truth.density.bandwidth
    result.bandwidth_observed = f.bandwidth
    result.observed_density = f
    result.truth_density = truth.density
    result.kl_divergence = stats.kl_divergence(f, truth.density, truth.bounds)
    return result


def evaluate_study(configs, clusters, time_range, params=EvaluationParams()):
    """Evaluate every configuration against one shared truth model."""
    sample = clusters if isinstance(clusters, ClusterSample) else \
        ClusterSample.from_clusters(clusters, params.attribute)
    try:
        truth = TruthModel.fit(sample.values, params)
    except (stats.DegenerateDataError, ValueError):
        truth = None
    return [evaluate_configuration(c, sample, time_range, params, truth) for c in configs]


def _rank_key(r):
    return (r.kl_divergence, r.n_satellites, r.config_id)


def rank_configurations(results):
    """Ascending KL; ties go to fewer satellites, then lower config id.

    Flagged results follow, ordered by config id.
    """
    results = list(results)
    good = sorted((r for r in results if r.computable), key=_rank_key)
    if not good:
        raise NoComputableResults("no configuration produced a computable KL divergence")
    flagged = sorted((r for r in results if not r.computable), key=lambda r: r.config_id)
    return good + flagged


RANKING_COLUMNS = ("rank", "config_id", "name", "n_satellites", "n_observed",
                   "n_total", "kl_divergence", "flag")


def ranking_rows(ranked):
    rows = []
    for k, r in enumerate(ranked, start=1):
        rows.append({
            "rank": k if r.computable else "",
            "config_id": r.config_id,
            "name": r.name,
            "n_satellites": r.n_satellites,
            "n_observed": r.n_observed,
            "n_total": r.n_total,
            "kl_divergence": repr(r.kl_divergence) if r.computable else "",
            "flag": r.flag,
        })
    return rows
