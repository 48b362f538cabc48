"""Temporal + spatial matching of storm clusters against ground tracks.

A cluster counts as observed when some satellite sample lies within
``time_tol`` seconds of the cluster timestamp and within ``reach`` km
(great-circle, inclusive) of the cluster centroid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stormkl import kernels
from stormkl.scenario import to_unix_seconds

DEFAULT_SWATH_KM = 1450.0
DEFAULT_TIME_TOL_S = 15 * 60.0


class NoTemporalOverlap(ValueError):
    """Tracks exist but none of their samples falls in the clusters' time window."""


@dataclass(frozen=True)
class ObservationOutcome:
    cluster: object
    observed: bool
    satellite_id: str | None = None
    sample_time: np.datetime64 | None = None

    def __post_init__(self):
        if self.observed and (self.satellite_id is None or self.sample_time is None):
            raise ValueError("observed outcome needs a satellite id and sample time")


def great_circle_distance(a, b):
    """Haversine distance in km between ``(lat, lon)`` pairs in degrees."""
    return float(kernels.haversine_km(a[0], a[1], b[0], b[1]))


def swath_reach(swath_width_km):
    """Ground distance covered either side of the subsatellite point."""
    if not swath_width_km > 0:
        raise ValueError("swath width must be positive")
    return swath_width_km / 2.0


def _stack_tracks(tracks):
    offsets = np.zeros(len(tracks) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(tr) for tr in tracks])
    if tracks:
        s_time = np.concatenate([to_unix_seconds(tr.times) for tr in tracks])
        s_lat = np.concatenate([np.asarray(tr.lat, dtype=np.float64) for tr in tracks])
        s_lon = np.concatenate([np.asarray(tr.lon, dtype=np.float64) for tr in tracks])
    else:
        s_time = s_lat = s_lon = np.zeros(0)
    return offsets, s_time, s_lat, s_lon


def match_arrays(c_time, c_lat, c_lon, tracks, reach, time_tol=DEFAULT_TIME_TOL_S):
    """Array-level matching.

    ``c_time`` holds unix seconds. Returns ``(sat_index, sample_index)``
    per cluster, ``-1`` where unobserved; ``sample_index`` points into the
    concatenation of all track samples in ``tracks`` order. The first
    satellite in list order wins, and within it the earliest sample.
    """
    c_time = np.ascontiguousarray(c_time, dtype=np.float64)
    c_lat = np.ascontiguousarray(c_lat, dtype=np.float64)
    c_lon = np.ascontiguousarray(c_lon, dtype=np.float64)
    offsets, s_time, s_lat, s_lon = _stack_tracks(tracks)
    if s_time.size and c_time.size:
        lo, hi = c_time.min() - time_tol, c_time.max() + time_tol
        if not np.any((s_time >= lo) & (s_time <= hi)):
            raise NoTemporalOverlap(
                "no ground-track sample falls within the cluster time window")
    if s_time.size == 0 or c_time.size == 0:
        none = np.full(c_time.size, -1, dtype=np.int64)
        return none, none.copy()
    return kernels.match_samples(c_time, c_lat, c_lon, offsets, s_time, s_lat, s_lon,
                                 float(time_tol), float(reach))


def _cluster_arrays(clusters):
    c_time = to_unix_seconds([c.timestamp for c in clusters]) if clusters else np.zeros(0)
    c_lat = np.array([c.centroid[0] for c in clusters], dtype=np.float64)
    c_lon = np.array([c.centroid[1] for c in clusters], dtype=np.float64)
    return c_time, c_lat, c_lon


def _outcomes(clusters, tracks, sat, sample):
    _, s_time, _, _ = _stack_tracks(tracks)
    out = []
    for c, k, q in zip(clusters, sat, sample):
        if k < 0:
            out.append(ObservationOutcome(c, False))
        else:
            t = np.datetime64(int(s_time[q]), "s")
            out.append(ObservationOutcome(c, True, tracks[k].satellite_id, t))
    return out


def is_observed(cluster, tracks, reach, time_tol=DEFAULT_TIME_TOL_S):
    """Observation outcome for one cluster."""
    arrays = _cluster_arrays([cluster])
    sat, sample = match_arrays(*arrays, tracks, reach, time_tol)
    return _outcomes([cluster], tracks, sat, sample)[0]


def observe_all(clusters, tracks, reach, time_tol=DEFAULT_TIME_TOL_S):
    sat, sample = match_arrays(*_cluster_arrays(clusters), tracks, reach, time_tol)
    return _outcomes(clusters, tracks, sat, sample)


def partition_clusters(clusters, tracks, reach, time_tol=DEFAULT_TIME_TOL_S):
    """Split clusters into ``(observed, unobserved)`` lists, order preserved."""
    if not tracks:
        return [], list(clusters)
    sat, _ = match_arrays(*_cluster_arrays(clusters), tracks, reach, time_tol)
    observed = [c for c, k in zip(clusters, sat) if k >= 0]
    unobserved = [c for c, k in zip(clusters, sat) if k < 0]
    return observed, unobserved
