"""CSV writers/readers for clusters, tracks, observations, rankings and curves.

Floats are written with ``repr`` so re-runs are byte-identical and values
round-trip exactly.
"""

import csv
from pathlib import Path

import numpy as np

from stormkl.evaluate import RANKING_COLUMNS
from stormkl.extract import ATTRIBUTE_COLUMNS
from stormkl.scenario import format_utc, parse_utc

CLUSTER_COLUMNS = ("timestamp", "cluster_id", "n_cells", "centroid_lat", "centroid_lon") \
    + ATTRIBUTE_COLUMNS
TRACK_COLUMNS = ("satellite_id", "timestamp", "lat", "lon")
OBSERVATION_COLUMNS = ("config_id", "timestamp", "cluster_id", "observed", "satellite_id")
CURVE_COLUMNS = ("x", "density_observed", "density_truth")


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def _write(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                row = [row[c] for c in columns]
            writer.writerow([_fmt(v) for v in row])
    return path


def write_clusters(path, clusters):
    rows = []
    for c in clusters:
        row = {"timestamp": format_utc(c.timestamp), "cluster_id": c.cluster_id,
               "n_cells": c.n_cells, "centroid_lat": c.centroid[0], "centroid_lon": c.centroid[1]}
        for col in ATTRIBUTE_COLUMNS:
            row[col] = c.attributes.get(col, "")
        rows.append(row)
    return _write(path, CLUSTER_COLUMNS, rows)


def read_clusters(path):
    """Cluster table as a dict of numpy columns (timestamps as datetime64[s])."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CLUSTER_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = list(reader)
    out = {
        "timestamp": np.array([parse_utc(r["timestamp"]) for r in rows], dtype="datetime64[s]"),
        "cluster_id": np.array([int(r["cluster_id"]) for r in rows], dtype=np.int64),
        "n_cells": np.array([int(r["n_cells"]) for r in rows], dtype=np.int64),
    }
    for col in ("centroid_lat", "centroid_lon") + ATTRIBUTE_COLUMNS:
        out[col] = np.array([float(r[col]) for r in rows], dtype=np.float64)
    return out


def write_tracks(path, tracks):
    def rows():
        for tr in tracks:
            for t, la, lo in zip(tr.times, tr.lat, tr.lon):
                yield (tr.satellite_id, format_utc(t), float(la), float(lo))
    return _write(path, TRACK_COLUMNS, rows())


def write_observations(path, config_id, clusters, observed_by, satellite_ids):
    def rows():
        for c, k in zip(clusters, observed_by):
            yield (config_id, format_utc(c.timestamp), c.cluster_id,
                   int(k >= 0), satellite_ids[k] if k >= 0 else "")
    return _write(path, OBSERVATION_COLUMNS, rows())


def read_observed_flags(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return np.array([row["observed"] == "1" for row in csv.DictReader(fh)], dtype=bool)


def write_ranking(path, rows):
    return _write(path, RANKING_COLUMNS, rows)


def write_curve(path, x, density_observed, density_truth):
    return _write(path, CURVE_COLUMNS, zip(map(float, x), map(float, density_observed),
                                           map(float, density_truth)))


def read_curve(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1], data[:, 2]
