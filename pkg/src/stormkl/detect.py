"""Cold-cloud masks, 4-connected labeling and storm cluster geometry."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from stormkl import kernels

STEFAN_BOLTZMANN = 5.67037e-8  # W m-2 K-4
DEFAULT_THRESHOLD_K = 220.0


@dataclass(eq=False)
class StormCluster:
    """One connected region of cold-cloud cells at a single timestamp.

    ``cells`` is an ``(n, 2)`` int array of ``(j, i)`` indices and
    ``footprint`` an ``(n, 4)`` array of member-cell boxes
    ``(lat_lo, lat_hi, lon_lo, lon_hi)``.
    """

    cluster_id: int
    timestamp: np.datetime64
    cells: np.ndarray
    centroid: tuple
    footprint: np.ndarray
    attributes: dict = field(default_factory=dict)

    @property
    def n_cells(self):
        return int(self.cells.shape[0])


def temperature_to_flux(temperature_k):
    """Blackbody flux for a cloud-top temperature, in W/m^2."""
    if temperature_k < 0:
        raise ValueError(f"temperature must be non-negative, got {temperature_k}")
    return STEFAN_BOLTZMANN * temperature_k ** 4


def cold_cloud_mask(field_2d, threshold, shape=None):
    """1 where the outgoing longwave flux is strictly below ``threshold``."""
    field_2d = np.asarray(field_2d)
    if field_2d.ndim != 2 or (shape is not None and field_2d.shape != tuple(shape)):
        raise ValueError(f"field shape {field_2d.shape} does not match grid {shape}")
    return (field_2d < threshold).astype(np.uint8)


def label_components(mask):
    """Label 4-connected components of a binary mask.

    Returns ``(labels, count)``; labels run 1..count in raster-scan order of
    each component's first cell, background is 0.
    """
    mask = np.ascontiguousarray(np.asarray(mask) != 0)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    return kernels.label4(mask)


def build_clusters(labels, grid, t):
    """Turn a labeled snapshot into :class:`StormCluster` objects.

    ``t`` is the time index into ``grid.timestamps``. Centroids are the
    area-weighted mean of member-cell centres.
    """
    labels = np.asarray(labels)
    flat = labels.ravel()
    members = np.flatnonzero(flat)
    if members.size == 0:
        return []
    order = np.argsort(flat[members], kind="stable")
    members = members[order]
    ids = flat[members]
    splits = np.flatnonzero(np.diff(ids)) + 1

    n_lon = labels.shape[1]
    lat_edges, lon_edges = grid.lat_axis.edges, grid.lon_axis.edges
    lat_c, lon_c = grid.lat_axis.centers, grid.lon_axis.centers
    areas = grid.cell_areas()
    timestamp = grid.timestamps[t]

    clusters = []
    for cid, group in zip(ids[np.r_[0, splits]], np.split(members, splits)):
        jj, ii = np.divmod(group, n_lon)
        w = areas[jj, ii]
        centroid = (float(np.dot(w, lat_c[jj]) / w.sum()),
                    float(np.dot(w, lon_c[ii]) / w.sum()))
        footprint = np.column_stack(
            [lat_edges[jj], lat_edges[jj + 1], lon_edges[ii], lon_edges[ii + 1]])
        clusters.append(StormCluster(int(cid), timestamp, np.column_stack([jj, ii]),
                                     centroid, footprint))
    return clusters


def detect_clusters(grid, threshold_k=DEFAULT_THRESHOLD_K, variable="LWTUP"):
    """Run mask, label and geometry over every timestep of ``grid``."""
    threshold = temperature_to_flux(threshold_k)
    field_3d = grid.variables[variable]
    shape = field_3d.shape[1:]
    clusters = []
    for t in range(field_3d.shape[0]):
        mask = cold_cloud_mask(field_3d[t], threshold, shape)
        if not mask.any():
            continue
        labels, _ = label_components(mask)
        clusters.extend(build_clusters(labels, grid, t))
    return clusters
