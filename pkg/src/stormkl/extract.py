"""Per-cluster attributes computed from member-cell values."""

import numpy as np

ATTRIBUTE_COLUMNS = ("max_prectot", "total_weighted_prectot", "avg_prectot")


def _values(cluster, field_2d):
    cells = cluster.cells
    if cells.shape[0] == 0:
        raise ValueError(f"cluster {cluster.cluster_id} has no cells")
    return np.asarray(field_2d)[cells[:, 0], cells[:, 1]]


def max_value(cluster, field_2d):
    return float(_values(cluster, field_2d).max())


def total_weighted_value(cluster, field_2d, areas):
    """Sum of value * cell area over member cells (units * km^2)."""
    cells = cluster.cells
    return float(np.dot(_values(cluster, field_2d), np.asarray(areas)[cells[:, 0], cells[:, 1]]))


def average_value(cluster, field_2d):
    """Unweighted mean over member cells."""
    v = _values(cluster, field_2d)
    return float(v.sum() / v.size)


def extract_attributes(clusters, grid, variable="PRECTOT", prefix="prectot"):
    """Fill ``max_``, ``total_weighted_`` and ``avg_`` attributes in place."""
    field_3d = grid.variables[variable]
    areas = grid.cell_areas()
    index = {t: k for k, t in enumerate(grid.timestamps.tolist())}
    for c in clusters:
        snap = field_3d[index[c.timestamp.tolist()]]
        c.attributes[f"max_{prefix}"] = max_value(c, snap)
        c.attributes[f"total_weighted_{prefix}"] = total_weighted_value(c, snap, areas)
        c.attributes[f"avg_{prefix}"] = average_value(c, snap)
    return clusters
