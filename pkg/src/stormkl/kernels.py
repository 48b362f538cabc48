"""Hot numeric kernels, each in a numba flavour and a numpy flavour.

The public names at the bottom of the module (``label4``, ``kde_sum``,
``match_samples``, ``paint_storms``) are bound to one flavour at import time
according to :data:`stormkl._accel.USE_NUMBA`. Both flavours are always
importable under their suffixed names so they can be compared directly.
"""

import math

import numpy as np
from scipy import ndimage

from stormkl._accel import USE_NUMBA, njit

EARTH_RADIUS_KM = 6371.0
KM_PER_DEG = EARTH_RADIUS_KM * math.pi / 180.0
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# great-circle distance

@njit
def _haversine_scalar(lat1, lon1, lat2, lon2):
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    s_lat = math.sin(0.5 * (p2 - p1))
    s_lon = math.sin(0.5 * math.radians(lon2 - lon1))
    a = s_lat * s_lat + math.cos(p1) * math.cos(p2) * s_lon * s_lon
    if a > 1.0:
        a = 1.0
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


def haversine_km(lat1, lon1, lat2, lon2):
    """Vectorized haversine distance in km on a sphere of radius 6371 km."""
    p1 = np.radians(lat1)
    p2 = np.radians(lat2)
    s_lat = np.sin(0.5 * (p2 - p1))
    s_lon = np.sin(0.5 * np.radians(np.subtract(lon2, lon1)))
    a = s_lat * s_lat + np.cos(p1) * np.cos(p2) * s_lon * s_lon
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.minimum(a, 1.0)))


# ---------------------------------------------------------------------------
# 4-connected component labeling

@njit
def _uf_find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit
def label4_numba(mask):
    """Two-pass union-find labeling; labels follow raster order of first cell."""
    n_rows, n_cols = mask.shape
    provisional = np.zeros((n_rows, n_cols), dtype=np.int32)
    parent = np.zeros(n_rows * n_cols + 1, dtype=np.int32)
    next_label = 1
    for j in range(n_rows):
        for i in range(n_cols):
            if not mask[j, i]:
                continue
            up = provisional[j - 1, i] if j > 0 else 0
            left = provisional[j, i - 1] if i > 0 else 0
            if up == 0 and left == 0:
                parent[next_label] = next_label
                provisional[j, i] = next_label
                next_label += 1
            elif up == 0:
                provisional[j, i] = left
            elif left == 0:
                provisional[j, i] = up
            else:
                ru = _uf_find(parent, up)
                rl = _uf_find(parent, left)
                if ru < rl:
                    parent[rl] = ru
                    provisional[j, i] = ru
                else:
                    parent[ru] = rl
                    provisional[j, i] = rl

    final = np.zeros(next_label, dtype=np.int32)
    labels = np.zeros((n_rows, n_cols), dtype=np.int32)
    count = 0
    for j in range(n_rows):
        for i in range(n_cols):
            p = provisional[j, i]
            if p == 0:
                continue
            root = _uf_find(parent, p)
            if final[root] == 0:
                count += 1
                final[root] = count
            labels[j, i] = final[root]
    return labels, count


def label4_numpy(mask):
    labels, count = ndimage.label(np.asarray(mask, dtype=bool))
    return labels.astype(np.int32), int(count)


# ---------------------------------------------------------------------------
# Gaussian kernel sums

@njit
def kde_sum_numba(data, support, h, reflect):
    n = data.size
    out = np.zeros(support.size)
    inv_h = 1.0 / h
    for k in range(support.size):
        x = support[k]
        acc = 0.0
        for i in range(n):
            z = (x - data[i]) * inv_h
            acc += math.exp(-0.5 * z * z)
            if reflect:
                z = (x + data[i]) * inv_h
                acc += math.exp(-0.5 * z * z)
        out[k] = acc * _INV_SQRT_2PI / (n * h)
    return out


def kde_sum_numpy(data, support, h, reflect, chunk=1 << 20):
    data = np.asarray(data, dtype=np.float64)
    support = np.asarray(support, dtype=np.float64)
    out = np.empty(support.size)
    step = max(1, chunk // max(1, data.size))
    for start in range(0, support.size, step):
        x = support[start:start + step, None]
        z = (x - data[None, :]) / h
        acc = np.exp(-0.5 * z * z).sum(axis=1)
        if reflect:
            z = (x + data[None, :]) / h
            acc += np.exp(-0.5 * z * z).sum(axis=1)
        out[start:start + step] = acc
    return out * _INV_SQRT_2PI / (data.size * h)


# ---------------------------------------------------------------------------
# cluster / ground-track matching
#
# Sample arrays of all satellites are concatenated; satellite k owns
# samples offsets[k]:offsets[k+1], each run sorted by time.

@njit
def match_samples_numba(c_time, c_lat, c_lon, offsets, s_time, s_lat, s_lon,
                        time_tol, reach_km):
    n = c_time.size
    n_sat = offsets.size - 1
    sat_hit = np.full(n, -1, dtype=np.int64)
    sample_hit = np.full(n, -1, dtype=np.int64)
    for c in range(n):
        t = c_time[c]
        for k in range(n_sat):
            a = offsets[k]
            b = offsets[k + 1]
            q = a + np.searchsorted(s_time[a:b], t - time_tol)
            found = False
            while q < b and s_time[q] <= t + time_tol:
                d = _haversine_scalar(c_lat[c], c_lon[c], s_lat[q], s_lon[q])
                if d <= reach_km:
                    found = True
                    break
                q += 1
            if found:
                sat_hit[c] = k
                sample_hit[c] = q
                break
    return sat_hit, sample_hit


def match_samples_numpy(c_time, c_lat, c_lon, offsets, s_time, s_lat, s_lon,
                        time_tol, reach_km):
    n = c_time.size
    sat_hit = np.full(n, -1, dtype=np.int64)
    sample_hit = np.full(n, -1, dtype=np.int64)
    for k in range(offsets.size - 1):
        a, b = int(offsets[k]), int(offsets[k + 1])
        if b == a:
            continue
        open_ = sat_hit < 0
        if not open_.any():
            break
        times = s_time[a:b]
        lo = np.searchsorted(times, c_time - time_tol, side="left")
        hi = np.searchsorted(times, c_time + time_tol, side="right")
        width = int((hi - lo).max(initial=0))
        first = np.full(n, -1, dtype=np.int64)
        for w in range(width):
            idx = lo + w
            valid = open_ & (idx < hi) & (first < 0)
            if not valid.any():
                continue
            q = np.minimum(idx, b - a - 1) + a
            d = haversine_km(c_lat, c_lon, s_lat[q], s_lon[q])
            hit = valid & (d <= reach_km)
            first[hit] = q[hit]
        got = first >= 0
        sat_hit[got] = k
        sample_hit[got] = first[got]
    return sat_hit, sample_hit


# ---------------------------------------------------------------------------
# synthetic storm rendering
#
# Each storm-step is a Gaussian blob g = exp(-d^2 / 2r^2) on a local
# equirectangular plane. Precipitation adds amp * g where g >= precip_cut;
# outgoing longwave is pulled from the clear-sky background toward core_flux.

@njit
def paint_storms_numba(lwtup, prectot, background, lat_c, lon_c, t_idx,
                       s_lat, s_lon, radius, amp, core_flux, precip_cut,
                       extent):
    for s in range(t_idx.size):
        t = t_idx[s]
        r = radius[s]
        la = s_lat[s]
        lo = s_lon[s]
        coslat = max(math.cos(math.radians(la)), 1e-6)
        dlat = extent * r / KM_PER_DEG
        dlon = extent * r / (KM_PER_DEG * coslat)
        j0 = np.searchsorted(lat_c, la - dlat)
        j1 = np.searchsorted(lat_c, la + dlat, side="right")
        i0 = np.searchsorted(lon_c, lo - dlon)
        i1 = np.searchsorted(lon_c, lo + dlon, side="right")
        inv = 1.0 / (2.0 * r * r)
        for j in range(j0, j1):
            dy = (lat_c[j] - la) * KM_PER_DEG
            for i in range(i0, i1):
                dx = (lon_c[i] - lo) * KM_PER_DEG * coslat
                g = math.exp(-(dx * dx + dy * dy) * inv)
                if g < precip_cut:
                    continue
                prectot[t, j, i] += amp[s] * g
                bg = background[j, i]
                olr = bg - (bg - core_flux) * g
                if olr < lwtup[t, j, i]:
                    lwtup[t, j, i] = olr


def paint_storms_numpy(lwtup, prectot, background, lat_c, lon_c, t_idx,
                       s_lat, s_lon, radius, amp, core_flux, precip_cut,
                       extent):
    coslat = np.maximum(np.cos(np.radians(s_lat)), 1e-6)
    dlat = extent * radius / KM_PER_DEG
    dlon = extent * radius / (KM_PER_DEG * coslat)
    j0 = np.searchsorted(lat_c, s_lat - dlat)
    j1 = np.searchsorted(lat_c, s_lat + dlat, side="right")
    i0 = np.searchsorted(lon_c, s_lon - dlon)
    i1 = np.searchsorted(lon_c, s_lon + dlon, side="right")
    for s in range(t_idx.size):
        if j1[s] <= j0[s] or i1[s] <= i0[s]:
            continue
        rows = slice(j0[s], j1[s])
        cols = slice(i0[s], i1[s])
        dy = (lat_c[rows] - s_lat[s]) * KM_PER_DEG
        dx = (lon_c[cols] - s_lon[s]) * KM_PER_DEG * coslat[s]
        g = np.exp(-(dx[None, :] ** 2 + dy[:, None] ** 2) / (2.0 * radius[s] ** 2))
        keep = g >= precip_cut
        t = t_idx[s]
        p = prectot[t, rows, cols]
        p[keep] += amp[s] * g[keep]
        bg = background[rows, cols]
        olr = bg - (bg - core_flux) * g
        lw = lwtup[t, rows, cols]
        colder = keep & (olr < lw)
        lw[colder] = olr[colder]


if USE_NUMBA:
    label4 = label4_numba
    kde_sum = kde_sum_numba
    match_samples = match_samples_numba
    paint_storms = paint_storms_numba
else:
    label4 = label4_numpy
    kde_sum = kde_sum_numpy
    match_samples = match_samples_numpy
    paint_storms = paint_storms_numpy
