"""Circular-orbit ground tracks with secular J2 nodal regression.

Model: two-body circular motion, the node drifting at the secular J2 rate,
rotated into the Earth-fixed frame with the linear-plus-polynomial GMST
expression referenced to J2000 (UT1 taken equal to UTC). Latitudes are
geocentric on a spherical Earth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from stormkl.scenario import parse_utc, to_unix_seconds

MU_EARTH = 398600.4418  # km^3 s^-2
R_EQUATOR = 6378.137  # km
J2 = 1.08263e-3
TROPICAL_YEAR_DAYS = 365.2422
SSO_NODE_RATE = 2.0 * math.pi / (TROPICAL_YEAR_DAYS * 86400.0)  # rad/s
SIDEREAL_DAY_S = 86164.0905

J2000_UNIX = 946728000.0  # 2000-01-01T12:00:00Z
DEFAULT_EPOCH = "2005-07-15T00:00:00Z"

# GMST (deg) = 280.46061837 + 360.98564736629 d + 0.000387933 T^2 - T^3 / 38710000
_GMST_C0 = 280.46061837
_GMST_C1 = 360.98564736629
_GMST_C2 = 0.000387933
_GMST_C3 = 1.0 / 38710000.0
# mean solar longitude (deg) = 280.46646 + 36000.76983 T + 0.0003032 T^2
_SUN_L0 = 280.46646
_SUN_L1 = 36000.76983
_SUN_L2 = 0.0003032


class NoSunSynchronousSolution(ValueError):
    pass


def parse_ltan(ltan):
    """``"20:00"`` or a float hour to decimal hours in [0, 24)."""
    if isinstance(ltan, str):
        hh, _, mm = ltan.partition(":")
        hours = int(hh) + (int(mm) if mm else 0) / 60.0
    else:
        hours = float(ltan)
    if not 0.0 <= hours < 24.0:
        raise ValueError(f"LTAN must be within [00:00, 24:00), got {ltan!r}")
    return hours


@dataclass(frozen=True)
class OrbitSpec:
    """One satellite. ``kind`` is ``"sso"`` (uses ``ltan``) or ``"inclined"``."""

    kind: str
    ltan: str | None = None
    inclination_deg: float | None = None
    altitude_km: float = 700.0
    true_anomaly_deg: float = 0.0
    raan_offset_deg: float = 0.0
    epoch: str = DEFAULT_EPOCH

    def __post_init__(self):
        if self.kind not in ("sso", "inclined"):
            raise ValueError(f"unknown orbit kind {self.kind!r}")
        if not self.altitude_km > 0:
            raise ValueError("altitude must be positive")
        if self.kind == "sso":
            if self.ltan is None:
                raise ValueError("sun-synchronous orbit needs an ltan")
            parse_ltan(self.ltan)
        else:
            # 0 deg is accepted for equatorial test orbits
            if self.inclination_deg is None or not 0.0 <= self.inclination_deg < 180.0:
                raise ValueError("inclined orbit needs inclination_deg in [0, 180)")
        parse_utc(self.epoch)

    @property
    def inclination(self):
        if self.kind == "sso":
            return sso_inclination(self.altitude_km)
        return float(self.inclination_deg)

    @property
    def raan0(self):
        if self.kind == "sso":
            base = ltan_to_raan(self.ltan, self.epoch)
        else:
            base = 0.0
        return (base + self.raan_offset_deg) % 360.0

    def describe(self):
        if self.kind == "sso":
            return f"SSO {self.ltan} LTAN"
        return f"{self.inclination_deg:g} deg inclination"

    def to_dict(self):
        out = {"kind": self.kind, "altitude_km": self.altitude_km,
               "true_anomaly_deg": self.true_anomaly_deg,
               "raan_offset_deg": self.raan_offset_deg, "epoch": self.epoch}
        if self.kind == "sso":
            out["ltan"] = self.ltan
        else:
            out["inclination_deg"] = self.inclination_deg
        return out

    @classmethod
    def from_dict(cls, data):
        allowed = {"kind", "ltan", "inclination_deg", "altitude_km",
                   "true_anomaly_deg", "raan_offset_deg", "epoch"}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ValueError(f"unknown orbit keys: {', '.join(unknown)}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class GroundTrack:
    """Subsatellite points sampled at a uniform cadence."""

    satellite_id: str
    times: np.ndarray
    lat: np.ndarray
    lon: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype="datetime64[s]")
        if times.size > 1:
            steps = np.diff(times).astype(np.int64)
            if np.any(steps <= 0) or np.any(steps != steps[0]):
                raise ValueError("ground-track samples must be strictly increasing at a uniform cadence")
        object.__setattr__(self, "times", times)

    def __len__(self):
        return self.times.size


def semi_major_axis(altitude_km):
    return R_EQUATOR + altitude_km


def orbital_period(altitude_km):
    """Two-body period in seconds."""
    if not altitude_km > -R_EQUATOR:
        raise ValueError("altitude below the Earth's centre")
    a = semi_major_axis(altitude_km)
    return 2.0 * math.pi * math.sqrt(a ** 3 / MU_EARTH)


def nodal_rate(altitude_km, inclination_deg):
    """Secular J2 RAAN drift in rad/s for a circular orbit."""
    a = semi_major_axis(altitude_km)
    n = math.sqrt(MU_EARTH / a ** 3)
    return -1.5 * n * J2 * (R_EQUATOR / a) ** 2 * math.cos(math.radians(inclination_deg))


def sso_inclination(altitude_km):
    """Inclination (deg) whose J2 drift matches one revolution per tropical year."""
    a = semi_major_axis(altitude_km)
    cos_i = -SSO_NODE_RATE * 2.0 * a ** 3.5 / (3.0 * J2 * math.sqrt(MU_EARTH) * R_EQUATOR ** 2)
    if abs(cos_i) > 1.0:
        raise NoSunSynchronousSolution(
            f"no sun-synchronous inclination at {altitude_km} km (cos i = {cos_i:.3f})")
    return math.degrees(math.acos(cos_i))


def _centuries_since_j2000(unix_s):
    return (np.asarray(unix_s, dtype=np.float64) - J2000_UNIX) / 86400.0 / 36525.0


def gmst_deg(unix_s):
    d = (np.asarray(unix_s, dtype=np.float64) - J2000_UNIX) / 86400.0
    T = d / 36525.0
    # split the large linear term to keep precision before the modulo
    whole = np.floor(d)
    theta = (_GMST_C0 + np.mod(_GMST_C1 * whole, 360.0) + _GMST_C1 * (d - whole)
             + _GMST_C2 * T ** 2 - _GMST_C3 * T ** 3)
    return np.mod(theta, 360.0)


def mean_sun_ra(epoch):
    """Right ascension (deg) of the mean sun at ``epoch``."""
    T = float(_centuries_since_j2000(to_unix_seconds(parse_utc(epoch))))
    return (_SUN_L0 + _SUN_L1 * T + _SUN_L2 * T * T) % 360.0


def ltan_to_raan(ltan, epoch=DEFAULT_EPOCH):
    """RAAN (deg) placing the ascending node at local mean solar time ``ltan``."""
    return (mean_sun_ra(epoch) + (parse_ltan(ltan) - 12.0) * 15.0) % 360.0


def wrap_lon(lon):
    return np.mod(np.asarray(lon) + 180.0, 360.0) - 180.0


def track_times(start, end, cadence_minutes=30.0):
    """Uniform sample times in ``[start, end]``."""
    start, end = parse_utc(start), parse_utc(end)
    step = np.timedelta64(int(round(cadence_minutes * 60)), "s")
    if step <= np.timedelta64(0, "s"):
        raise ValueError("cadence must be positive")
    return np.arange(start, end + step, step)


def propagate(spec, times, satellite_id="1"):
    """Subsatellite track of ``spec`` at the given UTC ``times``."""
    times = np.asarray(times, dtype="datetime64[s]")
    if times.size == 0:
        raise ValueError("no sample times given")
    dt = to_unix_seconds(times) - float(to_unix_seconds(parse_utc(spec.epoch)))
    inc = math.radians(spec.inclination)
    a = semi_major_axis(spec.altitude_km)
    n = math.sqrt(MU_EARTH / a ** 3)

    u = math.radians(spec.true_anomaly_deg) + n * dt
    raan = math.radians(spec.raan0) + nodal_rate(spec.altitude_km, spec.inclination) * dt
    cu, su = np.cos(u), np.sin(u)
    cr, sr = np.cos(raan), np.sin(raan)
    x = cr * cu - sr * su * math.cos(inc)
    y = sr * cu + cr * su * math.cos(inc)
    z = su * math.sin(inc)

    lat = np.degrees(np.arcsin(np.clip(z, -1.0, 1.0)))
    lon = wrap_lon(np.degrees(np.arctan2(y, x)) - gmst_deg(to_unix_seconds(times)))
    return GroundTrack(str(satellite_id), times, lat, lon)


def local_solar_time(unix_s, lon):
    """Local mean solar time in hours: UTC + lon/15, modulo 24."""
    utc_hours = np.mod(np.asarray(unix_s, dtype=np.float64) / 3600.0, 24.0)
    return np.mod(utc_hours + np.asarray(lon) / 15.0, 24.0)


def ascending_node_crossings(track):
    """Interpolated ``(unix seconds, lon)`` of each northbound equator crossing."""
    lat = track.lat
    k = np.flatnonzero((lat[:-1] < 0.0) & (lat[1:] >= 0.0))
    t = to_unix_seconds(track.times)
    frac = -lat[k] / (lat[k + 1] - lat[k])
    dlon = wrap_lon(track.lon[k + 1] - track.lon[k])
    return t[k] + frac * (t[k + 1] - t[k]), wrap_lon(track.lon[k] + frac * dlon)
