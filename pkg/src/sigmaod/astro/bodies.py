"""Low-precision Sun and Moon positions and third-body accelerations."""
import numpy as np

from .timescale import Epoch

__all__ = ["MU_SUN", "MU_MOON", "AU", "OBLIQUITY", "sun_moon_pos", "sun_pos", "moon_pos",
           "third_body_accel"]

MU_SUN = 1.32712440018e20    # m^3/s^2
MU_MOON = 4.9028000661e12
AU = 1.495978707e11
OBLIQUITY = np.radians(23.43929111)
_ARCSEC = np.pi / (180.0 * 3600.0)


def _centuries(epoch):
    return epoch.centuries if isinstance(epoch, Epoch) else float(epoch) / (86400.0 * 36525.0)


def _ecliptic_to_eci(lon, lat, r):
    ce, se = np.cos(OBLIQUITY), np.sin(OBLIQUITY)
    x = r * np.cos(lat) * np.cos(lon)
    y = r * np.cos(lat) * np.sin(lon)
    z = r * np.sin(lat)
    return np.array([x, ce * y - se * z, se * y + ce * z])


def sun_pos(epoch):
    """Geocentric Sun position (m, mean equator and equinox of date)."""
    T = _centuries(epoch)
    M = np.radians(357.5256 + 35999.049 * T)
    lon = np.radians(282.9400) + M + (6892.0 * np.sin(M) + 72.0 * np.sin(2 * M)) * _ARCSEC
    r = (149.619 - 2.499 * np.cos(M) - 0.021 * np.cos(2 * M)) * 1e9
    return _ecliptic_to_eci(lon, 0.0, r)


def moon_pos(epoch):
    """Geocentric Moon position (m) from the truncated lunar series."""
    T = _centuries(epoch)
    d = np.radians
    L0 = d(218.31617 + 481267.88088 * T - 1.3972 * T)
    l = d(134.96292 + 477198.86753 * T)
    lp = d(357.52543 + 35999.04944 * T)
    F = d(93.27283 + 483202.01873 * T)
    D = d(297.85027 + 445267.11135 * T)
    s = np.sin
    lon = L0 + _ARCSEC * (
        22640 * s(l) + 769 * s(2 * l) - 4586 * s(l - 2 * D) + 2370 * s(2 * D)
        - 668 * s(lp) - 412 * s(2 * F) - 212 * s(2 * l - 2 * D) - 206 * s(l + lp - 2 * D)
        + 192 * s(l + 2 * D) - 165 * s(lp - 2 * D) + 148 * s(l - lp) - 125 * s(D)
        - 110 * s(l + lp) - 55 * s(2 * F - 2 * D))
    lat = _ARCSEC * (
        18520 * s(F + lon - L0 + _ARCSEC * (412 * s(2 * F) + 541 * s(lp)))
        - 526 * s(F - 2 * D) + 44 * s(l + F - 2 * D) - 31 * s(-l + F - 2 * D)
        - 25 * s(-2 * l + F) - 23 * s(lp + F - 2 * D) + 21 * s(-l + F)
        + 11 * s(-lp + F - 2 * D))
    c = np.cos
    r = 1e3 * (385000 - 20905 * c(l) - 3699 * c(2 * D - l) - 2956 * c(2 * D)
               - 570 * c(2 * l) + 246 * c(2 * l - 2 * D) - 205 * c(lp - 2 * D)
               - 171 * c(l + 2 * D) - 152 * c(l + lp - 2 * D))
    return _ecliptic_to_eci(lon, lat, r)


def sun_moon_pos(epoch):
    """(r_sun, r_moon) geocentric ECI positions in meters."""
    return sun_pos(epoch), moon_pos(epoch)


def third_body_accel(r_sat, r_body, mu_body):
    """Tidal acceleration of a body at ``r_body`` on satellites at ``r_sat``.

    ``r_sat`` may be (3,) or (3, N).
    """
    r_sat = np.asarray(r_sat, dtype=float)
    rb = np.asarray(r_body, dtype=float).reshape(3, *([1] * (r_sat.ndim - 1)))
    d = rb - r_sat
    dn = np.sqrt(np.sum(d * d, axis=0))
    bn = np.sqrt(np.sum(rb * rb, axis=0))
    return mu_body * (d / dn ** 3 - rb / bn ** 3)
