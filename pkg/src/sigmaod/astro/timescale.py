"""Epochs and Earth rotation (GMST only)."""
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

__all__ = ["Epoch", "J2000", "gmst", "gmst_rate", "gmst_rotation"]

J2000 = datetime(2000, 1, 1, 12, 0, 0)
_DAY = 86400.0


@dataclass(frozen=True, order=True)
class Epoch:
    """Continuous time in seconds past J2000 (2000-01-01 12:00:00).

    No distinction is made between UTC, UT1 and TT.
    """

    seconds: float

    @classmethod
    def from_datetime(cls, dt):
        if dt.tzinfo is not None:
            dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
        return cls((dt - J2000).total_seconds())

    @classmethod
    def parse(cls, text):
        """ISO-8601 date/time, e.g. ``2010-01-04T00:00:00``."""
        return cls.from_datetime(datetime.fromisoformat(str(text).strip()))

    def __add__(self, dt):
        return Epoch(self.seconds + float(dt))

    def __sub__(self, other):
        if isinstance(other, Epoch):
            return self.seconds - other.seconds
        return Epoch(self.seconds - float(other))

    @property
    def jd(self):
        return 2451545.0 + self.seconds / _DAY

    @property
    def centuries(self):
        """Julian centuries past J2000."""
        return self.seconds / (_DAY * 36525.0)

    def isoformat(self):
        from datetime import timedelta
        return (J2000 + timedelta(seconds=self.seconds)).isoformat()


def _seconds(epoch):
    return epoch.seconds if isinstance(epoch, Epoch) else float(epoch)


def gmst(epoch):
    """Greenwich mean sidereal angle (IAU 1982), radians in [0, 2pi)."""
    s = _seconds(epoch)
    T = s / (_DAY * 36525.0)
    # the 876600 h/century part of the linear term is exactly one second per
    # elapsed second, so it folds into the day fraction without rounding loss
    theta = (67310.54841 + np.mod(s, _DAY) + 8640184.812866 * T + 0.093104 * T * T
             - 6.2e-6 * T ** 3)
    return float(np.mod(theta, _DAY) / _DAY * 2.0 * np.pi)


def gmst_rate(epoch):
    """Time derivative of ``gmst`` in rad/s, the rotation rate consistent with it."""
    T = _seconds(epoch) / (_DAY * 36525.0)
    dtheta = 1.0 + (8640184.812866 + 2 * 0.093104 * T - 3 * 6.2e-6 * T * T) / (_DAY * 36525.0)
    return dtheta / _DAY * 2.0 * np.pi


def gmst_rotation(epoch):
    """Rotation matrix taking ECI vectors to ECEF (z-rotation by GMST)."""
    th = gmst(epoch)
    c, s = np.cos(th), np.sin(th)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
