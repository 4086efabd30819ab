"""Flat ``key = value`` scenario configuration."""
from dataclasses import dataclass, field
import math
import os

import numpy as np

from ..astro.gravity import bundled_gravity_path
from ..astro.timescale import Epoch
from ..errors import ConfigError, SigmaODError
from ..filters import FILTER_NAMES, FilterKind
from ..moments import MomentSpec

__all__ = ["ScenarioConfig", "parse_config", "format_config", "parse_value", "format_value",
           "load_config", "filter_kinds", "FILTER_PARAM_KEYS"]

ARCSEC = math.pi / (180.0 * 3600.0)
ARCMIN = 60.0 * ARCSEC

# filters.<name>.<param> keys that map onto FilterKind fields
FILTER_PARAM_KEYS = ("kappa", "delta", "w_threshold", "floor", "posterior_moments", "jitter")

_UNITS = {"arcsec": ARCSEC, "arcmin": ARCMIN, "deg": math.pi / 180.0, "km": 1e3}


def _scalar(tok):
    t = tok.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("inf", "+inf"):
        return math.inf
    if low == "-inf":
        return -math.inf
    if len(t) >= 2 and t[0] == t[-1] and t[0] in "'\"":
        return t[1:-1]
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    # number with a unit suffix, e.g. "100 arcsec"
    parts = t.split()
    if len(parts) == 2 and parts[1] in _UNITS:
        try:
            return float(parts[0]) * _UNITS[parts[1]]
        except ValueError:
            pass
    return t


def parse_value(text):
    """Scalar, or a list when the value contains commas."""
    if "," in text:
        return [_scalar(t) for t in text.split(",") if t.strip()]
    return _scalar(text)


def parse_config(text, source="<string>"):
    """Parse ``key = value`` lines into a flat dict (later keys win)."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = line.split("=", 1)
        key = key.strip()
        if not key or any(c.isspace() for c in key):
            raise ConfigError(f"{source}:{lineno}: bad key {key!r}")
        out[key] = parse_value(val)
    return out


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple, np.ndarray)):
        # a trailing comma keeps a one-element list a list when parsed back
        return ", ".join(format_value(x) for x in v) + ("," if len(v) == 1 else "")
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def format_config(d, header=None):
    lines = [f"# {h}" for h in (header or "").splitlines()]
    lines += [f"{k} = {format_value(d[k])}" for k in sorted(d)]
    return "\n".join(lines) + "\n"


def _vector(d, key, n=None, default=None):
    v = d.get(key, default)
    if v is None:
        return None
    a = np.atleast_1d(np.asarray(v, dtype=float))
    if n is not None:
        if a.shape[0] == 1:
            a = np.full(n, a[0])
        elif a.shape[0] != n:
            raise ConfigError(f"{key}: expected {n} values, got {a.shape[0]}")
    return a


def _moments(d, prefix, n, default_std=None):
    mean = _vector(d, f"{prefix}.mean", n, 0.0)
    skew = _vector(d, f"{prefix}.skew", n, 0.0)
    kurt = _vector(d, f"{prefix}.kurt", n, 3.0)
    try:
        if f"{prefix}.cov" in d:
            cov = _vector(d, f"{prefix}.cov")
            if cov.shape[0] != n * n:
                raise ConfigError(f"{prefix}.cov needs {n * n} values")
            cov = cov.reshape(n, n)
            return MomentSpec(mean, cov=0.5 * (cov + cov.T), skew=skew, kurt=kurt)
        std = _vector(d, f"{prefix}.std", n, default_std)
        if std is None:
            raise ConfigError(f"{prefix}: give std or cov")
        return MomentSpec.from_std(mean, std, skew=skew, kurt=kurt)
    except ConfigError:
        raise
    except SigmaODError as exc:
        raise ConfigError(f"{prefix}: {exc}") from exc


def filter_kinds(d, names=None, param_overrides=None):
    """FilterKind objects for ``filters.list`` with per-kind parameters."""
    names = names if names is not None else d.get("filters.list", list(FILTER_NAMES))
    if isinstance(names, str):
        names = [names]
    kinds = []
    for label in names:
        probe = FilterKind.parse(label)
        params = {}
        if probe.name == "DELTA_HOUSE":
            params["floor"] = True
        elif probe.name == "W_HOUSE":
            params["floor"] = False
        for p in FILTER_PARAM_KEYS:
            for key in (f"filters.{p}", f"filters.{probe.name.lower()}.{p}"):
                if key in d:
                    params[p] = d[key]
        if probe.name not in ("UKF", "SRUKF"):
            params.pop("kappa", None)
        if not probe.is_house:
            for p in ("delta", "w_threshold", "floor", "posterior_moments"):
                params.pop(p, None)
        if param_overrides:
            params.update(param_overrides)
        try:
            kinds.append(FilterKind.parse(label, **params))
        except SigmaODError as exc:
            raise ConfigError(f"filter {label}: {exc}") from exc
    seen = set()
    for k in kinds:
        if k.label in seen:
            raise ConfigError(f"filter {k.label} listed twice")
        seen.add(k.label)
    return kinds


@dataclass(eq=False)
class ScenarioConfig:
    """Typed view of a flat configuration dict (``raw`` keeps the source keys)."""

    raw: dict
    kind: str
    start: Epoch
    duration: float
    interval: float
    initial: MomentSpec
    process: MomentSpec
    measurement: MomentSpec
    filters: list
    trials: int = 1
    seed: int = 0
    max_step: float = math.inf
    divergence_factor: float = 100.0
    truth_process_noise: bool = True
    # projectile
    drag_b: float = 0.001
    gravity_g: float = 9.807
    truth_step: float = 0.05
    filter_step: float = 0.05
    # orbit
    truth_degree: int = 0
    truth_order: int = 0
    truth_third_bodies: bool = False
    filter_degree: int = 0
    filter_order: int = 0
    filter_third_bodies: bool = False
    representation: str = "cart"
    gravity_file: str = ""
    sensor: str = "radar"
    station: np.ndarray = field(default_factory=lambda: np.zeros(3))
    min_elevation: float = 0.0

    def override(self, **updates):
        """Copy with raw keys replaced; underscores in names stand for dots,
        or pass a dict via ``updates={'a.b': 1}``."""
        raw = dict(self.raw)
        raw.update(updates.pop("updates", {}))
        raw.update({k.replace("__", "."): v for k, v in updates.items()})
        return ScenarioConfig.from_dict(raw)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.get("scenario.kind")
        if kind not in ("projectile", "synthetic-od"):
            raise ConfigError(f"scenario.kind must be projectile or synthetic-od, got {kind!r}")
        orbit = kind == "synthetic-od"
        nz = {"radar": 4, "radec": 2}.get(d.get("sensor.kind", "radar"), 2) if orbit else 2
        nw = 6 if orbit else 3
        try:
            start = Epoch.parse(d["epochs.start"]) if "epochs.start" in d else Epoch(0.0)
        except ValueError as exc:
            raise ConfigError(f"epochs.start: {exc}") from exc
        cfg = cls(
            raw=d,
            kind=kind,
            start=start,
            duration=float(d.get("epochs.duration", 60.0)),
            interval=float(d.get("epochs.interval", 0.2 if not orbit else 30.0)),
            initial=_moments(d, "initial", 6),
            process=_moments(d, "process", nw),
            measurement=_moments(d, "measurement", nz),
            filters=filter_kinds(d),
            trials=int(d.get("run.trials", 1)),
            seed=int(d.get("run.seed", 0)),
            max_step=float(d.get("filter.max_step", math.inf)),
            divergence_factor=float(d.get("run.divergence_factor", 100.0)),
            truth_process_noise=bool(d.get("truth.process_noise", not orbit)),
            drag_b=float(d.get("dynamics.drag_b", 0.001)),
            gravity_g=float(d.get("dynamics.gravity", 9.807)),
            truth_step=float(d.get("truth.step", 0.05 if not orbit else 10.0)),
            filter_step=float(d.get("filter.step", 0.05 if not orbit else 10.0)),
            truth_degree=int(d.get("truth.gravity_degree", 0)),
            truth_order=int(d.get("truth.gravity_order", d.get("truth.gravity_degree", 0))),
            truth_third_bodies=bool(d.get("truth.third_bodies", False)),
            filter_degree=int(d.get("filter.gravity_degree", 0)),
            filter_order=int(d.get("filter.gravity_order", d.get("filter.gravity_degree", 0))),
            filter_third_bodies=bool(d.get("filter.third_bodies", False)),
            representation=str(d.get("filter.representation", "cart")),
            gravity_file=str(d.get("gravity.file", "") or ""),
            sensor=str(d.get("sensor.kind", "radar" if orbit else "azel")),
            station=_vector(d, "sensor.station", 3, 0.0),
            min_elevation=float(d.get("sensor.min_elevation", 0.0)),
        )
        cfg.validate()
        return cfg

    def validate(self):
        if self.trials < 1:
            raise ConfigError("run.trials must be at least 1")
        if not self.interval > 0 or not self.duration > 0:
            raise ConfigError("epochs.interval and epochs.duration must be positive")
        if not self.max_step > 0:
            raise ConfigError("filter.max_step must be positive")
        if self.kind == "synthetic-od":
            if self.sensor not in ("radar", "radec"):
                raise ConfigError(f"sensor.kind {self.sensor!r} not supported for orbits")
            if self.representation not in ("cart", "mee"):
                raise ConfigError("filter.representation must be cart or mee")
            path = self.gravity_path
            if not os.path.isfile(path):
                raise ConfigError(f"gravity.file not found: {path}")
        elif self.sensor != "azel":
            raise ConfigError("projectile scenarios use the azel sensor")

    @property
    def gravity_path(self):
        if not self.gravity_file or self.gravity_file == "bundled":
            return bundled_gravity_path()
        return self.gravity_file

    @property
    def is_orbit(self):
        return self.kind == "synthetic-od"


def load_config(path, overrides=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    d = parse_config(text, str(path))
    if overrides:
        d.update(overrides)
    gf = d.get("gravity.file")
    if isinstance(gf, str) and gf not in ("", "bundled") and not os.path.isabs(gf):
        d["gravity.file"] = os.path.normpath(os.path.join(os.path.dirname(os.path.abspath(path)), gf))
    return ScenarioConfig.from_dict(d)
