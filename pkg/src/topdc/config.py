"""TOML configuration with interface units (nm, degrees, mW) and overrides.

A config file only needs the keys it changes; everything else falls back
to ``DEFAULT_TOML``. Overrides are ``dotted.key=value`` strings whose
value is parsed as a TOML literal (bare words become strings). The
environment variable ``TOPDC_CONFIG`` names the config file used when
none is given.
"""

import copy
import os
import sys

import numpy as np

from .errors import ConfigInvalid

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

ENV_VAR = "TOPDC_CONFIG"

DEFAULT_TOML = """\
[pump]
wavelength_nm = 532.0
power_mW = 100.0
waist_um = 100.0
duty_cycle = 1.0
polarization = "ordinary"

[seed]
wavelength_nm = 1620.0
power_mW = 10.0
waist_um = 100.0
duty_cycle = 2e-8
polarization = "extraordinary"

[crystal]
length_mm = 5.0
orientation_deg = 68.24
seeded_orientation_deg = 68.5
chi3_m2_per_V2 = 2.1e-20
axis_model = "azimuthal_mean"

[crystal.ordinary]
form = "sellmeier_one_pole"
coefficients = [5.913, 0.2441, 0.0803]
range_nm = [430.0, 3000.0]

[crystal.extraordinary]
form = "sellmeier_one_pole"
coefficients = [7.197, 0.3322, 0.0843]
range_nm = [430.0, 3000.0]

[bands.broadband]
lambda_nm = [1200.0, 1600.0]
theta_deg = [-10.0, 10.0]
eta = 0.15

[bands.narrowband.d1]
lambda_nm = [1579.0, 1589.0]
theta_deg = [-0.25, 0.25]
eta = 0.8

[bands.narrowband.d2]
lambda_nm = [1579.0, 1589.0]
theta_deg = [-0.25, 0.25]
eta = 0.8

[bands.narrowband.d3]
lambda_nm = [1615.0, 1625.0]
theta_deg = [-0.25, 0.25]
eta = 0.8

[grids]
orientation_deg = {start = 60.0, stop = 80.0, step = 0.1}
contour_orientations_deg = [67.5, 68.24, 69.0]
contour_theta2_deg = {start = -30.0, stop = 30.0, step = 0.25}
contour_lambda3_nm = 1596.0
contour_theta3_deg = 0.0
spectrum_lambda_nm = {start = 1200.0, stop = 2000.0, step = 10.0}
spectrum_theta_deg = {start = -6.0, stop = 6.0, step = 0.1}
seeded_spectrum_lambda_nm = {start = 1200.0, stop = 2000.0, step = 10.0}
seeded_spectrum_theta_deg = {start = -6.0, stop = 6.0, step = 0.1}

[numerics]
contour_theta_max_deg = 30.0
contour_n_theta = 121
contour_n_omega = 181
contour_coarse = [61, 121]
jacobian = "exact"
omega_panels = 4
omega_nodes = 6
theta_scan = 21
theta_nodes = 16
bisect_steps = 14
"""


def default_config():
    return tomllib.loads(DEFAULT_TOML)


def _merge(base, extra, path=""):
    for k, v in extra.items():
        where = f"{path}.{k}" if path else k
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _merge(base[k], v, where)
        else:
            base[k] = v
    return base


def parse_override(text):
    """Split ``a.b=value`` into (["a", "b"], parsed value)."""
    if "=" not in text:
        raise ConfigInvalid(f"override {text!r} is not key=value")
    key, raw = text.split("=", 1)
    keys = [k.strip() for k in key.strip().split(".")]
    if not all(keys):
        raise ConfigInvalid(f"override {text!r} has an empty key")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return keys, value


def apply_overrides(cfg, overrides):
    cfg = copy.deepcopy(cfg)
    for text in overrides:
        keys, value = parse_override(text)
        node = cfg
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigInvalid(f"override {text!r} descends into a non-table value")
        node[keys[-1]] = value
    return cfg


def load_config(path=None, overrides=(), environ=None):
    """Defaults, then the config file, then overrides.

    ``path`` falls back to the ``TOPDC_CONFIG`` environment variable.

    Raises
    ------
    ConfigInvalid
    """
    env = os.environ if environ is None else environ
    path = path or env.get(ENV_VAR) or None
    cfg = default_config()
    if path is not None:
        try:
            with open(path, "rb") as fh:
                user = tomllib.load(fh)
        except OSError as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc.strerror}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigInvalid(f"cannot parse config {path}: {exc}") from None
        _merge(cfg, user)
    return apply_overrides(cfg, overrides)


def axis(spec, name="grid"):
    """Grid from a list or a {start, stop, step} table; must be strictly increasing."""
    if isinstance(spec, dict):
        try:
            start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
        except (KeyError, TypeError, ValueError):
            raise ConfigInvalid(f"{name} needs numeric start, stop and step") from None
        if not step > 0 or stop < start:
            raise ConfigInvalid(f"{name} needs step > 0 and stop >= start")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        values = start + step * np.arange(n)
    else:
        try:
            values = np.atleast_1d(np.asarray(spec, dtype=float))
        except (TypeError, ValueError):
            raise ConfigInvalid(f"{name} must be numeric") from None
    if values.ndim != 1 or values.size == 0 or np.any(np.diff(values) <= 0):
        raise ConfigInvalid(f"{name} must be a non-empty strictly increasing grid")
    return values


def get(cfg, dotted, kind=float):
    node = cfg
    for k in dotted.split("."):
        if not isinstance(node, dict) or k not in node:
            raise ConfigInvalid(f"missing config key {dotted}")
        node = node[k]
    try:
        return kind(node)
    except (TypeError, ValueError):
        raise ConfigInvalid(f"config key {dotted} has invalid value {node!r}") from None
