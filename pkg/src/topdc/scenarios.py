"""Named, parameterized runs of the contour, spectrum and count-rate calculations.

``ScenarioConfig.from_config`` turns a loaded config (interface units) into
SI objects. The run functions return plain data; ``write_*`` helpers emit
CSV with a header row and 9 significant digits.
"""

import csv
import io
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .config import axis, get
from .constants import default_constants
from .contour import (CONTOUR_CSV_HEADER, contour_csv_rows, orientation_scan, solve_contour)
from .dispersion import CrystalConfig, DispersionModel, Polarization
from .errors import ConfigInvalid, SeedMissing
from .geometry import BeamConfig, ModeSpec
from .rates import (BandQuadrature, ContourGrid, DetectionBand, broadband_rates, band_k_volume,
                    k_density, narrowband_rates, seed_field_sq, seeded_broadband_rates,
                    seeded_narrowband_rates, seeded_pair_density, singles_density,
                    _json_default)

_C = default_constants().c


def fmt(x):
    """Scientific notation with 9 significant digits."""
    return f"{float(x):.8e}"


def _strict(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 1 or a.size == 0 or np.any(np.diff(a) <= 0):
        raise ValueError(f"{name} must be a non-empty strictly increasing grid")
    return a


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario in SI units.

    ``bands`` holds the broadband band followed by the three narrowband
    bands. ``grids`` maps names to 1-D arrays in interface units (nm, deg).
    ``seeded_orientation`` is used by the seeded spectrum.
    """

    name: str
    pump: BeamConfig
    seed: BeamConfig = None
    crystal: CrystalConfig = field(default_factory=CrystalConfig)
    bands: tuple = ()
    grids: dict = field(default_factory=dict)
    seeded_orientation: float = np.radians(68.5)
    contour_grid: ContourGrid = ContourGrid()
    quadrature: BandQuadrature = BandQuadrature()
    echo: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.grids.items():
            if np.ndim(v) == 1:
                _strict(v, k)

    @property
    def broadband_bands(self):
        return (self.bands[0],) * 3

    @property
    def narrowband_bands(self):
        return tuple(self.bands[1:4])

    @property
    def seeded_pump(self):
        """Pump pulsed at the seed duty cycle for seeded runs."""
        if self.seed is None:
            raise SeedMissing(f"scenario {self.name!r} has no seed")
        return replace(self.pump, duty_cycle=self.seed.duty_cycle)

    @classmethod
    def from_config(cls, cfg, name="default"):
        """Build from a loaded config dictionary.

        Raises
        ------
        ConfigInvalid
        """
        try:
            pump = _beam(cfg, "pump")
            seed = _beam(cfg, "seed") if "seed" in cfg else None
            crystal = CrystalConfig(
                length_L=get(cfg, "crystal.length_mm") * 1e-3,
                orientation_theta_c=np.radians(get(cfg, "crystal.orientation_deg")),
                chi3_eff=get(cfg, "crystal.chi3_m2_per_V2"),
                disp_o=_dispersion(cfg, "ordinary"),
                disp_e=_dispersion(cfg, "extraordinary"),
                axis_model=get(cfg, "crystal.axis_model", str))
            bands = (_band(cfg, "bands.broadband"),) + tuple(
                _band(cfg, f"bands.narrowband.{d}") for d in ("d1", "d2", "d3"))
            g = cfg["grids"]
            grids = {k: axis(v, f"grids.{k}") for k, v in g.items()
                     if isinstance(v, (dict, list))}
            grids.update({k: float(v) for k, v in g.items() if not isinstance(v, (dict, list))})
            n = cfg["numerics"]
            cg = ContourGrid(np.radians(float(n["contour_theta_max_deg"])),
                             int(n["contour_n_theta"]), int(n["contour_n_omega"]),
                             tuple(int(x) for x in n["contour_coarse"]), str(n["jacobian"]))
            quad = BandQuadrature(int(n["omega_panels"]), int(n["omega_nodes"]),
                                  int(n["theta_scan"]), int(n["theta_nodes"]),
                                  int(n["bisect_steps"]))
            so = np.radians(get(cfg, "crystal.seeded_orientation_deg"))
        except ConfigInvalid:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"invalid configuration: {exc}") from None
        if cg.jacobian not in ("exact", "printed"):
            raise ConfigInvalid("numerics.jacobian must be 'exact' or 'printed'")
        return cls(name, pump, seed, crystal, bands, grids, so, cg, quad, cfg)


def _beam(cfg, key):
    return BeamConfig(get(cfg, f"{key}.wavelength_nm") * 1e-9,
                      get(cfg, f"{key}.power_mW") * 1e-3,
                      get(cfg, f"{key}.waist_um") * 1e-6,
                      get(cfg, f"{key}.duty_cycle"),
                      Polarization(get(cfg, f"{key}.polarization", str)))


def _dispersion(cfg, pol):
    d = cfg["crystal"][pol]
    lo, hi = (float(x) * 1e-9 for x in d["range_nm"])
    return DispersionModel(d["form"], tuple(d["coefficients"]), (lo, hi),
                           name=d.get("name", f"{pol} ({d['form']})"))


def _band(cfg, key):
    lam = [float(x) * 1e-9 for x in get(cfg, f"{key}.lambda_nm", list)]
    th = [np.radians(float(x)) for x in get(cfg, f"{key}.theta_deg", list)]
    if len(lam) != 2 or len(th) != 2 or not lam[0] < lam[1]:
        raise ConfigInvalid(f"{key} needs increasing lambda_nm and theta_deg pairs")
    return DetectionBand.from_wavelengths(lam[0], lam[1], th[0], th[1], get(cfg, f"{key}.eta"))


# --- results ------------------------------------------------------------------------

@dataclass
class SpectrumMap:
    """Differential rate densities on a (wavelength nm, signed angle deg) grid.

    ``values[i, j]`` is the density at ``axis1[i]``, ``axis2[j]`` in
    1/(s m^-3) per unit k-volume.
    """

    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis1 = _strict(self.axis1, "axis1")
        self.axis2 = _strict(self.axis2, "axis2")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.axis1.size, self.axis2.size):
            raise ValueError("values shape does not match the axes")
        if np.any(self.values < 0):
            raise ValueError("densities must be non-negative")

    def integrate(self, crystal, lambda_nm=None, theta_deg=None, constants=None):
        """Rate (1/s) over a window by trapezoid in omega and theta.

        The k-space measure is n^2 w^2 / (c^2 v) dw * pi |sin theta| dtheta.
        The window defaults to the whole map and is applied by masking
        grid nodes.
        """
        c = _C if constants is None else constants.c
        lam = self.axis1 * 1e-9
        th = np.radians(self.axis2)
        keep_l = np.ones(lam.size, bool) if lambda_nm is None else \
            (self.axis1 >= lambda_nm[0] - 1e-9) & (self.axis1 <= lambda_nm[1] + 1e-9)
        keep_t = np.ones(th.size, bool) if theta_deg is None else \
            (self.axis2 >= theta_deg[0] - 1e-12) & (self.axis2 <= theta_deg[1] + 1e-12)
        w = (2 * np.pi * c / lam)[keep_l][::-1]
        t = th[keep_t]
        v = self.values[np.ix_(keep_l, keep_t)][::-1]
        meas = k_density(crystal, w[:, None], t[None, :], constants) * np.pi * np.abs(np.sin(t))
        inner = np.trapezoid(v * meas, t, axis=1)
        return float(np.trapezoid(inner, w))

    def support_fraction(self, rel_threshold=1e-3):
        """Fraction of cells above ``rel_threshold`` times the maximum."""
        m = self.values.max()
        if m == 0:
            return 0.0
        return float(np.mean(self.values > rel_threshold * m))

    def csv_rows(self):
        for i, l in enumerate(self.axis1):
            for j, t in enumerate(self.axis2):
                yield (l, t, self.values[i, j])


SPECTRUM_CSV_HEADER = ("lambda_nm", "theta_deg", "density")


@dataclass
class OrientationResult:
    theta_c_deg: np.ndarray
    density: np.ndarray
    argmax_deg: float
    metadata: dict = field(default_factory=dict)

    def csv_rows(self):
        return zip(self.theta_c_deg, self.density)


ORIENTATION_CSV_HEADER = ("theta_c_deg", "singles_density")


@dataclass
class RateTable:
    """Raw and detected reports for both regimes plus enhancement ratios."""

    reports: dict
    enhancements: dict
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {"reports": {k: v.to_dict() for k, v in self.reports.items()},
                "enhancements": self.enhancements, "metadata": self.metadata}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default)


# --- runs -----------------------------------------------------------------------------

def run_contour(config, orientations_deg=None):
    """Mode-2 contours at fixed mode 3 for each orientation.

    Returns a list of (orientation_deg, ContourResult).
    """
    g = config.grids
    mode3 = ModeSpec.in_plane(2 * np.pi * _C / (g["contour_lambda3_nm"] * 1e-9),
                              np.radians(g["contour_theta3_deg"]))
    th2 = np.radians(g["contour_theta2_deg"])
    ors = g["contour_orientations_deg"] if orientations_deg is None else orientations_deg
    out = []
    for o in np.atleast_1d(ors):
        cr = config.crystal.with_orientation(np.radians(o))
        out.append((float(o), solve_contour(mode3, config.pump, cr, th2,
                                            n_omega=config.contour_grid.n_omega)))
    return out


def run_orientation_scan(config):
    """Singles density of the fixed mode 3 versus orientation."""
    g = config.grids
    mode3 = ModeSpec.in_plane(2 * np.pi * _C / (g["contour_lambda3_nm"] * 1e-9),
                              np.radians(g["contour_theta3_deg"]))
    grid = g["orientation_deg"]
    if np.any((grid < 0) | (grid > 90)):
        raise ConfigInvalid("orientation grid must lie in [0, 90] deg")
    sc = orientation_scan(config.pump, mode3, config.crystal, np.radians(grid),
                          grid=config.contour_grid)
    return OrientationResult(np.degrees(sc.theta_c), sc.density, float(np.degrees(sc.argmax)),
                             config.echo)


def run_unseeded_spectrum(config, lambda_nm=None, theta_deg=None):
    """singles_density of mode 3 on the spectrum grid.

    Only non-negative angles are evaluated when the angle grid is
    symmetric; the azimuthally symmetric model mirrors them.
    """
    lam = config.grids["spectrum_lambda_nm"] if lambda_nm is None else _strict(lambda_nm, "lambda")
    th = config.grids["spectrum_theta_deg"] if theta_deg is None else _strict(theta_deg, "theta")
    vals = np.zeros((lam.size, th.size))
    mirror = np.allclose(th, -th[::-1], rtol=0, atol=1e-12)
    n = th.size
    cols = np.arange(n // 2, n) if mirror else np.arange(n)
    lo, hi = config.crystal.omega_window
    for i, l in enumerate(lam):
        w = 2 * np.pi * _C / (l * 1e-9)
        if not lo <= w <= hi:
            continue
        for j in cols:
            t = np.radians(th[j])
            vals[i, j] = singles_density(ModeSpec.in_plane(w, t), config.pump, config.crystal,
                                         grid=config.contour_grid, signed_theta3=t)
    if mirror:
        vals[:, :n // 2] = vals[:, n - 1:(n - 1) // 2:-1]
    return SpectrumMap(lam, th, vals, config.echo)


def run_seeded_spectrum(config, lambda_nm=None, theta_deg=None):
    """seeded_pair_density of mode 2 on the seeded spectrum grid at the seeded orientation."""
    if config.seed is None:
        raise SeedMissing(f"scenario {config.name!r} has no seed")
    lam = config.grids["seeded_spectrum_lambda_nm"] if lambda_nm is None else \
        _strict(lambda_nm, "lambda")
    th = config.grids["seeded_spectrum_theta_deg"] if theta_deg is None else \
        _strict(theta_deg, "theta")
    cr = config.crystal.with_orientation(config.seeded_orientation)
    lo, hi = cr.omega_window
    w = 2 * np.pi * _C / (lam * 1e-9)
    ok = (w >= lo) & (w <= hi)
    vals = np.zeros((lam.size, th.size))
    if np.any(ok):
        W, T = np.meshgrid(w[ok], np.radians(th), indexing="ij")
        vals[ok] = seeded_pair_density((W, T), config.seed, config.seeded_pump, cr)
    return SpectrumMap(lam, th, vals, config.echo)


def run_count_rate_table(config):
    """Broadband and narrowband rates, unseeded and seeded, raw and detected.

    Unseeded runs use the configured pump; seeded runs pulse the pump at
    the seed duty cycle. Enhancements are seeded over unseeded detected
    rates for singles and doubles.
    """
    bb = config.broadband_bands
    nb = config.narrowband_bands
    seeded_pump = config.seeded_pump
    reports = {
        "broadband_unseeded": broadband_rates(bb, config.pump, config.crystal,
                                              grid=config.contour_grid, quad=config.quadrature),
        "broadband_seeded": seeded_broadband_rates(bb[:2], config.seed, seeded_pump,
                                                   config.crystal, grid=config.contour_grid),
        "narrowband_unseeded": narrowband_rates(nb, config.pump, config.crystal,
                                                grid=config.contour_grid),
        "narrowband_seeded": seeded_narrowband_rates(nb[:2], config.seed, seeded_pump,
                                                     config.crystal),
    }
    bands = {"broadband": bb, "narrowband": nb}
    for k in list(reports):
        reports[k + "_detected"] = reports[k].detected(bands[k.split("_")[0]])
    enh = {}
    for regime in ("broadband", "narrowband"):
        s, u = reports[f"{regime}_seeded_detected"], reports[f"{regime}_unseeded_detected"]
        enh[f"{regime}_singles"] = s.singles_hz / u.singles_hz if u.singles_hz > 0 else None
        enh[f"{regime}_doubles"] = s.doubles_hz / u.doubles_hz if u.doubles_hz > 0 else None
    enh["seed_field_sq_V2_per_m2"] = seed_field_sq(config.seed, config.crystal).value_sq
    return RateTable(reports, enh, config.echo)


# --- writers --------------------------------------------------------------------------

def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def contour_csv_text(results):
    rows = []
    for o, res in results:
        rows.extend((o,) + tuple(r) for r in contour_csv_rows(res))
    return csv_text(("orientation_deg",) + CONTOUR_CSV_HEADER, rows)


def metadata_json(meta):
    return json.dumps(meta, sort_keys=True, indent=2, default=_json_default)
