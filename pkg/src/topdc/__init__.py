"""Emission rates of third-order parametric down-conversion in uniaxial crystals."""

__version__ = "0.1.0"

from .constants import PhysicalConstants, default_constants
from .contour import orientation_scan, solve_contour, solve_omega1
from .dispersion import (CrystalConfig, DispersionModel, Polarization, effective_index,
                         group_velocity, index, rutile_crystal)
from .errors import (BandsOffShell, ConfigInvalid, MismatchedCoupling, NoRootInWindow,
                     OutOfValidityRange, QuadratureNotConverged, SeedMissing, TopdcError)
from .geometry import (BeamConfig, ModeSpec, WaveVector, mismatch, mode_to_wavevector,
                       pm_intensity, pm_norm_integral, seeded_pm_intensity)
from .rates import (DetectionBand, RateReport, broadband_rates, narrowband_rates,
                    narrowband_vacuum_field, seed_field_sq, seeded_broadband_rates,
                    seeded_narrowband_rates, seeded_pair_density, singles_density)
