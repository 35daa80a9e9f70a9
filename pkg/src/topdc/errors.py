"""Exception types shared across the package.

Every error carries a stable ``code`` string so that the command-line
front-end can render a machine-readable error record.
"""


class TopdcError(Exception):
    """Base class for all package errors."""

    code = "TopdcError"

    def record(self):
        return {"error": self.code, "message": str(self)}


class OutOfValidityRange(TopdcError):
    """Dispersion data evaluated outside its tabulated wavelength window."""

    code = "OutOfValidityRange"


class QuadratureNotConverged(TopdcError):
    """Adaptive quadrature hit its depth limit before meeting tolerance."""

    code = "QuadratureNotConverged"


class NoRootInWindow(TopdcError):
    """No frequency inside the dispersion window closes the wavevector triangle."""

    code = "NoRootInWindow"


class BandsOffShell(TopdcError):
    """Band centres violate energy conservation beyond the smallest half-width."""

    code = "BandsOffShell"


class MismatchedCoupling(TopdcError):
    """A seeded coupling was passed where an unseeded one is required, or vice versa."""

    code = "MismatchedCoupling"


class SeedMissing(TopdcError):
    """A seeded calculation was requested without a seed beam."""

    code = "SeedMissing"


class ConfigInvalid(TopdcError):
    """Configuration file or override could not be parsed or validated."""

    code = "ConfigInvalid"
