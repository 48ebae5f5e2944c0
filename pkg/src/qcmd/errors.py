"""Exception types shared across the package.

Every abort condition raised by the numerical modules derives from
:class:`QcmdError`, so callers (in particular the CLI) can distinguish
"bad configuration" from "run aborted" without string matching.
"""


class QcmdError(Exception):
    """Base class for all package errors."""


class ConfigError(QcmdError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


# --- potential -------------------------------------------------------------

class SingularPoint(QcmdError):
    """Evaluation requested at (or within the guard radius of) the singular set."""


class NonDifferentiable(QcmdError):
    """Gradient requested where the smooth surface is not C^1 (cone apex)."""


# --- quantum ---------------------------------------------------------------

class GridTooCoarse(QcmdError):
    """Grid spacing cannot resolve the packet's oscillation."""


class PacketClipped(QcmdError):
    """Packet support reaches too close to the box boundary."""


class TimestepTooLarge(QcmdError):
    """dt exceeds the stability/accuracy budget (dt <= c_t * eps)."""


class SingularGridPoint(QcmdError):
    """A grid node lies within the guard radius of the singular set."""


class BoundaryContamination(QcmdError):
    """More than the tolerated mass entered the outer shell of the box."""


# --- wigner ----------------------------------------------------------------

class DimensionTooHigh(QcmdError):
    """Full-grid phase-space transform requested for d > 2."""


class QuadratureWindowExceedsBox(QcmdError):
    """Probe correlation window (eps * Y / 2) does not fit in the box."""


class SupportTouchesSingularSet(QcmdError):
    """Probe support overlaps the singular set or a non-C^1 point."""


# --- classical -------------------------------------------------------------

class SingularApproach(QcmdError):
    """A trajectory entered the guard radius of the singular set."""

    def __init__(self, index, position, time, message=None):
        self.index = index
        self.position = position
        self.time = time
        super().__init__(
            message or f"particle {index} entered guard radius at t={time:.6g}"
        )


class SupportViolation(QcmdError):
    """Test-function support incompatible with the trajectory/time window."""


# --- estimates -------------------------------------------------------------

class DeltaBelowResolution(QcmdError):
    """Requested delta is below what the grid resolves (delta <= 2h)."""


# --- convergence / persistence ---------------------------------------------

class DegenerateFit(QcmdError):
    """Not enough usable points for a rate fit."""


class SchemaVersionMismatch(QcmdError):
    """Persisted file written under a different schema version."""


class CorruptFile(QcmdError):
    """Persisted file failed its checksum."""
