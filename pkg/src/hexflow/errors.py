"""Exception hierarchy shared by the hexflow modules."""


class HexflowError(Exception):
    """Base class for all library errors."""


class InvalidHexagon(HexflowError, ValueError):
    """Raised when side distances do not describe a convex Wulff-like hexagon."""


class EmptyDiscretization(HexflowError):
    """No lattice cell fits inside the requested hexagon."""


class UndefinedDistance(HexflowError):
    """The discrete distance needs a nonempty set with nonempty complement."""


class SideVanished(HexflowError):
    """A minimizing-movement step would push a side length to zero or below."""

    def __init__(self, side: int, length: float):
        self.side = side
        self.length = length
        super().__init__(f"side {side} vanishes (length {length:.6g})")


class SearchTruncated(HexflowError):
    """The brute-force minimizer sits on the border of the search box."""


class NonUniqueVelocity(HexflowError):
    """A side sits on an integer level of the quantized law for a time interval.

    ``interval`` holds the endpoints of the admissible normal velocity.
    """

    def __init__(self, side: int, t: float, ratio: float, interval: tuple[float, float]):
        self.side = side
        self.t = t
        self.ratio = ratio
        self.interval = interval
        super().__init__(
            f"side {side} is stuck at alpha*gamma/L = {ratio:.12g} from t = {t:.12g}; "
            f"velocity undetermined in [{interval[0]:.6g}, {interval[1]:.6g}]"
        )


class ConfigError(HexflowError, ValueError):
    """A scenario or run configuration failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class SchemaError(HexflowError, ValueError):
    """A trajectory or manifest file does not follow the expected schema."""
