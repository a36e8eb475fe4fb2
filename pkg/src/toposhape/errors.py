"""Exception hierarchy shared by all modules."""


class ToposhapeError(Exception):
    """Base class for every error raised by the package."""


class OutOfBounds(ToposhapeError, ValueError):
    """A query point lies outside the region where the operation is defined."""


class LengthMismatch(ToposhapeError, ValueError):
    pass


class EmptyContour(ToposhapeError):
    """The level set function has a uniform sign, so there is no boundary."""


class NoBracket(ToposhapeError):
    """No constant shift within the allowed range reaches the target area."""


class StuckInfeasible(ToposhapeError):
    """Step halving could not restore barrier feasibility."""

    GUIDANCE = "increase epsilon or decrease the grid size, and restart the algorithm"

    def __init__(self, message: str):
        super().__init__(f"{message}; {self.GUIDANCE}")


class ShapesOverlap(ToposhapeError, ValueError):
    pass


class TooCloseToBorder(ToposhapeError, ValueError):
    pass


class UnknownPreset(ToposhapeError, KeyError):
    pass


class ConfigError(ToposhapeError, ValueError):
    pass
