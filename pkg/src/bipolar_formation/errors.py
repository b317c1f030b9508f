"""Exception hierarchy shared by the package."""


class FormationError(Exception):
    """Base class for all errors raised by bipolar_formation."""


class GeometryError(FormationError):
    pass


class Collocated(GeometryError):
    """Two points that must be distinct are (numerically) at the same place."""


class NotUnit(GeometryError):
    pass


class FocalSingularity(GeometryError):
    """Bipolar denominator cosh(r) - cos(alpha) vanished."""


class DegenerateTriangle(GeometryError):
    pass


class GraphError(FormationError):
    pass


class InconsistentTriangle(GraphError):
    pass


class BadAngle(GraphError):
    pass


class PpcError(FormationError):
    pass


class OutOfBounds(PpcError):
    """A modulated error reached or crossed its performance bound.

    ``channel``, ``agent`` and ``t`` are filled in by the simulation layer
    when known so the diagnostic names exactly what failed.
    """

    def __init__(self, message, channel=None, agent=None, t=None, value=None):
        super().__init__(message)
        self.channel = channel
        self.agent = agent
        self.t = t
        self.value = value

    def __str__(self):
        parts = [super().__str__()]
        if self.channel is not None:
            parts.append(f"channel={self.channel}")
        if self.agent is not None:
            parts.append(f"agent={self.agent}")
        if self.t is not None:
            parts.append(f"t={self.t:.6g}")
        return " ".join(parts)


class InfeasibleInitialError(PpcError):
    pass


class ScenarioError(FormationError):
    """Scenario file or configuration failed validation."""
