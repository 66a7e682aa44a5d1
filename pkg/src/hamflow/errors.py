"""Exception hierarchy shared by all hamflow modules."""

from __future__ import annotations


class HamflowError(Exception):
    """Base class for every error raised by the library."""


class ExprSyntaxError(HamflowError, SyntaxError):
    """Malformed expression text.

    ``offset`` is the byte offset (UTF-8) of the offending token.
    """

    def __init__(self, message: str, text: str, offset: int):
        super().__init__(message)
        self.msg = message
        self.text = text
        self.offset = offset

    def __str__(self) -> str:
        return f"{self.msg} at byte {self.offset}"


class EvalDomainError(HamflowError, ArithmeticError):
    """Evaluation hit a pole, a log of a non-positive number, etc."""

    def __init__(self, reason: str, subexpr: str | None = None, point=None):
        self.reason = reason
        self.subexpr = subexpr
        self.point = point
        where = f" in `{subexpr}`" if subexpr else ""
        at = f" at {tuple(point)}" if point is not None else ""
        super().__init__(f"{reason}{where}{at}")


class DegreeError(HamflowError, ValueError):
    pass


class FrameError(HamflowError):
    """The Frenet-Serret frame is undefined at a point."""

    def __init__(self, message: str, point=None):
        self.point = None if point is None else tuple(float(c) for c in point)
        super().__init__(message)


class EquilibriumError(FrameError):
    pass


class CurlEigenvectorError(FrameError):
    pass


class FrameLost(FrameError):
    """Frame degeneracy met in the middle of a path integration."""

    def __init__(self, message: str, point=None, arclength: float | None = None):
        self.arclength = arclength
        super().__init__(message, point)


class NotIntegrable(HamflowError):
    pass


class PencilSingular(HamflowError):
    pass


class NotClosed(HamflowError):
    pass


class DegenerateIntegrand(HamflowError):
    """The homotopy integrand vanishes identically along the ray family.

    ``max_integrand`` is the largest ``|x . w(x)|`` over the probe points,
    ``max_along_rays`` the largest value over all quadrature nodes.
    """

    def __init__(self, message: str, max_integrand: float, max_along_rays: float | None = None):
        self.max_integrand = max_integrand
        self.max_along_rays = max_integrand if max_along_rays is None else max_along_rays
        super().__init__(message)


class ObstructionGodbillonVey(HamflowError):
    """The integrating factor is not closed, so no global potential exists.

    ``dxi`` and ``xi_wedge_dxi`` hold the sampled obstruction values.
    """

    def __init__(self, message: str, dxi=None, xi_wedge_dxi=None, points=None):
        self.dxi = dxi
        self.xi_wedge_dxi = xi_wedge_dxi
        self.points = points
        super().__init__(message)


class StepFailure(HamflowError):
    pass


class SingularityHit(HamflowError):
    pass


class SingularityOnPath(HamflowError):
    pass


class DenominatorZero(HamflowError, ZeroDivisionError):
    pass


class SpecError(HamflowError, ValueError):
    """Invalid field-spec document; ``pointer`` is a JSON pointer."""

    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")
