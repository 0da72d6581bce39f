"""Exception hierarchy shared by every module.

Each error carries a module-qualified ``code`` string so the CLI can map
failures to stable identifiers in its JSON reports.
"""


class ContactLabError(Exception):
    code = "contactlab.error"


# --- expression language ---------------------------------------------------

class ExprSyntaxError(ContactLabError):
    """Malformed expression source; ``offset`` is the character position."""

    code = "exprlang.syntax"

    def __init__(self, offset, message):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
        self.message = message


class UnknownFunction(ContactLabError):
    code = "exprlang.unknown-function"


class UnboundVariable(ContactLabError):
    code = "exprlang.unbound-variable"


class DomainError(ContactLabError):
    """ln of a non-positive number, sqrt of a negative, division by zero,
    or a fractional power of a negative base."""

    code = "exprlang.domain"


class SchemaError(ContactLabError):
    code = "exprlang.schema"


# --- manifold / tensor -----------------------------------------------------

class DomainViolation(ContactLabError):
    """A point (or an FD stencil around it) violates a domain constraint."""

    code = "tensor.domain-violation"


class NotSPD(ContactLabError):
    code = "tensor.not-spd"


class DegeneratePlane(ContactLabError):
    code = "tensor.degenerate-plane"


# --- contact ---------------------------------------------------------------

class NotContactPoint(ContactLabError):
    """alpha wedge d(alpha) vanishes at the point (within tolerance)."""

    code = "contact.not-contact-point"


class NegativeOrientation(ContactLabError):
    """alpha wedge d(alpha) is negative for the coordinate orientation."""

    code = "contact.negative-orientation"

    def __init__(self, where):
        super().__init__(
            "negative contact orientation: reorder coordinates or negate "
            f"alpha (sampled at {where})"
        )


class NotInXi(ContactLabError):
    code = "contact.not-in-xi"


class ConsistencyError(ContactLabError):
    """Two independent computations of the same quantity disagree beyond
    the documented tolerance."""

    code = "contact.consistency"


# --- bounds ----------------------------------------------------------------

class RequiresCompatible(ContactLabError):
    code = "bounds.requires-compatible"


class InsufficientData(ContactLabError):
    code = "bounds.insufficient-data"


class OutOfRange(ContactLabError):
    code = "bounds.out-of-range"


# --- geodesic / foliation --------------------------------------------------

class LeftDomain(ContactLabError):
    code = "geodesic.left-domain"

    def __init__(self, t_exit):
        if isinstance(t_exit, str):
            super().__init__(t_exit)
            self.t_exit = None
        else:
            super().__init__(
                f"trajectory left the declared domain near t={t_exit:.6g}")
            self.t_exit = t_exit


class StiffRegion(ContactLabError):
    code = "foliation.stiff-region"


# --- levi ------------------------------------------------------------------

class DegenerateKernel(ContactLabError):
    code = "levi.degenerate-kernel"


# --- catalog ---------------------------------------------------------------

class UnknownEntry(ContactLabError):
    code = "catalog.unknown-entry"
