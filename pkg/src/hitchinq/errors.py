"""Exception hierarchy.

Validation problems subclass ``ValueError``; numerical failures subclass
``RuntimeError``.  The CLI maps the first family to exit code 2 and the
second to exit code 3.
"""


class HitchinqError(Exception):
    pass


class ValidationError(HitchinqError, ValueError):
    pass


class NumericalError(HitchinqError, RuntimeError):
    pass


class ClearanceError(NumericalError):
    """A path comes too close to a puncture."""


class StepUnderflowError(NumericalError):
    """The adaptive integrator could not make progress."""


class DegenerateLocusError(NumericalError):
    """Trace data lies on a locus where Fenchel-Nielsen coordinates break down."""


class OffSurfaceError(NumericalError):
    """Trace coordinates do not satisfy the character-variety relation."""


class ConvergenceError(NumericalError):
    pass


class BranchTrackingError(NumericalError):
    pass
