"""Exception hierarchy.

Every error raised by the library derives from :class:`MBVLGCError`, which is
itself a ``ValueError`` so callers that only care about bad input can catch
the builtin.
"""


class MBVLGCError(ValueError):
    pass


class InsufficientData(MBVLGCError):
    pass


class DegenerateSignal(MBVLGCError):
    pass


class InvalidLag(MBVLGCError):
    pass


class InvalidArgument(MBVLGCError):
    pass


class InvalidBand(MBVLGCError):
    pass


class NyquistViolation(InvalidBand):
    pass


class InvalidBandConfig(MBVLGCError):
    pass


class InfeasibleWindow(MBVLGCError):
    pass


class SingularDesign(MBVLGCError):
    pass


class NotNested(MBVLGCError):
    pass


class DegenerateBIC(MBVLGCError):
    pass


class InvalidPValue(MBVLGCError):
    pass


class NoValidBands(MBVLGCError):
    pass


class InputMismatch(MBVLGCError):
    pass


class PipelineFailure(MBVLGCError):
    pass


class NoRecords(MBVLGCError):
    pass
