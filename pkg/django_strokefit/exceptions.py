from django.core.management import CommandError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


class StrokefitException(Exception):
    """A generic exception for all others to extend."""
    exit_code = EXIT_VALIDATION
    message = ""

    def __init__(self, *args):
        if not args and self.message:
            args = (self.message,)
        super(StrokefitException, self).__init__(*args)


class StrokefitCommandError(CommandError):
    """A generic command error for others to extend."""


"""
Validation errors: bad inputs, exit code 1
"""


class InvalidStrokeError(StrokefitException):
    """
    Raised when a stroke does not have exactly four finite control points,
    a color in [0, 1] per channel, or a width in (0, 1].
    """


class InvalidCanvasError(StrokefitException):
    """
    Raised when a canvas has a non-positive size, a channel count
    other than 1 or 3, or an unknown topology.
    """


class InvalidImageError(StrokefitException):
    """
    Raised when image pixels are not finite values in [0, 1]
    or do not match the canvas dimensions.
    """


class ShapeMismatchError(StrokefitException):
    """
    Raised when two arrays or stroke sets that must agree in shape do not,
    e.g. a saliency map that is not the size of its image.
    """


class CanvasMismatchError(StrokefitException):
    """
    Raised when a stroke set and a canvas disagree on the number of color channels.
    """


class InvalidConfigError(StrokefitException):
    """
    Raised when a configuration value is outside its valid range,
    for example a non-positive beta for color adjustment.
    """


class InvalidAffineMapError(StrokefitException):
    """
    Raised when an affine map has a singular or non-finite linear part.
    """
    message = "The linear part of an affine map must be finite and invertible."


class InvalidCostMatrixError(StrokefitException):
    """
    Raised when an assignment cost matrix is not square, finite and nonnegative.
    """


class SchemaValidationError(StrokefitException):
    """
    Raised when a strokes.json or trace.json document does not follow its schema.
    The offending field is given as a path such as ``strokes[2].color[0]``.
    """

    def __init__(self, path, problem):
        self.path = path
        self.problem = problem
        super(SchemaValidationError, self).__init__("{}: {}".format(path or "<document>", problem))


class TraceVersionMismatch(SchemaValidationError):
    """
    Raised when a serialized document carries a version this code cannot read.
    """


class ImageReadError(StrokefitException):
    """
    Raised when a raster file cannot be read as an 8-bit grayscale or RGB image.
    """


"""
Numerical errors: exit code 2
"""


class NonFiniteLossError(StrokefitException):
    """
    Raised when the optimization loss or its gradient becomes NaN or infinite.
    """
    exit_code = EXIT_NUMERICAL

    def __init__(self, step, loss):
        self.step = step
        self.loss = loss
        super(NonFiniteLossError, self).__init__(
            "Non-finite loss {!r} at optimization step {}".format(loss, step))


class PropertyCheckFailed(StrokefitException):
    """
    Raised by ./manage.py strokefit_verify when at least one property does not hold.
    """
    exit_code = EXIT_NUMERICAL
    message = "One or more properties failed; see report.json for measured values."


class FirstMigrationNotRunError(StrokefitException):
    """
    Raised if the run ledger is queried before the app's initial migration has been run
    """
    message = "Please run ./manage.py migrate before listing strokefit runs."
