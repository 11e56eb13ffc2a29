"""Exception types shared across the pipeline."""


class DrowsekitError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(DrowsekitError, ValueError):
    """A configuration or call parameter is out of its documented range."""


class InvalidQueryError(DrowsekitError, ValueError):
    """A lookup was made outside the domain of the queried object."""


class InvalidLabelError(DrowsekitError, ValueError):
    """A KSS value or class label is outside its legal range."""


class DegenerateBlinkError(DrowsekitError):
    """A detected blink cannot produce well-formed descriptors."""


class BaselineUnavailableError(DrowsekitError):
    """No feature window lies fully inside the baseline period."""


class ScalingUnavailableError(DrowsekitError):
    """Too few awake training samples to fit scaling statistics."""


class CannotSplitError(DrowsekitError):
    """The dataset does not contain enough sessions to cross-validate."""


class EvaluationError(DrowsekitError):
    """A subset evaluation could not produce a score on any fold."""


class InvalidModelError(DrowsekitError, ValueError):
    """A model was constructed with inconsistent arguments."""
