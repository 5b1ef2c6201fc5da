"""Exception types shared across the package."""


class DocforgeError(Exception):
    """Base class for all package errors."""


class MalformedStream(DocforgeError):
    """JPEG bitstream violates the baseline marker/segment grammar."""


class UnsupportedFormat(DocforgeError):
    """Well-formed JPEG, but a mode we do not decode (progressive, 12-bit,
    arithmetic coding). Callers may fall back to recomputing coefficients
    from externally decoded pixels."""


class ShapeError(DocforgeError):
    """Array dimensions violate an operation's contract."""


class DegenerateOutput(DocforgeError):
    """A geometric transform would produce an unusably small image."""


class RangeError(DocforgeError):
    """Parameter outside its legal range."""


class SpecError(DocforgeError):
    """Infeasible layout or configuration."""


class NoTextRegion(DocforgeError):
    """Tamper op needs a text region but the document has none that fits."""


class DonorMissing(DocforgeError):
    """Splice requested without a donor document."""


class EmptyDataset(DocforgeError):
    """Evaluation invoked on an empty manifest or split."""


class NonFiniteLoss(DocforgeError):
    """A loss term went NaN/Inf; the optimization step must be aborted."""


class MissingRegion(DocforgeError):
    """A probe needs a region (e.g. tampered text) the sample lacks."""
