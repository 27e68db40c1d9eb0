"""Exception hierarchy shared by all cambox modules."""


class CamboxError(Exception):
    """Base class for all cambox errors."""


class DegenerateMap(CamboxError):
    """Constant activation map; min == max so no affine normalization exists."""


class InvalidTau(CamboxError):
    """Threshold outside the open interval (0, 1)."""


class InvalidSize(CamboxError):
    """Requested resample size has a zero or negative dimension."""


class UnknownClass(CamboxError):
    """Class id has no entries in the stack."""


class EmptyComponent(CamboxError):
    """Component with no pixels or zero total weight."""


class DegenerateBox(CamboxError):
    """Box whose intersection with the image extent has zero area."""


class ZeroArea(CamboxError):
    """IoU requested for a box with non-positive area."""


class CambFormatError(CamboxError):
    """Malformed CAMB container."""


class BadMagic(CambFormatError):
    pass


class BadVersion(CambFormatError):
    pass


class TruncatedPayload(CambFormatError):
    """Payload length disagrees with the declared dimensions."""


class NonFiniteValue(CambFormatError):
    """NaN or Inf value inside a stored map."""


class MalformedLine(CamboxError):
    """Manifest line that is not a valid metadata object."""


class DuplicateImageId(CamboxError):
    pass


class SchemaError(CamboxError):
    """Annotation JSON violating the schema; message carries the JSON path."""


class SpecOutOfBounds(CamboxError):
    """Synthetic instance does not fit inside its image."""
