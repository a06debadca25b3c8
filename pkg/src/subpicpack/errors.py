"""Exception hierarchy.

Every error carries a short upper-case ``code`` so the CLI can print a
machine-parsable ``error: CODE: message`` line.
"""

from __future__ import annotations


class SubpicPackError(Exception):
    code = "ERROR"


class OutOfBits(SubpicPackError):
    code = "OUT_OF_BITS"


class Malformed(SubpicPackError):
    code = "MALFORMED"


class InvalidLayout(SubpicPackError):
    code = "INVALID_LAYOUT"


class IdWidthMismatch(SubpicPackError):
    code = "ID_WIDTH_MISMATCH"


class CtuMismatch(SubpicPackError):
    code = "CTU_MISMATCH"


class IdCollision(SubpicPackError):
    code = "ID_COLLISION"


class FrameCountMismatch(SubpicPackError):
    code = "FRAME_COUNT_MISMATCH"


class PlanGeometryMismatch(SubpicPackError):
    code = "PLAN_GEOMETRY_MISMATCH"


class UnknownSubpicId(SubpicPackError):
    code = "UNKNOWN_SUBPIC_ID"


class DimensionMismatch(SubpicPackError):
    code = "DIMENSION_MISMATCH"


class EmptyComponent(SubpicPackError):
    code = "EMPTY_COMPONENT"


class MissingVps(SubpicPackError):
    code = "MISSING_VPS"


class TruncatedUnit(SubpicPackError):
    code = "TRUNCATED_UNIT"


class UnknownUnitType(SubpicPackError):
    code = "UNKNOWN_UNIT_TYPE"


class OddDimensions(SubpicPackError):
    code = "ODD_DIMENSIONS"


class PayloadCorrupt(SubpicPackError):
    code = "PAYLOAD_CORRUPT"


class MissingReference(SubpicPackError):
    code = "MISSING_REFERENCE"


class QpOutOfRange(SubpicPackError):
    code = "QP_OUT_OF_RANGE"


class UnknownSequence(SubpicPackError):
    code = "UNKNOWN_SEQUENCE"


class NoOverlap(SubpicPackError):
    code = "NO_OVERLAP"


class DegenerateCurve(SubpicPackError):
    code = "DEGENERATE_CURVE"


class EmptyInput(SubpicPackError):
    code = "EMPTY_INPUT"


class RoundTripFailure(SubpicPackError):
    code = "ROUND_TRIP_FAILURE"
