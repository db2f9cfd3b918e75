"""Clock Drawing Test scoring for vector drawings, plus a model-evaluation harness."""

from .errors import (
    AmbiguousHands,
    AuthMissing,
    ClockError,
    ConfigInvalid,
    DegenerateInput,
    EmptyDrawing,
    EmptyResults,
    InvalidDefect,
    MalformedDocument,
    MissingHands,
    NoDrawingFound,
    OutOfRange,
    RangeViolation,
    TransportFailure,
    UnsupportedCommand,
)
from .estimators import ClockDrawingScorer, ClockReader
from .genlab import DefectSpec, GeneratedClock, render_clock, render_reading_stimulus
from .geometry import ClockFeatures, GeometryConfig, extract_features, fit_conic
from .reader import Interpretation, ReadingErrorClass, TimeReading, classify_reading, read_time
from .report import ResultRow, emit_json, emit_table, parse_json
from .rubric import ItemScores, QualFlags, RubricConfig, ScoreReport, score_document, score_drawing
from .scene import Primitive, PrimitiveKind, Scene, flatten_path, parse_drawing

__version__ = "0.1.0"

__all__ = [
    "AmbiguousHands", "AuthMissing", "ClockError", "ConfigInvalid", "DegenerateInput",
    "EmptyDrawing", "EmptyResults", "InvalidDefect", "MalformedDocument", "MissingHands",
    "NoDrawingFound", "OutOfRange", "RangeViolation", "TransportFailure", "UnsupportedCommand",
    "ClockDrawingScorer", "ClockReader",
    "DefectSpec", "GeneratedClock", "render_clock", "render_reading_stimulus",
    "ClockFeatures", "GeometryConfig", "extract_features", "fit_conic",
    "Interpretation", "ReadingErrorClass", "TimeReading", "classify_reading", "read_time",
    "ResultRow", "emit_json", "emit_table", "parse_json",
    "ItemScores", "QualFlags", "RubricConfig", "ScoreReport", "score_document", "score_drawing",
    "Primitive", "PrimitiveKind", "Scene", "flatten_path", "parse_drawing",
]
