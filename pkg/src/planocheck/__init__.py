"""Template-free planogram compliance checking on feature scenes."""
from .errors import (EmptyDetection, FormatError, NumericalError, ParseError,
                     PlanocheckError, SchemaError, SpecError)
from .pipeline import CheckResult, Config, run_check
from .planogram import Planogram, build_planogram, expected_layout, load_planogram, parse_planogram
from .scene import FeatureScene, SynthSpec, load_scene, synthesize

__version__ = "0.1.0"

__all__ = [
    "CheckResult", "Config", "EmptyDetection", "FeatureScene", "FormatError", "NumericalError",
    "ParseError", "Planogram", "PlanocheckError", "SchemaError", "SpecError", "SynthSpec",
    "build_planogram", "expected_layout", "load_planogram", "load_scene", "parse_planogram",
    "run_check", "synthesize",
]
