"""Head-free gaze event detection and evaluation toolkit."""

from .core import (CollapsedClass, Event, GazeClass, GazeSample, LabelSequence,
                   Recording, collapse_labels, events_from_labels,
                   labels_from_events)
from .signal import FilterConfig, VelocityTrace, make_velocity_trace
from .geometry import RigAlignment, gaze_in_world
from .cleaning import CleaningConfig, clean_labels
from .metrics import ElcConfig, ElcReport, elc_match, sample_scores
from .synth import ScenarioConfig, generate

__version__ = "0.1.0"

__all__ = [
    "CollapsedClass", "Event", "GazeClass", "GazeSample", "LabelSequence",
    "Recording", "collapse_labels", "events_from_labels", "labels_from_events",
    "FilterConfig", "VelocityTrace", "make_velocity_trace",
    "RigAlignment", "gaze_in_world",
    "CleaningConfig", "clean_labels",
    "ElcConfig", "ElcReport", "elc_match", "sample_scores",
    "ScenarioConfig", "generate",
    "__version__",
]
