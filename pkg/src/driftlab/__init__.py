"""Concept drift detection workbench.

Classical change detectors, a meta-learned drift-type classifier built
on windowed error-rate features, an entropy-gated active labeling loop,
and a prequential benchmark harness tying them together.
"""

from .active import (ActiveConfig, Alarm, DetectionLoop, DriftEvent,
                     GroundTruthOracle, LabelQuery, LabelQueue,
                     run_active_detection)
from .detectors import DETECTOR_NAMES, Detector, make_detector, run_detector
from .features import (MetaSample, StreamingView, WindowSpec, gaps,
                       make_meta_sample, window_means)
from .naive_bayes import GaussianNaiveBayes, prequential_run
from .proto import MetaDetector, TrainConfig, TrainReport, train_meta_detector
from .streams import (DriftKind, DriftSpec, Sample, generate_drifting_stream,
                      simulate_error_trace)

__version__ = "0.1.0"

__all__ = [
    "ActiveConfig",
    "Alarm",
    "DETECTOR_NAMES",
    "DetectionLoop",
    "Detector",
    "DriftEvent",
    "DriftKind",
    "DriftSpec",
    "GaussianNaiveBayes",
    "GroundTruthOracle",
    "LabelQueue",
    "LabelQuery",
    "MetaDetector",
    "MetaSample",
    "Sample",
    "StreamingView",
    "TrainConfig",
    "TrainReport",
    "WindowSpec",
    "__version__",
    "gaps",
    "generate_drifting_stream",
    "make_detector",
    "make_meta_sample",
    "window_means",
    "prequential_run",
    "run_active_detection",
    "run_detector",
    "simulate_error_trace",
    "train_meta_detector",
]
