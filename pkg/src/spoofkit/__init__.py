"""spoofkit: training and evaluation harness for speech deepfake detection."""

from .estimator import LogMelTransformer, SpoofDetector

__all__ = ["SpoofDetector", "LogMelTransformer"]
__version__ = "0.1.0"
