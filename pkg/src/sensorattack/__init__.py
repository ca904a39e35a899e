"""Data-driven detection and identification of sparse sensor attacks on LTI systems."""
from .datamatrix import IoDataset, SensorSet
from .detector import (
    DetectionReport,
    DetectorConfig,
    IdentificationReport,
    Verdict,
    detect_partial_clean,
    detect_sparse,
    identify_partial_clean,
    identify_sparse,
)
from .linalg import RankTolerance

__version__ = "0.1.0"
