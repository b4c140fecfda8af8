"""Population-level calibration analysis, binned calibration metrics, and
calibration methods with an experiment command line."""

__version__ = "0.1.0"
