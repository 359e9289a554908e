"""SamplePairing augmentation with a small numpy trainer and experiment harness."""

__version__ = "0.1.0"
