"""anomalylens - data anomaly classification for transaction schedules."""

__version__ = "0.1.0"
