"""Design and analysis of decorrelated sensing protocols for a shaken optical-lattice accelerometer."""

__version__ = "0.1.0"
