"""scengan: GAN-based scenario generation for renewable power time series."""

__version__ = "0.1.0"
