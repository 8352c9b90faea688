"""Energy coverage of clustered millimetre-wave wireless power transfer networks."""

__version__ = "0.1.0"
