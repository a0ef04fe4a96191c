"""Standing and traveling waves of a counter-rotating vortex filament pair."""

__version__ = "0.1.0"
