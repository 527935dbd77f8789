"""MARGe: gamified public-transport engine.

Beacon advertisement codec, proximity stream engine, calibrated in-bus
broadcast simulator, adventure/quiz game engine with persistence, HTTP
service, and usability-evaluation kit.
"""

__version__ = "0.1.0"
