"""Planar simulator and tactile control stack for a dual-tendon underactuated hand."""

__version__ = "0.1.0"
