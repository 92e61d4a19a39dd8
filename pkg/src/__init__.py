"""Shiftwise: next-day load-shifting recommendations and their evaluation."""
