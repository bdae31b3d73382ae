"""Command-line front door of the Taylor-Couette stability lab."""
