"""Engines and services of the Taylor-Couette stability lab."""
