"""convint: convex integration for the fractional Navier–Stokes equations on the torus."""

__version__ = "0.1.0"
