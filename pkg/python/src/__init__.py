"""qflow - Bohmian trajectories and interference patterns for analytic wave models.

This package evaluates closed-form wavefunctions (Gaussian packets, slit
arrays, Talbot gratings, box and oscillator states), derives their
hydrodynamic fields, integrates trajectory ensembles and writes each
scenario's artifacts together with its consistency checks.
"""

__version__ = "1.0.0"
__all__ = [
    "app",
    "artifacts",
    "carpets",
    "config",
    "errors",
    "fractal",
    "hydro",
    "parsing",
    "presets",
    "render",
    "scenarios",
    "toymodel",
    "trajectories",
    "wavemodel",
    "workers",
]
