"""Qudit gate synthesis and verification for a harmonic oscillator coupled to a spin-1/2.

The package provides three synthesis strategies for unitaries on the first
N+1 oscillator levels tensored with the spin:

- analytic: block-rotation compilation (law_eberly) realized with Fourier
  pulse synthesis (fourier_synth), with full error/time bound calculators,
- semi-analytic: numerically optimized V gates assembled by exact
  conjugation identities (semi_analytic),
- fully numerical: piecewise-constant control optimization with a leakage
  penalty (direct_numeric), plus two-mode composition via a spin bus
  (twomode).
"""

__version__ = "0.1.0"

from . import (  # noqa: E402
    direct_numeric,
    fourier_synth,
    hilbert,
    law_eberly,
    metrics,
    pulses,
    semi_analytic,
    twomode,
)

__all__ = [
    "hilbert",
    "pulses",
    "metrics",
    "law_eberly",
    "fourier_synth",
    "semi_analytic",
    "direct_numeric",
    "twomode",
    "__version__",
]
