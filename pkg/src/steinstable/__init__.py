"""Stein's method numerics for alpha-stable and infinitely divisible laws.

Subpackage map:

* numerics      -- quadrature, FFT inversion, RNG streams
* stable        -- stable/ID parameterizations, characteristic functions,
                   densities, exact samplers
* testfunctions -- smooth test-function dictionaries with certified norms
* operators     -- Stein/generator operators and Monte Carlo identity checks
* semigroup     -- remainder semigroup, Stein-equation solver, gradient bounds
* bounds        -- computable stable-approximation error bounds and
                   empirical-distance cross checks
* reportio      -- strict config parsing, deterministic CSV output
* plots         -- headless figure rendering for the report path
* cli           -- command-line front end (CSV + figure reports)
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("steinstable")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0+src"

from . import numerics, stable, testfunctions, operators, semigroup, bounds

__all__ = [
    "numerics", "stable", "testfunctions", "operators", "semigroup",
    "bounds", "__version__",
]
