"""Meltpool characterization toolkit for metal additive manufacturing.

Featurizes process/material records with physics-aware features, trains and
benchmarks a suite of natively implemented learners for meltpool geometry and
defect class, compares them against the analytical point-source baseline,
identifies dimensionally consistent power-law models, and serves interactive
process-map predictions over HTTP.
"""

__version__ = "0.1.0"
