"""Fractional-order PID loop shaping for automatic voltage regulators.

Modules
-------
ratfun      rational transfer functions, polynomial roots, interconnections
fracops     Oustaloup approximation of s**alpha and the filtered FOPID controller
sysnorms    H-infinity and H2 norms
avrloop     AVR model, effective plant, sensitivity functions, gain/phase margins
objectives  design objectives and the twelve trade-off cases
moo         NSGA-II, weighted single-objective baseline, fuzzy best compromise
table1      published best-compromise designs and their recomputation
cli         command-line front end
"""

from importlib.resources import files

__version__ = "0.1.0"


def data_path(name: str):
    """Path of a bundled plant file, e.g. ``data_path("calibrated.json")``."""
    return files(__name__) / "data" / name
