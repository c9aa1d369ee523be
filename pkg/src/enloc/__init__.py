"""Energy-space localization toolkit.

Exact Pauli-string algebra, time-dependent schedules with exact
total-variation accounting, unitary evolution and spectral analysis,
the analytic leakage/moment bound family with independent oracles,
generators for clustered spin landscapes, and desk-scale experiment
drivers that check every inequality with both sides logged.
"""

__version__ = "0.1.0"
