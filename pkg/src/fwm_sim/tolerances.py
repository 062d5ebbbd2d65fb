"""Numerical tolerances used across solvers and checks."""

STRUCTURAL = 1e-10      # Hermiticity, trace, population bounds
TRUNCATION = 1e-6       # relative change of the conjugate amplitude between orders
ORACLE_COHERENCE = 1e-3  # Floquet vs time-domain demodulation
ORACLE_POPULATION = 1e-4
RESIDUAL = 1e-8         # relative residual above which a solve is rejected
TRACE_DRIFT = 1e-6      # time-domain trace drift treated as a step-size failure
