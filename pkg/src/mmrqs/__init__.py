"""Resource queuing models of mmWave access: radio parameterization, solvers and simulation."""

__version__ = "0.1.0"
