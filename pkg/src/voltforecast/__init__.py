"""Short-horizon forecasting of battery charging voltage.

Synthetic charge-cycle generation, fold-local preprocessing, classical and
neural regressors, and an evaluation harness with a CLI.
"""

__version__ = "0.1.0"
