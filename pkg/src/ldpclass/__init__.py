"""Locally differentially private nonparametric classification.

Clients privatize grid indicator arrays with Laplace noise; the server
thresholds a split-sample cell statistic.  The package also ships synthetic
distributions with exact Bayes oracles, analytic privacy certification and a
Monte Carlo harness for excess-risk rates.
"""

from .core import ClassParams, GridSpec, LabeledPoint, PrivacyBudget, PrivatizedReport, ball_volume, index_nearest, indicator_window
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "ClassParams",
    "GridSpec",
    "LabeledPoint",
    "PrivacyBudget",
    "PrivatizedReport",
    "RngStream",
    "ball_volume",
    "index_nearest",
    "indicator_window",
]
