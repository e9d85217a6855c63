"""Least-squares fits used for decay-law and convergence-rate checks."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    relative_residual: float

    def __call__(self, x):
        return self.slope * np.asarray(x) + self.intercept


def line_fit(x, y) -> LineFit:
    """Straight-line fit; ``relative_residual`` is the largest residual over the fitted rise ``|slope| * span(x)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rise = abs(slope) * (x.max() - x.min())
    rel = float(np.max(np.abs(resid)) / rise) if rise > 0 else float("inf")
    return LineFit(float(slope), float(intercept), rel)


def loglinear_fit(x, y) -> LineFit:
    """Fit ``log y`` against ``x`` (exponential law)."""
    return line_fit(x, np.log(np.asarray(y, dtype=float)))


def loglog_fit(x, y) -> LineFit:
    """Fit ``log y`` against ``log x`` (power law)."""
    return line_fit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)))
