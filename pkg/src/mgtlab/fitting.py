"""Least-squares line fits used for decay rates and convergence orders."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ParameterDomainError


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    window: Optional[Tuple[float, float]] = None
    n_points: int = 0


def linear_fit(x, y, window=None) -> RateFit:
    """Ordinary least squares ``y ~ slope * x + intercept``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ParameterDomainError("need at least two points to fit a line")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ParameterDomainError("fit data must be finite")
    xm = x.mean()
    ym = y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0.0:
        raise ParameterDomainError("abscissae are all equal")
    slope = np.sum((x - xm) * (y - ym)) / sxx
    intercept = ym - slope * xm
    ss_tot = np.sum((y - ym) ** 2)
    ss_res = np.sum((y - (slope * x + intercept)) ** 2)
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return RateFit(float(slope), float(intercept), float(r2), window, int(x.size))


def loglog_fit(x, y) -> RateFit:
    """Fit ``log y`` against ``log x``; both must be positive."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ParameterDomainError("log-log fit needs positive data")
    return linear_fit(np.log(x), np.log(y), window=(float(x.min()), float(x.max())))
