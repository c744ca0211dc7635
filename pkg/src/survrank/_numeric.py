"""Shared numeric helpers: stable link functions and tolerance-checked quadrature."""

from __future__ import annotations

import numpy as np
from scipy import integrate
from scipy.special import expit, log_ndtr, ndtr

QUAD_TOL = 1e-8


def sigmoid(z):
    return expit(z)


def norm_cdf(z):
    return ndtr(z)


def norm_logcdf(z):
    return log_ndtr(z)


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)


def softplus(z):
    z = np.asarray(z, dtype=float)
    return np.logaddexp(0.0, z)


def quad_checked(fn, lo, hi, tol=QUAD_TOL, limit=200):
    """Adaptive Gauss-Kronrod quadrature that fails loudly instead of silently degrading.

    Raises RuntimeError with the reported error estimate when the integrator
    cannot reach the requested absolute tolerance.
    """
    value, abserr = integrate.quad(fn, lo, hi, epsabs=tol, epsrel=tol, limit=limit)
    if not np.isfinite(value) or abserr > max(tol, 1e-10 * abs(value)) * 50.0:
        raise RuntimeError(
            f"quadrature did not converge on [{lo}, {hi}]: value={value!r}, "
            f"error estimate={abserr:.3e}, requested tol={tol:.1e}"
        )
    return value
