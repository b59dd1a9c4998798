"""Order-zero Bessel function by power series and the first Dirichlet eigenpair.

The barrier constructions need the first eigenfunction of the Laplacian on
the unit disk, normalised so its supremum is 1 at the centre:

    phi1(r) = J0(j01 * r),   lambda1 = j01**2,

where j01 is the first positive zero of J0.  Everything here is evaluated
from the alternating power series

    J0(x) = sum_k (-1)^k (x/2)^(2k) / (k!)^2

truncated once the next term drops below 1e-17 in relative terms, so no
special-function dependency is needed and the truncation error is far below
round-off for the arguments used (|x| <= j01).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_SERIES_RELTOL = 1e-17
_MAX_TERMS = 80


def j0_series(x):
    """J0(x) by the alternating power series (vectorised)."""
    x = np.asarray(x, dtype=float)
    z = -(x * x) / 4.0
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, _MAX_TERMS):
        term = term * z / (k * k)
        total = total + term
        if np.max(np.abs(term)) < _SERIES_RELTOL * max(1.0, float(np.max(np.abs(total)))):
            break
    return total if total.ndim else float(total)


def j0_prime_series(x):
    """d/dx J0(x) by term-wise differentiation of the series."""
    x = np.asarray(x, dtype=float)
    z = -(x * x) / 4.0
    # d/dx sum_k c_k x^(2k) = sum_k 2k c_k x^(2k-1); factor out -x/2.
    term = np.ones_like(z)
    total = np.ones_like(z)  # sum of k-weighted terms relative to the k=1 one
    for k in range(2, _MAX_TERMS):
        term = term * z / (k * (k - 1))
        total = total + term
        if np.max(np.abs(term)) < _SERIES_RELTOL:
            break
    out = -(x / 2.0) * total
    return out if out.ndim else float(out)


def first_j0_zero(lo: float = 2.0, hi: float = 3.0) -> float:
    """First positive zero of J0, bisected to full double precision."""
    flo = j0_series(lo)
    fhi = j0_series(hi)
    if not (flo > 0.0 > fhi):
        raise ValueError("bracket [2, 3] does not straddle the first zero")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if j0_series(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EigenData:
    """First Dirichlet eigenpair of the unit disk, sup-normalised at r = 0."""

    j01: float
    lambda1: float
    phi1: Callable[[np.ndarray], np.ndarray]
    phi1_prime: Callable[[np.ndarray], np.ndarray]


_CACHE: EigenData | None = None


def disk_eigen_data() -> EigenData:
    """Memoised eigen data; phi1(0) = 1, phi1(1) = 0, phi1 decreasing."""
    global _CACHE
    if _CACHE is None:
        j01 = first_j0_zero()
        _CACHE = EigenData(
            j01=j01,
            lambda1=j01 * j01,
            phi1=lambda r: j0_series(j01 * np.asarray(r, dtype=float)),
            phi1_prime=lambda r: j01 * j0_prime_series(j01 * np.asarray(r, dtype=float)),
        )
    return _CACHE
