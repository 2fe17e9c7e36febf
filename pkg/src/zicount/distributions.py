"""Base count distributions.

Poisson, zero-truncated Poisson, and the two mean-parameterized Negative
Binomial families: NB-quad with variance ``mu + phi*mu**2`` and NB-lin with
variance ``mu*(1 + phi)``.  Everything is computed in log space through
log-gamma, so probabilities stay finite for counts up to at least 10**6.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .exceptions import InvalidParameterError

# Below this dispersion the NB log-gamma differences lose precision and the
# distribution is numerically Poisson anyway; switch to the Poisson branch.
PHI_POISSON_LIMIT = 1e-8


class Family(enum.Enum):
    """Base pmf family tag."""

    POISSON = "poisson"
    NBQUAD = "nbquad"
    NBLIN = "nblin"


NB_FAMILIES = (Family.NBQUAD, Family.NBLIN)


@dataclass(frozen=True)
class BaseModel:
    """A base count distribution: family tag plus mean and dispersion.

    ``lam`` is the mean for every family (both NB parameterizations are
    mean-parameterized).  ``phi`` is the dispersion, ignored for Poisson;
    ``phi = 0`` reproduces Poisson probabilities for both NB families.
    """

    family: Family
    lam: float
    phi: float = 0.0

    def __post_init__(self):
        if not isinstance(self.family, Family):
            raise InvalidParameterError(f"unknown family {self.family!r}")
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise InvalidParameterError(f"lam must be positive, got {self.lam!r}")
        if not np.isfinite(self.phi) or self.phi < 0:
            raise InvalidParameterError(f"phi must be non-negative, got {self.phi!r}")


def _validate_counts(y, minimum=0):
    y = np.asarray(y)
    if not np.issubdtype(y.dtype, np.number):
        raise ValueError("counts must be numeric")
    if np.any(y != np.floor(y)) or np.any(y < minimum):
        raise ValueError(f"counts must be integers >= {minimum}")
    return y.astype(float)


def _effective_family(family, phi):
    if family is Family.POISSON or phi < PHI_POISSON_LIMIT:
        return Family.POISSON
    return family


def _nb_k(family, lam, phi):
    """Gamma-form size parameter; NB-lin is NB with k = mu/phi."""
    if family is Family.NBQUAD:
        return np.full_like(np.asarray(lam, dtype=float), 1.0 / phi)
    return np.asarray(lam, dtype=float) / phi


def _logpmf_arrays(family, lam, phi, y):
    """Vectorized log-pmf over broadcastable ``lam`` and ``y``; scalar phi."""
    lam = np.asarray(lam, dtype=float)
    y = np.asarray(y, dtype=float)
    if _effective_family(family, phi) is Family.POISSON:
        return y * np.log(lam) - lam - gammaln(y + 1.0)
    k = _nb_k(family, lam, phi)
    return (
        gammaln(k + y) - gammaln(k) - gammaln(y + 1.0)
        - k * np.log1p(lam / k)
        + y * (np.log(lam) - np.log(k + lam))
    )


def _log_zero_prob_arrays(family, lam, phi):
    """Vectorized log pi0 over ``lam``; scalar phi."""
    lam = np.asarray(lam, dtype=float)
    eff = _effective_family(family, phi)
    if eff is Family.POISSON:
        return -lam
    if eff is Family.NBQUAD:
        return -np.log1p(phi * lam) / phi
    return -lam * np.log1p(phi) / phi


def base_logpmf(model: BaseModel, y):
    """Log pmf of the base distribution at count(s) ``y``.

    Accepts a scalar or array of non-negative integers and returns a float
    or array accordingly.
    """
    y_arr = _validate_counts(y)
    out = _logpmf_arrays(model.family, model.lam, model.phi, y_arr)
    return out if np.ndim(y) else float(out)


def base_zero_prob(model: BaseModel) -> float:
    """Probability of a zero count under the base distribution.

    Poisson gives ``exp(-lam)``; for ``phi > 0`` both NB families strictly
    exceed it (over-dispersion inflates the zero probability).
    """
    return float(np.exp(_log_zero_prob_arrays(model.family, model.lam, model.phi)))


def base_mean(model: BaseModel) -> float:
    """Mean of the base distribution (``lam`` for every family)."""
    return model.lam


def base_variance(model: BaseModel) -> float:
    """Variance of the base distribution."""
    eff = _effective_family(model.family, model.phi)
    if eff is Family.POISSON:
        return model.lam
    if eff is Family.NBQUAD:
        return model.lam + model.phi * model.lam**2
    return model.lam * (1.0 + model.phi)


def truncated_poisson_logpmf(lam: float, y):
    """Log pmf of the zero-truncated Poisson at count(s) ``y >= 1``."""
    if not np.isfinite(lam) or lam <= 0:
        raise InvalidParameterError(f"lam must be positive, got {lam!r}")
    y_arr = _validate_counts(y, minimum=1)
    # log(1 - exp(-lam)) via expm1, exact down to lam ~ 1e-300
    out = y_arr * np.log(lam) - lam - gammaln(y_arr + 1.0) - np.log(-np.expm1(-lam))
    return out if np.ndim(y) else float(out)


def truncated_poisson_mean(lam: float) -> float:
    """Mean ``lam / (1 - exp(-lam))`` of the zero-truncated Poisson."""
    if not np.isfinite(lam) or lam <= 0:
        raise InvalidParameterError(f"lam must be positive, got {lam!r}")
    return lam / -np.expm1(-lam)
