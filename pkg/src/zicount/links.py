"""Explicit zero-alteration links and implicit over-dispersion curves.

The altered distribution keeps the base's zero-truncated shape and replaces
the zero probability ``pi0`` with ``pit0 = f(pi0, gamma)``; positive-count
probabilities are rescaled by ``rho = (1 - pit0) / (1 - pi0)`` so the pmf
still sums to one.  Four link types are supported:

* ``A`` -- constant zero probability, ``logit(pit0) = gamma``;
* ``B`` -- shared-rate hurdle, ``pit0 = pi0 ** exp(gamma)`` (a shift of
  gamma on the complementary log-log scale);
* ``C`` -- mixture, ``log(1 - pit0) = gamma + log(1 - pi0)``, inflationary
  for ``gamma <= 0``;
* ``D`` -- odds-ratio shift, ``logit(pit0) = gamma + logit(pi0)``.

The module also provides the zero-probability curves induced implicitly by
the two Negative Binomial families when plotted against the Poisson zero
probability with the same mean.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .distributions import BaseModel, Family, base_logpmf, base_zero_prob
from .exceptions import DeflationInfeasibleError, NoSolutionError

# Zero probabilities are clamped to this interval before logs are taken in
# pmf/likelihood code, keeping optimizer line searches away from -inf.
PROB_EPS = 1e-12


class ZiType(enum.Enum):
    """Zero-alteration link tag; ``NONE`` leaves the base untouched."""

    A = "a"
    B = "b"
    C = "c"
    D = "d"
    NONE = "none"


@dataclass(frozen=True)
class ZiModel:
    """A base distribution with one explicit zero-alteration applied."""

    base: BaseModel
    zi: ZiType
    gamma: float = 0.0

    def __post_init__(self):
        if not isinstance(self.zi, ZiType):
            raise ValueError(f"unknown ZI type {self.zi!r}")
        if not np.isfinite(self.gamma):
            raise ValueError(f"gamma must be finite, got {self.gamma!r}")


def _validate_prob(p, name, closed_low=False):
    arr = np.asarray(p, dtype=float)
    low_ok = arr >= 0 if closed_low else arr > 0
    if not np.all(low_ok & (arr < 1)):
        lo = "[0" if closed_low else "(0"
        raise ValueError(f"{name} must lie in {lo}, 1), got {p!r}")
    return arr


def _zero_prob_from_log(zi, log_pi0, gamma):
    """Vectorized altered zero probability from log(pi0); no clamping.

    For type C the deflation branch is truncated at zero (the caller decides
    whether that is an error).  Stable for log_pi0 down to -1e300.
    """
    log_pi0 = np.asarray(log_pi0, dtype=float)
    pi0 = np.exp(log_pi0)
    if zi is ZiType.NONE:
        return np.broadcast_to(pi0, np.broadcast(log_pi0, gamma).shape).copy()
    gamma = np.asarray(gamma, dtype=float)
    if zi is ZiType.A:
        out = expit(gamma)
        return np.broadcast_to(out, np.broadcast(log_pi0, gamma).shape).copy()
    if zi is ZiType.B:
        return np.exp(np.exp(gamma) * log_pi0)
    if zi is ZiType.C:
        return np.maximum(0.0, -np.expm1(gamma + np.log1p(-pi0)))
    # D: logit(pi0) = log_pi0 - log1p(-pi0)
    return expit(gamma + log_pi0 - np.log1p(-pi0))


def zi_zero_prob(zi: ZiType, pi0, gamma):
    """Altered zero probability ``pit0`` for link ``zi`` at ``(pi0, gamma)``.

    ``pi0`` may be a scalar or array in (0, 1); ``gamma`` broadcasts against
    it.  Raises :class:`DeflationInfeasibleError` when type C with
    ``gamma > 0`` deflates the zero probability all the way to zero.
    """
    pi0_arr = _validate_prob(pi0, "pi0")
    out = _zero_prob_from_log(zi, np.log(pi0_arr), gamma)
    if zi is ZiType.C and np.any(out <= 0.0):
        raise DeflationInfeasibleError(
            "type C with gamma > 0 drove the zero probability to 0; "
            "gamma exceeds -log(1 - pi0)"
        )
    return out if (np.ndim(pi0) or np.ndim(gamma)) else float(out)


def zi_gamma_from_point(zi: ZiType, pi0: float, pit0: float,
                        allow_deflation: bool = False) -> float:
    """Gamma that maps ``pi0`` to ``pit0`` under link ``zi`` (exact inverse).

    For type C a deflationary target (``pit0 < pi0``) needs ``gamma > 0``,
    which is only accepted with ``allow_deflation``.
    """
    pi0 = float(_validate_prob(pi0, "pi0"))
    pit0 = float(_validate_prob(pit0, "pit0"))
    if zi is ZiType.A:
        return float(np.log(pit0) - np.log1p(-pit0))
    if zi is ZiType.B:
        return float(np.log(np.log(pit0) / np.log(pi0)))
    if zi is ZiType.C:
        gamma = float(np.log1p(-pit0) - np.log1p(-pi0))
        if gamma > 0 and not allow_deflation:
            raise DeflationInfeasibleError(
                f"type C target pit0={pit0} < pi0={pi0} needs deflation "
                "(gamma > 0); pass allow_deflation=True"
            )
        return gamma
    if zi is ZiType.D:
        return float(np.log(pit0) - np.log1p(-pit0)
                     - np.log(pi0) + np.log1p(-pi0))
    raise ValueError("link NONE has no free parameter")


def renormalizer(pi0, pit0):
    """Positive-count rescaling factor ``rho = (1 - pit0) / (1 - pi0)``."""
    pi0_arr = _validate_prob(pi0, "pi0", closed_low=True)
    pit0_arr = _validate_prob(pit0, "pit0", closed_low=True)
    out = (1.0 - pit0_arr) / (1.0 - pi0_arr)
    return out if (np.ndim(pi0) or np.ndim(pit0)) else float(out)


def model_zero_prob(model: ZiModel) -> float:
    """Altered zero probability of a :class:`ZiModel`."""
    return float(zi_zero_prob(model.zi, base_zero_prob(model.base), model.gamma))


def zi_logpmf(model: ZiModel, y):
    """Log pmf of the zero-altered distribution at count(s) ``y``.

    Zero counts get ``log(pit0)``; positive counts keep the base pmf scaled
    by ``rho``, so the zero-truncated conditional distribution is the base's.
    """
    y_arr = np.asarray(y)
    pi0 = base_zero_prob(model.base)
    pit0 = zi_zero_prob(model.zi, pi0, model.gamma)
    pit0 = min(max(pit0, PROB_EPS), 1.0 - PROB_EPS)
    log_rho = np.log1p(-pit0) - np.log1p(-pi0)
    out = np.where(y_arr == 0, np.log(pit0), log_rho + base_logpmf(model.base, y_arr))
    return out if np.ndim(y) else float(out)


def zi_mean(model: ZiModel) -> float:
    """Mean of the zero-altered distribution, ``rho * lam``."""
    pi0 = base_zero_prob(model.base)
    pit0 = zi_zero_prob(model.zi, pi0, model.gamma)
    return renormalizer(pi0, pit0) * model.base.lam


def implicit_zi_curve(family: Family, pi0_poisson, phi: float):
    """Zero probability an NB family induces at Poisson zero prob ``pi0_poisson``.

    Evaluates the NB zero probability at the mean ``mu = -log(pi0_poisson)``
    shared with the Poisson:

    * NB-lin:  ``log(pit0) = log(1 + phi)/phi * log(pi0_poisson)``
    * NB-quad: ``log(pit0) = -log(1 - phi*log(pi0_poisson))/phi``
    """
    if family not in (Family.NBLIN, Family.NBQUAD):
        raise ValueError(f"implicit ZI curve needs an NB family, got {family!r}")
    if not np.isfinite(phi) or phi <= 0:
        raise ValueError(f"phi must be positive, got {phi!r}")
    log_pi0 = np.log(_validate_prob(pi0_poisson, "pi0_poisson"))
    if family is Family.NBLIN:
        out = np.exp(np.log1p(phi) / phi * log_pi0)
    else:
        out = np.exp(-np.log1p(-phi * log_pi0) / phi)
    return out if np.ndim(pi0_poisson) else float(out)


def match_dispersion_through_point(family: Family, pi0_poisson: float,
                                   pit0: float) -> float:
    """Dispersion ``phi`` whose implicit curve passes through ``(pi0, pit0)``.

    Over-dispersion only inflates zeros, so a solution exists exactly when
    ``pit0 > pi0_poisson``; found by bracketed root-finding with residual
    below 1e-10.
    """
    pi0_poisson = float(_validate_prob(pi0_poisson, "pi0_poisson"))
    pit0 = float(_validate_prob(pit0, "pit0"))
    if pit0 <= pi0_poisson:
        raise NoSolutionError(
            f"target pit0={pit0} must exceed pi0={pi0_poisson}: "
            "over-dispersion cannot deflate zeros"
        )

    def objective(phi):
        return np.log(implicit_zi_curve(family, pi0_poisson, phi)) - np.log(pit0)

    lo = 1e-15
    if objective(lo) >= 0.0:
        return lo
    hi = 1.0
    while objective(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise NoSolutionError("no dispersion below 1e12 matches the target")
    phi = brentq(objective, lo, hi, xtol=1e-14, rtol=8.9e-16)
    return float(phi)
