"""Model specification and log-likelihood machinery.

A :class:`ModelSpec` couples a base family, a zero-alteration link, and
design-matrix descriptions for the mean (log link) and for the alteration
parameter gamma (identity link; the mixture type C defaults to an
inflation-only parameterization where the linear predictor drives
``log(-gamma)``, keeping ``gamma < 0`` without constraints).

The parameter vector layout is fixed: mean coefficients, then gamma
coefficients, then ``log(phi)`` when the dispersion is free.

Log-likelihood sums are computed over canonically sorted per-observation
terms, so row order never changes the result, bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .data import CountDataset
from .distributions import (
    PHI_POISSON_LIMIT,
    BaseModel,
    Family,
    _log_zero_prob_arrays,
    _logpmf_arrays,
    _nb_k,
    base_zero_prob,
)
from .exceptions import DataError, InvalidParameterError, NonFiniteError
from .links import PROB_EPS, ZiType, _zero_prob_from_log, zi_zero_prob

_ETA_CLIP = 300.0
_LOGPHI_CLIP = 50.0


@dataclass(frozen=True)
class DesignSpec:
    """How to build a design matrix from dataset columns.

    Either a saturated one-indicator-per-level design on ``saturated_on``,
    or an optional intercept plus the listed covariate columns (numeric
    columns enter as-is; categorical columns are dummy-coded against their
    first level and require the intercept).
    """

    terms: tuple[str, ...] = ()
    intercept: bool = True
    saturated_on: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.saturated_on is not None and self.terms:
            raise ValueError("a saturated design cannot also list terms")

    def to_dict(self) -> dict:
        return {"terms": list(self.terms), "intercept": self.intercept,
                "saturated_on": self.saturated_on}

    @classmethod
    def from_dict(cls, d: dict) -> "DesignSpec":
        return cls(terms=tuple(d.get("terms", ())),
                   intercept=d.get("intercept", True),
                   saturated_on=d.get("saturated_on"))


def build_design(design: DesignSpec, data: CountDataset):
    """Design matrix and column names for ``design`` over ``data``."""
    if design.saturated_on is not None:
        column = design.saturated_on
        labels = data.column(column)
        levels = data.levels(column)
        X = np.column_stack([(labels == lv).astype(float) for lv in levels])
        names = tuple(f"{column}[{lv}]" for lv in levels)
        return X, names
    cols, names = [], []
    if design.intercept:
        cols.append(np.ones(data.n))
        names.append("const")
    for term in design.terms:
        if data.is_numeric(term):
            cols.append(data.column(term).astype(float))
            names.append(term)
        else:
            if not design.intercept:
                raise DataError(f"categorical term {term!r} needs an intercept")
            labels = data.column(term)
            for lv in data.levels(term)[1:]:
                cols.append((labels == lv).astype(float))
                names.append(f"{term}[{lv}]")
    if not cols:
        raise DataError("design has no columns")
    return np.column_stack(cols), tuple(names)


@dataclass(frozen=True)
class ModelSpec:
    """Base family + ZI link + designs for ``log(lam)`` and gamma.

    ``phi_mode`` is ``"fixed"`` (at ``phi_fixed``, 0 for Poisson) or
    ``"free"`` (one scalar dispersion, optimized as ``log(phi)``).
    ``allow_deflation`` switches type C to the unconstrained identity
    parameterization of gamma, with feasibility handled by clamping.
    """

    family: Family
    zi: ZiType
    mean_design: DesignSpec = field(default_factory=DesignSpec)
    gamma_design: DesignSpec | None = None
    phi_mode: str = "fixed"
    phi_fixed: float = 0.0
    allow_deflation: bool = False

    def __post_init__(self):
        if isinstance(self.family, str):
            object.__setattr__(self, "family", Family(self.family))
        if isinstance(self.zi, str):
            object.__setattr__(self, "zi", ZiType(self.zi))
        if self.zi is ZiType.NONE:
            if self.gamma_design is not None:
                raise ValueError("zi=NONE takes no gamma design")
        elif self.gamma_design is None:
            object.__setattr__(self, "gamma_design", DesignSpec())
        if self.phi_mode not in ("fixed", "free"):
            raise ValueError(f"phi_mode must be 'fixed' or 'free', got {self.phi_mode!r}")
        if self.family is Family.POISSON:
            if self.phi_mode == "free":
                raise ValueError("Poisson has no free dispersion")
            object.__setattr__(self, "phi_fixed", 0.0)
        elif self.phi_mode == "fixed" and (not np.isfinite(self.phi_fixed)
                                           or self.phi_fixed < 0):
            raise InvalidParameterError(f"phi_fixed must be >= 0, got {self.phi_fixed!r}")

    @property
    def gamma_is_log_negated(self) -> bool:
        """True when the gamma linear predictor drives ``log(-gamma)`` (type C
        inflation-only)."""
        return self.zi is ZiType.C and not self.allow_deflation

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "zi": self.zi.value,
            "mean_design": self.mean_design.to_dict(),
            "gamma_design": None if self.gamma_design is None
            else self.gamma_design.to_dict(),
            "phi_mode": self.phi_mode,
            "phi_fixed": self.phi_fixed,
            "allow_deflation": self.allow_deflation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        gd = d.get("gamma_design")
        return cls(
            family=Family(d["family"]),
            zi=ZiType(d["zi"]),
            mean_design=DesignSpec.from_dict(d["mean_design"]),
            gamma_design=None if gd is None else DesignSpec.from_dict(gd),
            phi_mode=d.get("phi_mode", "fixed"),
            phi_fixed=d.get("phi_fixed", 0.0),
            allow_deflation=d.get("allow_deflation", False),
        )


@dataclass(frozen=True)
class ParamLayout:
    """Deterministic parameter-vector layout: [beta..., gamma..., log_phi?]."""

    names: tuple[str, ...]
    n_beta: int
    n_gamma: int
    free_phi: bool

    @property
    def n_params(self) -> int:
        return self.n_beta + self.n_gamma + int(self.free_phi)

    @property
    def beta(self) -> slice:
        return slice(0, self.n_beta)

    @property
    def gamma(self) -> slice:
        return slice(self.n_beta, self.n_beta + self.n_gamma)


def param_layout(spec: ModelSpec, data: CountDataset) -> ParamLayout:
    """Layout (with column names) of the parameter vector for ``spec``."""
    return _context(spec, data).layout


@dataclass
class _Context:
    """Prebuilt arrays for repeated likelihood evaluation on one dataset."""

    spec: ModelSpec
    y: np.ndarray
    zero: np.ndarray
    X: np.ndarray
    Z: np.ndarray | None
    layout: ParamLayout


def _context(spec: ModelSpec, data: CountDataset) -> _Context:
    X, x_names = build_design(spec.mean_design, data)
    Z, z_names = (None, ())
    if spec.gamma_design is not None:
        Z, z_names = build_design(spec.gamma_design, data)
    prefix = "zi(log-neg):" if spec.gamma_is_log_negated else "zi:"
    names = tuple(f"mean:{n}" for n in x_names) + tuple(prefix + n for n in z_names)
    free_phi = spec.phi_mode == "free"
    if free_phi:
        names = names + ("log_phi",)
    layout = ParamLayout(names, X.shape[1], 0 if Z is None else Z.shape[1], free_phi)
    y = data.y.astype(float)
    return _Context(spec, y, data.y == 0, X, Z, layout)


def _check_params(ctx: _Context, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.shape != (ctx.layout.n_params,):
        raise ValueError(f"expected {ctx.layout.n_params} parameters "
                         f"({ctx.layout.names}), got shape {params.shape}")
    if not np.all(np.isfinite(params)):
        raise NonFiniteError("parameter vector contains non-finite entries")
    return params


@dataclass
class _PerObs:
    lam: np.ndarray
    phi: float
    log_pi0: np.ndarray
    pi0: np.ndarray
    gamma: np.ndarray | None
    pit0_raw: np.ndarray
    pit0: np.ndarray        # clamped to [PROB_EPS, 1 - PROB_EPS]
    log_pit0: np.ndarray
    log_rho: np.ndarray


def _per_obs(ctx: _Context, params: np.ndarray) -> _PerObs:
    spec, layout = ctx.spec, ctx.layout
    eta = np.clip(ctx.X @ params[layout.beta], -_ETA_CLIP, _ETA_CLIP)
    lam = np.exp(eta)
    phi = spec.phi_fixed
    if layout.free_phi:
        phi = float(np.exp(np.clip(params[-1], -_ETA_CLIP, _LOGPHI_CLIP)))
    log_pi0 = _log_zero_prob_arrays(spec.family, lam, phi)
    pi0 = np.exp(log_pi0)
    if spec.zi is ZiType.NONE:
        return _PerObs(lam, phi, log_pi0, pi0, None, pi0, pi0, log_pi0,
                       np.zeros_like(lam))
    eta_g = np.clip(ctx.Z @ params[layout.gamma], -_ETA_CLIP, _ETA_CLIP)
    gamma = -np.exp(eta_g) if spec.gamma_is_log_negated else eta_g
    pit0_raw = _zero_prob_from_log(spec.zi, log_pi0, gamma)
    pit0 = np.clip(pit0_raw, PROB_EPS, 1.0 - PROB_EPS)
    log_rho = np.log1p(-pit0) - np.log1p(-pi0)
    return _PerObs(lam, phi, log_pi0, pi0, gamma, pit0_raw, pit0,
                   np.log(pit0), log_rho)


def _stable_sum(terms: np.ndarray) -> float:
    # canonical reduction order: permutation-invariant to the bit
    return float(np.sum(np.sort(terms)))


def _terms(ctx: _Context, per: _PerObs) -> np.ndarray:
    base_lp = _logpmf_arrays(ctx.spec.family, per.lam, per.phi, ctx.y)
    if ctx.spec.zi is ZiType.NONE:
        return base_lp
    return np.where(ctx.zero, per.log_pit0, per.log_rho + base_lp)


def _loglik_ctx(ctx: _Context, params) -> float:
    per = _per_obs(ctx, _check_params(ctx, params))
    terms = _terms(ctx, per)
    if np.any(np.isnan(terms)):
        raise NonFiniteError("log-likelihood terms contain NaN")
    return _stable_sum(terms)


def loglik(spec: ModelSpec, data: CountDataset, params) -> float:
    """Total log-likelihood of ``spec`` on ``data`` at ``params``."""
    return _loglik_ctx(_context(spec, data), params)


def loglik_decomposed(spec: ModelSpec, data: CountDataset, params):
    """Split the log-likelihood into zero and positive parts.

    The zero part is the Bernoulli likelihood of the zero indicators under
    ``pit0``; the positive part is the zero-truncated base likelihood of the
    positive counts, which carries no gamma information.  The two sum to
    :func:`loglik`.
    """
    ctx = _context(spec, data)
    per = _per_obs(ctx, _check_params(ctx, params))
    log_one_minus_pit0 = np.log1p(-per.pit0)
    zero_terms = np.where(ctx.zero, per.log_pit0, log_one_minus_pit0)
    base_lp = _logpmf_arrays(spec.family, per.lam, per.phi, ctx.y)
    pos = ~ctx.zero
    pos_terms = base_lp[pos] - np.log1p(-per.pi0[pos])
    for part in (zero_terms, pos_terms):
        if np.any(np.isnan(part)):
            raise NonFiniteError("log-likelihood terms contain NaN")
    return _stable_sum(zero_terms), _stable_sum(pos_terms)


def _score_numeric_ctx(ctx: _Context, params: np.ndarray,
                       step: float | None = None) -> np.ndarray:
    params = _check_params(ctx, params)
    grad = np.empty(params.size)
    for i in range(params.size):
        h = step if step is not None else 1e-6 * max(1.0, abs(params[i]))
        up, down = params.copy(), params.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (_loglik_ctx(ctx, up) - _loglik_ctx(ctx, down)) / (2.0 * h)
    if np.any(~np.isfinite(grad)):
        raise NonFiniteError("numeric score contains non-finite entries")
    return grad


def score_numeric(spec: ModelSpec, data: CountDataset, params,
                  step: float | None = None) -> np.ndarray:
    """Central-difference gradient of :func:`loglik` in ``params``.

    With ``step=None`` each coordinate uses ``1e-6 * max(1, |param|)``.
    Serves as the oracle for the analytic gradients and as the fallback
    gradient for fitting.
    """
    if step is not None and step <= 0:
        raise ValueError("step must be positive")
    return _score_numeric_ctx(_context(spec, data), np.asarray(params, float), step)


def has_analytic_score(spec: ModelSpec) -> bool:
    """Analytic gradients exist for the Poisson base with links NONE, A, D."""
    return spec.family is Family.POISSON and spec.zi in (ZiType.NONE, ZiType.A,
                                                         ZiType.D)


def _analytic_score_ctx(ctx: _Context, params) -> np.ndarray:
    """Exact gradient of the (clamped) log-likelihood.

    Rows whose altered zero probability sits on the clamp are flat in the
    alteration, so their link contributions are masked out; this keeps the
    closed forms consistent with the objective the optimizer actually sees.
    """
    spec = ctx.spec
    per = _per_obs(ctx, _check_params(ctx, params))
    indicator = ctx.zero.astype(float)
    if spec.zi is ZiType.NONE:
        return ctx.X.T @ (ctx.y - per.lam)
    live = ((per.pit0_raw > PROB_EPS)
            & (per.pit0_raw < 1.0 - PROB_EPS)).astype(float)
    if spec.zi is ZiType.A:
        # positive rows: d/dlam of [y log lam - lam - log(1 - exp(-lam))];
        # lam/expm1(lam) underflows to 0 long before the cap
        resid = ctx.y - per.lam - per.lam / np.expm1(np.minimum(per.lam, 700.0))
        g_beta = ctx.X.T @ np.where(ctx.zero, 0.0, resid)
    else:  # D: exponential-family mean residual, clamp-frozen rows masked
        zero_part = -live * per.lam * (1.0 - per.pit0_raw) / (1.0 - per.pi0)
        pos_part = (ctx.y - per.lam
                    + per.lam * (live * per.pit0_raw - per.pi0)
                    / (1.0 - per.pi0))
        g_beta = ctx.X.T @ np.where(ctx.zero, zero_part, pos_part)
    g_gamma = ctx.Z.T @ (live * (indicator - per.pit0_raw))
    return np.concatenate([g_beta, g_gamma])


def analytic_score(spec: ModelSpec, data: CountDataset, params) -> np.ndarray:
    """Closed-form gradient where available (see :func:`has_analytic_score`)."""
    if not has_analytic_score(spec):
        raise InvalidParameterError(
            f"no analytic score for family={spec.family.value} zi={spec.zi.value}")
    return _analytic_score_ctx(_context(spec, data), params)


def _ef_eta(model: BaseModel) -> float:
    if model.family is Family.POISSON or model.phi < PHI_POISSON_LIMIT:
        return float(np.log(model.lam))
    k = float(_nb_k(Family.NBQUAD, model.lam, model.phi))
    return float(np.log(model.lam) - np.log(k + model.lam))


def type_d_naturals(model: BaseModel, gamma: float):
    """Natural parameter and cumulant of the odds-shifted distribution.

    For a Poisson or NB-quad base written as
    ``log pi_y = y*eta - A + c(y)`` with ``c(0) = 0``, the odds-ratio
    alteration stays in the exponential family with natural parameters
    ``(eta, gamma)`` and cumulant ``gamma - log(pit0)``.  NB-lin has no such
    form and is rejected.
    """
    if model.family is Family.NBLIN and model.phi >= PHI_POISSON_LIMIT:
        raise InvalidParameterError(
            "NB-lin is not in the exponential family; no natural form exists")
    eta = _ef_eta(model)
    pit0 = zi_zero_prob(ZiType.D, base_zero_prob(model), gamma)
    return eta, float(gamma - np.log(pit0))


def type_d_logpmf(model: BaseModel, gamma: float, y):
    """Log pmf of the odds-shifted model rebuilt from its natural form."""
    eta, a_tilde = type_d_naturals(model, gamma)
    y_arr = np.asarray(y, dtype=float)
    if model.family is Family.POISSON or model.phi < PHI_POISSON_LIMIT:
        c = -gammaln(y_arr + 1.0)
    else:
        k = float(_nb_k(Family.NBQUAD, model.lam, model.phi))
        c = gammaln(k + y_arr) - gammaln(k) - gammaln(y_arr + 1.0)
    out = y_arr * eta + np.where(y_arr == 0, gamma, 0.0) - a_tilde + c
    return out if np.ndim(y) else float(out)
