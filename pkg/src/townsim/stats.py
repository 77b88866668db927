"""Lead-lag analysis of hub infection versus overall infection.

Cross-correlation by lag, bivariate autoregressions fitted by least squares,
AIC lag selection and the Granger F-test. Missing observations are NaN and
are dropped pairwise (or row-wise for regressions).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .specfun import f_sf


class SingularDesign(ValueError):
    pass


class DegenerateSeries(ValueError):
    pass


class InvalidDof(ValueError):
    pass


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    ok = ~(np.isnan(a) | np.isnan(b))
    a, b = a[ok], b[ok]
    if a.size < 2:
        return math.nan
    a = a - a.mean()
    b = b - b.mean()
    saa = float(a @ a)
    sbb = float(b @ b)
    if saa == 0.0 or sbb == 0.0:
        return math.nan
    return float(np.clip((a @ b) / math.sqrt(saa * sbb), -1.0, 1.0))


@dataclass(frozen=True)
class CcfResult:
    lags: np.ndarray
    rho: np.ndarray
    best_negative_lag: int | None
    best_rho: float

    def at(self, lag: int) -> float:
        return float(self.rho[lag - int(self.lags[0])])


def cross_correlation(x, y, max_lag: int) -> CcfResult:
    """Pearson correlation of ``(x[t + lag], y[t])`` for every lag in ``[-max_lag, max_lag]``.

    A negative lag means ``x`` leads ``y``. Lags where either overlapping
    window has zero variance get ``nan``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d series of equal length")
    n = x.size
    if max_lag < 0 or n <= 2 * max_lag + 2:
        raise ValueError(f"need more than 2*max_lag+2 = {2 * max_lag + 2} points, got {n}")
    if np.isinf(x).any() or np.isinf(y).any():
        raise ValueError("series must be finite (use nan for missing days)")

    lags = np.arange(-max_lag, max_lag + 1)
    rho = np.empty(lags.size)
    for j, lag in enumerate(lags):
        if lag >= 0:
            rho[j] = _pearson(x[lag:], y[:n - lag])
        else:
            rho[j] = _pearson(x[:n + lag], y[-lag:])
    if np.isnan(rho).all():
        raise DegenerateSeries("correlation undefined at every lag (constant series?)")
    if np.isnan(rho).any():
        warnings.warn("correlation undefined at some lags", RuntimeWarning, stacklevel=2)

    neg = lags < 0
    best_lag, best = None, math.nan
    if neg.any() and not np.isnan(rho[neg]).all():
        k = int(np.nanargmax(rho[neg]))
        best_lag, best = int(lags[neg][k]), float(rho[neg][k])
    return CcfResult(lags=lags, rho=rho, best_negative_lag=best_lag, best_rho=best)


@dataclass(frozen=True)
class OlsFit:
    coef: np.ndarray
    rss: float
    n_obs: int

    @property
    def n_params(self) -> int:
        return self.coef.size


def ols(X: np.ndarray, y: np.ndarray, rtol: float = 1e-10) -> OlsFit:
    """Least squares via Householder QR; raises :class:`SingularDesign` on rank deficiency."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < X.shape[1]:
        raise SingularDesign("fewer observations than regressors")
    # column scaling keeps the rank test meaningful for badly scaled regressors
    scale = np.sqrt((X * X).sum(axis=0))
    if np.any(scale == 0):
        raise SingularDesign("all-zero regressor column")
    Q, R = np.linalg.qr(X / scale)
    diag = np.abs(np.diag(R))
    if diag.min() <= rtol * diag.max():
        raise SingularDesign("regressor matrix is rank-deficient")
    beta = np.linalg.solve(R, Q.T @ y) / scale
    resid = y - X @ beta
    return OlsFit(coef=beta, rss=float(resid @ resid), n_obs=X.shape[0])


def lagged_design(y, x, p: int, start: int | None = None):
    """Rows ``t >= start`` of the restricted and unrestricted regressions at lag ``p``.

    Restricted columns are ``[1, y[t-1], ..., y[t-p]]``; the unrestricted
    design appends ``x[t-1], ..., x[t-p]``. Rows touching a nan are dropped.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape or y.ndim != 1:
        raise ValueError("y and x must be 1-d series of equal length")
    if p < 1:
        raise ValueError("lag p must be >= 1")
    start = p if start is None else start
    if start < p:
        raise ValueError("start must be >= p")
    n = y.size
    t = np.arange(start, n)
    ylags = np.column_stack([y[t - j] for j in range(1, p + 1)])
    xlags = np.column_stack([x[t - j] for j in range(1, p + 1)])
    target = y[t]
    Xr = np.column_stack([np.ones(t.size), ylags])
    Xu = np.column_stack([Xr, xlags])
    keep = ~(np.isnan(target) | np.isnan(Xu).any(axis=1))
    return Xr[keep], Xu[keep], target[keep]


@dataclass(frozen=True)
class VarFit:
    p: int
    restricted: OlsFit
    unrestricted: OlsFit

    @property
    def n_eff(self) -> int:
        return self.unrestricted.n_obs

    @property
    def ar_coef(self) -> np.ndarray:
        """Own-lag coefficients of the unrestricted model."""
        return self.unrestricted.coef[1:self.p + 1]

    @property
    def cross_coef(self) -> np.ndarray:
        return self.unrestricted.coef[self.p + 1:]


def fit_var(y, x, p: int, start: int | None = None) -> VarFit:
    """Fit ``y`` on its own lags (restricted) and on its own plus ``x``'s lags (unrestricted)."""
    Xr, Xu, target = lagged_design(y, x, p, start)
    if target.size < 2 * p + 3:
        raise SingularDesign(f"only {target.size} usable rows for lag {p}")
    fr = ols(Xr, target)
    fu = ols(Xu, target)
    # nested fits; rounding can leave rss_u a hair above rss_r
    if fu.rss > fr.rss:
        fu = OlsFit(coef=fu.coef, rss=min(fu.rss, fr.rss), n_obs=fu.n_obs)
    return VarFit(p=p, restricted=fr, unrestricted=fu)


@dataclass(frozen=True)
class LagSelection:
    p: int
    aic: dict
    n_eff: int


def select_lag_aic(y, x, max_lag: int) -> LagSelection:
    """Choose the lag minimizing ``n ln(RSS/n) + 2(2p+1)`` on a common sample."""
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    aic = {}
    n_eff = None
    for p in range(1, max_lag + 1):
        fit = fit_var(y, x, p, start=max_lag)
        n = fit.n_eff
        if n_eff is None:
            n_eff = n
        rss = max(fit.unrestricted.rss, np.finfo(float).tiny)
        aic[p] = n * math.log(rss / n) + 2 * (2 * p + 1)
    best = min(aic, key=lambda k: (aic[k], k))
    return LagSelection(p=best, aic=aic, n_eff=n_eff)


@dataclass(frozen=True)
class GrangerResult:
    p: int
    f_statistic: float
    p_value: float
    df_num: int
    df_den: int
    rss_restricted: float
    rss_unrestricted: float
    aic_by_lag: dict | None = None

    @property
    def lead(self) -> int:
        """Chosen lag shown as a lead time (negative: x leads y)."""
        return -self.p

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha


def granger_test(y, x, p: int, start: int | None = None) -> GrangerResult:
    """F-test that lags 1..p of ``x`` add nothing to an AR(p) model of ``y``."""
    fit = fit_var(y, x, p, start)
    n = fit.n_eff
    df_den = n - 2 * p - 1
    if df_den < 1:
        raise InvalidDof(f"denominator degrees of freedom {df_den} < 1")
    rss_r, rss_u = fit.restricted.rss, fit.unrestricted.rss
    if rss_u == 0.0:
        f = math.inf if rss_r > 0 else 0.0
    else:
        f = max(0.0, ((rss_r - rss_u) / p) / (rss_u / df_den))
    return GrangerResult(p=p, f_statistic=f, p_value=f_sf(f, p, df_den), df_num=p,
                         df_den=df_den, rss_restricted=rss_r, rss_unrestricted=rss_u)


def granger_at_aic_lag(y, x, max_lag: int) -> GrangerResult:
    sel = select_lag_aic(y, x, max_lag)
    res = granger_test(y, x, sel.p)
    return GrangerResult(**{**res.__dict__, "aic_by_lag": sel.aic})


def analysis_series(infected, hub_degree):
    """Drop infection-free days, where hub degree is undefined.

    Returns ``(x, y, days)``: hub degree, infected share and the kept day
    indices. The remaining days are analysed as one contiguous series.
    """
    y = np.asarray(infected, dtype=float)
    x = np.asarray(hub_degree, dtype=float)
    days = np.flatnonzero(y > 0)
    return x[days], y[days], days


@dataclass(frozen=True)
class HubAnalysis:
    ccf: CcfResult
    granger: GrangerResult
    days: np.ndarray
    n_dropped: int


def hub_analysis(infected, hub_degree, max_lag: int = 60, ccf_window: int = 60) -> HubAnalysis:
    """Cross-correlation and Granger test of hub degree leading infection."""
    x, y, days = analysis_series(infected, hub_degree)
    ccf = cross_correlation(x, y, ccf_window)
    granger = granger_at_aic_lag(y, x, max_lag)
    return HubAnalysis(ccf=ccf, granger=granger, days=days,
                       n_dropped=int(np.asarray(infected).size - days.size))
