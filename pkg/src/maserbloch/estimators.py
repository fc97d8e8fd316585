"""scikit-learn compatible estimators.

The curve fitters follow the ``fit(X, y)`` / ``predict(X)`` convention with
fitted attributes carrying a trailing underscore. :class:`MaserBlochSimulator`
exposes the physical parameters through ``get_params`` / ``set_params`` so
scenarios can be swept with ordinary parameter grids.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import least_squares
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_consistent_length, check_is_fitted

from .dynamics import SolverOptions, integrate
from .ensemble import TWO_PI, PhysicalParams, discretize, ensemble_cooperativity


def _as_1d(x, name):
    x = np.asarray(x, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def lorentzian_profile(f, amplitude, f_center, hwhm, baseline=0.0):
    return amplitude / (1.0 + ((f - f_center) / hwhm) ** 2) + baseline


class LorentzianLineFit(RegressorMixin, BaseEstimator):
    """Lorentzian line ``A / (1 + ((f - f0) / hwhm)^2) + baseline``.

    The fit runs Levenberg-Marquardt on data rescaled to the peak height and
    an initial half-width estimate, restricted to ``span`` half-widths around
    the highest sample.

    Parameters
    ----------
    span : float
        Half-width of the fitted region in units of the initial HWHM estimate.
    max_nfev : int
        Evaluation budget for the optimizer.
    """

    def __init__(self, span=25.0, max_nfev=2000):
        self.span = span
        self.max_nfev = max_nfev

    def fit(self, X, y):
        f = _as_1d(X, "X")
        P = _as_1d(y, "y")
        check_consistent_length(f, P)
        order = np.argsort(f)
        f, P = f[order], P[order]
        k = int(np.argmax(P))
        top = P[k]
        if not top > 0:
            raise ValueError("y has no positive peak")
        base0 = float(np.median(P))
        half = base0 + 0.5 * (top - base0)
        lo, hi = k, k
        while lo > 0 and P[lo - 1] > half:
            lo -= 1
        while hi < f.size - 1 and P[hi + 1] > half:
            hi += 1
        step = np.median(np.diff(f)) if f.size > 1 else 1.0
        h0 = max(0.5 * (f[hi] - f[lo]), 0.5 * step)
        m = np.abs(f - f[k]) <= self.span * h0
        if m.sum() < 9:
            m = np.zeros_like(m)
            m[max(0, k - 4) : k + 5] = True
        x = (f[m] - f[k]) / h0
        z = P[m] / top

        def resid(theta):
            return lorentzian_profile(x, theta[0], theta[1], theta[2], theta[3]) - z

        res = least_squares(resid, x0=(1.0 - base0 / top, 0.0, 1.0, base0 / top), method="lm",
                            max_nfev=self.max_nfev, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if not res.success and res.status <= 0:
            raise RuntimeError(f"Lorentzian fit did not converge: {res.message}")
        a, x0, w, b = res.x
        self.amplitude_ = float(a * top)
        self.f_center_ = float(f[k] + x0 * h0)
        self.hwhm_ = float(abs(w) * h0)
        self.baseline_ = float(b * top)
        self.residual_norm_ = float(np.linalg.norm(res.fun) * top)
        self.n_iter_ = int(res.nfev)
        return self

    def predict(self, X):
        check_is_fitted(self, "hwhm_")
        return lorentzian_profile(_as_1d(X, "X"), self.amplitude_, self.f_center_, self.hwhm_, self.baseline_)


class SaturatingRiseFit(RegressorMixin, BaseEstimator):
    """Saturating exponential ``A_inf (1 - exp(-tau / T))``."""

    def __init__(self, max_nfev=2000):
        self.max_nfev = max_nfev

    def fit(self, X, y):
        tau = _as_1d(X, "X")
        A = _as_1d(y, "y")
        check_consistent_length(tau, A)
        if tau.size < 4:
            raise ValueError(f"need at least 4 points, got {tau.size}")
        if np.any(tau < 0):
            raise ValueError("hold times must be non-negative")
        t_scale = float(tau.max())
        a_scale = float(np.max(np.abs(A))) or 1.0
        x = tau / t_scale
        z = A / a_scale
        # start from the time at which the data reach 63 % of their maximum
        reached = np.nonzero(z >= (1 - math.exp(-1)) * z.max())[0]
        T0 = max(x[reached[0]], 0.05) if reached.size else 0.5

        def resid(theta):
            return theta[0] * -np.expm1(-x / theta[1]) - z

        res = least_squares(resid, x0=(z.max(), T0), bounds=([-np.inf, 1e-9], [np.inf, np.inf]),
                            max_nfev=self.max_nfev, xtol=1e-15, ftol=1e-15, gtol=1e-15, x_scale="jac")
        if res.status <= 0:
            raise RuntimeError(f"rise fit did not converge: {res.message}")
        self.A_inf_ = float(res.x[0] * a_scale)
        self.T_ = float(res.x[1] * t_scale)
        self.residual_norm_ = float(np.linalg.norm(res.fun) * a_scale)
        dof = max(tau.size - 2, 1)
        s2 = float(np.sum(res.fun**2)) / dof
        try:
            cov = np.linalg.inv(res.jac.T @ res.jac) * s2
            self.T_stderr_ = float(math.sqrt(max(cov[1, 1], 0.0)) * t_scale)
        except np.linalg.LinAlgError:
            self.T_stderr_ = math.inf
        return self

    def predict(self, X):
        check_is_fitted(self, "T_")
        return self.A_inf_ * -np.expm1(-_as_1d(X, "X") / self.T_)


class MaserBlochSimulator(BaseEstimator):
    """Maxwell-Bloch simulator with physical parameters given in Hz.

    ``simulate(scenario)`` integrates a scenario with this estimator's
    parameters in place of the scenario's own; :meth:`set_params` returns
    ``self`` so sweeps can chain ``sim.set_params(kappa=...).simulate(s)``.
    """

    def __init__(self, kappa=418e3, gamma_perp=0.2e6, g_coll=4.6e6, W=9.2e6, q=1.39,
                 J_fill=16e3, eta=1160.0, N_rho=501, span=None, rtol=1e-8, atol=1e-10,
                 method="RK45"):
        self.kappa = kappa
        self.gamma_perp = gamma_perp
        self.g_coll = g_coll
        self.W = W
        self.q = q
        self.J_fill = J_fill
        self.eta = eta
        self.N_rho = N_rho
        self.span = span
        self.rtol = rtol
        self.atol = atol
        self.method = method

    def physical_params(self):
        return PhysicalParams.from_hz(
            kappa=self.kappa, gamma_perp=self.gamma_perp, g_coll=self.g_coll, W=self.W,
            q=self.q, J_fill=self.J_fill, eta=self.eta, N_rho=self.N_rho,
        )

    def grid(self):
        span = None if self.span is None else TWO_PI * self.span
        return discretize(self.physical_params(), span)

    def simulate(self, scenario):
        params = self.physical_params()
        solver = SolverOptions(self.rtol, self.atol, self.method)
        return integrate(scenario, self.grid(), params, solver=solver)

    def cooperativity(self):
        return ensemble_cooperativity(self.grid(), self.physical_params())
