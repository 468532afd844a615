"""Density and sampling helpers for the conjugate families used by the model.

Conventions (shape/scale parameterizations):
  - inverse gamma IG(a, b):        p(x) = b^a / Gamma(a) * x^(-a-1) * exp(-b/x)
  - scaled inverse chi^2 (nu, s2): equals IG(nu/2, nu*s2/2)
  - inverse Wishart IW(S, nu):     p(X) propto |X|^(-(nu+d+1)/2) * exp(-tr(S X^-1)/2)
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import gammaln, multigammaln

from .errors import NumericalError

LOG_2PI = float(np.log(2.0 * np.pi))


def normal_logpdf(x, mean, var):
    """Elementwise Gaussian log density; broadcasts like numpy."""
    x = np.asarray(x, dtype=float)
    return -0.5 * (LOG_2PI + np.log(var) + (x - mean) ** 2 / var)


def invgamma_logpdf(x, shape, scale):
    x = np.asarray(x, dtype=float)
    return shape * np.log(scale) - gammaln(shape) - (shape + 1.0) * np.log(x) - scale / x


def invgamma_draw(rng, shape, scale, size=None):
    # tiny shapes (uninformative priors) can underflow the gamma draw to 0;
    # the resulting inf is the caller's business (init paths clamp it)
    scale = np.asarray(scale, dtype=float)
    if size is None and scale.ndim > 0:
        size = scale.shape
    with np.errstate(divide="ignore", over="ignore"):
        out = scale / np.asarray(rng.gamma(shape, 1.0, size=size))
    return float(out) if out.ndim == 0 else out


def scaled_inv_chi2_logpdf(x, dof, scale_sq):
    return invgamma_logpdf(x, dof / 2.0, dof * scale_sq / 2.0)


def scaled_inv_chi2_draw(rng, dof, scale_sq, size=None):
    return invgamma_draw(rng, dof / 2.0, np.asarray(dof * scale_sq / 2.0), size=size)


def spd_cholesky(mat, what="matrix"):
    """Lower Cholesky factor, raising NumericalError on non-SPD input."""
    try:
        low, _ = cho_factor(mat, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{what} is not symmetric positive definite") from exc
    if not np.all(np.isfinite(low)):
        raise NumericalError(f"{what} produced a non-finite Cholesky factor")
    return np.tril(low)


def chol_logdet(chol_lower):
    return 2.0 * float(np.sum(np.log(np.diag(chol_lower))))


def chol_inverse(chol_lower):
    d = chol_lower.shape[0]
    return cho_solve((chol_lower, True), np.eye(d), check_finite=False)


def mvn_logpdf_dev(dev, chol_lower):
    """Log density of N(0, C) at rows of ``dev`` given chol(C); returns one value per row."""
    dev = np.atleast_2d(dev)
    sol = solve_triangular(chol_lower, dev.T, lower=True, check_finite=False)
    maha = np.sum(sol**2, axis=0)
    d = dev.shape[1]
    return -0.5 * (d * LOG_2PI + chol_logdet(chol_lower) + maha)


def mvn_draw_from_prec(rng, prec_chol_lower, mean):
    """Draw N(mean, P^-1) rows given the lower Cholesky factor of the precision P.

    ``mean`` may be (d,) or (n, d); one draw per row.
    """
    mean = np.asarray(mean, dtype=float)
    single = mean.ndim == 1
    mean2 = np.atleast_2d(mean)
    eps = rng.standard_normal(mean2.shape)
    # z = L^-T eps has covariance (L L^T)^-1 = P^-1
    z = solve_triangular(prec_chol_lower.T, eps.T, lower=False, check_finite=False).T
    out = mean2 + z
    return out[0] if single else out


def wishart_draw(rng, dof, scale_chol_lower):
    """Bartlett draw from Wishart(dof, S) given chol(S); returns the d x d matrix."""
    d = scale_chol_lower.shape[0]
    a = np.zeros((d, d))
    idx = np.tril_indices(d, k=-1)
    a[idx] = rng.standard_normal(len(idx[0]))
    a[np.diag_indices(d)] = np.sqrt(rng.chisquare(dof - np.arange(d)))
    x = scale_chol_lower @ a
    return x @ x.T


def invwishart_draw(rng, scale, dof):
    """Draw from IW(scale, dof): Psi = W^-1 with W ~ Wishart(dof, scale^-1)."""
    scale = np.asarray(scale, dtype=float)
    d = scale.shape[0]
    if dof <= d - 1:
        raise ValueError(f"inverse-Wishart dof must exceed dim-1, got {dof} for dim {d}")
    s_chol = spd_cholesky(scale, "inverse-Wishart scale")
    # chol(S^-1) = (L^-1)^T with S = L L^T -- that is upper triangular; use the
    # generic SPD factorization of the explicit inverse instead (d is tiny here).
    s_inv = chol_inverse(s_chol)
    w = wishart_draw(rng, dof, spd_cholesky(s_inv, "inverted scale"))
    w_chol = spd_cholesky(w, "Wishart draw")
    psi = chol_inverse(w_chol)
    return 0.5 * (psi + psi.T)


def invwishart_logpdf(x, scale, dof):
    x = np.asarray(x, dtype=float)
    scale = np.asarray(scale, dtype=float)
    d = x.shape[0]
    x_chol = spd_cholesky(x, "inverse-Wishart argument")
    s_chol = spd_cholesky(scale, "inverse-Wishart scale")
    # tr(S X^-1) via solves on the Cholesky factor of X
    sol = cho_solve((x_chol, True), scale, check_finite=False)
    trace = float(np.trace(sol))
    logdet_s = chol_logdet(s_chol)
    logdet_x = chol_logdet(x_chol)
    return (
        0.5 * dof * logdet_s
        - 0.5 * dof * d * np.log(2.0)
        - multigammaln(0.5 * dof, d)
        - 0.5 * (dof + d + 1.0) * logdet_x
        - 0.5 * trace
    )


def categorical_draw(rng, log_probs):
    """One draw per row of unnormalized log probabilities, via the Gumbel trick."""
    g = rng.gumbel(size=log_probs.shape)
    return np.argmax(log_probs + g, axis=-1)


def log_softmax(log_probs):
    m = np.max(log_probs, axis=-1, keepdims=True)
    shifted = log_probs - m
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
