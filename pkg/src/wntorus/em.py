"""Expectation-maximization for the wrapped normal via variance
decomposition of the lattice-augmented complete data."""

from dataclasses import dataclass

import numpy as np

from . import circular, model
from ._linalg import safe_cholesky
from .errors import NumericalFailureError, SingularCovarianceError

TWO_PI = 2.0 * np.pi

#: Relative size of the diagonal ridge used to repair a numerically
#: non-positive-definite M-step covariance.
RIDGE_SCALE = 1e-10


@dataclass(frozen=True)
class ConditionalMoments:
    """Per-observation conditional mean and covariance over the lattice."""

    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class FitResult:
    """Outcome of an iterative fit.

    ``loglik_trace`` holds one objective value per visited iterate,
    starting at the initial parameters and ending at the returned ones.
    ``reason`` is one of ``tol-reached``, ``max-iter``, ``degenerate``
    (a covariance repair was needed), or — for classification fits —
    ``fixed-point``.
    """

    params: model.WnParams
    loglik_trace: np.ndarray
    iterations: int
    converged: bool
    reason: str


def _as_sample(sample):
    y = np.asarray(sample, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] == 0:
        raise ValueError("sample must be a non-empty (n, p) array")
    if not np.all(np.isfinite(y)):
        raise ValueError("sample must be finite")
    return y


def e_step(y, params, config=model.LatticeConfig()):
    """Posterior weights of each lattice row for one observation.

    The observation is recentered about the current mean before the
    window is applied.  Weights are non-negative and sum to one.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("y must be a single angle vector")
    ll, (_, _, _, terms) = model._per_observation_loglik(y[None, :], params, config)
    w = np.exp(terms[0] - ll[0])
    return w / np.sum(w)


def conditional_moments(y, weights, config=model.LatticeConfig()):
    """Weighted mean and covariance of the lattice-shifted copies of ``y``.

    ``y`` is used as the base representative: the moments are taken over
    the points ``y + 2*pi*j`` for every row ``j`` of the window, with the
    given weights.  Callers recenter first when that is wanted.
    """
    y = np.asarray(y, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if y.ndim != 1 or weights.ndim != 1:
        raise ValueError("y and weights must be 1-D")
    p = y.shape[0]
    if weights.shape[0] != config.n_rows(p):
        raise ValueError(
            f"expected {config.n_rows(p)} weights for p={p}, got {weights.shape[0]}"
        )
    if np.any(weights < 0.0) or abs(np.sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must be non-negative and sum to one")
    offsets = TWO_PI * model.lattice_rows(config, p)
    shift = weights @ offsets
    centered = offsets - shift
    cov = (centered * weights[:, None]).T @ centered
    return ConditionalMoments(y + shift, 0.5 * (cov + cov.T))


def _ridge_repair(sigma):
    """Make ``sigma`` choleskyable by adding a tiny diagonal ridge.

    Returns (matrix, ridged flag).  The ridge is RIDGE_SCALE times the
    mean diagonal entry, falling back to an absolute RIDGE_SCALE floor
    when the trace itself has collapsed to zero.
    """
    try:
        safe_cholesky(sigma)
        return sigma, False
    except SingularCovarianceError:
        pass
    p = sigma.shape[0]
    ridge = RIDGE_SCALE * float(np.trace(sigma)) / p
    if ridge <= 0.0:
        ridge = RIDGE_SCALE
    for _ in range(2):
        sigma = sigma + ridge * np.eye(p)
        try:
            safe_cholesky(sigma)
            return sigma, True
        except SingularCovarianceError:
            ridge = max(ridge * 1e6, RIDGE_SCALE)
    raise SingularCovarianceError("covariance update could not be repaired")


def _m_step_arrays(means, covs):
    """Pooled update from stacked conditional moments.

    New mean: average of the conditional means (left unwrapped).  New
    covariance: average within-observation covariance plus the
    population-covariance (divisor n) of the conditional means.
    """
    n = means.shape[0]
    mu_raw = np.mean(means, axis=0)
    dev = means - mu_raw
    between = dev.T @ dev / n
    sigma = np.mean(covs, axis=0) + between
    sigma = 0.5 * (sigma + sigma.T)
    return (mu_raw,) + _ridge_repair(sigma)


def m_step(moments):
    """Pooled parameter update from a sequence of ConditionalMoments."""
    moments = list(moments)
    if not moments:
        raise ValueError("at least one observation is required")
    means = np.stack([m.mean for m in moments])
    covs = np.stack([m.cov for m in moments])
    mu_raw, sigma, _ = _m_step_arrays(means, covs)
    return model.WnParams(circular.wrap_angle(mu_raw), sigma)


def _weighted_moments(dev0, weights, offsets, mu):
    """Batched conditional moments for the whole sample.

    ``dev0`` are recentered deviations from ``mu`` and ``weights`` the
    (n, rows) posterior matrix.  Returns (means, covs) where means are in
    absolute coordinates.
    """
    n, p = dev0.shape
    shift = weights @ offsets
    means = mu + dev0 + shift
    covs = np.empty((n, p, p))
    for i in range(n):
        centered = offsets - shift[i]
        covs[i] = (centered * weights[i][:, None]).T @ centered
    return means, covs


def fit_em(
    sample,
    init=None,
    config=model.LatticeConfig(),
    *,
    max_iter=500,
    tol=1e-8,
    criterion="loglik",
):
    """Maximum-likelihood fit of a wrapped normal by EM.

    Each iteration recenters the sample about the current mean, computes
    posterior weights over the truncation window, and pools the
    per-observation conditional moments.  Iteration stops when the
    absolute log-likelihood change (or, with ``criterion="params"``, the
    largest parameter change) drops below ``tol``.

    Parameters
    ----------
    sample : array, shape (n, p)
        Angles in radians; any real representatives are accepted.
    init : WnParams, optional
        Starting values; defaults to the moment-based ones.
    config : LatticeConfig
        Truncation window.
    max_iter, tol : int, float
        Iteration budget and stopping tolerance.
    criterion : {"loglik", "params"}
        Quantity tested against ``tol``.

    Returns
    -------
    FitResult
    """
    if criterion not in ("loglik", "params"):
        raise ValueError("criterion must be 'loglik' or 'params'")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    y = _as_sample(sample)
    if init is None:
        init = circular.initial_params(y)
    if init.p != y.shape[1]:
        raise ValueError("init dimension does not match sample")

    mu = init.mu.copy()
    sigma = init.sigma
    ll_vec, (dev0, _, offsets, terms) = model._per_observation_loglik(
        y, init, config
    )
    ll = float(np.sum(ll_vec))
    if not np.isfinite(ll):
        raise NumericalFailureError("non-finite log-likelihood at iteration 0")
    trace = [ll]
    weights = np.exp(terms - ll_vec[:, None])
    converged = False
    ridged_ever = False

    for it in range(1, max_iter + 1):
        means, covs = _weighted_moments(dev0, weights, offsets, mu)
        mu_new, sigma_new, ridged = _m_step_arrays(means, covs)
        ridged_ever |= ridged

        cand = model.WnParams(mu_new, sigma_new)
        ll_vec, (dev0, _, offsets, terms) = model._per_observation_loglik(
            y, cand, config
        )
        ll_new = float(np.sum(ll_vec))
        if not np.isfinite(ll_new):
            raise NumericalFailureError(
                f"non-finite log-likelihood at iteration {it}"
            )
        trace.append(ll_new)
        weights = np.exp(terms - ll_vec[:, None])

        if criterion == "loglik":
            delta = abs(ll_new - ll)
        else:
            delta = max(
                float(np.max(np.abs(circular.center_to(mu_new, mu) - mu))),
                float(np.max(np.abs(sigma_new - sigma))),
            )
        mu, sigma, ll = mu_new, sigma_new, ll_new
        if delta < tol:
            converged = True
            break

    if ridged_ever:
        reason = "degenerate"
    elif converged:
        reason = "tol-reached"
    else:
        reason = "max-iter"
    result_params = model.WnParams(circular.wrap_angle(mu), sigma)
    return FitResult(
        params=result_params,
        loglik_trace=np.asarray(trace),
        iterations=len(trace) - 1,
        converged=converged,
        reason=reason,
    )
