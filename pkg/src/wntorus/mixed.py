"""Joint models with both torus-valued and linear (Euclidean)
coordinates: the torus block is fitted on its own, then cross- and
linear-block moments are estimated from unwrapped or conditional-mean
reconstructions of the angular data."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import model
from ._linalg import clip_to_pd, safe_cholesky
from .cem import fit_cem
from .em import fit_em
from .errors import SingularCovarianceError
from scipy.special import logsumexp

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class MixedSample:
    """Paired observations: angles ``torus`` (n, p1) and real-valued
    ``linear`` (n, p2) coordinates, row-aligned."""

    torus: np.ndarray
    linear: np.ndarray

    def __post_init__(self):
        torus = np.atleast_2d(np.asarray(self.torus, dtype=float))
        linear = np.atleast_2d(np.asarray(self.linear, dtype=float))
        if torus.ndim != 2 or linear.ndim != 2:
            raise ValueError("torus and linear blocks must be 2-D")
        if torus.shape[0] != linear.shape[0]:
            raise ValueError("torus and linear blocks must have equal row counts")
        if torus.shape[0] == 0:
            raise ValueError("sample is empty")
        if not (np.all(np.isfinite(torus)) and np.all(np.isfinite(linear))):
            raise ValueError("sample must be finite")
        object.__setattr__(self, "torus", torus)
        object.__setattr__(self, "linear", linear)

    @property
    def n(self):
        return self.torus.shape[0]


@dataclass(frozen=True)
class MixedParams:
    """Blockwise parameters of a joint torus/linear normal model.

    The assembled joint covariance must be positive definite;
    ``repaired`` records whether eigenvalue clipping was applied while
    assembling it.
    """

    mu_torus: np.ndarray
    mu_linear: np.ndarray
    cov_torus: np.ndarray
    cov_cross: np.ndarray
    cov_linear: np.ndarray
    repaired: bool = False

    def __post_init__(self):
        mu1 = np.asarray(self.mu_torus, dtype=float)
        mu2 = np.asarray(self.mu_linear, dtype=float)
        p1, p2 = mu1.shape[0], mu2.shape[0]
        if np.shape(self.cov_torus) != (p1, p1):
            raise ValueError("cov_torus has wrong shape")
        if np.shape(self.cov_cross) != (p1, p2):
            raise ValueError("cov_cross has wrong shape")
        if np.shape(self.cov_linear) != (p2, p2):
            raise ValueError("cov_linear has wrong shape")
        safe_cholesky(self.joint_cov())  # must be PD

    def joint_mu(self):
        return np.concatenate([self.mu_torus, self.mu_linear])

    def joint_cov(self):
        return np.block(
            [
                [np.asarray(self.cov_torus), np.asarray(self.cov_cross)],
                [np.asarray(self.cov_cross).T, np.asarray(self.cov_linear)],
            ]
        )


@dataclass(frozen=True)
class MixedFitResult:
    """Mixed-model estimates together with the underlying torus-block fit."""

    params: MixedParams
    torus_result: object


def _assemble(mu1, mu2, s11, s12, s22):
    joint = np.block([[s11, s12], [s12.T, s22]])
    joint = 0.5 * (joint + joint.T)
    repaired = False
    try:
        safe_cholesky(joint)
    except SingularCovarianceError:
        joint, repaired = clip_to_pd(joint)
        warnings.warn(
            "assembled mixed covariance was not positive definite; "
            "eigenvalues were clipped",
            RuntimeWarning,
        )
    p1 = mu1.shape[0]
    return MixedParams(
        mu_torus=mu1,
        mu_linear=mu2,
        cov_torus=joint[:p1, :p1],
        cov_cross=joint[:p1, p1:],
        cov_linear=joint[p1:, p1:],
        repaired=repaired,
    )


def _cross_blocks(x1, x2):
    """Population cross-covariance pieces of the stacked data."""
    n = x1.shape[0]
    d1 = x1 - np.mean(x1, axis=0)
    d2 = x2 - np.mean(x2, axis=0)
    s12 = d1.T @ d2 / n
    s22 = d2.T @ d2 / n
    return s12, 0.5 * (s22 + s22.T)


def fit_mixed_cem(sample, init=None, config=model.LatticeConfig(), **fit_kwargs):
    """Mixed fit through the classification path.

    The torus block is fitted by classification EM; its unwrapped
    reconstruction is stacked with the linear block, and the cross and
    linear covariance blocks are the population moments of that stack.
    The torus blocks of the result equal the torus-only fit exactly
    (unless a positive-definiteness repair of the assembled matrix was
    needed).
    """
    torus_result = fit_cem(sample.torus, init, config, **fit_kwargs)
    x2 = sample.linear
    s12, s22 = _cross_blocks(torus_result.unwrapped, x2)
    params = _assemble(
        torus_result.params.mu,
        np.mean(x2, axis=0),
        torus_result.params.sigma,
        s12,
        s22,
    )
    return MixedFitResult(params=params, torus_result=torus_result)


def fit_mixed_em(sample, init=None, config=model.LatticeConfig(), **fit_kwargs):
    """Mixed fit through the soft-assignment path.

    The torus block is fitted by EM; the per-observation conditional
    means at the fitted parameters stand in for the unobserved Euclidean
    angles when estimating the cross-covariance block.  The linear mean
    and covariance come from the observed linear data alone.
    """
    torus_result = fit_em(sample.torus, init, config, **fit_kwargs)
    params1 = torus_result.params
    _, (dev0, _, offsets, terms) = model._per_observation_loglik(
        sample.torus, params1, config
    )
    log_norm = logsumexp(terms, axis=1)
    weights = np.exp(terms - log_norm[:, None])
    cond_means = params1.mu + dev0 + weights @ offsets
    x2 = sample.linear
    s12, s22 = _cross_blocks(cond_means, x2)
    params = _assemble(
        params1.mu, np.mean(x2, axis=0), params1.sigma, s12, s22
    )
    return MixedFitResult(params=params, torus_result=torus_result)


def mixed_log_likelihood(sample, params, config=model.LatticeConfig()):
    """Joint log-likelihood with wrapping applied to the torus block only.

    Lattice shifts run over the torus coordinates; linear coordinates
    enter the joint normal density unshifted.
    """
    if not isinstance(sample, MixedSample):
        raise TypeError("sample must be a MixedSample")
    from . import circular

    p1 = np.asarray(params.mu_torus).shape[0]
    p2 = np.asarray(params.mu_linear).shape[0]
    if sample.torus.shape[1] != p1 or sample.linear.shape[1] != p2:
        raise ValueError("sample blocks do not match parameter dimensions")
    dev_torus = circular.center_to(sample.torus, params.mu_torus) - params.mu_torus
    dev_lin = sample.linear - params.mu_linear
    dev0 = np.hstack([dev_torus, dev_lin])
    offsets = np.hstack(
        [
            TWO_PI * model.lattice_rows(config, p1),
            np.zeros((config.n_rows(p1), p2)),
        ]
    )
    L = safe_cholesky(params.joint_cov())
    terms = model._log_terms(dev0, L, offsets)
    return float(np.sum(logsumexp(terms, axis=1)))
