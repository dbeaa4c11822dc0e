"""Sampling, random correlation matrices with a fixed condition number,
estimation-quality metrics, and the Monte Carlo experiment harness."""

import concurrent.futures
import csv
import time
from dataclasses import dataclass

import numpy as np

from . import model
from ._linalg import safe_cholesky
from .cem import fit_cem
from .circular import angle_separation, wrap_angle
from .direct import fit_direct
from .em import fit_em
from .errors import (
    ConvergenceError,
    DegenerateStatisticError,
    DimensionGuardError,
    NumericalFailureError,
    SingularCovarianceError,
)

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None

from scipy.linalg import solve_triangular

REPORT_COLUMNS = (
    "p",
    "n",
    "sigma",
    "method",
    "replicate",
    "wilks",
    "angle_sep",
    "scatter_div",
    "runtime_seconds",
    "converged",
    "iterations",
)

VALID_METHODS = ("em", "cem", "direct", "emT", "cemT", "directT")


def sample_wn(params, n, seed=None):
    """Draw ``n`` observations from the wrapped normal, reduced to
    [0, 2*pi) componentwise.

    ``seed`` may be anything accepted by ``numpy.random.default_rng``,
    including an existing Generator.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    L = safe_cholesky(params.sigma)
    z = rng.standard_normal((int(n), params.p))
    return wrap_angle(params.mu + z @ L.T)


@dataclass(frozen=True)
class CorrelationSpec:
    """Target for the random correlation generator.

    ``cn`` is the requested ratio of extreme eigenvalues and ``tol`` the
    relative tolerance on the achieved ratio after renormalization.
    """

    p: int
    cn: float = 20.0
    tol: float = 1e-3
    max_rounds: int = 100

    def __post_init__(self):
        if self.p < 2:
            raise ValueError("correlation matrices need p >= 2")
        if self.cn <= 1.0:
            raise ValueError("condition number must exceed 1")
        if self.tol <= 0.0 or self.max_rounds < 1:
            raise ValueError("tol must be positive and max_rounds at least 1")


def _normalize_to_correlation(matrix):
    d = np.sqrt(np.diag(matrix))
    corr = matrix / np.outer(d, d)
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return corr


def _condition_number(corr):
    eigvals = np.linalg.eigvalsh(corr)
    return float(eigvals[-1] / eigvals[0])


def random_correlation(spec, seed=None):
    """Random correlation matrix whose condition number is ``spec.cn``.

    Construction: a spectrum with extremes 1 and ``cn`` and sorted
    uniform interior values is rotated by a random orthogonal basis
    (eigenvectors of Y'Y for a standard normal Y); the result is rescaled
    to unit diagonal, which perturbs the spectrum, so the largest
    eigenvalue is repeatedly reset to ``cn`` times the smallest and the
    matrix renormalized until the achieved condition number is within
    ``tol`` (relative) of the target.
    """
    rng = np.random.default_rng(seed)
    p, cn = spec.p, spec.cn

    lam = np.empty(p)
    lam[0] = 1.0
    lam[-1] = cn
    if p > 2:
        lam[1:-1] = np.sort(rng.uniform(1.0, cn, size=p - 2))
    y = rng.standard_normal((p, p))
    _, basis = np.linalg.eigh(y.T @ y)
    corr = _normalize_to_correlation((basis * lam) @ basis.T)

    achieved = _condition_number(corr)
    for _ in range(spec.max_rounds):
        if abs(achieved - cn) <= spec.tol * cn:
            return corr
        eigval, eigvec = np.linalg.eigh(corr)
        eigval[-1] = cn * eigval[0]
        corr = _normalize_to_correlation((eigvec * eigval) @ eigvec.T)
        achieved = _condition_number(corr)
    raise ConvergenceError(
        f"correlation generator stopped at condition number {achieved:.6g} "
        f"after {spec.max_rounds} rounds (target {cn:g})"
    )


def scale_to_covariance(corr, sigma0):
    """Covariance matrix with common standard deviation ``sigma0`` and
    the given correlation structure."""
    if sigma0 <= 0.0:
        raise ValueError("sigma0 must be positive")
    return float(sigma0) ** 2 * np.asarray(corr, dtype=float)


def wilks_lambda(sample, fitted, truth, config=model.LatticeConfig()):
    """Likelihood-ratio statistic of the fit against the generating
    parameters: non-negative when the fit truly maximizes."""
    ll_true = model.log_likelihood(sample, truth, config)
    ll_fit = model.log_likelihood(sample, fitted, config)
    return -2.0 * (ll_true - ll_fit)


def scatter_divergence(sigma_hat, sigma_true):
    """Stein-type divergence of an estimated covariance from the truth.

    trace(S Sigma0^-1) - log det(S Sigma0^-1) - p; zero iff the two
    matrices are equal, positive otherwise.  Computed through Cholesky
    solves, so both inputs must be positive definite.
    """
    sigma_hat = np.asarray(sigma_hat, dtype=float)
    sigma_true = np.asarray(sigma_true, dtype=float)
    p = sigma_hat.shape[0]
    L0 = safe_cholesky(sigma_true)
    Lh = safe_cholesky(sigma_hat)
    half = solve_triangular(L0, sigma_hat, lower=True)
    ratio = solve_triangular(L0, half.T, lower=True)
    logdet = 2.0 * (
        np.sum(np.log(np.diag(Lh))) - np.sum(np.log(np.diag(L0)))
    )
    return float(np.trace(ratio) - logdet - p)


@dataclass(frozen=True)
class MetricsReport:
    """Fit-quality summary for one replicate and method."""

    wilks: float
    angle_sep: float
    scatter_div: float
    runtime_seconds: float


def evaluate_fit(sample, fitted, truth, config=model.LatticeConfig(), runtime_seconds=0.0):
    """Bundle the three discrepancy metrics plus the observed runtime."""
    return MetricsReport(
        wilks=wilks_lambda(sample, fitted, truth, config),
        angle_sep=angle_separation(fitted.mu, truth.mu),
        scatter_div=scatter_divergence(fitted.sigma, truth.sigma),
        runtime_seconds=runtime_seconds,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Factorial design of a Monte Carlo run.

    Cells are the full cross product of ``p_list``, ``n_list``, and
    ``sigma_list`` (common standard deviations).  Methods ending in ``T``
    start from the generating parameters instead of the moment-based
    values.  Per-replicate random streams are derived from ``seed``
    jointly with the cell and replicate indices, so results do not
    depend on scheduling or worker count.
    """

    p_list: tuple
    n_list: tuple
    sigma_list: tuple
    replications: int
    cn: float = 20.0
    methods: tuple = ("em", "cem", "direct")
    J: int = 3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p_list", tuple(int(p) for p in self.p_list))
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(
            self, "sigma_list", tuple(float(s) for s in self.sigma_list)
        )
        object.__setattr__(self, "methods", tuple(self.methods))
        if not (self.p_list and self.n_list and self.sigma_list):
            raise ValueError("p_list, n_list, and sigma_list must be non-empty")
        if min(self.p_list) < 1 or min(self.n_list) < 1:
            raise ValueError("dimensions and sample sizes must be positive")
        if min(self.sigma_list) <= 0.0:
            raise ValueError("sigma values must be positive")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        for method in self.methods:
            if method not in VALID_METHODS:
                raise ValueError(
                    f"unknown method {method!r}; valid: {', '.join(VALID_METHODS)}"
                )

    def cells(self):
        return [
            (p, n, sigma)
            for p in self.p_list
            for n in self.n_list
            for sigma in self.sigma_list
        ]


_FIT_ERRORS = (
    DegenerateStatisticError,
    SingularCovarianceError,
    NumericalFailureError,
    DimensionGuardError,
    ConvergenceError,
)


def _fit_one(method, sample, truth, config):
    base = method[:-1] if method.endswith("T") else method
    init = truth if method.endswith("T") else None
    if base == "em":
        result = fit_em(sample, init, config)
    elif base == "cem":
        result = fit_cem(sample, init, config)
    else:
        result = fit_direct(sample, init, config)
    return result


def _replicate_rows(config, cell_index, cell, replicate):
    p, n, sigma = cell
    lattice = model.LatticeConfig(config.J)
    rng = np.random.default_rng(
        np.random.SeedSequence([config.seed, cell_index, replicate])
    )
    if p == 1:
        corr = np.eye(1)
    else:
        corr = random_correlation(CorrelationSpec(p, config.cn), rng)
    truth = model.WnParams(np.zeros(p), scale_to_covariance(corr, sigma))
    sample = sample_wn(truth, n, rng)

    rows = []
    for method in config.methods:
        start = time.perf_counter()
        try:
            result = _fit_one(method, sample, truth, lattice)
            runtime = time.perf_counter() - start
            report = evaluate_fit(sample, result.params, truth, lattice, runtime)
            row = {
                "p": p,
                "n": n,
                "sigma": sigma,
                "method": method,
                "replicate": replicate,
                "wilks": report.wilks,
                "angle_sep": report.angle_sep,
                "scatter_div": report.scatter_div,
                "runtime_seconds": report.runtime_seconds,
                "converged": bool(result.converged),
                "iterations": int(result.iterations),
            }
        except _FIT_ERRORS:
            runtime = time.perf_counter() - start
            row = {
                "p": p,
                "n": n,
                "sigma": sigma,
                "method": method,
                "replicate": replicate,
                "wilks": float("nan"),
                "angle_sep": float("nan"),
                "scatter_div": float("nan"),
                "runtime_seconds": runtime,
                "converged": False,
                "iterations": 0,
            }
        rows.append(row)
    return rows


def run_experiment(config, workers=1):
    """Run every (cell, replicate, method) fit and collect metric rows.

    Individual fit failures are recorded as rows with NaN metrics and
    never abort the sweep.  Rows come back in deterministic cell-major,
    replicate-minor order regardless of ``workers``; with BLAS pinned to
    one thread per task the numeric content is reproducible bit for bit.
    """
    cells = config.cells()
    tasks = [
        (ci, cell, rep)
        for ci, cell in enumerate(cells)
        for rep in range(config.replications)
    ]

    def run_all():
        if workers <= 1:
            return [_replicate_rows(config, *task) for task in tasks]
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            return list(
                pool.map(lambda task: _replicate_rows(config, *task), tasks)
            )

    if threadpool_limits is not None:
        with threadpool_limits(limits=1):
            grouped = run_all()
    else:  # pragma: no cover
        grouped = run_all()
    return [row for group in grouped for row in group]


def write_report_csv(rows, path):
    """Write metric rows with full float precision (repr round-trip)."""

    def fmt(value):
        if isinstance(value, bool):
            return str(value)
        if isinstance(value, float):
            return repr(value)
        return str(value)

    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow([fmt(row[col]) for col in REPORT_COLUMNS])


def summarize_report(rows):
    """Per-(cell, method) medians of the three metrics.

    Failed fits (NaN metrics) are excluded from the medians but counted.
    """
    keys = sorted(
        {(r["p"], r["n"], r["sigma"], r["method"]) for r in rows},
        key=lambda k: (k[0], k[1], k[2], k[3]),
    )
    summaries = []
    for p, n, sigma, method in keys:
        group = [
            r
            for r in rows
            if (r["p"], r["n"], r["sigma"], r["method"]) == (p, n, sigma, method)
        ]
        ok = [r for r in group if np.isfinite(r["wilks"])]
        summaries.append(
            {
                "p": p,
                "n": n,
                "sigma": sigma,
                "method": method,
                "replicates": len(group),
                "failures": len(group) - len(ok),
                "median_wilks": float(np.median([r["wilks"] for r in ok]))
                if ok
                else float("nan"),
                "median_angle_sep": float(np.median([r["angle_sep"] for r in ok]))
                if ok
                else float("nan"),
                "median_scatter_div": float(
                    np.median([r["scatter_div"] for r in ok])
                )
                if ok
                else float("nan"),
            }
        )
    return summaries
