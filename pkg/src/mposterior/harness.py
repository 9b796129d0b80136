"""End-to-end aggregation pipeline, simulation experiments, and baselines.

The robust aggregate of subset posterior draws is built in four steps:
inner-product matrix -> Weiszfeld weights -> weight thresholding -> mixture.
The experiment drivers reproduce the univariate-Gaussian outlier study and
the contaminated GP regression study at configurable scale, plus a
Monte-Carlo check of the median concentration bounds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .bayes import (
    FlatPrior,
    GPModel,
    PartitionStrategy,
    gaussian_subset_posterior,
    gp_subset_posterior,
    partition,
    sample_gaussian,
)
from .kernels import (
    GaussianKernel,
    KernelSpec,
    MahalanobisKernel,
    gram,
    kernel_to_config,
    median_bandwidth,
    mmd,
)
from .measures import EmpiricalMeasure, make_empirical, mixture, weighted_quantile
from .medians import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_ITER,
    ConcentrationParams,
    inner_product_matrix,
    metric_median,
    psi,
    threshold_weights,
    weiszfeld,
)


def _rng(root_seed: int, *key: int) -> np.random.Generator:
    # Children are a pure function of (root, key): results do not depend on
    # the order in which replications or subsets execute.
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=tuple(key)))


def resolve_kernel(kernel, measures) -> KernelSpec:
    """Turn a kernel setting into a concrete spec.

    "auto" applies the median-distance heuristic to the pooled atoms of the
    given measures; a KernelSpec passes through unchanged.
    """
    if isinstance(kernel, (GaussianKernel, MahalanobisKernel)):
        return kernel
    if kernel == "auto":
        pooled = np.vstack([q.atoms for q in measures])
        return GaussianKernel(median_bandwidth(pooled))
    raise ValueError(f"unsupported kernel setting: {kernel!r}")


@dataclass(frozen=True)
class MPosteriorConfig:
    """Settings of the aggregation step (Weiszfeld + thresholding)."""

    m_subsets: int | None = None
    kernel: KernelSpec | str = "auto"
    draws_per_subset: int | None = None
    epsilon: float = DEFAULT_EPSILON
    max_iter: int = DEFAULT_MAX_ITER
    multiplicity: int | str = "auto"
    threshold: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.m_subsets is not None and self.m_subsets < 1:
            raise ValueError("m_subsets must be >= 1")
        if self.draws_per_subset is not None and self.draws_per_subset < 1:
            raise ValueError("draws_per_subset must be >= 1")

    def resolved_multiplicity(self) -> int:
        if self.multiplicity == "auto":
            if self.m_subsets is None:
                raise ValueError("multiplicity 'auto' needs m_subsets")
            return self.m_subsets
        return int(self.multiplicity)


def m_posterior(subset_draws, config: MPosteriorConfig | None = None):
    """Aggregate subset-posterior draws into the robust mixture.

    Runs Weiszfeld's algorithm on the RKHS inner-product matrix of the input
    measures, optionally zeroes weights below 1/(2m), and returns the
    weighted mixture together with the Weiszfeld diagnostics.
    """
    subset_draws = list(subset_draws)
    if not subset_draws:
        raise ValueError("need at least one subset measure")
    config = config or MPosteriorConfig()
    if config.m_subsets is not None and config.m_subsets != len(subset_draws):
        raise ValueError("config.m_subsets does not match the number of measures")
    m = len(subset_draws)
    spec = resolve_kernel(config.kernel, subset_draws)
    s_matrix = inner_product_matrix(subset_draws, spec)
    result = weiszfeld(s_matrix, epsilon=config.epsilon, max_iter=config.max_iter)
    weights = threshold_weights(result.weights, m) if config.threshold else result.weights
    return mixture(subset_draws, weights), result


def consensus_baseline(subset_draws) -> EmpiricalMeasure:
    """Draw-averaging baseline: i-th output atom = mean of the i-th draw
    across subsets, uniform weights."""
    subset_draws = list(subset_draws)
    if not subset_draws:
        raise ValueError("need at least one subset measure")
    counts = {q.n_atoms for q in subset_draws}
    if len(counts) != 1:
        raise ValueError("all subsets must provide the same number of draws")
    dims = {q.dim for q in subset_draws}
    if len(dims) != 1:
        raise ValueError("all subsets must share one dimension")
    stacked = np.stack([q.atoms for q in subset_draws])
    return make_empirical(stacked.mean(axis=0))


# ---------------------------------------------------------------------------
# Univariate Gaussian outlier experiment
# ---------------------------------------------------------------------------

METHOD_M_POSTERIOR = "m_posterior"
METHOD_FULL = "full_posterior"
METHOD_CONSENSUS = "consensus"


@dataclass(frozen=True)
class OutlierExperimentConfig:
    """One dataset = (n-1) standard-normal draws plus one outlier whose value
    is index * max(|clean draws|); index 0 doubles as a clean control."""

    replications: int = 50
    n: int = 100
    m_subsets: int = 10
    draws_full: int = 1000
    draws_per_subset: int = 100
    outlier_indices: tuple = tuple(range(1, 26))
    levels: tuple = (0.2, 0.15, 0.10, 0.05)
    sigma2: float = 1.0
    kernel: KernelSpec | str = "model"
    epsilon: float = DEFAULT_EPSILON
    max_iter: int = DEFAULT_MAX_ITER
    threshold: bool = True
    include_consensus: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.n < 2 * self.m_subsets:
            raise ValueError("need n >= 2 * m_subsets")
        if not all(0.0 < a < 1.0 for a in self.levels):
            raise ValueError("levels must be alpha values in (0, 1)")
        if any(i < 0 for i in self.outlier_indices):
            raise ValueError("outlier indices must be nonnegative")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")


@dataclass(frozen=True)
class CoverageRow:
    outlier_index: int
    nominal_level: float
    method: str
    coverage: float
    mean_width: float
    median_rel_width_diff: float


@dataclass(frozen=True)
class CoverageReport:
    """Per (outlier index, level, method): empirical coverage of the
    equal-tailed credible interval, its mean width, and the median relative
    width difference (width_method - width_full) / width_full."""

    rows: tuple
    config: OutlierExperimentConfig

    def row(self, outlier_index: int, nominal_level: float, method: str) -> CoverageRow:
        for r in self.rows:
            if (
                r.outlier_index == outlier_index
                and abs(r.nominal_level - nominal_level) < 1e-12
                and r.method == method
            ):
                return r
        raise KeyError((outlier_index, nominal_level, method))

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["outlier_index", "nominal_level", "method", "coverage",
                 "mean_width", "median_rel_width_diff"]
            )
            for r in self.rows:
                writer.writerow(
                    [r.outlier_index, repr(r.nominal_level), r.method, repr(r.coverage),
                     repr(r.mean_width), repr(r.median_rel_width_diff)]
                )


def _experiment_kernel(config: OutlierExperimentConfig, measures) -> KernelSpec:
    if config.kernel == "model":
        # Kernel matched to the Gaussian location model: A = I / (8 sigma^2).
        return MahalanobisKernel.from_covariance(config.sigma2 * np.eye(1))
    return resolve_kernel(config.kernel, measures)


def _interval(measure: EmpiricalMeasure, alpha: float) -> tuple[float, float]:
    return (
        weighted_quantile(measure, alpha / 2.0),
        weighted_quantile(measure, 1.0 - alpha / 2.0),
    )


def run_outlier_experiment(config: OutlierExperimentConfig) -> CoverageReport:
    """Coverage study of full posterior vs robust aggregate vs consensus.

    For every outlier index and replication: simulate the contaminated
    sample, compute 1000 draws of the full posterior (flat prior, known
    variance), the robust aggregate of m stochastic-approximation subset
    posteriors, and the consensus average of plain subset posteriors; then
    record equal-tailed credible intervals at each level.
    """
    methods = [METHOD_M_POSTERIOR, METHOD_FULL]
    if config.include_consensus:
        methods.append(METHOD_CONSENSUS)
    m = config.m_subsets
    covered = {}
    widths = {}
    rel_widths = {}
    for i in config.outlier_indices:
        for rep in range(config.replications):
            rng = _rng(config.seed, i, rep)
            clean = rng.standard_normal(config.n - 1)
            outlier = i * float(np.abs(clean).max())
            data = np.concatenate([clean, [outlier]])[:, None]

            full_post = gaussian_subset_posterior(data, FlatPrior(), config.sigma2, 1)
            full_meas = sample_gaussian(full_post, config.draws_full, rng)

            plan = partition(config.n, m, PartitionStrategy.RANDOM_DISJOINT,
                             seed=int(rng.integers(2**63)))
            approx_draws = []
            plain_draws = []
            for group in plan.groups:
                sub = data[group]
                post_m = gaussian_subset_posterior(sub, FlatPrior(), config.sigma2, m)
                approx_draws.append(sample_gaussian(post_m, config.draws_per_subset, rng))
                if config.include_consensus:
                    post_1 = gaussian_subset_posterior(sub, FlatPrior(), config.sigma2, 1)
                    plain_draws.append(sample_gaussian(post_1, config.draws_per_subset, rng))

            spec = _experiment_kernel(config, approx_draws)
            mp_config = MPosteriorConfig(
                kernel=spec, epsilon=config.epsilon, max_iter=config.max_iter,
                threshold=config.threshold,
            )
            mpost_meas, _ = m_posterior(approx_draws, mp_config)

            per_method = {METHOD_M_POSTERIOR: mpost_meas, METHOD_FULL: full_meas}
            if config.include_consensus:
                per_method[METHOD_CONSENSUS] = consensus_baseline(plain_draws)

            for alpha in config.levels:
                full_lo, full_hi = _interval(full_meas, alpha)
                full_width = full_hi - full_lo
                for method in methods:
                    lo, hi = (full_lo, full_hi) if method == METHOD_FULL else _interval(per_method[method], alpha)
                    key = (i, alpha, method)
                    covered.setdefault(key, []).append(lo <= 0.0 <= hi)
                    widths.setdefault(key, []).append(hi - lo)
                    rel_widths.setdefault(key, []).append((hi - lo - full_width) / full_width)

    rows = []
    for i in config.outlier_indices:
        for alpha in config.levels:
            for method in methods:
                key = (i, alpha, method)
                rows.append(CoverageRow(
                    outlier_index=i,
                    nominal_level=1.0 - alpha,
                    method=method,
                    coverage=float(np.mean(covered[key])),
                    mean_width=float(np.mean(widths[key])),
                    median_rel_width_diff=float(np.median(rel_widths[key])),
                ))
    return CoverageReport(rows=tuple(rows), config=config)


# ---------------------------------------------------------------------------
# Gaussian-process regression experiment
# ---------------------------------------------------------------------------

METHOD_M_POSTERIOR_GP = "m_posterior_gp"
METHOD_FULL_GP = "full_gp"

_GP_CASES = {1: (90, 10, 10), 2: (980, 20, 20)}


def target_curve(x) -> np.ndarray:
    """Regression truth used by the GP study: 1 + 3 sin(2 pi x - pi)."""
    x = np.asarray(x, dtype=np.float64)
    return 1.0 + 3.0 * np.sin(2.0 * np.pi * x - np.pi)


@dataclass(frozen=True)
class GPExperimentConfig:
    """Contaminated GP regression: clean equidistant observations of the
    target curve plus outliers at outlier_factor * max(f0) on their own
    uniform grid; subsets are grid-strided so each keeps a coarser grid."""

    case: int = 1
    replications: int = 30
    n_clean: int | None = None
    n_outliers: int | None = None
    m_subsets: int | None = None
    grid_size: int = 100
    draws_per_subset: int = 100
    draws_full: int = 1000
    noise_sd: float = 1.0
    nugget: float = 0.01
    length_scale: float | str = "auto"
    outlier_factor: float = 10.0
    multiplicity: int | str = "auto"
    kernel: KernelSpec | str = "auto"
    epsilon: float = DEFAULT_EPSILON
    max_iter: int = DEFAULT_MAX_ITER
    threshold: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.case not in _GP_CASES:
            raise ValueError("case must be 1 or 2")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        if not self.nugget > 0 or not self.noise_sd >= 0:
            raise ValueError("nugget must be positive and noise_sd nonnegative")

    def resolved(self) -> tuple[int, int, int]:
        base = _GP_CASES[self.case]
        n_clean = self.n_clean if self.n_clean is not None else base[0]
        n_out = self.n_outliers if self.n_outliers is not None else base[1]
        m = self.m_subsets if self.m_subsets is not None else base[2]
        if n_clean < 2 or n_out < 0 or m < 1:
            raise ValueError("invalid n_clean / n_outliers / m_subsets")
        if n_clean + n_out < 2 * m:
            raise ValueError("need n >= 2 * m_subsets")
        return n_clean, n_out, m


@dataclass(frozen=True)
class GPMethodSummary:
    median_curve: np.ndarray
    band_low: np.ndarray
    band_high: np.ndarray
    max_abs_errors: np.ndarray
    band_coverages: np.ndarray

    @property
    def mean_max_abs_error(self) -> float:
        return float(self.max_abs_errors.mean())

    @property
    def mean_band_coverage(self) -> float:
        return float(self.band_coverages.mean())


@dataclass(frozen=True)
class GPReport:
    grid: np.ndarray
    truth: np.ndarray
    methods: dict

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "x", "f0", "median", "band_low", "band_high",
                             "mean_max_abs_error", "mean_band_coverage"])
            for name, summary in self.methods.items():
                for g in range(len(self.grid)):
                    writer.writerow([
                        name, repr(float(self.grid[g])), repr(float(self.truth[g])),
                        repr(float(summary.median_curve[g])),
                        repr(float(summary.band_low[g])),
                        repr(float(summary.band_high[g])),
                        repr(summary.mean_max_abs_error),
                        repr(summary.mean_band_coverage),
                    ])


def _pointwise_quantiles(measure: EmpiricalMeasure, qs) -> np.ndarray:
    """Weighted left-continuous quantiles of each coordinate; (len(qs), dim)."""
    values = measure.atoms
    order = np.argsort(values, axis=0, kind="stable")
    sorted_vals = np.take_along_axis(values, order, axis=0)
    cum = np.cumsum(measure.weights[order], axis=0)
    out = np.empty((len(qs), values.shape[1]))
    for col in range(values.shape[1]):
        idx = np.searchsorted(cum[:, col], qs, side="left")
        idx = np.minimum(idx, values.shape[0] - 1)
        out[:, col] = sorted_vals[idx, col]
    return out


def run_gp_experiment(config: GPExperimentConfig) -> GPReport:
    """Contaminated GP study: full fit vs robust aggregate of strided subsets.

    Each replication simulates the data, fits the full GP (draws from its
    grid posterior) and the robust aggregate of m strided-subset GP
    posteriors, then records pointwise medians, central 95% bands, maximum
    absolute error against the truth, and band coverage of the truth.
    """
    n_clean, n_out, m = config.resolved()
    grid = np.linspace(0.0, 1.0, config.grid_size)
    truth = target_curve(grid)
    per_rep = {METHOD_M_POSTERIOR_GP: [], METHOD_FULL_GP: []}
    multiplicity = m if config.multiplicity == "auto" else int(config.multiplicity)
    for rep in range(config.replications):
        rng = _rng(config.seed, rep)
        x_clean = np.linspace(0.0, 1.0, n_clean)
        y_clean = target_curve(x_clean) + config.noise_sd * rng.standard_normal(n_clean)
        if n_out > 0:
            x_out = np.linspace(0.0, 1.0, n_out)
            level = config.outlier_factor * float(target_curve(x_clean).max())
            y_out = level + config.noise_sd * rng.standard_normal(n_out)
            xs = np.concatenate([x_clean, x_out])
            ys = np.concatenate([y_clean, y_out])
        else:
            xs, ys = x_clean, y_clean
        order = np.argsort(xs, kind="stable")
        xs, ys = xs[order], ys[order]

        if config.length_scale == "auto":
            ell = median_bandwidth(xs[:, None])
        else:
            ell = float(config.length_scale)
        model = GPModel(length_scale=ell, noise_variance=config.nugget, grid=grid)

        full_post = gp_subset_posterior(xs, ys, model, 1)
        full_meas = sample_gaussian(full_post, config.draws_full, rng)

        plan = partition(len(xs), m, PartitionStrategy.GRID_STRIDED)
        subset_meas = []
        for group in plan.groups:
            post = gp_subset_posterior(xs[group], ys[group], model, multiplicity)
            subset_meas.append(sample_gaussian(post, config.draws_per_subset, rng))
        mp_config = MPosteriorConfig(
            kernel=config.kernel, epsilon=config.epsilon, max_iter=config.max_iter,
            threshold=config.threshold,
        )
        mpost_meas, _ = m_posterior(subset_meas, mp_config)

        for name, measure in ((METHOD_M_POSTERIOR_GP, mpost_meas), (METHOD_FULL_GP, full_meas)):
            lo, med, hi = _pointwise_quantiles(measure, (0.025, 0.5, 0.975))
            per_rep[name].append({
                "median": med, "lo": lo, "hi": hi,
                "max_err": float(np.abs(med - truth).max()),
                "coverage": float(np.mean((lo <= truth) & (truth <= hi))),
            })

    methods = {}
    for name, reps in per_rep.items():
        methods[name] = GPMethodSummary(
            median_curve=np.mean([r["median"] for r in reps], axis=0),
            band_low=np.mean([r["lo"] for r in reps], axis=0),
            band_high=np.mean([r["hi"] for r in reps], axis=0),
            max_abs_errors=np.array([r["max_err"] for r in reps]),
            band_coverages=np.array([r["coverage"] for r in reps]),
        )
    return GPReport(grid=grid, truth=truth, methods=methods)


# ---------------------------------------------------------------------------
# Monte-Carlo check of the median concentration bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConcentrationReport:
    params: ConcentrationParams
    trials: int
    kernel_bandwidth: float
    epsilon_euclid: float
    epsilon_rkhs: float
    bound_geometric: float
    bound_metric: float
    freq_geometric: float
    freq_metric: float
    freq_single: float

    def to_json_dict(self) -> dict:
        return {
            "m": self.params.m,
            "alpha": self.params.alpha,
            "q": self.params.q,
            "gamma": self.params.gamma,
            "c_alpha": self.params.c_alpha,
            "trials": self.trials,
            "kernel_bandwidth": self.kernel_bandwidth,
            "epsilon_euclid": self.epsilon_euclid,
            "epsilon_rkhs": self.epsilon_rkhs,
            "bound_geometric": self.bound_geometric,
            "bound_metric": self.bound_metric,
            "freq_geometric": self.freq_geometric,
            "freq_metric": self.freq_metric,
            "freq_single": self.freq_single,
        }


def run_concentration_check(
    params: ConcentrationParams,
    trials: int,
    seed: int = 0,
    kernel_bandwidth: float = 10.0,
    corruption_distance: float = 1000.0,
) -> ConcentrationReport:
    """Empirical failure frequencies of both medians against their bounds.

    Each trial draws m estimators of the origin as standard bivariate
    normals (the last floor(gamma*m) replaced by a distant corruption),
    embeds them as point masses in the RKHS of a wide Gaussian kernel, and
    tests whether the geometric median leaves the ball of radius
    c_alpha * eps and the metric median the ball of radius 3 * eps. The
    per-estimator radius eps is calibrated so a single clean estimator fails
    with probability exactly q.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    m, q, gamma = params.m, params.q, params.gamma
    spec = GaussianKernel(kernel_bandwidth)
    # P(||N(0, I_2)|| > eps) = exp(-eps^2 / 2) = q.
    eps_euclid = math.sqrt(2.0 * math.log(1.0 / q))
    eps_rkhs = math.sqrt(2.0 - 2.0 * math.exp(-eps_euclid**2 / (2.0 * kernel_bandwidth**2)))
    n_corrupt = int(gamma * m)
    effective = (1.0 - gamma)
    bound_geometric = math.exp(-m * effective * psi((params.alpha - gamma) / effective, q))
    bound_metric = math.exp(-m * effective * psi((0.5 - gamma) / effective, q))

    rng = _rng(seed)
    origin = np.zeros((1, 2))
    fail_g = fail_0 = fail_1 = 0
    for _ in range(trials):
        points = rng.standard_normal((m, 2))
        if n_corrupt:
            points[m - n_corrupt:] = np.array([corruption_distance, 0.0])
        k_matrix = gram(spec, points, points)
        k_origin = gram(spec, points, origin).ravel()
        res = weiszfeld(k_matrix)
        w = res.weights
        mmd2 = float(w @ k_matrix @ w + 1.0 - 2.0 * (w @ k_origin))
        fail_g += math.sqrt(max(mmd2, 0.0)) > params.c_alpha * eps_rkhs
        dist = np.sqrt(np.clip(2.0 - 2.0 * k_matrix, 0.0, None))
        np.fill_diagonal(dist, 0.0)
        chosen = metric_median(dist).index
        rho0 = math.sqrt(max(2.0 - 2.0 * k_origin[chosen], 0.0))
        fail_0 += rho0 > 3.0 * eps_rkhs
        fail_1 += float(np.hypot(points[0, 0], points[0, 1])) > eps_euclid
    return ConcentrationReport(
        params=params,
        trials=trials,
        kernel_bandwidth=kernel_bandwidth,
        epsilon_euclid=eps_euclid,
        epsilon_rkhs=eps_rkhs,
        bound_geometric=bound_geometric,
        bound_metric=bound_metric,
        freq_geometric=fail_g / trials,
        freq_metric=fail_0 / trials,
        freq_single=fail_1 / trials,
    )


# ---------------------------------------------------------------------------
# Subset-count selection sweep
# ---------------------------------------------------------------------------


def select_m_sweep(measures, m_values, config: MPosteriorConfig | None = None) -> dict:
    """Aggregate prefixes of the subset list for each candidate m and pick
    the candidate whose aggregate is the metric median of the sweep."""
    measures = list(measures)
    config = config or MPosteriorConfig()
    m_values = [int(v) for v in m_values]
    if not m_values:
        raise ValueError("need at least one candidate m")
    if any(v < 1 for v in m_values) or max(m_values) > len(measures):
        raise ValueError("candidate m values must lie in 1..len(measures)")
    spec = resolve_kernel(config.kernel, measures)
    candidates = []
    for m_val in m_values:
        agg, _ = m_posterior(measures[:m_val], replace(config, kernel=spec, m_subsets=None))
        candidates.append((m_val, agg))
    n = len(candidates)
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = mmd(candidates[i][1], candidates[j][1], spec)
    chosen = metric_median(dist)
    return {
        "m_values": m_values,
        "selected_m": candidates[chosen.index][0],
        "index": chosen.index,
        "eps_star": chosen.eps_star,
        "kernel": kernel_to_config(spec),
    }
