"""Empirical verification: curvature assumptions, contraction, operator comparison.

The assumption checkers sample parameter pairs from a fixed mixture and
count violations of the restricted-curvature inequalities for supplied
constants (mu, L, tau).  They are samplers, not provers: zero violations
certifies the constants on the tested pairs only, while any violation is a
counterexample.

Plateau detection is measurement-based: the floor of a run is the median
of the last 10% of recorded squared errors, and iterations-to-floor is the
first time the error enters a small band above that level.
"""

from dataclasses import dataclass

import numpy as np

from .objectives import Dataset, LOGISTIC, ObjectiveModel, ParamVector, bregman_batch, target_value
from .optimizer import SPARSE_POLYAK, WIDTH_2S, WIDTH_S, RunConfig, RunTrace, StepRule, run
from .rng import STREAM_CHECK, substream
from .synthdata import (
    DesignSpec,
    NoiseSpec,
    RegularityParams,
    TruthSpec,
    generate_design,
    generate_responses,
    generate_truth,
)
from .thresholding import HT, RT, ThresholdSpec

RSC = "rsc"
RSS = "rss"
WEAK_RSC = "weak_rsc"

# Relative slack below which a sampled inequality counts as violated; guards
# against accumulation error in large Bregman sums.
_VIOLATION_RTOL = 1e-9


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of sampling one curvature inequality."""

    assumption: str
    pairs_tested: int
    violations: int
    worst_margin: float

    def __post_init__(self):
        if self.violations > self.pairs_tested:
            raise ValueError("violations cannot exceed pairs tested")


def _sample_pairs(dim: int, s: int, pairs: int, rng: np.random.Generator):
    """Pair mixture, 25% each: sparse far, sparse near, sparse/dense, dense near.

    Regime 0: independent s-sparse points (order-1 separation).
    Regime 1: s-sparse point plus a small sparse perturbation (small separation).
    Regime 2: one s-sparse point against a dense one (large separation).
    Regime 3: dense point plus a small dense perturbation.
    """
    Theta1 = np.zeros((pairs, dim))
    Theta2 = np.zeros((pairs, dim))
    s = min(s, dim)

    def sparse_rows(k):
        keys = rng.random((k, dim))
        idx = np.argpartition(keys, kth=s - 1, axis=1)[:, :s]
        out = np.zeros((k, dim))
        out[np.arange(k)[:, None], idx] = rng.standard_normal((k, s))
        return out

    regime = np.arange(pairs) % 4
    for r in range(4):
        rows = np.flatnonzero(regime == r)
        k = rows.size
        if k == 0:
            continue
        if r == 0:
            Theta2[rows] = sparse_rows(k)
            Theta1[rows] = sparse_rows(k)
        elif r == 1:
            base = sparse_rows(k)
            Theta2[rows] = base
            pert = sparse_rows(k) * 0.05
            Theta1[rows] = base + pert
        elif r == 2:
            Theta2[rows] = sparse_rows(k)
            Theta1[rows] = rng.standard_normal((k, dim))
        else:
            base = rng.standard_normal((k, dim))
            Theta2[rows] = base
            Theta1[rows] = base + 0.05 * rng.standard_normal((k, dim))
    return Theta1, Theta2


def _curvature_slacks(
    model: ObjectiveModel,
    params: RegularityParams,
    pairs: int,
    seed: int,
    assumption: str,
) -> np.ndarray:
    rng = substream(seed, STREAM_CHECK)
    Theta1, Theta2 = _sample_pairs(model.dim, params.s, pairs, rng)
    breg = bregman_batch(model, Theta1, Theta2)
    diff = Theta1 - Theta2
    n2 = np.einsum("ij,ij->i", diff, diff)
    n1_sq = np.sum(np.abs(diff), axis=1) ** 2

    if assumption == RSS:
        bound = 0.5 * params.L * n2 + 0.5 * params.tau * n1_sq
        return bound - breg
    if assumption == RSC:
        bound = 0.5 * params.mu * n2 - 0.5 * params.tau * n1_sq
        return breg - bound
    if assumption == WEAK_RSC:
        norm2 = np.sqrt(n2)
        quad = 0.5 * params.mu * n2 - 0.5 * params.tau * n1_sq
        with np.errstate(divide="ignore", invalid="ignore"):
            lin = norm2 * (0.5 * params.mu - 0.5 * params.tau * np.where(n2 > 0, n1_sq / n2, 0.0))
        bound = np.where(norm2 <= 1.0, quad, lin)
        return breg - bound
    raise ValueError(f"unknown assumption {assumption!r}")


def _report(assumption: str, slacks: np.ndarray) -> AssumptionReport:
    scale = 1.0 + np.abs(slacks)
    violations = int(np.sum(slacks < -_VIOLATION_RTOL * scale))
    return AssumptionReport(
        assumption=assumption,
        pairs_tested=int(slacks.size),
        violations=violations,
        worst_margin=float(slacks.min()) if slacks.size else 0.0,
    )


def check_rsc(model: ObjectiveModel, params: RegularityParams, pairs: int, seed: int) -> AssumptionReport:
    """Sample the lower curvature inequality with an l1-squared allowance."""
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    return _report(RSC, _curvature_slacks(model, params, pairs, seed, RSC))


def check_rss(model: ObjectiveModel, params: RegularityParams, pairs: int, seed: int) -> AssumptionReport:
    """Sample the upper curvature inequality with an l1-squared allowance."""
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    return _report(RSS, _curvature_slacks(model, params, pairs, seed, RSS))


def check_weak_rsc(model: ObjectiveModel, params: RegularityParams, pairs: int, seed: int) -> AssumptionReport:
    """Sample the two-branch lower inequality (linear growth for far pairs)."""
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    return _report(WEAK_RSC, _curvature_slacks(model, params, pairs, seed, WEAK_RSC))


def contraction_profile(trace: RunTrace, floor: float):
    """Per-iteration squared-error ratios restricted to iterations above a floor.

    Returns (ratios, summary) where summary holds the max and median ratio;
    both are NaN when no iteration qualifies.
    """
    if trace.error_sq is None:
        raise ValueError("trace has no squared-error record; run with a known truth")
    err = trace.error_sq
    ratios = []
    for t in range(err.size - 1):
        if err[t] >= floor and err[t] > 0.0:
            ratios.append(err[t + 1] / err[t])
    ratios = np.array(ratios)
    if ratios.size:
        summary = {"max": float(ratios.max()), "median": float(np.median(ratios))}
    else:
        summary = {"max": float("nan"), "median": float("nan")}
    return ratios, summary


def plateau_level(error_sq: np.ndarray) -> float:
    """Median of the last 10% of recorded squared errors."""
    error_sq = np.asarray(error_sq, dtype=float)
    if error_sq.size == 0:
        raise ValueError("empty error record")
    k = max(1, int(np.ceil(0.1 * error_sq.size)))
    return float(np.median(error_sq[-k:]))


def iters_to_plateau(error_sq: np.ndarray, level: float, rel_margin: float = 0.05) -> int:
    """First iteration whose squared error is within (1 + rel_margin) of the level."""
    error_sq = np.asarray(error_sq, dtype=float)
    hits = np.flatnonzero(error_sq <= (1.0 + rel_margin) * level)
    return int(hits[0]) if hits.size else int(error_sq.size - 1)


def active_median_step(step_size: np.ndarray, plateau_iter: int) -> float:
    """Median step size over the pre-plateau (progress-making) phase."""
    step_size = np.asarray(step_size, dtype=float)
    active = step_size[: max(1, plateau_iter)]
    return float(np.median(active))


def decomposition_margins(trace: RunTrace, theta_hat: ParamVector, eta_bound: float) -> np.ndarray:
    """Slack of the per-iteration thresholding-deviation inequality.

    For each update, with union support S = supp(theta_{t+1}) | supp(theta_hat)
    and pre-threshold point z = theta_t - gamma_t g_t, checks

        ||theta_{t+1} - theta_hat||^2 <= (1 + 4 eta) ||z|_S - theta_hat||^2

    returning rhs - lhs per iteration (meaningful for eta <= 1/4).  Requires
    a trace recorded with keep_iterates.
    """
    if trace.iterates is None or trace.pre_threshold is None:
        raise ValueError("trace was not recorded with keep_iterates=True")
    hat = theta_hat.values
    margins = []
    for z, nxt in zip(trace.pre_threshold, trace.iterates[1:]):
        union = np.union1d(np.flatnonzero(nxt), np.flatnonzero(hat))
        z_restricted = np.zeros_like(z)
        z_restricted[union] = z[union]
        lhs = float(np.sum((nxt - hat) ** 2))
        rhs = (1.0 + 4.0 * eta_bound) * float(np.sum((z_restricted - hat) ** 2))
        margins.append(rhs - lhs)
    return np.array(margins)


@dataclass(frozen=True)
class ComparisonRow:
    """Grid-search outcome for one operator."""

    operator: ThresholdSpec
    best_s: int
    final_error_sq: float
    iters_to_floor: int

    def __post_init__(self):
        if self.final_error_sq < 0:
            raise ValueError("final squared error must be nonnegative")


def make_instance(design: DesignSpec, truth: TruthSpec, noise: NoiseSpec, seed: int):
    """Generate (model, truth, target value) for one seed."""
    X = generate_design(design, seed)
    theta_star = generate_truth(truth, seed)
    y = generate_responses(noise.family, X, theta_star, noise, seed)
    model = ObjectiveModel(family=noise.family, data=Dataset(X=X, y=y))
    return model, theta_star, target_value(model, theta_star)


def default_ht_width(family: str) -> str:
    """Step-rule restriction width: 2s for logistic-type objectives, s otherwise."""
    return WIDTH_2S if family == LOGISTIC else WIDTH_S


def run_cell(
    design: DesignSpec,
    truth: TruthSpec,
    noise: NoiseSpec,
    op: ThresholdSpec,
    seed: int,
    max_iters: int,
    step_kind: str = SPARSE_POLYAK,
    fixed_gamma: float | None = None,
    ht_width: str | None = None,
) -> RunTrace:
    """One (operator, s, seed) run on a freshly generated instance."""
    model, theta_star, f_hat = make_instance(design, truth, noise, seed)
    rule = StepRule(
        kind=step_kind,
        f_hat=f_hat,
        ht_width=ht_width or default_ht_width(noise.family),
        fixed_gamma=fixed_gamma,
    )
    config = RunConfig(
        model=model,
        operator=op,
        step_rule=rule,
        theta0=ParamVector(np.zeros(design.d)),
        max_iters=max_iters,
        seed=seed,
        theta_star=theta_star,
    )
    return run(config)


def summarize_comparison(detail, s_grid: list[int]) -> dict[str, ComparisonRow]:
    """Reduce (kind, s, seed, final_error_sq, iters_to_floor) cells to one row per operator.

    best_s minimizes the median final squared error over seeds.
    """
    finals, floors = {}, {}
    for kind, s, _, err, itf in detail:
        finals.setdefault((kind, s), []).append(err)
        floors.setdefault((kind, s), []).append(itf)
    rows = {}
    for kind in (HT, RT):
        medians = {s: float(np.median(finals[(kind, s)])) for s in s_grid}
        best_s = min(s_grid, key=lambda s: medians[s])
        rows[kind] = ComparisonRow(
            operator=ThresholdSpec(kind=kind, s=best_s),
            best_s=best_s,
            final_error_sq=medians[best_s],
            iters_to_floor=int(np.median(floors[(kind, best_s)])),
        )
    return rows


def compare_operators(
    design: DesignSpec,
    truth: TruthSpec,
    noise: NoiseSpec,
    s_grid: list[int],
    seeds: list[int],
    max_iters: int,
    step_kind: str = SPARSE_POLYAK,
    ht_width: str | None = None,
):
    """Grid-search both operators over (s, seed) and pick each one's best s.

    Returns ({kind: ComparisonRow}, detail) where detail rows are
    (kind, s, seed, final_error_sq, iters_to_floor) for every cell, suitable
    for CSV export.
    """
    if not s_grid:
        raise ValueError("s grid must be nonempty")
    if not seeds:
        raise ValueError("seed list must be nonempty")
    detail = []
    for kind in (HT, RT):
        for s in s_grid:
            for seed in seeds:
                trace = run_cell(
                    design, truth, noise, ThresholdSpec(kind=kind, s=s), seed, max_iters,
                    step_kind=step_kind, ht_width=ht_width,
                )
                level = plateau_level(trace.error_sq)
                detail.append((kind, s, seed, float(trace.error_sq[-1]),
                               iters_to_plateau(trace.error_sq, level)))
    return summarize_comparison(detail, s_grid), detail
