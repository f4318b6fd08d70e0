"""Thresholded gradient descent with adaptive (Polyak-type) step sizes.

One iteration moves against the gradient and re-sparsifies:

    theta_{t+1} = Phi_s(theta_t - gamma_t grad f(theta_t))

The sparse Polyak rule sets

    gamma_t = max{f(theta_t) - f_hat, 0} / (5 ||HT_w(grad f(theta_t))||^2)

with the gradient norm restricted to its w largest entries (w = s or 2s);
restricting the denominator keeps steps dimension-independent, where the
classic rule gap/||grad||^2 shrinks as the ambient dimension grows.  A
fixed-step baseline gamma = 1/L_hat with
L_hat = lambda_max(Sigma) (3/4 + (2s + s*)/(10 s)) is included for
benchmarking.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .objectives import ObjectiveModel, ParamVector, value_and_gradient
from .synthdata import DesignSpec, RegularityParams, design_spectrum
from .thresholding import ThresholdSpec, hard_threshold

SPARSE_POLYAK = "sparse_polyak"
CLASSIC_POLYAK = "classic_polyak"
FIXED = "fixed"
_STEP_KINDS = (SPARSE_POLYAK, CLASSIC_POLYAK, FIXED)

WIDTH_S = "s"
WIDTH_2S = "2s"


class StalledZeroGradientError(RuntimeError):
    """Positive objective gap with an exactly zero step denominator.

    Signals that the target value is unattainable along the directions the
    step rule can see; the run terminates with a distinct status instead of
    silently using a zero step.
    """


class OptimizerError(RuntimeError):
    """Evaluation failure during a run, tagged with the iteration index."""


@dataclass(frozen=True)
class StepRule:
    """Step-size rule: sparse Polyak, classic Polyak, or fixed."""

    kind: str
    f_hat: float | None = None
    ht_width: str = WIDTH_S
    fixed_gamma: float | None = None

    def __post_init__(self):
        if self.kind not in _STEP_KINDS:
            raise ValueError(f"unknown step rule {self.kind!r}; expected one of {_STEP_KINDS}")
        if self.kind in (SPARSE_POLYAK, CLASSIC_POLYAK):
            if self.f_hat is None or not np.isfinite(self.f_hat):
                raise ValueError(f"{self.kind} requires a finite target value f_hat")
        if self.kind == SPARSE_POLYAK and self.ht_width not in (WIDTH_S, WIDTH_2S):
            raise ValueError(f"ht_width must be '{WIDTH_S}' or '{WIDTH_2S}'")
        if self.kind == FIXED:
            if self.fixed_gamma is None or self.fixed_gamma <= 0:
                raise ValueError("fixed rule requires fixed_gamma > 0")


class RunStatus(enum.Enum):
    MAX_ITERS = "max_iters"
    CONVERGED = "converged"
    STALLED_ZERO_GRADIENT = "stalled_zero_gradient"


@dataclass
class RunConfig:
    """Everything `run` needs: model, operator, step rule, start, budget."""

    model: ObjectiveModel
    operator: ThresholdSpec
    step_rule: StepRule
    theta0: ParamVector
    max_iters: int
    stop_tol: float | None = None
    seed: int = 0
    theta_star: ParamVector | None = None

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.operator.s > self.model.dim:
            raise ValueError(f"operator sparsity {self.operator.s} exceeds dimension {self.model.dim}")
        if self.theta0.dim != self.model.dim:
            raise ValueError("theta0 dimension does not match the model")
        if self.theta0.nnz > self.operator.s:
            raise ValueError(f"initial point has {self.theta0.nnz} nonzeros, exceeding s = {self.operator.s}")
        if self.stop_tol is not None and self.stop_tol < 0:
            raise ValueError("stop_tol must be nonnegative")

    def resolved_stop_tol(self) -> float | None:
        """Default: 1e-12 relative to |f_hat| + 1; None when f_hat is unknown."""
        if self.stop_tol is not None:
            return self.stop_tol
        if self.step_rule.f_hat is None:
            return None
        return 1e-12 * (abs(self.step_rule.f_hat) + 1.0)


@dataclass
class RunTrace:
    """Per-iteration record of a run, including the starting point."""

    iters: np.ndarray
    f_value: np.ndarray
    step_size: np.ndarray
    grad_ht_norm_sq: np.ndarray
    error_sq: np.ndarray | None
    support_size: np.ndarray
    status: RunStatus
    final_theta: ParamVector
    iterates: list[np.ndarray] | None = None
    pre_threshold: list[np.ndarray] | None = None

    def __len__(self):
        return self.iters.size


def sparse_polyak_step(f_val: float, f_hat: float, grad: np.ndarray, ht_width: int) -> float:
    """Objective gap over 5x the squared top-``ht_width`` gradient norm.

    Returns 0 when the gap is nonpositive.  Raises
    StalledZeroGradientError when the gap is positive but the restricted
    gradient vanishes.
    """
    grad = np.asarray(grad, dtype=float)
    if grad.size < ht_width:
        raise ValueError(f"gradient has {grad.size} entries, fewer than ht_width = {ht_width}")
    gap = f_val - f_hat
    if gap <= 0.0:
        return 0.0
    g = hard_threshold(grad, ht_width)
    denom = 5.0 * float(np.dot(g, g))
    if denom == 0.0:
        raise StalledZeroGradientError("positive objective gap with zero thresholded gradient")
    return gap / denom


def classic_polyak_step(f_val: float, f_hat: float, grad: np.ndarray) -> float:
    """Standard Polyak rule gap / ||grad||^2 (no restriction, no factor 5)."""
    grad = np.asarray(grad, dtype=float)
    gap = f_val - f_hat
    if gap <= 0.0:
        return 0.0
    denom = float(np.dot(grad, grad))
    if denom == 0.0:
        raise StalledZeroGradientError("positive objective gap with zero gradient")
    return gap / denom


def lhat_gamma(lambda_max: float, s: int, s_star: int) -> float:
    """Fixed step 1 / L_hat with L_hat = lambda_max (3/4 + (2s + s*)/(10 s))."""
    if lambda_max <= 0.0:
        raise ValueError("lambda_max must be positive")
    if not 1 <= s_star <= s:
        raise ValueError(f"need 1 <= s_star <= s, got s_star={s_star}, s={s}")
    lhat = lambda_max * (0.75 + (2.0 * s + s_star) / (10.0 * s))
    return 1.0 / lhat


def fixed_step_lhat(design: DesignSpec, s: int, s_star: int) -> float:
    """Fixed step computed from the design's exact covariance spectrum."""
    _, lam_max = design_spectrum(design.omega, design.d)
    return lhat_gamma(lam_max, s, s_star)


def theoretical_floor(regularity: RegularityParams, grad_at_truth_ht_norm: float) -> float:
    """Squared radius 36 ||HT_s(grad f(theta_hat))||^2 / mu_bar^2.

    Below this radius the contraction guarantee no longer applies; iterates
    are only guaranteed to remain confined near it.
    """
    if not regularity.theory_applicable:
        raise ValueError("mu_bar <= 0: curvature constants do not apply at this sparsity")
    return 36.0 * grad_at_truth_ht_norm**2 / regularity.mu_bar**2


def _step_width(rule: StepRule, operator: ThresholdSpec, dim: int) -> int:
    w = operator.s if rule.ht_width == WIDTH_S else 2 * operator.s
    return min(w, dim)


def run(config: RunConfig, keep_iterates: bool = False) -> RunTrace:
    """Execute the thresholded descent loop and record every iteration.

    The trace row at t describes theta_t before the t-th update; the loop
    performs at most max_iters updates.  Runs stop early when the objective
    gap falls to the stop tolerance (CONVERGED) or the step rule stalls
    (STALLED_ZERO_GRADIENT); a stalled row records step size 0.

    With keep_iterates, every iterate and every pre-threshold gradient step
    is retained for invariant checks.
    """
    model, op, rule = config.model, config.operator, config.step_rule
    theta = config.theta0.values.copy()
    truth = None if config.theta_star is None else config.theta_star.values
    stop_tol = config.resolved_stop_tol()
    width = _step_width(rule, op, model.dim)

    rows_t, rows_f, rows_g, rows_ht, rows_err, rows_nnz = [], [], [], [], [], []
    iterates = [theta.copy()] if keep_iterates else None
    pre_threshold = [] if keep_iterates else None
    status = RunStatus.MAX_ITERS

    for t in range(config.max_iters + 1):
        try:
            f_t, g_t = value_and_gradient(model, theta)
            if not (np.isfinite(f_t) and np.all(np.isfinite(g_t))):
                raise FloatingPointError("non-finite objective or gradient")
        except Exception as exc:
            raise OptimizerError(f"evaluation failed at iteration {t}: {exc}") from exc

        ht_g = hard_threshold(g_t, width)
        ht_norm_sq = float(np.dot(ht_g, ht_g))

        stalled = False
        try:
            if rule.kind == SPARSE_POLYAK:
                gamma = sparse_polyak_step(f_t, rule.f_hat, g_t, width)
            elif rule.kind == CLASSIC_POLYAK:
                gamma = classic_polyak_step(f_t, rule.f_hat, g_t)
            else:
                gamma = rule.fixed_gamma
        except StalledZeroGradientError:
            gamma = 0.0
            stalled = True

        rows_t.append(t)
        rows_f.append(f_t)
        rows_g.append(gamma)
        rows_ht.append(ht_norm_sq)
        rows_nnz.append(int(np.count_nonzero(theta)))
        if truth is not None:
            diff = theta - truth
            rows_err.append(float(np.dot(diff, diff)))

        if stalled:
            status = RunStatus.STALLED_ZERO_GRADIENT
            break
        if rule.f_hat is not None and stop_tol is not None and f_t - rule.f_hat <= stop_tol:
            status = RunStatus.CONVERGED
            break
        if t == config.max_iters:
            status = RunStatus.MAX_ITERS
            break

        z = theta - gamma * g_t
        theta = op.apply(z)
        if keep_iterates:
            pre_threshold.append(z)
            iterates.append(theta.copy())

    return RunTrace(
        iters=np.array(rows_t, dtype=int),
        f_value=np.array(rows_f),
        step_size=np.array(rows_g),
        grad_ht_norm_sq=np.array(rows_ht),
        error_sq=None if truth is None else np.array(rows_err),
        support_size=np.array(rows_nnz, dtype=int),
        status=status,
        final_theta=ParamVector(theta),
        iterates=iterates,
        pre_threshold=pre_threshold,
    )
