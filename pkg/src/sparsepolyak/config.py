"""Experiment configuration: flat ``section.key = value`` text files.

The format is line-oriented: one ``key = value`` assignment per line,
``#`` starts a comment, blank lines are ignored.  Keys are dotted
(``design.omega``), values are typed per the schema below, and unknown
keys are rejected outright so typos cannot silently fall back to
defaults.  Integer-list values are comma separated (``250,500,1000``).

Derived defaults: a zero/absent sample count becomes
``ceil(n_factor * s_star * ln(d))``, the operator sparsity defaults to
``2 * s_star``, and the grid defaults to ``s_star`` scaled by
{1, 4/3, 5/3, 2, 7/3} mirroring the benchmark grid pattern.

`schema_text` renders the shipped ``config-schema.txt``.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .objectives import LINEAR, LOGISTIC
from .optimizer import CLASSIC_POLYAK, FIXED, SPARSE_POLYAK, WIDTH_2S, WIDTH_S
from .synthdata import DesignSpec, NoiseSpec, TruthSpec
from .thresholding import HT, RT


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


_GRID_PATTERN = (1.0, 4.0 / 3.0, 5.0 / 3.0, 2.0, 7.0 / 3.0)

# key -> (type tag, default, help)
SCHEMA = {
    "design.n": ("int", 0, "sample count; 0 derives ceil(n_factor * s_star * ln d)"),
    "design.d": ("int", 1000, "ambient dimension"),
    "design.omega": ("float", 0.5, "AR(1) feature correlation in [0, 1)"),
    "design.column_normalize": ("bool", False, "rescale columns to ||X_j||/sqrt(n) = 1"),
    "design.n_factor": ("float", 5.0, "multiplier used when deriving n"),
    "truth.s_star": ("int", 20, "ground-truth support size"),
    "noise.family": ("str", LINEAR, "response family: linear | logistic"),
    "noise.sigma": ("float", 0.5, "additive noise scale (linear family only)"),
    "operator.kind": ("str", HT, "sparsifying operator: ht | rt"),
    "operator.s": ("int", 0, "iterate sparsity level; 0 derives 2 * s_star"),
    "step.kind": ("str", SPARSE_POLYAK, "sparse_polyak | classic_polyak | fixed"),
    "step.ht_width": ("str", "auto", "step-rule restriction: auto | s | 2s"),
    "step.fixed_gamma": ("float", 0.0, "fixed step size; 0 derives 1/L_hat from the design"),
    "step.f_hat": ("str", "target", "'target' for f(theta*), or a float literal"),
    "run.max_iters": ("int", 1500, "iteration budget for single runs"),
    "run.stop_tol": ("float", -1.0, "stop when f - f_hat <= tol; negative uses 1e-12 (1 + |f_hat|)"),
    "run.seed": ("int", 0, "seed for single runs"),
    "grid.s_values": ("intlist", [], "sparsity grid; empty derives the scaled default pattern"),
    "grid.seeds": ("intlist", list(range(11)), "seeds for grid / sweep medians"),
    "grid.max_iters": ("int", 0, "iteration budget for grid cells; 0 uses run.max_iters"),
    "sweep.d_values": ("intlist", [250, 500, 1000], "dimensions for the rate-invariance sweep"),
    "sweep.max_iters": ("int", 0, "iteration budget for sweep cells; 0 uses run.max_iters"),
    "concavity.dims": ("intlist", [8], "vector dimensions for the concavity oracle"),
    "concavity.s_values": ("intlist", [1, 2, 3, 4], "operator sparsity levels for the oracle"),
    "concavity.trials": ("int", 100000, "random trials per oracle cell"),
    "check.pairs": ("int", 10000, "sampled pairs per assumption check"),
    "check.mu_scale": ("float", 1.0, "multiplier on mu, for checker power experiments"),
    "check.s": ("int", 0, "sparsity level for checker constants; 0 derives 2 * s_star"),
    "out.dir": ("str", "", "output root; empty uses $SPARSEPOLYAK_OUT or ./runs"),
}


def schema_text() -> str:
    lines = [
        "# Configuration schema: flat `key = value` lines, `#` comments.",
        "# Unknown keys are rejected.  Integer lists are comma separated.",
        "#",
        "# key                      type     default              meaning",
    ]
    for key, (tag, default, help_) in SCHEMA.items():
        if isinstance(default, list):
            shown = ",".join(str(v) for v in default) if default else "(derived)"
        elif isinstance(default, bool):
            shown = "true" if default else "false"
        else:
            shown = str(default)
        lines.append(f"{key:<26} {tag:<8} {shown:<20} {help_}")
    return "\n".join(lines) + "\n"


def _parse_value(key: str, raw: str):
    tag = SCHEMA[key][0]
    raw = raw.strip()
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "bool":
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if tag == "intlist":
            if not raw:
                return []
            return [int(part) for part in raw.split(",")]
        return raw
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {tag}") from exc


def parse_config_text(text: str) -> dict:
    """Parse assignments into a raw key -> value dict; unknown keys rejected."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.rstrip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r} (line {lineno})")
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (line {lineno})")
        values[key] = _parse_value(key, raw)
    return values


@dataclass
class ExperimentConfig:
    """Validated, fully derived experiment description."""

    design: DesignSpec
    truth: TruthSpec
    noise: NoiseSpec
    operator_kind: str
    operator_s: int
    step_kind: str
    ht_width: str  # "auto" resolved at build time against the family
    fixed_gamma: float | None
    f_hat: float | None  # None means "use the target value f(theta*)"
    max_iters: int
    stop_tol: float | None
    seed: int
    s_grid: list[int]
    seeds: list[int]
    grid_max_iters: int
    sweep_d_values: list[int]
    sweep_max_iters: int
    n_factor: float
    concavity_dims: list[int]
    concavity_s_values: list[int]
    concavity_trials: int
    check_pairs: int
    check_mu_scale: float
    check_s: int
    out_dir: str
    echo: dict = field(default_factory=dict)


def derived_n(n_factor: float, s_star: int, d: int) -> int:
    return int(np.ceil(n_factor * max(s_star, 1) * np.log(d))) if d > 1 else max(s_star, 1)


def default_s_grid(s_star: int, d: int) -> list[int]:
    grid = sorted({min(d, max(1, round(s_star * g))) for g in _GRID_PATTERN})
    return grid


def resolve_config(values: dict) -> ExperimentConfig:
    """Apply defaults, derive dependent values, validate cross-field constraints."""
    merged = {key: spec[1] for key, spec in SCHEMA.items()}
    merged.update(values)

    d = merged["design.d"]
    s_star = merged["truth.s_star"]
    family = merged["noise.family"]
    if family not in (LINEAR, LOGISTIC):
        raise ConfigError(f"noise.family: unknown family {family!r}")
    if merged["operator.kind"] not in (HT, RT):
        raise ConfigError(f"operator.kind: unknown operator {merged['operator.kind']!r}")
    if merged["step.kind"] not in (SPARSE_POLYAK, CLASSIC_POLYAK, FIXED):
        raise ConfigError(f"step.kind: unknown rule {merged['step.kind']!r}")
    if merged["step.ht_width"] not in ("auto", WIDTH_S, WIDTH_2S):
        raise ConfigError(f"step.ht_width: expected auto | s | 2s, got {merged['step.ht_width']!r}")

    n = merged["design.n"] or derived_n(merged["design.n_factor"], s_star, d)
    try:
        design = DesignSpec(
            n=n, d=d, omega=merged["design.omega"],
            column_normalize=merged["design.column_normalize"],
        )
    except ValueError as exc:
        raise ConfigError(f"design: {exc}") from exc
    try:
        truth = TruthSpec(d=d, s_star=s_star)
    except ValueError as exc:
        raise ConfigError(f"truth.s_star: {exc}") from exc
    try:
        noise = NoiseSpec(family=family, sigma=merged["noise.sigma"] if family == LINEAR else None)
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from exc

    operator_s = merged["operator.s"] or min(d, 2 * max(s_star, 1))
    if not 1 <= operator_s <= d:
        raise ConfigError(f"operator.s: need 1 <= s <= d = {d}, got {operator_s}")

    f_hat_raw = merged["step.f_hat"]
    if f_hat_raw == "target":
        f_hat = None
    else:
        try:
            f_hat = float(f_hat_raw)
        except ValueError as exc:
            raise ConfigError(f"step.f_hat: expected 'target' or a float, got {f_hat_raw!r}") from exc

    s_grid = merged["grid.s_values"] or default_s_grid(s_star, d)
    if any(not 1 <= s <= d for s in s_grid):
        raise ConfigError(f"grid.s_values: every s must lie in [1, {d}], got {s_grid}")
    seeds = merged["grid.seeds"]
    if not seeds:
        raise ConfigError("grid.seeds: seed list must be nonempty")

    if any(dv < 2 for dv in merged["sweep.d_values"]):
        raise ConfigError(f"sweep.d_values: dimensions must be >= 2, got {merged['sweep.d_values']}")
    for key in ("concavity.trials", "check.pairs", "run.max_iters"):
        if merged[key] < 1:
            raise ConfigError(f"{key}: must be >= 1, got {merged[key]}")
    if any(dim < 1 for dim in merged["concavity.dims"]):
        raise ConfigError("concavity.dims: dimensions must be >= 1")
    if any(s < 1 for s in merged["concavity.s_values"]):
        raise ConfigError("concavity.s_values: sparsity levels must be >= 1")
    if merged["check.mu_scale"] <= 0:
        raise ConfigError("check.mu_scale: must be positive")

    check_s = merged["check.s"] or min(d, 2 * max(s_star, 1))
    stop_tol = merged["run.stop_tol"]

    echo = dict(merged)
    echo["design.n"] = n
    echo["operator.s"] = operator_s
    echo["grid.s_values"] = list(s_grid)
    echo["check.s"] = check_s

    return ExperimentConfig(
        design=design,
        truth=truth,
        noise=noise,
        operator_kind=merged["operator.kind"],
        operator_s=operator_s,
        step_kind=merged["step.kind"],
        ht_width=merged["step.ht_width"],
        fixed_gamma=merged["step.fixed_gamma"] or None,
        f_hat=f_hat,
        max_iters=merged["run.max_iters"],
        stop_tol=None if stop_tol < 0 else stop_tol,
        seed=merged["run.seed"],
        s_grid=list(s_grid),
        seeds=list(seeds),
        grid_max_iters=merged["grid.max_iters"] or merged["run.max_iters"],
        sweep_d_values=list(merged["sweep.d_values"]),
        sweep_max_iters=merged["sweep.max_iters"] or merged["run.max_iters"],
        n_factor=merged["design.n_factor"],
        concavity_dims=list(merged["concavity.dims"]),
        concavity_s_values=list(merged["concavity.s_values"]),
        concavity_trials=merged["concavity.trials"],
        check_pairs=merged["check.pairs"],
        check_mu_scale=merged["check.mu_scale"],
        check_s=check_s,
        out_dir=merged["out.dir"],
        echo=echo,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return resolve_config(parse_config_text(path.read_text()))
