"""Command-line harness: single runs, operator grids, dimension sweeps, reports.

Subcommands
    run        one optimizer run; writes trace.csv, summary.json, manifest.json, dataset.npz
    grid       operator-vs-sparsity grid search; writes comparison.csv and a text summary
    sweep      dimension sweep at constant statistical difficulty; writes sweep.csv
    concavity  thresholding-operator concavity certification; writes concavity.json
    check      curvature-assumption sampling report; writes assumptions.json

Exit codes: 0 success, 2 configuration error, 3 numerical failure (a stalled
step rule or a non-finite objective evaluation).

Every artifact directory carries a manifest (config echo, seeds, schema and
toolkit versions, config hash) sufficient to reproduce it byte for byte;
output directories are named by the config hash.  The output root is, in
precedence order: --out, the config's out.dir, $SPARSEPOLYAK_OUT, ./runs.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, derived_n, load_config, resolve_config
from .dataio import (
    atomic_write_text,
    config_hash,
    dataset_to_npz,
    write_manifest,
    write_summary_json,
    write_trace_csv,
)
from .diagnostics import (
    active_median_step,
    check_rsc,
    check_rss,
    check_weak_rsc,
    default_ht_width,
    iters_to_plateau,
    make_instance,
    plateau_level,
    summarize_comparison,
)
from .objectives import ParamVector
from .optimizer import (
    CLASSIC_POLYAK,
    FIXED,
    SPARSE_POLYAK,
    OptimizerError,
    RunConfig,
    RunStatus,
    StepRule,
    fixed_step_lhat,
    run,
)
from .synthdata import DesignSpec, RegularityParams, TruthSpec, compute_regularity
from .thresholding import HT, RT, ThresholdSpec, empirical_relative_concavity

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _out_root(cfg: ExperimentConfig, cli_out: str | None) -> Path:
    if cli_out:
        return Path(cli_out)
    if cfg.out_dir:
        return Path(cfg.out_dir)
    return Path(os.environ.get("SPARSEPOLYAK_OUT", "runs"))


def _resolve_ht_width(cfg: ExperimentConfig) -> str:
    return default_ht_width(cfg.noise.family) if cfg.ht_width == "auto" else cfg.ht_width


def _build_step_rule(cfg: ExperimentConfig, f_hat_target: float) -> StepRule:
    f_hat = cfg.f_hat if cfg.f_hat is not None else f_hat_target
    if cfg.step_kind == FIXED:
        gamma = cfg.fixed_gamma or fixed_step_lhat(cfg.design, cfg.operator_s, max(cfg.truth.s_star, 1))
        return StepRule(kind=FIXED, f_hat=f_hat, fixed_gamma=gamma)
    return StepRule(kind=cfg.step_kind, f_hat=f_hat, ht_width=_resolve_ht_width(cfg))


def cmd_run(cfg: ExperimentConfig, out_root: Path) -> int:
    model, theta_star, f_target = make_instance(cfg.design, cfg.truth, cfg.noise, cfg.seed)
    rule = _build_step_rule(cfg, f_target)
    run_config = RunConfig(
        model=model,
        operator=ThresholdSpec(kind=cfg.operator_kind, s=cfg.operator_s),
        step_rule=rule,
        theta0=ParamVector(np.zeros(cfg.design.d)),
        max_iters=cfg.max_iters,
        stop_tol=cfg.stop_tol,
        seed=cfg.seed,
        theta_star=theta_star,
    )
    trace = run(run_config)

    out_dir = out_root / f"run_{config_hash(cfg.echo)}"
    write_trace_csv(trace, out_dir / "trace.csv")
    level = plateau_level(trace.error_sq)
    write_summary_json(
        out_dir / "summary.json", trace, cfg.echo,
        iters_to_floor=iters_to_plateau(trace.error_sq, level),
    )
    write_manifest(out_dir / "manifest.json", cfg.echo, [cfg.seed], __version__)
    dataset_to_npz(model.data, out_dir / "dataset.npz", cfg.noise.family, cfg.seed)
    print(f"run: status={trace.status.value} iters={trace.iters[-1]} "
          f"final_f={trace.f_value[-1]:.6g} final_error_sq={trace.error_sq[-1]:.6g}")
    print(f"artifacts: {out_dir}")
    if trace.status is RunStatus.STALLED_ZERO_GRADIENT:
        print("numerical failure: step rule stalled (positive gap, zero thresholded "
              "gradient); the target value is unattainable at this sparsity", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _grid_seed_task(args):
    """All grid cells for one seed; top level so worker pools can pickle it.

    The instance is generated once per seed and shared across cells; outputs
    are identical to per-cell generation because generators are pure in
    (spec, seed).
    """
    design, truth, noise, s_grid, seed, max_iters, step_kind, ht_width = args
    model, theta_star, f_hat = make_instance(design, truth, noise, seed)
    rows = []
    for kind in (HT, RT):
        for s in s_grid:
            config = RunConfig(
                model=model,
                operator=ThresholdSpec(kind=kind, s=s),
                step_rule=StepRule(kind=step_kind, f_hat=f_hat, ht_width=ht_width),
                theta0=ParamVector(np.zeros(design.d)),
                max_iters=max_iters,
                seed=seed,
                theta_star=theta_star,
            )
            trace = run(config)
            level = plateau_level(trace.error_sq)
            rows.append((kind, s, seed, float(trace.error_sq[-1]),
                         iters_to_plateau(trace.error_sq, level)))
    return rows


def _pmap(task, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [task(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, items))


def cmd_grid(cfg: ExperimentConfig, out_root: Path, workers: int) -> int:
    if cfg.step_kind == FIXED:
        raise ConfigError("step.kind: the grid comparison needs an adaptive rule "
                          "(sparse_polyak or classic_polyak)")
    ht_width = _resolve_ht_width(cfg)
    items = [
        (cfg.design, cfg.truth, cfg.noise, cfg.s_grid, seed, cfg.grid_max_iters,
         cfg.step_kind, ht_width)
        for seed in cfg.seeds
    ]
    detail = [row for rows in _pmap(_grid_seed_task, items, workers) for row in rows]
    rows = summarize_comparison(detail, cfg.s_grid)

    out_dir = out_root / f"grid_{config_hash(cfg.echo)}"
    csv_lines = ["operator,s,seed,final_error_sq,iters_to_floor"]
    for kind, s, seed, err, itf in detail:
        csv_lines.append(f"{kind},{s},{seed},{err:.12g},{itf}")
    atomic_write_text(out_dir / "comparison.csv", "\n".join(csv_lines) + "\n")

    lines = [
        f"{'operator':<10} {'best s':>8} {'median final error^2':>22} {'iters to floor':>16}",
    ]
    for kind in (HT, RT):
        row = rows[kind]
        lines.append(f"{kind:<10} {row.best_s:>8} {row.final_error_sq:>22.6g} {row.iters_to_floor:>16}")
    summary = "\n".join(lines) + "\n"
    atomic_write_text(out_dir / "summary.txt", summary)
    write_manifest(out_dir / "manifest.json", cfg.echo, cfg.seeds, __version__)
    print(summary, end="")
    print(f"artifacts: {out_dir}")
    return EXIT_OK


def _sweep_cell_task(args):
    """Sparse and classic runs for one (d, seed); returns sweep.csv rows."""
    base_design, truth_s_star, noise, s, d, seed, max_iters, n_factor, ht_width = args
    n = derived_n(n_factor, truth_s_star, d)
    design = DesignSpec(n=n, d=d, omega=base_design.omega,
                        column_normalize=base_design.column_normalize)
    truth = TruthSpec(d=d, s_star=truth_s_star)
    model, theta_star, f_hat = make_instance(design, truth, noise, seed)
    rows = []
    for method in (SPARSE_POLYAK, CLASSIC_POLYAK):
        config = RunConfig(
            model=model,
            operator=ThresholdSpec(kind=HT, s=min(s, d)),
            step_rule=StepRule(kind=method, f_hat=f_hat, ht_width=ht_width),
            theta0=ParamVector(np.zeros(d)),
            max_iters=max_iters,
            seed=seed,
            theta_star=theta_star,
        )
        trace = run(config)
        level = plateau_level(trace.error_sq)
        hit = iters_to_plateau(trace.error_sq, level)
        rows.append((d, n, seed, method, level, hit, active_median_step(trace.step_size, hit)))
    return rows


def cmd_sweep(cfg: ExperimentConfig, out_root: Path, workers: int) -> int:
    ht_width = _resolve_ht_width(cfg)
    items = [
        (cfg.design, cfg.truth.s_star, cfg.noise, cfg.operator_s, d, seed,
         cfg.sweep_max_iters, cfg.n_factor, ht_width)
        for d in cfg.sweep_d_values
        for seed in cfg.seeds
    ]
    detail = [row for rows in _pmap(_sweep_cell_task, items, workers) for row in rows]

    out_dir = out_root / f"sweep_{config_hash(cfg.echo)}"
    csv_lines = ["d,n,seed,method,plateau_error_sq,iters_to_plateau,median_active_step"]
    for d, n, seed, method, level, hit, step in detail:
        csv_lines.append(f"{d},{n},{seed},{method},{level:.12g},{hit},{step:.12g}")
    atomic_write_text(out_dir / "sweep.csv", "\n".join(csv_lines) + "\n")

    lines = [f"{'d':>6} {'n':>6} {'method':<16} {'median plateau':>15} {'median iters':>13} {'median step':>12}"]
    report = {}
    for d in cfg.sweep_d_values:
        for method in (SPARSE_POLYAK, CLASSIC_POLYAK):
            rows = [r for r in detail if r[0] == d and r[3] == method]
            med_level = float(np.median([r[4] for r in rows]))
            med_hit = float(np.median([r[5] for r in rows]))
            med_step = float(np.median([r[6] for r in rows]))
            report[(d, method)] = (med_level, med_hit, med_step)
            lines.append(f"{d:>6} {rows[0][1]:>6} {method:<16} {med_level:>15.6g} {med_hit:>13.0f} {med_step:>12.6g}")
    sparse_hits = [report[(d, SPARSE_POLYAK)][1] for d in cfg.sweep_d_values]
    if min(sparse_hits) > 0:
        lines.append(f"sparse polyak iters-to-plateau spread (max/min): {max(sparse_hits) / min(sparse_hits):.3f}")
    summary = "\n".join(lines) + "\n"
    atomic_write_text(out_dir / "summary.txt", summary)
    write_manifest(out_dir / "manifest.json", cfg.echo, cfg.seeds, __version__)
    print(summary, end="")
    print(f"artifacts: {out_dir}")
    return EXIT_OK


def _concavity_cell_task(args):
    kind, s, s_star, dim, trials, seed = args
    est = empirical_relative_concavity(ThresholdSpec(kind=kind, s=s), s_star, dim, trials, seed)
    bound = est.theoretical_bound
    return {
        "operator": kind,
        "dim": dim,
        "s": s,
        "s_star": s_star,
        "estimate": est.estimate,
        "theoretical_bound": bound,
        "trials": est.trials,
        "within_bound": None if bound is None else bool(est.estimate <= bound + 1e-9),
    }


def cmd_concavity(cfg: ExperimentConfig, out_root: Path, workers: int) -> int:
    items = [
        (kind, s, s_star, dim, cfg.concavity_trials, cfg.seed)
        for dim in cfg.concavity_dims
        for s in cfg.concavity_s_values
        if s <= dim
        for s_star in range(1, s + 1)
        for kind in (HT, RT)
    ]
    if not items:
        raise ConfigError("concavity: no valid (s, dim) cells; need s <= dim")
    cells = _pmap(_concavity_cell_task, items, workers)
    out_dir = out_root / f"concavity_{config_hash(cfg.echo)}"
    atomic_write_text(out_dir / "concavity.json", json.dumps(cells, indent=2) + "\n")
    write_manifest(out_dir / "manifest.json", cfg.echo, [cfg.seed], __version__)
    violations = [c for c in cells if c["within_bound"] is False]
    print(f"concavity: {len(cells)} cells, {len(violations)} bound violations")
    print(f"artifacts: {out_dir}")
    return EXIT_OK


def cmd_check(cfg: ExperimentConfig, out_root: Path) -> int:
    model, _, _ = make_instance(cfg.design, cfg.truth, cfg.noise, cfg.seed)
    base = compute_regularity(cfg.design, cfg.check_s)
    params = RegularityParams(mu=base.mu * cfg.check_mu_scale, L=base.L, tau=base.tau, s=base.s)
    reports = [
        check_rsc(model, params, cfg.check_pairs, cfg.seed),
        check_rss(model, params, cfg.check_pairs, cfg.seed),
        check_weak_rsc(model, params, cfg.check_pairs, cfg.seed),
    ]
    payload = {
        "constants": {"mu": params.mu, "L": params.L, "tau": params.tau, "s": params.s,
                      "mu_bar": params.mu_bar, "L_bar": params.L_bar,
                      "kappa_bar": params.kappa_bar, "mu_scale": cfg.check_mu_scale},
        "reports": [
            {"assumption": r.assumption, "pairs_tested": r.pairs_tested,
             "violations": r.violations, "worst_margin": r.worst_margin}
            for r in reports
        ],
    }
    out_dir = out_root / f"check_{config_hash(cfg.echo)}"
    atomic_write_text(out_dir / "assumptions.json", json.dumps(payload, indent=2) + "\n")
    write_manifest(out_dir / "manifest.json", cfg.echo, [cfg.seed], __version__)
    for r in reports:
        print(f"{r.assumption}: {r.violations}/{r.pairs_tested} violations, worst margin {r.worst_margin:.3g}")
    print(f"artifacts: {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsepolyak",
        description="Sparse Polyak benchmark harness (see config-schema.txt for config keys)",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "single optimizer run"),
        ("grid", "operator-vs-sparsity grid search"),
        ("sweep", "dimension sweep at constant statistical difficulty"),
        ("concavity", "concavity certification of the thresholding operators"),
        ("check", "curvature assumption sampling report"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=str, default=None, help="config file (defaults apply if omitted)")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--out", type=str, default=None, help="output root directory")
        p.add_argument("--workers", type=int, default=1, help="parallel workers for grid/sweep/concavity cells")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else resolve_config({})
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.echo["run.seed"] = args.seed
        out_root = _out_root(cfg, args.out)
        if args.command == "run":
            return cmd_run(cfg, out_root)
        if args.command == "grid":
            return cmd_grid(cfg, out_root, args.workers)
        if args.command == "sweep":
            return cmd_sweep(cfg, out_root, args.workers)
        if args.command == "concavity":
            return cmd_concavity(cfg, out_root, args.workers)
        return cmd_check(cfg, out_root)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OptimizerError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
