"""Experiment orchestration: simulate, diagnose, and report.

run_experiment executes one config over its seeds and writes, per seed, the
trace/tracking/residuals/support CSVs plus a summary JSON with a content
hash of the effective config.  compare_noise_study runs the same config
under a density-noise arm and an atomic-noise arm side by side.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import io as dio
from .errors import DivergedIterate, WindowExceedsTrace
from .measures import (
    TestFunctionFamily,
    averaged_measure,
    graph_support_fraction,
    stationarity_residual,
)
from .sa import NoiseModel, run_sa, validate_schedule
from .tracking import tracking_profile

_EXAMPLE1_NOTE = (
    "example1 interpretation: on y=0 the tangent convex combination of [1,-1] "
    "and [1,1] gives sliding velocity [1,0]; the value [1/sqrt(2),0] sometimes "
    "associated with this example is not an element of hull{[1,-1],[1,1]} and "
    "is not used."
)
_WINDOW_NOTE = (
    "window convention: m(n) is the smallest k with t(k) >= t(n) + T."
)


@dataclass
class SeedResult:
    seed: int
    diverged: bool = False
    final_state: list | None = None
    t_final: float | None = None
    tracking_errors: list | None = None
    residual_rows: list = dc_field(default_factory=list)
    support_rows: list = dc_field(default_factory=list)
    notes: list = dc_field(default_factory=list)


@dataclass
class ExperimentBundle:
    out_dir: str
    summary: dict
    seed_results: list
    any_diverged: bool


def _seed_paths(out_dir, seed):
    return {
        "trace": os.path.join(out_dir, f"trace_seed{seed}.csv"),
        "tracking": os.path.join(out_dir, f"tracking_seed{seed}.csv"),
        "residuals": os.path.join(out_dir, f"residuals_seed{seed}.csv"),
        "support": os.path.join(out_dir, f"support_seed{seed}.csv"),
    }


def _residual_rows(trace, family, checkpoints):
    rows = []
    c_anchor = None
    for n in checkpoints:
        measure = averaged_measure(trace, int(n))
        residuals = stationarity_residual(measure, family)
        t_n = float(trace.times[int(n)])
        if c_anchor is None:
            c_anchor = float(np.max(np.abs(residuals))) * t_n
        for i, r in enumerate(residuals):
            rows.append(
                {
                    "checkpoint_n": int(n),
                    "t_n": t_n,
                    "member_index": i,
                    "residual": float(r),
                    "envelope": c_anchor / t_n,
                }
            )
    return rows


def _support_rows(trace, field, eps_list):
    measure = averaged_measure(trace, trace.n_steps)
    rows = []
    for eps in eps_list:
        support = graph_support_fraction(measure, field, eps)
        rows.append(
            {
                "eps": float(eps),
                "filippov_fraction": support.filippov,
                "krasovskii_fraction": support.krasovskii,
            }
        )
    return rows


def interpretation_flags(field):
    flags = [_WINDOW_NOTE]
    if field.name == "example1":
        flags.append(_EXAMPLE1_NOTE)
    return flags


def run_single_seed(config, field, seed, out_dir):
    """One seed of the pipeline; returns a SeedResult and writes its CSVs."""
    paths = _seed_paths(out_dir, seed)
    result = SeedResult(seed=seed)
    try:
        trace = run_sa(
            field,
            config.x0,
            config.schedule,
            config.noise,
            config.n_steps,
            seed,
            blowup_bound=config.blowup_bound,
        )
    except DivergedIterate as exc:
        result.diverged = True
        result.notes.append(str(exc))
        return result
    dio.write_trace_csv(paths["trace"], trace)
    result.final_state = trace.states[-1].tolist()
    result.t_final = float(trace.times[-1])
    try:
        report = tracking_profile(
            trace,
            field,
            config.tracking.T,
            config.tracking.n_windows,
            config.tracking.dt,
            noise_flag=config.noise.density_flag,
        )
        dio.write_tracking_csv(paths["tracking"], report)
        result.tracking_errors = [float(e) for e in report.errors]
    except WindowExceedsTrace as exc:
        result.notes.append(f"tracking skipped: {exc}")
        dio.write_tracking_csv(paths["tracking"], [])
    full_measure = averaged_measure(trace, trace.n_steps)
    family = TestFunctionFamily.from_box(full_measure.box_states)
    result.residual_rows = _residual_rows(trace, family, config.measures.checkpoints)
    dio.write_residuals_csv(paths["residuals"], result.residual_rows)
    result.support_rows = _support_rows(trace, field, config.measures.eps)
    dio.write_support_csv(paths["support"], result.support_rows)
    return result


def run_experiment(config, out_dir=None, seeds=None, quiet=True):
    """Execute all seeds of a config and write the summary bundle."""
    out_dir = out_dir or config.output_dir
    seeds = list(seeds) if seeds is not None else list(config.seeds)
    os.makedirs(out_dir, exist_ok=True)
    field = config.build_field()
    schedule_diag = validate_schedule(config.schedule, min(config.n_steps, 100_000))
    results = []
    for seed in seeds:
        if not quiet:
            print(f"[driftlab] seed {seed} ...")
        results.append(run_single_seed(config, field, seed, out_dir))
    summary = {
        "config": config.effective_dict(),
        "config_sha256": config.content_hash(),
        "schedule_diagnostics": schedule_diag.to_dict(),
        "schedule_warning": schedule_diag.satisfies_conditions is False,
        "interpretation_flags": interpretation_flags(field),
        "seeds": [
            {
                "seed": r.seed,
                "diverged": r.diverged,
                "final_state": r.final_state,
                "t_final": r.t_final,
                "tracking_errors": r.tracking_errors,
                "support": r.support_rows,
                "notes": r.notes,
            }
            for r in results
        ],
    }
    dio.write_json(os.path.join(out_dir, "summary.json"), summary)
    any_diverged = any(r.diverged for r in results)
    if not quiet:
        status = "DIVERGED" if any_diverged else "ok"
        print(f"[driftlab] wrote {out_dir} ({status})")
    return ExperimentBundle(
        out_dir=out_dir, summary=summary, seed_results=results, any_diverged=any_diverged
    )


def _arm_noise_models(config):
    density = (
        config.noise
        if config.noise.kind == "gaussian"
        else NoiseModel(kind="gaussian", scale=config.noise.scale or 0.1)
    )
    atomic = (
        config.noise
        if config.noise.kind in ("rademacher", "zero")
        else NoiseModel(kind="zero", scale=0.0)
    )
    return {"density": density, "atomic": atomic}


@dataclass
class StudyResult:
    out_dir: str
    table: list
    flags: list
    any_diverged: bool


def compare_noise_study(config, out_dir=None, seeds=None, quiet=True):
    """The headline dichotomy experiment: identical runs under density noise
    and atomic noise, with side-by-side tracking and graph-support columns."""
    import copy

    out_dir = out_dir or config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    field = config.build_field()
    arms = _arm_noise_models(config)
    table = []
    any_diverged = False
    for arm_name, noise in arms.items():
        arm_config = copy.deepcopy(config)
        arm_config.noise = noise
        arm_dir = os.path.join(out_dir, f"arm_{arm_name}")
        bundle = run_experiment(arm_config, out_dir=arm_dir, seeds=seeds, quiet=quiet)
        any_diverged = any_diverged or bundle.any_diverged
        finals, t_finals, escapes = [], [], []
        fil_fracs, kra_fracs = [], []
        first_errs, last_errs = [], []
        for r in bundle.seed_results:
            if r.diverged:
                continue
            x_final = np.asarray(r.final_state)
            finals.append(float(np.linalg.norm(x_final)))
            t_finals.append(r.t_final)
            escapes.append(float(np.linalg.norm(x_final)) >= 0.5 * r.t_final)
            for row in r.support_rows:
                fil_fracs.append(row["filippov_fraction"])
                kra_fracs.append(row["krasovskii_fraction"])
            if r.tracking_errors:
                first_errs.append(r.tracking_errors[0])
                last_errs.append(r.tracking_errors[-1])
        table.append(
            {
                "arm": arm_name,
                "noise_kind": noise.kind,
                "density_flag": noise.density_flag,
                "escape_fraction": float(np.mean(escapes)) if escapes else float("nan"),
                "final_norm_median": float(np.median(finals)) if finals else float("nan"),
                "filippov_fraction_median": float(np.median(fil_fracs)) if fil_fracs else float("nan"),
                "krasovskii_fraction_median": float(np.median(kra_fracs)) if kra_fracs else float("nan"),
                "tracking_first_median": float(np.median(first_errs)) if first_errs else float("nan"),
                "tracking_last_median": float(np.median(last_errs)) if last_errs else float("nan"),
            }
        )
    flags = interpretation_flags(field)
    if not field.guards:
        flags.append("no dichotomy (smooth field)")
    header = list(table[0].keys())
    rows = [[_cell(row[k]) for k in header] for row in table]
    dio.atomic_write_text(
        os.path.join(out_dir, "study_comparison.csv"),
        ",".join(header) + "\n" + "\n".join(",".join(r) for r in rows) + "\n",
    )
    dio.write_json(
        os.path.join(out_dir, "study_summary.json"),
        {"table": table, "flags": flags, "config_sha256": config.content_hash()},
    )
    return StudyResult(out_dir=out_dir, table=table, flags=flags, any_diverged=any_diverged)


def _cell(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return dio.fmt(value)
    return str(value)
