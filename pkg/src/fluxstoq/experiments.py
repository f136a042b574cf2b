"""Pipelines behind the command-line interface.

Each pipeline returns a JSON-ready dict with a ``rows`` list; :func:`write_outputs`
turns it into ``results.json``, ``results.csv`` and ``plot_data.csv``.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .circuit import build_params, canonical_transform, potential_minimum
from .config import ConfigError, Diagnostic, ExperimentSpec, load_config
from .pimc import PimcConfig, run_pimc_flux, run_pimc_tim
from .qubits import (
    project_symmetric_energy_basis,
    project_two_qubit,
    thermal_energy_dense,
    tim_from_params,
)
from .spectral import FluxGrid, solve_spectrum, thermal_average_energy
from .stoquastic import check_stoquastic
from .units import beta_tilde

SERIES_CODES = {"flux": 1, "tim": 2, "flux_low_t": 3}


def point_seed(seed: int, series: str, m: int) -> int:
    """Deterministic 64-bit seed for one sweep point."""
    ss = np.random.SeedSequence([seed, SERIES_CODES[series], m])
    return int(ss.generate_state(1, np.uint64)[0])


def _grid(spec: ExperimentSpec, n: int):
    hw, pts = spec.value("grid", "half_width"), spec.value("grid", "points")
    if hw is None and pts is None:
        return None
    default = FluxGrid.default(n)
    return FluxGrid(hw if hw is not None else default.half_width, pts if pts is not None else default.points)


def _pimc_config(spec: ExperimentSpec, temperature: float, m: int, series: str) -> PimcConfig:
    scale = spec.value("pimc", "iteration_scale", 1.0)
    return PimcConfig(
        beta_tilde=beta_tilde(temperature),
        trotter_m=m,
        total_iterations=int(round(spec.value("pimc", "total_iterations") / scale)),
        equilibration_iterations=int(round(spec.value("pimc", "equilibration_iterations") / scale)),
        sample_stride=spec.value("pimc", "sample_stride"),
        local_update_prob=spec.value("pimc", "local_update_prob"),
        shift_halfwidth=spec.value("pimc", "shift_halfwidth"),
        rng_seed=point_seed(spec.value("experiment", "seed", 0), series, m),
        n_chains=spec.value("experiment", "n_chains", 1),
    )


def _ed_summary(result, temperatures):
    out = {
        "energies_ghz": result.energies.tolist(),
        "ground_energy_ghz": result.ground_energy,
        "u_min_ghz": result.u_min,
        "grid": {"half_width": result.grid.half_width, "points": result.grid.points},
    }
    for label, t in temperatures.items():
        out[f"thermal_energy_{label}_ghz"] = thermal_average_energy(result, beta_tilde(t))
    return out


def _row(series, m, temperature, stats, reference):
    return {
        "series": series,
        "trotter_m": m,
        "temperature_ghz": temperature,
        "estimate_ghz": stats.mean_energy,
        "std_error_ghz": stats.std_error,
        "exact_reference_ghz": reference,
        "autocorrelation_time_iterations": stats.autocorrelation_time,
        "acceptance_local": stats.acceptance_local,
        "acceptance_global": stats.acceptance_global,
    }


def _run_points(tasks, threads):
    """Run independent PIMC points on a bounded pool; results keep task order."""
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(pool.map(lambda task: task(), tasks))


def _flux_tasks(spec, params, series, temperature, ms, minimum):
    phi_min, u_min = minimum
    return [
        (lambda m=m: run_pimc_flux(params, _pimc_config(spec, temperature, m, series), start=phi_min, u_min=u_min))
        for m in ms
    ]


def _tim_tasks(spec, model, temperature, ms):
    return [(lambda m=m: run_pimc_tim(model, _pimc_config(spec, temperature, m, "tim"))) for m in ms]


def _sweep_block(spec, params, threads, *, flux_series, tim_ms=(), ed=None):
    """Flux-PIMC series [(name, temperature, Ms, reference)] plus an optional TIM series."""
    minimum = potential_minimum(params)
    tasks, labels = [], []
    for name, t, ms, ref in flux_series:
        tasks += _flux_tasks(spec, params, name, t, ms, minimum)
        labels += [(name, m, t, ref) for m in ms]
    tim_info = None
    if tim_ms:
        t = spec.temperature_ghz
        tim = tim_from_params(canonical_transform(params), _grid(spec, 1))
        tim_exact = thermal_energy_dense(tim, beta_tilde(t))
        tim_info = {"model": tim.to_dict(), "exact_thermal_energy_ghz": tim_exact}
        if ed is not None:
            tim_info["relative_deviation_from_circuit_ed"] = (tim_exact - ed) / ed
        tasks += _tim_tasks(spec, tim, t, tim_ms)
        labels += [("tim", m, t, ed if ed is not None else tim_exact) for m in tim_ms]
    stats = _run_points(tasks, threads)
    rows = [_row(name, m, t, st, ref) for (name, m, t, ref), st in zip(labels, stats)]
    return rows, tim_info, stats


def _ed_or_none(params, spec, n_states):
    if params.n > 2:
        return None
    return solve_spectrum(params, _grid(spec, params.n), n_states=n_states)


def pipeline_ed_only(spec, params, threads):
    result = solve_spectrum(params, _grid(spec, params.n), n_states=spec.value("experiment", "n_states"))
    out = {"spectrum": _ed_summary(result, {"t": spec.temperature_ghz})}
    e = result.energies
    if params.n == 1 and len(e) >= 3:
        out["tunnel_coupling_ghz"] = float(e[1] - e[0])
        out["gap_e2_minus_e1_ghz"] = float(e[2] - e[1])
        out["gap_e2_minus_e0_ghz"] = float(e[2] - e[0])
    out["rows"] = [{"level": i, "energy_ghz": float(v)} for i, v in enumerate(e)]
    return out


def pipeline_pimc_flux(spec, params, threads):
    t, m = spec.temperature_ghz, spec.value("pimc", "trotter_m")
    ed = _ed_or_none(params, spec, spec.value("experiment", "n_states"))
    ref = thermal_average_energy(ed, beta_tilde(t)) if ed is not None else None
    rows, _, stats = _sweep_block(spec, params, threads, flux_series=[("flux", t, [m], ref)])
    out = {"pimc": stats[0].to_dict(include_samples=spec.value("pimc", "record_samples")), "rows": rows}
    if ed is not None:
        out["spectrum"] = _ed_summary(ed, {"t": t})
    return out


def pipeline_pimc_tim(spec, params, threads):
    t, m = spec.temperature_ghz, spec.value("pimc", "trotter_m")
    ed = _ed_or_none(params, spec, spec.value("experiment", "n_states"))
    ref = thermal_average_energy(ed, beta_tilde(t)) if ed is not None else None
    rows, tim_info, stats = _sweep_block(spec, params, threads, flux_series=[], tim_ms=[m], ed=ref)
    out = {"tim": tim_info, "pimc": stats[0].to_dict(include_samples=spec.value("pimc", "record_samples")), "rows": rows}
    if ed is not None:
        out["spectrum"] = _ed_summary(ed, {"t": t})
    return out


def _single_qubit_spectra(params, spec):
    grid = _grid(spec, 1)
    return [solve_spectrum(params.single_qubit(k), grid, n_states=4) for k in range(params.n)]


def _projections(spec, params):
    singles = _single_qubit_spectra(params, spec)
    ec12, el12 = float(params.ec_matrix[0, 1]), float(params.el_matrix[0, 1])
    well = project_two_qubit(*singles, ec12, el12)
    out = {"well_basis": well}
    sym = params.with_phi_q(np.pi)
    sym_singles = [r if r.params.parity_symmetric else solve_spectrum(sym.single_qubit(k), r.grid, n_states=4)
                   for k, r in enumerate(singles)]
    out["energy_basis_symmetric"] = project_symmetric_energy_basis(*sym_singles, ec12, el12)
    out["tim"] = tim_from_params(canonical_transform(params), _grid(spec, 1))
    return out


def pipeline_project(spec, params, threads):
    models = _projections(spec, params)
    rows = []
    for name, model in models.items():
        for (k, l), beta in model.couplings:
            for a, pa in enumerate("XYZ"):
                for b, pb in enumerate("XYZ"):
                    if beta[a, b]:
                        rows.append({"model": name, "term": f"{pa}{k + 1}{pb}{l + 1}", "coefficient_ghz": float(beta[a, b])})
        for k, f in enumerate(model.local_fields()):
            for a, pa in enumerate("XYZ"):
                if f[a]:
                    rows.append({"model": name, "term": f"{pa}{k + 1}", "coefficient_ghz": float(f[a])})
    return {"models": {k: m.to_dict() for k, m in models.items()}, "rows": rows}


def pipeline_stoqcheck(spec, params, threads):
    models = _projections(spec, params)
    verdicts = {name: check_stoquastic(m).to_dict() for name, m in models.items()}
    beta = models["well_basis"].coupling(0, 1)
    return {
        "verdict": verdicts["well_basis"]["verdict"],
        "verdicts": verdicts,
        "models": {k: m.to_dict() for k, m in models.items()},
        "j_yy_ghz": float(beta[1, 1]),
        "j_zz_ghz": float(beta[2, 2]),
        "rows": [{"model": k, "verdict": v["verdict"], "transform": " ".join(v["transform"] or [])}
                 for k, v in verdicts.items()],
    }


def _paper_check(spec, ground):
    paper = spec.value("experiment", "paper_ground_energy_ghz")
    if paper is None:
        return {}
    return {"paper_ground_energy_ghz": paper, "ground_energy_relative_deviation": (ground - paper) / paper}


def pipeline_figure3(spec, params, threads):
    t = spec.temperature_ghz
    ed = solve_spectrum(params, _grid(spec, 2), n_states=spec.value("experiment", "n_states"))
    ref = thermal_average_energy(ed, beta_tilde(t))
    rows, tim_info, _ = _sweep_block(
        spec, params, threads,
        flux_series=[("flux", t, spec.value("experiment", "trotter_sweep"), ref)],
        tim_ms=spec.value("experiment", "tim_trotter_sweep", []), ed=ref,
    )
    return {"spectrum": _ed_summary(ed, {"t": t}), **_paper_check(spec, ed.ground_energy), "tim": tim_info, "rows": rows}


def pipeline_figure4(spec, params, threads):
    t_hi, t_lo = spec.temperature_ghz, spec.value("experiment", "low_temperature_ghz")
    ed = solve_spectrum(params, _grid(spec, 2), n_states=spec.value("experiment", "n_states"))
    ref_hi = thermal_average_energy(ed, beta_tilde(t_hi))
    ref_lo = thermal_average_energy(ed, beta_tilde(t_lo))
    rows, _, _ = _sweep_block(spec, params, threads, flux_series=[
        ("flux", t_hi, spec.value("experiment", "trotter_sweep"), ref_hi),
        ("flux_low_t", t_lo, spec.value("experiment", "low_trotter_sweep"), ref_lo),
    ])
    summary = _ed_summary(ed, {"t": t_hi, "low_t": t_lo})
    summary["low_t_thermal_minus_ground_relative"] = (ref_lo - ed.ground_energy) / ed.ground_energy
    return {"spectrum": summary, **_paper_check(spec, ed.ground_energy), "rows": rows}


def pipeline_convergence_sweep(spec, params, threads):
    t = spec.temperature_ghz
    ed = _ed_or_none(params, spec, spec.value("experiment", "n_states"))
    ref = thermal_average_energy(ed, beta_tilde(t)) if ed is not None else None
    rows, tim_info, _ = _sweep_block(
        spec, params, threads,
        flux_series=[("flux", t, spec.value("experiment", "trotter_sweep"), ref)],
        tim_ms=spec.value("experiment", "tim_trotter_sweep", []), ed=ref,
    )
    out = {"tim": tim_info, "rows": rows}
    if ed is not None:
        out["spectrum"] = _ed_summary(ed, {"t": t})
    return out


PIPELINE_FUNCS = {
    "ed_only": pipeline_ed_only,
    "pimc_flux": pipeline_pimc_flux,
    "pimc_tim": pipeline_pimc_tim,
    "project": pipeline_project,
    "stoqcheck": pipeline_stoqcheck,
    "figure3": pipeline_figure3,
    "figure4": pipeline_figure4,
    "convergence_sweep": pipeline_convergence_sweep,
}


def run_experiment(spec: ExperimentSpec, *, threads: int = 1) -> dict:
    params = build_params(spec.circuit)
    results = PIPELINE_FUNCS[spec.pipeline](spec, params, threads)
    rows = results.pop("rows", [])
    return {
        "pipeline": spec.pipeline,
        "config": spec.resolved,
        "hamiltonian": params.to_dict(),
        "results": _jsonable(results),
        "rows": _jsonable(rows),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_csv(path: Path, rows):
    keys = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in keys})


def write_outputs(report: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    rows = report["rows"]
    _write_csv(out / "results.csv", rows)
    plot_rows = [
        {"series": r["series"], "x_trotter_m": r["trotter_m"], "temperature_ghz": r["temperature_ghz"],
         "y_estimate_ghz": r["estimate_ghz"], "y_error_ghz": r["std_error_ghz"],
         "dashed_reference_ghz": r["exact_reference_ghz"]}
        for r in rows if "series" in r
    ]
    if not plot_rows:
        plot_rows = rows
    _write_csv(out / "plot_data.csv", plot_rows)
    return out


def run_sweep(path, out_dir, *, threads=1, overrides=None) -> list[dict]:
    """Run the config's pipeline once per value of its ``[sweep]`` section."""
    base = load_config(path, overrides)
    param, values = base.value("sweep", "parameter"), base.value("sweep", "values")
    if param is None:
        raise ConfigError([Diagnostic(None, "sweep", "config has no [sweep] section")])
    section, key = param.split(".", 1)
    summary = []
    for v in values:
        text = int(v) if float(v).is_integer() and key == "trotter_m" else v
        spec = load_config(path, {**(overrides or {}), (section, key): text})
        report = run_experiment(spec, threads=threads)
        sub = Path(out_dir) / f"{key}={text}"
        write_outputs(report, sub)
        summary.append({"parameter": param, "value": text, "results": report["results"], "rows": report["rows"]})
    flat = []
    for s in summary:
        for r in s["rows"]:
            flat.append({"parameter": param, "value": s["value"], **r})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.json").write_text(json.dumps(_jsonable({"config": base.resolved, "points": summary}),
                                               indent=2, sort_keys=True) + "\n")
    _write_csv(out / "sweep.csv", flat)
    return summary


__all__ = ["PIPELINE_FUNCS", "point_seed", "run_experiment", "run_sweep", "write_outputs"]
