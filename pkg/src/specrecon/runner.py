"""Experiment orchestration: runs a configured study, writes the delimited
report, the JSON summary, diagnostic SVGs, and a manifest of content hashes.

Trials fan out to a bounded thread pool (SPECRECON_THREADS, default 4); each
trial draws from its own counter-keyed stream, so results are independent of
the parallelism degree.  Output writing is serialized in the main thread.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np

from .config import ExperimentConfig
from .errors import SpecreconError
from .lab import (
    ExperimentShape,
    GroundTruthModel,
    gen_data_matrix,
    perturbation_column,
    restricted_covariance_spectrum,
    sample_covariance,
    sym_eigen,
)
from .mp import MPLaw, limit_density_curve, LimitSpectrum, mp_cdf, mp_density
from .plots import emit_plot, fit_loglog_slope
from .reconstruct import interior_indices, invert_spectrum
from .secular import SecularProblem, interlacing_check, locality_profile, secular_solve
from .spectrum import Spectrum, SpectrumRole, ks_distance


def _model_from_config(cfg: ExperimentConfig) -> GroundTruthModel:
    if cfg.model == "identity":
        return GroundTruthModel.identity()
    if cfg.model == "linear":
        return GroundTruthModel.linear(cfg.model_lo, cfg.model_hi)
    if cfg.model == "geometric":
        return GroundTruthModel.geometric(cfg.model_lo, cfg.model_hi)
    return GroundTruthModel.two_cluster(cfg.model_hi, cfg.model_lo, cfg.model_fraction)


def _thread_count() -> int:
    raw = os.environ.get("SPECRECON_THREADS", "4")
    try:
        return max(1, int(raw))
    except ValueError:
        return 4


def _map_trials(fn: Callable[[int], object], trials: int) -> List[object]:
    """Order-preserving parallel map over trial indices."""
    workers = min(_thread_count(), trials)
    if workers == 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


def _sample_spectrum(shape: ExperimentShape, model: GroundTruthModel, trial: int) -> Spectrum:
    x = gen_data_matrix(shape, model, trial=trial)
    return sym_eigen(sample_covariance(x))


class _Artifacts:
    """Collects in-memory artifact payloads, then writes them plus a manifest."""

    def __init__(self, out_dir: str, formats):
        self.out_dir = Path(out_dir)
        self.formats = set(formats)
        self.texts: Dict[str, str] = {}
        self.plot_jobs: List[tuple] = []

    def add_text(self, name: str, text: str):
        ext = name.rsplit(".", 1)[-1]
        if name in ("manifest.json", "summary.json") or ext in self.formats:
            self.texts[name] = text

    def add_plot(self, name: str, series, kind: str):
        if "svg" in self.formats:
            self.plot_jobs.append((name, series, kind))

    def write_all(self) -> Dict[str, str]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        names = []
        for name in sorted(self.texts):
            (self.out_dir / name).write_text(self.texts[name])
            names.append(name)
        for name, series, kind in self.plot_jobs:
            emit_plot(series, kind, str(self.out_dir / name))
            names.append(name)
        manifest = {
            "files": {
                name: hashlib.sha256((self.out_dir / name).read_bytes()).hexdigest()
                for name in sorted(names)
            }
        }
        (self.out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        return manifest["files"]


def _summary(cfg: ExperimentConfig, payload: dict) -> str:
    return json.dumps(
        {"config": dataclasses.asdict(cfg), **payload}, indent=2, sort_keys=True
    ) + "\n"


# -- commands ----------------------------------------------------------------


def _cmd_simulate(cfg: ExperimentConfig, art: _Artifacts) -> dict:
    shape = ExperimentShape.from_ratio(cfg.p, cfg.c, cfg.seed)
    model = _model_from_config(cfg)
    truth = model.realize(cfg.p)
    spectra = _map_trials(lambda t: _sample_spectrum(shape, model, t).values, cfg.trials)
    stack = np.array(spectra)
    mean = stack.mean(axis=0)
    sd = stack.std(axis=0, ddof=1) if cfg.trials > 1 else np.zeros(cfg.p)
    lines = ["index,truth,sample_mean,sample_sd"]
    for j in range(cfg.p):
        lines.append(f"{j},{truth[j]!r},{float(mean[j])!r},{float(sd[j])!r}")
    art.add_text("report.csv", "\n".join(lines) + "\n")
    idx = np.arange(cfg.p)
    art.add_plot(
        "spectrum_overlay.svg",
        {"truth": (idx, truth.values), "sample mean": (idx, mean)},
        "spectrum_overlay",
    )
    return {
        "n": shape.n,
        "top_sample_mean": float(mean[0]),
        "trace_sample_mean": float(mean.sum()),
        "trace_truth": float(truth.values.sum()),
    }


def _cmd_reconstruct(cfg: ExperimentConfig, art: _Artifacts) -> dict:
    shape = ExperimentShape.from_ratio(cfg.p, cfg.c, cfg.seed)
    model = _model_from_config(cfg)
    truth = model.realize(cfg.p)

    def one(t):
        sample = _sample_spectrum(shape, model, t)
        return invert_spectrum(sample, shape.c, K=cfg.K, truth=truth)

    reports = _map_trials(one, cfg.trials)
    art.add_text("report.csv", reports[0].to_csv())
    med_raw = [r.median_raw_rel_err for r in reports]
    med_rec = [r.median_recon_rel_err for r in reports]
    wins = float(np.mean([r.median_recon_rel_err < r.median_raw_rel_err for r in reports]))
    idx = np.arange(cfg.p)
    art.add_plot(
        "spectrum_overlay.svg",
        {
            "truth": (idx, truth.values),
            "sample": (idx, np.array([r.sample for r in reports[0].rows])),
            "reconstructed": (idx, reports[0].estimates),
        },
        "spectrum_overlay",
    )
    return {
        "median_raw_rel_err": float(np.median(med_raw)),
        "median_recon_rel_err": float(np.median(med_rec)),
        "mean_raw_rel_err": float(np.mean([r.mean_raw_rel_err for r in reports])),
        "mean_recon_rel_err": float(np.mean([r.mean_recon_rel_err for r in reports])),
        "trial_win_fraction": wins,
    }


def _cmd_validate(cfg: ExperimentConfig, art: _Artifacts) -> dict:
    shape = ExperimentShape.from_ratio(cfg.p, cfg.c, cfg.seed)
    model = _model_from_config(cfg)

    def one(t):
        x = gen_data_matrix(shape, model, trial=t)
        i = t % cfg.p
        full = sym_eigen(sample_covariance(x))
        restricted = restricted_covariance_spectrum(x, i)
        ok_interlace = interlacing_check(full, restricted)
        col = perturbation_column(x, i)
        roots = secular_solve(SecularProblem.from_column(col))
        dev = float(np.max(np.abs(roots.values - full.values)) / max(full[0], 1.0))
        return ok_interlace, dev

    results = _map_trials(one, cfg.trials)
    interlace_pass = int(sum(1 for ok, _ in results if ok))
    max_dev = float(max(d for _, d in results))
    lines = ["trial,interlaces,secular_rel_dev"]
    for t, (ok, d) in enumerate(results):
        lines.append(f"{t},{int(ok)},{float(d)!r}")
    art.add_text("report.csv", "\n".join(lines) + "\n")
    sample = _sample_spectrum(shape, model, 0)
    idx = np.arange(cfg.p)
    art.add_plot(
        "spectrum_overlay.svg",
        {"truth": (idx, model.realize(cfg.p).values), "sample": (idx, sample.values)},
        "spectrum_overlay",
    )
    return {
        "interlacing_pass": interlace_pass,
        "interlacing_total": cfg.trials,
        "max_secular_rel_dev": max_dev,
        "all_ok": bool(interlace_pass == cfg.trials and max_dev < 1e-8),
    }


def _cmd_scaling(cfg: ExperimentConfig, art: _Artifacts) -> dict:
    model = _model_from_config(cfg)
    truth = model.realize(cfg.p)
    inner = interior_indices(cfg.p)

    def err_for_c(c):
        shape = ExperimentShape.from_ratio(cfg.p, c, cfg.seed)

        def one(t):
            sample = _sample_spectrum(shape, model, t)
            return float(np.mean(np.abs(sample.values[inner] - truth.values[inner])))

        return float(np.mean(_map_trials(one, cfg.trials)))

    cs = np.array(cfg.c_list, dtype=float)
    errs = np.array([err_for_c(c) for c in cs])
    slope = fit_loglog_slope(cs, errs) if cs.size >= 2 else float("nan")
    lines = ["c,mean_interior_abs_err"]
    for c, e in zip(cs, errs):
        lines.append(f"{float(c)!r},{float(e)!r}")
    art.add_text("report.csv", "\n".join(lines) + "\n")
    art.add_plot("error_vs_c.svg", {"interior error": (cs, errs)}, "error_vs_c")
    return {"c_list": list(cs), "errors": list(errs), "loglog_slope": slope}


def _cmd_mp_compare(cfg: ExperimentConfig, art: _Artifacts) -> dict:
    shape = ExperimentShape.from_ratio(cfg.p, cfg.c, cfg.seed)
    model = GroundTruthModel.identity()
    law = MPLaw.from_c(shape.c)

    def one(t):
        return ks_distance(_sample_spectrum(shape, model, t), lambda x: mp_cdf(x, law))

    ks = np.array(_map_trials(one, cfg.trials))
    lines = ["trial,ks"]
    for t, k in enumerate(ks):
        lines.append(f"{t},{float(k)!r}")
    art.add_text("report.csv", "\n".join(lines) + "\n")
    sample = _sample_spectrum(shape, model, 0)
    grid = np.linspace(max(law.a, 1e-3), law.b, 80)
    closed = np.array([mp_density(x, law) for x in grid])
    fp = limit_density_curve(LimitSpectrum.point_mass(1.0, shape.c), grid, eta=cfg.eta)
    hist, edges = np.histogram(sample.values, bins=40, density=True)
    centers = (edges[:-1] + edges[1:]) / 2
    art.add_plot(
        "density_overlay.svg",
        {
            "closed form": (grid, closed),
            "fixed point": (grid, fp),
            "empirical": (centers, hist),
        },
        "density_overlay",
    )
    curve_lines = ["x,density"] + [f"{float(x)!r},{float(d)!r}" for x, d in zip(grid, fp)]
    art.add_text("density.csv", "\n".join(curve_lines) + "\n")
    return {
        "ks_values": list(ks),
        "ks_median": float(np.median(ks)),
        "ks_max": float(np.max(ks)),
    }


def _cmd_insert(cfg: ExperimentConfig, art: _Artifacts) -> dict:
    shape = ExperimentShape.from_ratio(cfg.p, cfg.c, cfg.seed)
    model = _model_from_config(cfg)
    i = cfg.insert_index if cfg.insert_index >= 0 else cfg.p // 2

    def one(t):
        x = gen_data_matrix(shape, model, trial=t)
        full = sym_eigen(sample_covariance(x))
        restricted = restricted_covariance_spectrum(x, i)
        prof = locality_profile(full, restricted, i)
        return prof, full, restricted

    results = _map_trials(one, cfg.trials)
    prof0, full0, _ = results[0]
    lines = ["index,movement_ratio"]
    for j, r in enumerate(prof0.ratios):
        lines.append(f"{j},{float(r)!r}")
    art.add_text("report.csv", "\n".join(lines) + "\n")
    idx = np.arange(cfg.p)
    art.add_plot(
        "spectrum_overlay.svg",
        {"full": (idx, full0.values), "ratios (scaled)": (idx, prof0.ratios * full0[0])},
        "spectrum_overlay",
    )
    far = float(
        np.median([p.fraction_below(10.0, exclude_near=(i, 10)) for p, _, _ in results])
    )
    return {
        "insert_index": i,
        "median_insertion_index": float(np.median([p.insertion_index for p, _, _ in results])),
        "median_far_fraction_below_0.1": far,
    }


_COMMANDS = {
    "simulate": _cmd_simulate,
    "reconstruct": _cmd_reconstruct,
    "validate": _cmd_validate,
    "scaling": _cmd_scaling,
    "mp-compare": _cmd_mp_compare,
    "insert": _cmd_insert,
}


def run_experiment(cfg: ExperimentConfig) -> Dict[str, str]:
    """Run the configured study; returns the manifest name -> sha256 map."""
    art = _Artifacts(cfg.output_dir, cfg.formats)
    payload = _COMMANDS[cfg.command](cfg, art)
    art.add_text("summary.json", _summary(cfg, payload))
    return art.write_all()
