"""Figure-analog experiment runners.

Each runner writes CSV files plus a ``manifest.json`` (written last) into
``<output_dir>/<name>/``.  CSV payloads depend only on the config and the
package version; the manifest timestamp is the only run-dependent field.
"""
from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .data import sample_dataset
from .dynamics import MHZ, FidelityKernel
from .kernel_ml import (
    LabeledDataset,
    assemble_gram,
    generalization_experiment,
    gram_spectrum_stats,
    target_function,
    train_gradient_descent,
    zero_target,
)
from .perturbation import perturbative_kernel, relative_error_report
from .product import ProductKernelSpec, bound_checks_csv, product_simulation_crosscheck, spectral_radius_bound_check


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


@dataclass
class RunWriter:
    """Collects artifacts for one run and writes the manifest."""

    directory: Path
    config: ExperimentConfig
    command: str
    files: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def __post_init__(self):
        self.directory.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name: str, header: list, rows, comments=()) -> Path:
        lines = [f"# {c}" for c in comments]
        lines.append(",".join(header))
        lines.extend(",".join(_fmt(v) for v in row) for row in rows)
        return self.write_text(name, "\n".join(lines) + "\n")

    def write_json(self, name: str, payload: dict) -> Path:
        return self.write_text(name, json.dumps(payload, indent=2, sort_keys=True) + "\n")

    def write_text(self, name: str, text: str) -> Path:
        path = self.directory / name
        data = text.encode("utf-8")
        path.write_bytes(data)
        self.files.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        return path

    def record_warnings(self, caught, context: str):
        seen = set()
        for w in caught:
            key = (w.category.__name__, str(w.message))
            if key not in seen:
                seen.add(key)
                self.notes.append({"context": context, "category": key[0], "message": key[1]})

    def finish(self) -> Path:
        manifest = {
            "command": self.command,
            "tool": "kerrlearn",
            "version": __version__,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "config": self.config.to_dict(),
            "files": self.files,
            "warnings": self.notes,
            "failures": self.failures,
        }
        path = self.directory / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _writer(cfg: ExperimentConfig, name: str) -> RunWriter:
    return RunWriter(Path(cfg.output_dir) / name, cfg, name)


def _target(cfg: ExperimentConfig):
    if cfg.target == "zero":
        return zero_target
    return partial(target_function, ranges=cfg.ranges)


def _exact_gram(points, cfg, kerr, writer, context):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        kernel = FidelityKernel(cfg.params(kerr), leakage_tol=cfg.leakage_tol)
        g = assemble_gram(points, kernel)
    writer.record_warnings(caught, context)
    return g, kernel.max_leakage()


def _perturbative_gram(points, cfg, kerr):
    p = cfg.params(kerr)
    return assemble_gram(points, lambda a, b: perturbative_kernel(a, b, p, cfg.quad_points).value,
                         source=f"perturbative(kerr={kerr!r})")


def _config_comment(cfg: ExperimentConfig) -> str:
    return (f"seed={cfg.seed} n_points={cfg.n_points} dim={cfg.dim} omega_mode={cfg.omega_mode!r} "
            f"units: rad/us, us")


def run_sample(cfg: ExperimentConfig) -> Path:
    w = _writer(cfg, "sample")
    pts = sample_dataset(cfg.seed, cfg.n_points, cfg.ranges)
    w.write_csv("dataset.csv", ["index", "omega_drive", "omega_laser", "time"],
                [(i, x.omega_drive, x.omega_laser, x.time) for i, x in enumerate(pts)],
                comments=[_config_comment(cfg), "PRNG: numpy PCG64"])
    return w.finish()


def run_gram(cfg: ExperimentConfig) -> Path:
    w = _writer(cfg, "gram")
    pts = sample_dataset(cfg.seed, cfg.n_points, cfg.ranges)
    g, leak = _exact_gram(pts, cfg, cfg.kerr, w, f"kerr={cfg.kerr!r}")
    w.write_csv("gram.csv", [f"k{j}" for j in range(g.n)], g.values.tolist(),
                comments=[_config_comment(cfg), f"kerr={cfg.kerr!r}", "fidelity Gram matrix, row i = point i"])
    w.write_json("gram_summary.json", {"kerr": cfg.kerr, "max_top_leakage": leak,
                                       "invariant_violations": g.check()})
    return w.finish()


def run_spectrum(cfg: ExperimentConfig) -> Path:
    w = _writer(cfg, "spectrum")
    pts = sample_dataset(cfg.seed, cfg.n_points, cfg.ranges)
    g, leak = _exact_gram(pts, cfg, cfg.kerr, w, f"kerr={cfg.kerr!r}")
    stats = gram_spectrum_stats(g, cfg.threshold)
    w.write_csv("spectrum.csv", ["rank", "eigenvalue"], enumerate(stats.eigenvalues),
                comments=[_config_comment(cfg), f"kerr={cfg.kerr!r}", "NTK (K @ K) eigenvalues, descending"])
    w.write_json("spectrum_summary.json", {
        "seed": cfg.seed, "kerr": cfg.kerr, "dim": cfg.dim, "omega_mode": cfg.omega_mode,
        "effective_dimension": stats.effective_dimension, "max_eigenvalue": stats.max_eigenvalue,
        "threshold": cfg.threshold, "max_top_leakage": leak,
    })
    return w.finish()


def run_fig1(cfg: ExperimentConfig) -> Path:
    """Effective dimension and largest NTK eigenvalue across the Kerr sweep."""
    w = _writer(cfg, "fig1")
    perturbative = cfg.fig1_method == "perturbative"
    n = cfg.n_points_perturbative if perturbative else cfg.n_points
    pts = sample_dataset(cfg.seed, n, cfg.ranges)
    rows, spectra = [], []
    for kerr in cfg.kerr_sweep:
        try:
            if perturbative:
                g, leak = _perturbative_gram(pts, cfg, kerr), math.nan
            else:
                g, leak = _exact_gram(pts, cfg, kerr, w, f"kerr={kerr!r}")
            stats = gram_spectrum_stats(g, cfg.threshold)
        except Exception as exc:
            w.failures.append({"kerr": kerr, "error": f"{type(exc).__name__}: {exc}"})
            continue
        rows.append((kerr, kerr / MHZ, stats.effective_dimension, stats.max_eigenvalue, leak))
        spectra.extend((kerr, r, ev) for r, ev in enumerate(stats.eigenvalues))
    w.write_csv("fig1.csv", ["kerr", "kerr_mhz", "effective_dimension", "max_eigenvalue", "max_top_leakage"], rows,
                comments=[_config_comment(cfg), f"method={cfg.fig1_method} n={n} threshold={cfg.threshold!r}",
                          "x: kerr (rad/us); y: NTK effective dimension and max NTK eigenvalue"])
    w.write_csv("fig1_spectra.csv", ["kerr", "rank", "eigenvalue"], spectra,
                comments=[_config_comment(cfg), "NTK eigenvalues per sweep point, descending"])
    return w.finish()


def run_fig2(cfg: ExperimentConfig) -> Path:
    """Perturbative vs exact kernel entries at a single small Kerr value."""
    w = _writer(cfg, "fig2")
    pts = sample_dataset(cfg.seed, cfg.n_points_perturbative, cfg.ranges)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = relative_error_report(pts, cfg.params(cfg.fig2_kerr), cfg.quad_points,
                                       leakage_tol=cfg.leakage_tol)
    w.record_warnings(caught, f"kerr={cfg.fig2_kerr!r}")
    body = report.to_csv()
    header = [f"# {_config_comment(cfg)}", f"# kerr={cfg.fig2_kerr!r}",
              "# y: relative error |K_pert - K_exact| / K_exact per matrix element (i <= j)"]
    w.write_text("fig2.csv", "\n".join(header) + "\n" + body)
    summary = report.summary()
    summary["excluded_pairs"] = [list(e) for e in report.excluded]
    w.write_json("fig2_summary.json", summary)
    return w.finish()


def run_fig3(cfg: ExperimentConfig) -> Path:
    """Residual decay along the top Gram eigenvector for each Kerr value."""
    w = _writer(cfg, "fig3")
    pts = sample_dataset(cfg.seed, cfg.n_points, cfg.ranges)
    ds = LabeledDataset.from_function(pts, _target(cfg))
    rows, rates = [], []
    for kerr in cfg.kerr_sweep:
        try:
            g, _ = _exact_gram(pts, cfg, kerr, w, f"kerr={kerr!r}")
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                rec = train_gradient_descent(ds, g, cfg.eta, cfg.steps, projection=0)
            w.record_warnings(caught, f"kerr={kerr!r}")
        except Exception as exc:
            w.failures.append({"kerr": kerr, "error": f"{type(exc).__name__}: {exc}"})
            continue
        rel = rec.projected_relative
        rows.extend((kerr, t, rec.residual_norms[t], rel[t]) for t in range(cfg.steps + 1))
        rates.append((kerr, rec.eigenvalue, rec.eigenvalue ** 2, 1 - cfg.eta * rec.eigenvalue ** 2))
    w.write_csv("fig3.csv", ["kerr", "step", "residual_norm", "projected_relative_residual"], rows,
                comments=[_config_comment(cfg), f"eta={cfg.eta!r} steps={cfg.steps}",
                          "x: step; y: |eps_t . v_max| / |eps_0 . v_max|, one series per kerr"])
    w.write_csv("fig3_rates.csv", ["kerr", "gram_max_eigenvalue", "ntk_max_eigenvalue", "decay_rate"], rates,
                comments=["decay_rate = 1 - eta * ntk_max_eigenvalue"])
    return w.finish()


def run_fig4(cfg: ExperimentConfig) -> Path:
    """Held-out loss L_B across the Kerr sweep."""
    w = _writer(cfg, "fig4")
    n = cfg.n_points - cfg.n_points % 2
    pts = sample_dataset(cfg.seed, n, cfg.ranges)
    target = _target(cfg)
    rows = []
    for kerr in cfg.kerr_sweep:
        try:
            g, _ = _exact_gram(pts, cfg, kerr, w, f"kerr={kerr!r}")
            loss = generalization_experiment(pts, g, target, cfg.eta, cfg.fig4_steps)
        except Exception as exc:
            w.failures.append({"kerr": kerr, "error": f"{type(exc).__name__}: {exc}"})
            continue
        rows.append((kerr, kerr / MHZ, loss))
    steps = "converged" if cfg.fig4_steps is None else cfg.fig4_steps
    w.write_csv("fig4.csv", ["kerr", "kerr_mhz", "generalization_error"], rows,
                comments=[_config_comment(cfg), f"target={cfg.target} eta={cfg.eta!r} steps={steps}",
                          "x: kerr (rad/us); y: L_B on the second half of the dataset"])
    return w.finish()


def run_product_check(cfg: ExperimentConfig) -> Path:
    """Spectral-radius bound on random Gram pairs plus the tensor-product oracle."""
    w = _writer(cfg, "product-check")
    if len(cfg.product_kerr) < 2:
        raise ValueError("product_kerr needs one value per subsystem (at least two)")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    checks = []
    n = cfg.n_points
    for _ in range(cfg.product_trials):
        factors = []
        for kerr in cfg.product_kerr:
            sub_seed = int(rng.integers(2 ** 63))
            pts = sample_dataset(sub_seed, n, cfg.ranges)
            g, _ = _exact_gram(pts, cfg, kerr, w, "bound")
            factors.append(g)
        checks.append(spectral_radius_bound_check(factors))
    w.write_text("product.csv", f"# {_config_comment(cfg)}\n# bound_margin = prod(rho_factor) - rho_product\n"
                 + bound_checks_csv(checks))

    spec = ProductKernelSpec.consecutive([cfg.params(k).with_dim(cfg.product_dim) for k in cfg.product_kerr])
    sub_sets = [sample_dataset(cfg.seed + 1 + k, cfg.product_n, cfg.ranges) for k in range(len(cfg.product_kerr))]
    composite = [tuple(s[i] for s in sub_sets) for i in range(cfg.product_n)]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        deviation = product_simulation_crosscheck(spec, composite)
    w.record_warnings(caught, "oracle")
    w.write_json("product_summary.json", {
        "trials": len(checks), "bound_holds_all": all(c.bound_holds for c in checks),
        "min_margin": min(c.margin for c in checks), "oracle_dim": cfg.product_dim,
        "oracle_points": cfg.product_n, "oracle_max_deviation": deviation,
    })
    return w.finish()


RUNNERS = {
    "sample": run_sample,
    "gram": run_gram,
    "spectrum": run_spectrum,
    "fig1": run_fig1,
    "fig2": run_fig2,
    "fig3": run_fig3,
    "fig4": run_fig4,
    "product-check": run_product_check,
}
