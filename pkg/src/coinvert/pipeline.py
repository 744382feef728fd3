"""End-to-end experiment: synthesise -> noise -> aperture -> decompose -> indicators -> peaks."""

import json
import math
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig
from .decompose import LayerGeometry, assemble_system, eval_ui2, eval_v, solve_morozov
from .forward import (CauchyData, add_noise, incident_field, measurement_circle,
                      scattered_cauchy, synthesize_cauchy)
from .geometry import SourceSet, circle_mesh, partition_sources
from .imaging import (FarCircle, extract_peaks, indicator_I1, indicator_I2, indicator_I2hat,
                      indicator_pair, top_decile_distance, within_cell)

MANIFEST = "manifest.json"
_PEAK_MODE = {"I1": "maxima", "I2": "minima", "I2hat": "maxima", "ID": "maxima", "IC": "maxima"}


class StageError(RuntimeError):
    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def limited_aperture_mask(aperture, data: CauchyData) -> CauchyData:
    """Keep receivers with polar angle in [a, b); sub-arc trapezoid weights.

    The full circle is returned unchanged; on a proper sub-arc the two end
    receivers carry half weight.
    """
    if aperture is None:
        return data
    a, b = aperture
    if not 0 <= a < b <= 2 * math.pi + 1e-12:
        raise ValueError("aperture must satisfy 0 <= a < b <= 2 pi")
    n = len(data.u)
    theta = data.angles if data.angles is not None else \
        np.mod(np.arctan2(data.receivers[:, 1], data.receivers[:, 0]), 2 * math.pi)
    step = 2 * math.pi / n
    if b - a >= 2 * math.pi - 0.5 * step:
        return data
    tol = 1e-9 * step
    keep = (theta >= a - tol) & (theta < b - tol)
    if not keep.any():
        raise ValueError("aperture contains no receivers")
    idx = np.flatnonzero(keep)
    w = data.weights[idx].copy()
    if len(idx) > 1:
        w[0] *= 0.5
        w[-1] *= 0.5
    return CauchyData(data.receivers[idx], data.normals[idx], data.u[idx], data.du[idx], w,
                      theta[idx])


def _receiver_template(cfg):
    x, nrm, w, theta = measurement_circle(cfg.receivers, cfg.radius)
    zero = np.zeros(cfg.receivers, dtype=complex)
    return CauchyData(x, nrm, zero, zero.copy(), w, theta)


def _rel_error(a, b, w):
    den = math.sqrt(float(np.sum(w * np.abs(b) ** 2)))
    num = math.sqrt(float(np.sum(w * np.abs(a - b) ** 2)))
    return num / den if den > 0 else num


def _peak_record(peaks, grid, truth):
    rec = {
        "points": [[float(p[0]), float(p[1])] for p in peaks.points],
        "values": [float(v) for v in peaks.values],
    }
    if truth is not None:
        rec["matched"] = [bool(within_cell(z, peaks, grid)) for z in truth]
    return rec


class _Run:
    def __init__(self, cfg: ExperimentConfig, out_dir):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.derived = {}

    def write(self, name, writer, *args, **kw):
        path = self.out / name
        writer(*args, path, **kw)
        self.files.append(name)
        return path

    def manifest(self, status, stage=None, error=None):
        m = {
            "config": self.cfg.to_dict(),
            "derived": self.derived,
            "files": {name: io.file_digest(self.out / name) for name in sorted(self.files)},
            "status": status,
        }
        if stage is not None:
            m["failed_stage"] = stage
            m["error"] = error
        text = json.dumps(m, sort_keys=True, indent=2, allow_nan=False) + "\n"
        (self.out / MANIFEST).write_text(text)
        return json.loads(text)


def run_experiment(cfg: ExperimentConfig, out_dir):
    """Run every stage, write CSVs / heatmaps / manifest and return the manifest.

    Raises:
        StageError: tagged with the failing stage; the manifest on disk then
            carries ``status = "failed"`` and the outputs written so far.
    """
    run = _Run(cfg, out_dir)
    stage = "config"
    try:
        stage = "synthesize"
        obstacle = cfg.build_obstacle()
        sources = SourceSet(cfg.source_points, cfg.radius, tuple(obstacle.curves))
        s1, s2 = partition_sources(sources)
        template = _receiver_template(cfg)
        aux = cfg.aux_points()
        clean = None
        if cfg.measurements:
            data = io.read_cauchy_csv(cfg.measurements)
        else:
            clean = synthesize_cauchy(obstacle, sources.points, cfg.k, cfg.receivers, cfg.radius)
            run.write("cauchy_clean.csv", io.write_cauchy_csv, clean)
        aux_data = []
        if len(aux) and {"ID", "IC"} & set(cfg.indicators) and clean is not None:
            aux_data = scattered_cauchy(obstacle, aux, cfg.k, template)

        stage = "noise"
        if clean is not None:
            data = add_noise(clean, cfg.noise, cfg.seed)
            aux_data = [add_noise(d, cfg.noise, [cfg.seed, j + 1]) for j, d in enumerate(aux_data)]
        run.write("cauchy_noisy.csv", io.write_cauchy_csv, data)

        stage = "aperture"
        data = limited_aperture_mask(cfg.aperture, data)
        aux_data = [limited_aperture_mask(cfg.aperture, d) for d in aux_data]
        run.derived["receivers_used"] = int(len(data.u))

        stage = "decompose"
        geom = LayerGeometry(data.receivers, data.normals, data.weights, cfg.radius,
                             circle_mesh(cfg.r1, cfg.layer_nodes), circle_mesh(cfg.r2, cfg.layer_nodes))
        geom.check_sources(s1, s2, obstacle)
        system = assemble_system(geom, cfg.k, cfg.derivative_scale)
        g = system.rhs(data)
        if clean is not None:
            masked_clean = limited_aperture_mask(cfg.aperture, clean)
            target = system.data_norm(g - system.rhs(masked_clean))
        else:
            target = 0.05 / math.sqrt(3.0) * system.data_norm(g)
        result = solve_morozov(system, data, target)
        dens = result.densities
        run.derived["regularization"] = {
            "alpha": result.alpha, "discrepancy": result.discrepancy,
            "target": result.target, "status": result.status,
        }
        if clean is not None:
            x, w = masked_clean.receivers, masked_clean.weights
            ui2_true = incident_field(x, s2, cfg.k).sum(axis=1) if len(s2) else np.zeros(len(x), complex)
            v_true = masked_clean.u - ui2_true
            run.derived["decomposition_error"] = {
                "v": _rel_error(eval_v(dens, geom, x, cfg.k), v_true, w),
                "ui2": _rel_error(eval_ui2(dens, geom, x, cfg.k), ui2_true, w),
            }

        stage = "indicators"
        fields = {}
        if "I1" in cfg.indicators:
            fields["I1"] = indicator_I1(dens, geom, FarCircle(cfg.far_radius), cfg.k, cfg.grid("t1"))
        if "I2" in cfg.indicators:
            fields["I2"] = indicator_I2(dens, geom, cfg.k, cfg.grid("t2"))
        if "I2hat" in cfg.indicators:
            fields["I2hat"] = indicator_I2hat(dens, geom, cfg.k, cfg.grid("t2"))
        if aux_data and ({"ID", "IC"} & set(cfg.indicators)):
            fd, fc = indicator_pair(aux_data, cfg.k, cfg.grid("t3"))
            for f in (fd, fc):
                if f.kind in cfg.indicators:
                    fields[f.kind] = f
        curves = obstacle.curves if cfg.overlay_boundary else ()
        for kind in sorted(fields):
            run.write(f"{kind}.csv", io.emit_field_csv, fields[kind])
            run.write(f"{kind}.ppm", io.emit_heatmap, fields[kind], cmap=cfg.colormap, curves=curves)

        stage = "peaks"
        truth = {"I1": s1, "I2": s2, "I2hat": s2}
        peaks = {}
        for kind in sorted(fields):
            fld = fields[kind]
            mode = _PEAK_MODE[kind]
            if kind in truth:
                n_true = len(truth[kind])
                if n_true == 0:
                    continue
                p = extract_peaks(fld, mode, threshold_ratio=cfg.peak_threshold)
                top = extract_peaks(fld, mode, count=n_true, threshold_ratio=cfg.peak_threshold)
                peaks[kind] = {"default": _peak_record(p, fld.grid, truth[kind]),
                               "top_n": _peak_record(top, fld.grid, truth[kind])}
            elif not obstacle.empty:
                mean_d, max_d = top_decile_distance(fld, obstacle.curves)
                peaks[kind] = {"top_decile_distance": {"mean": mean_d, "max": max_d}}
        run.derived["peaks"] = peaks
        run.derived["truth"] = {"S1": s1.tolist(), "S2": s2.tolist(), "aux": aux.tolist()}
        stage = "serialize"
        return run.manifest("ok")
    except Exception as exc:
        run.manifest("failed", stage, f"{type(exc).__name__}: {exc}")
        raise StageError(stage, str(exc)) from exc
