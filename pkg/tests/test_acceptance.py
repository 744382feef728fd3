"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Runs the full presets, so the module takes a few minutes.  Peak matching for
the source indicators uses the N most significant peaks in each region, N
being the number of true sources there; the default threshold-based peak sets
are recorded alongside for information.
"""

import math
import time

import numpy as np
import pytest
import scipy.special as sp

from coinvert import io
from coinvert.config import load_preset
from coinvert.decompose import LayerGeometry, assemble_system, decompose, solve_morozov
from coinvert.forward import (SOUND_HARD, SOUND_SOFT, add_noise, disk_scattered_series,
                              eval_scattered, eval_scattered_normal_derivative, incident_field,
                              measurement_circle, solve_scattering, synthesize_cauchy, unit_disk)
from coinvert.geometry import PolarGrid, SourceSet, partition_sources, polar_points
from coinvert.imaging import FarCircle, indicator_I1
from coinvert.pipeline import run_experiment
from coinvert.special import bessel01, hankel1


pytestmark = pytest.mark.slow


def rel_l2(a, b, w):
    return float(np.sqrt(np.sum(w * np.abs(a - b) ** 2) / np.sum(w * np.abs(b) ** 2)))


@pytest.fixture(scope="module")
def example1_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("example1")
    t0 = time.perf_counter()
    man = run_experiment(load_preset("example1"), out)
    return out, man, time.perf_counter() - t0


# 1 -------------------------------------------------------------------------

def test_criterion_01_special_functions(report):
    t = np.geomspace(1e-3, 1e3, 10_000)
    t0 = time.perf_counter()
    j0, j1, y0, y1 = bessel01(t)
    h0, h1 = hankel1(0, t), hankel1(1, t)
    elapsed = time.perf_counter() - t0
    err = max(np.max(np.abs(j0 - sp.j0(t))), np.max(np.abs(j1 - sp.j1(t))),
              np.max(np.abs(y0 - sp.y0(t))), np.max(np.abs(y1 - sp.y1(t))),
              np.max(np.abs(h0 - sp.hankel1(0, t))), np.max(np.abs(h1 - sp.hankel1(1, t))))
    # arbitrary-precision spot checks
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 30
    mp_err = 0.0
    for x in t[::50]:
        ref = [float(mpmath.besselj(0, x)), float(mpmath.besselj(1, x)),
               float(mpmath.bessely(0, x)), float(mpmath.bessely(1, x))]
        got = bessel01(np.array([x]))
        mp_err = max(mp_err, max(abs(float(g[0]) - r) for g, r in zip(got, ref)))
    wr = np.max(np.abs((j1 * y0 - j0 * y1) * (np.pi * t / 2) - 1))
    passed = err <= 1e-10 and mp_err <= 1e-10 and wr <= 1e-10 and elapsed < 5
    report(1, passed, f"max abs err {err:.1e} (scipy), {mp_err:.1e} (mpmath); "
                      f"Wronskian rel {wr:.1e}; {elapsed:.2f} s")
    assert passed


# 2 -------------------------------------------------------------------------

def test_criterion_02_forward_disk_oracle(report):
    x, nrm, w, _ = measurement_circle(512, 10.0)
    t0 = time.perf_counter()
    worst = {}
    for bc in (SOUND_SOFT, SOUND_HARD):
        for k, n in ((2.0, 64), (6.0, 64), (14.0, 128)):
            sol = solve_scattering(unit_disk(n, bc), k, [(3.0, 0.0)])
            ref_u, ref_du = disk_scattered_series(x, (3.0, 0.0), k, 1.0, bc, nrm)
            e = max(rel_l2(eval_scattered(sol, x), ref_u, w),
                    rel_l2(eval_scattered_normal_derivative(sol, x, nrm), ref_du, w))
            worst[(bc.label, k)] = e
    elapsed = time.perf_counter() - t0
    top = max(worst.values())
    passed = top <= 1e-6 and elapsed < 10
    report(2, passed, f"worst relative L2 error {top:.1e} over soft/hard, k in (2, 6, 14); {elapsed:.2f} s")
    assert passed


# 3 -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def example1_system():
    cfg = load_preset("example1")
    template = synthesize_cauchy(None, [(0.0, 5.0)], cfg.k, cfg.receivers, cfg.radius)
    geom = LayerGeometry.from_data(template, cfg.r1, cfg.r2, cfg.layer_nodes, cfg.layer_nodes)
    return cfg, template, assemble_system(geom, cfg.k)


def test_criterion_03_adjoint_identity(example1_system, report):
    _, _, system = example1_system
    rng = np.random.default_rng(2024)
    n = system.matrix.shape[1]
    worst = 0.0
    for _ in range(100):
        phi = rng.normal(size=n) + 1j * rng.normal(size=n)
        g = rng.normal(size=n) + 1j * rng.normal(size=n)
        lhs = system.data_inner(system.apply(phi), g)
        rhs = system.density_inner(phi, system.adjoint(g))
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    passed = worst <= 1e-12
    report(3, passed, f"max relative mismatch {worst:.1e} over 100 random pairs (k = 14)")
    assert passed


# 4 -------------------------------------------------------------------------

def test_criterion_04_morozov_manufactured(example1_system, report):
    _, template, system = example1_system
    t0 = time.perf_counter()
    system._svd = None
    rng = np.random.default_rng(7)
    n1, n2 = system.n1, system.n2
    t1, t2 = 2 * np.pi * np.arange(n1) / n1, 2 * np.pi * np.arange(n2) / n2
    phi = np.concatenate([np.exp(2j * np.sin(t1)), np.cos(3 * t2) + 0.5j * np.sin(t2)])
    g = system.apply(phi)
    gnorm = system.data_norm(g)
    m = system.n_receivers
    errs = []
    for level in (1e-4, 1e-2):
        eta = rng.normal(size=2 * m) + 1j * rng.normal(size=2 * m)
        eta *= level * gnorm / system.data_norm(eta)
        noisy = template.with_values(g[:m] + eta[:m], g[m:] + eta[m:])
        res = solve_morozov(system, noisy, system.data_norm(eta))
        errs.append(abs(res.discrepancy - res.target) / res.target)
    elapsed = time.perf_counter() - t0
    passed = max(errs) <= 0.01 and elapsed < 60
    report(4, passed, f"discrepancy relative miss {errs[0]:.1e} (1e-4), {errs[1]:.1e} (1e-2); {elapsed:.1f} s")
    assert passed


# 5 -------------------------------------------------------------------------

def test_criterion_05_decomposition_accuracy(example1_system, report):
    cfg, _, system = example1_system
    pts = cfg.source_points
    s1, s2 = partition_sources(SourceSet(pts, cfg.radius))
    x, w = system.geom.receivers, system.geom.weights
    ui2_true = incident_field(x, s2, cfg.k).sum(axis=1)

    def errors(data, clean, v_true, sys_=system):
        delta = sys_.data_norm(sys_.rhs(data) - sys_.rhs(clean))
        dec = decompose(sys_, data, target=delta)
        return rel_l2(dec.v(x), v_true, w), rel_l2(dec.ui2(x), ui2_true, w)

    pure = synthesize_cauchy(None, pts, cfg.k, cfg.receivers, cfg.radius)
    e_pure = errors(pure, pure, incident_field(x, s1, cfg.k).sum(axis=1))

    clean = synthesize_cauchy(cfg.build_obstacle(), pts, cfg.k, cfg.receivers, cfg.radius)
    v_true = clean.u - ui2_true
    table = {eps: [errors(add_noise(clean, eps, seed), clean, v_true) for seed in range(1, 6)]
             for eps in (0.01, 0.05)}
    worst = {eps: max(max(e) for e in rows) for eps, rows in table.items()}
    monotone = all(all(b >= a for a, b in zip(table[0.01][i], table[0.05][i])) for i in range(5))
    ok_pure = max(e_pure) <= 1e-3
    ok_noisy = worst[0.01] <= 0.05 and worst[0.05] <= 0.15
    passed = ok_pure and ok_noisy and monotone
    # information only: the optional 1/k scaling of the derivative rows (off by default)
    scaled = assemble_system(system.geom, cfg.k, derivative_scale=1.0 / cfg.k)
    info = {eps: max(max(errors(add_noise(clean, eps, s), clean, v_true, scaled)) for s in range(1, 6))
            for eps in (0.01, 0.05)}
    report(5, passed, f"noiseless pure sources v {e_pure[0]:.1e}, ui2 {e_pure[1]:.1e}; with obstacle worst "
                      f"{worst[0.01]:.3f} (eps 1%, limit 0.05), {worst[0.05]:.3f} (eps 5%, limit 0.15); "
                      f"nondecreasing in eps: {monotone}; [info, 1/k row scaling: "
                      f"{info[0.01]:.3f}, {info[0.05]:.3f}]")
    assert passed


# 6 -------------------------------------------------------------------------

def test_criterion_06_source_localization(example1_run, report):
    _, man, elapsed = example1_run
    peaks = man["derived"]["peaks"]
    m1 = peaks["I1"]["top_n"]["matched"]
    m2hat = peaks["I2hat"]["top_n"]["matched"]
    m2 = peaks["I2"]["top_n"]["matched"]
    both = [a and b for a, b in zip(m2hat, m2)]
    vals = peaks["I2hat"]["top_n"]["values"]
    in_band = all(0.15 <= v <= 0.35 for v in vals)
    default = {k: (sum(peaks[k]["default"]["matched"]), len(peaks[k]["default"]["points"]))
               for k in ("I1", "I2hat", "I2")}
    passed = all(m1) and all(both) and in_band and elapsed < 300
    report(6, passed, f"I1 {sum(m1)}/{len(m1)}, I2hat {sum(m2hat)}/{len(m2hat)}, I2 {sum(m2)}/{len(m2)} "
                      f"matched (top-N); I2hat peak values {min(vals):.3f}..{max(vals):.3f}; "
                      f"default peak sets matched/size {default}; run {elapsed:.0f} s")
    assert passed


# 7 -------------------------------------------------------------------------

def test_criterion_07_i1_consistency(report):
    k, z = 6.0, np.array([4.0, 0.0])
    data = synthesize_cauchy(None, [tuple(z)], k)
    system = assemble_system(LayerGeometry.from_data(data), k)
    dec = decompose(system, data, target=0.0)
    dr, dt = 0.07, 2 * np.pi / 300
    grid = PolarGrid(4.0 - 10 * dr, 4.0 + 10 * dr, 21, 21, True, True, -10 * dt, 11 * dt)
    far = FarCircle(200.0)
    fld = indicator_I1(dec.densities, dec.geom, far, k, grid)
    # independent oracle: composite Gauss-Legendre on the far circle
    nodes, weights = np.polynomial.legendre.leggauss(64)
    panels = 128
    a = np.repeat(np.arange(panels), 64) * 2 * np.pi / panels
    th = a + np.tile((nodes + 1) * np.pi / panels, panels)
    wq = np.tile(weights * np.pi / panels, panels) * far.radius
    x = far.radius * np.stack([np.cos(th), np.sin(th)], 1)
    y = polar_points(grid)
    dz = np.hypot(*(x - z).T)
    dy = np.hypot(x[None, :, 0] - y[:, None, 0], x[None, :, 1] - y[:, None, 1])
    oracle = (np.cos(k * (dz[None, :] - dy)) / np.sqrt(dz)[None, :]) @ wq / (2 * np.sqrt(2 * np.pi * k * far.radius))
    err = np.max(np.abs(fld.values - oracle))
    passed = err <= 0.05 * fld.values.max()
    report(7, passed, f"max |I1 - formula| = {err:.2e}, 0.05 max I1 = {0.05 * fld.values.max():.2e} (21x21 grid)")
    assert passed


# 8 -------------------------------------------------------------------------

def test_criterion_08_obstacle_imaging(example1_run, tmp_path, report):
    out, man, _ = example1_run
    td = man["derived"]["peaks"]["ID"]["top_decile_distance"]
    _, _, vid = io.read_field_csv(out / "ID.csv")
    _, _, vic = io.read_field_csv(out / "IC.csv")
    dominates = bool(np.all(vid >= vic))
    cfg = load_preset("example4").with_overrides(aux_count=5, indicators=("ID", "IC"))
    star = run_experiment(cfg, tmp_path)["derived"]["peaks"]
    sd, sc = star["ID"]["top_decile_distance"]["mean"], star["IC"]["top_decile_distance"]["mean"]
    passed = td["mean"] <= 0.2 and td["max"] <= 0.5 and dominates and sd <= sc
    report(8, passed, f"example1 ID top-decile distance mean {td['mean']:.3f} (<= 0.2), max {td['max']:.3f} "
                      f"(<= 0.5); ID >= IC: {dominates}; starfish M=5 mean ID {sd:.3f} vs IC {sc:.3f}")
    assert passed


# 9 -------------------------------------------------------------------------

def test_criterion_09_limited_aperture(tmp_path, report):
    aperture = (0.0, 1.5 * math.pi)
    cfg = load_preset("example2").with_overrides(aperture=aperture, indicators=("I1", "I2", "I2hat"))
    man = run_experiment(cfg, tmp_path)
    d = man["derived"]
    lit, shadow = [], []
    for kinds, key in ((("I1",), "S1"), (("I2hat", "I2"), "S2")):
        matched = np.all([d["peaks"][kd]["top_n"]["matched"] for kd in kinds], axis=0)
        for z, ok in zip(d["truth"][key], matched):
            ang = math.atan2(z[1], z[0]) % (2 * math.pi)
            (lit if aperture[0] <= ang < aperture[1] else shadow).append((key, bool(ok)))
    n_lit = sum(ok for _, ok in lit)
    n_shadow = sum(ok for _, ok in shadow)
    passed = n_lit == len(lit) and d["receivers_used"] == 384
    report(9, passed, f"{d['receivers_used']} receivers; illuminated sources localized {n_lit}/{len(lit)} "
                      f"(S1 {sum(ok for k_, ok in lit if k_ == 'S1')}/{sum(k_ == 'S1' for k_, _ in lit)}); "
                      f"shadow sector {n_shadow}/{len(shadow)} (misses permitted)")
    assert passed


# 10 ------------------------------------------------------------------------

def test_criterion_10_determinism(example1_run, tmp_path, report):
    out, man, _ = example1_run
    again = run_experiment(load_preset("example1"), tmp_path)
    names = sorted(p.name for p in out.iterdir())
    same_files = names == sorted(p.name for p in tmp_path.iterdir())
    identical = same_files and all((out / n).read_bytes() == (tmp_path / n).read_bytes() for n in names)
    passed = identical and again == man
    report(10, passed, f"{len(names)} output files bit-identical across two example1 runs: {identical}")
    assert passed
