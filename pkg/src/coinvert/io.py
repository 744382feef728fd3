"""Flat-file outputs: indicator CSVs, Cauchy data CSVs and P6 heatmaps."""

import csv
import hashlib

import numpy as np

from .forward import CauchyData

FIELD_HEADER = ("r", "theta", "x", "y", "value")
CAUCHY_HEADER = ("theta", "x", "y", "nx", "ny", "weight", "u_re", "u_im", "du_re", "du_im")

# anchor colours of a perceptually ordered dark-blue -> yellow table
_VIRIDIS_ANCHORS = np.array([
    [68, 1, 84], [72, 40, 120], [62, 74, 137], [49, 104, 142], [38, 130, 142],
    [31, 158, 137], [53, 183, 121], [110, 206, 88], [181, 222, 43], [253, 231, 37],
], dtype=float)
HEATMAP_SIZE = 600


def _fmt(v):
    return format(float(v), ".17g")


def emit_field_csv(fld, path):
    """Write ``r,theta,x,y,value`` rows in grid order (raw values)."""
    r, th = fld.grid.polar()
    pts = fld.points
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIELD_HEADER)
        for row in zip(r, th, pts[:, 0], pts[:, 1], fld.values):
            w.writerow([_fmt(v) for v in row])
    return path


def read_field_csv(path):
    """Return ``(r, theta, values)`` arrays from a field CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != FIELD_HEADER:
        raise ValueError(f"{path}: not an indicator field CSV")
    data = np.array(rows[1:], dtype=float).reshape(-1, 5)
    return data[:, 0], data[:, 1], data[:, 4]


def write_cauchy_csv(data: CauchyData, path):
    theta = data.angles if data.angles is not None else np.arctan2(data.receivers[:, 1], data.receivers[:, 0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CAUCHY_HEADER)
        for m in range(len(data.u)):
            w.writerow([_fmt(v) for v in (
                theta[m], data.receivers[m, 0], data.receivers[m, 1],
                data.normals[m, 0], data.normals[m, 1], data.weights[m],
                data.u[m].real, data.u[m].imag, data.du[m].real, data.du[m].imag)])
    return path


def read_cauchy_csv(path) -> CauchyData:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CAUCHY_HEADER:
        raise ValueError(f"{path}: not a Cauchy data CSV")
    a = np.array(rows[1:], dtype=float).reshape(-1, len(CAUCHY_HEADER))
    return CauchyData(a[:, 1:3].copy(), a[:, 3:5].copy(), a[:, 6] + 1j * a[:, 7],
                      a[:, 8] + 1j * a[:, 9], a[:, 5].copy(), a[:, 0].copy())


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def colormap(values, name="viridis"):
    """Map values in [0, 1] to uint8 RGB."""
    v = np.clip(values, 0.0, 1.0)
    if name == "gray":
        g = np.round(255 * v).astype(np.uint8)
        return np.stack([g, g, g], axis=-1)
    if name != "viridis":
        raise ValueError(f"unknown colormap {name!r}")
    pos = v * (len(_VIRIDIS_ANCHORS) - 1)
    lo = np.minimum(np.floor(pos).astype(int), len(_VIRIDIS_ANCHORS) - 2)
    frac = (pos - lo)[..., None]
    rgb = (1 - frac) * _VIRIDIS_ANCHORS[lo] + frac * _VIRIDIS_ANCHORS[lo + 1]
    return np.round(rgb).astype(np.uint8)


def _polar_raster(radii, angles, image, size, full_circle):
    """Nearest-neighbour resampling of a polar image onto a square frame."""
    r_grid, t_grid = np.meshgrid(radii, angles, indexing="ij")
    xs, ys = r_grid * np.cos(t_grid), r_grid * np.sin(t_grid)
    x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 0.5, y1 + 0.5
    px = x0 + (np.arange(size) + 0.5) * (x1 - x0) / size
    py = y1 - (np.arange(size) + 0.5) * (y1 - y0) / size  # row 0 at the top
    X, Y = np.meshgrid(px, py)
    R, T = np.hypot(X, Y), np.arctan2(Y, X)
    dr = radii[1] - radii[0] if len(radii) > 1 else 1.0
    dt = angles[1] - angles[0] if len(angles) > 1 else 2 * np.pi
    ir = np.rint((R - radii[0]) / dr).astype(int)
    rel = (T - angles[0]) % (2 * np.pi)
    it = np.rint(rel / dt).astype(int)
    if full_circle:
        it %= len(angles)
    inside = (ir >= 0) & (ir < len(radii)) & (it >= 0) & (it < len(angles))
    vals = np.zeros((size, size))
    vals[inside] = image[ir[inside], it[inside]]
    return vals, inside, (x0, x1, y0, y1)


def _overlay_dashed(rgb, curves, frame, dash=8):
    x0, x1, y0, y1 = frame
    size = rgb.shape[0]
    for curve in curves:
        pts = curve.polygon(4 * size)
        col = np.floor((pts[:, 0] - x0) / (x1 - x0) * size).astype(int)
        row = np.floor((y1 - pts[:, 1]) / (y1 - y0) * size).astype(int)
        on = (np.arange(len(pts)) // dash) % 2 == 0
        keep = on & (col >= 0) & (col < size) & (row >= 0) & (row < size)
        rgb[row[keep], col[keep]] = (0, 0, 0)
    return rgb


def render_polar(radii, angles, image, path, cmap="viridis", curves=(), full_circle=True,
                 size=HEATMAP_SIZE):
    """Write a P6 pixmap of a polar-grid image (min-max normalised)."""
    image = np.asarray(image, dtype=float)
    if not np.all(np.isfinite(image)):
        raise ValueError("heatmap values must be finite")
    lo, hi = image.min(), image.max()
    norm = (image - lo) / (hi - lo) if hi > lo else np.full_like(image, 0.5)
    vals, inside, frame = _polar_raster(np.asarray(radii), np.asarray(angles), norm, size, full_circle)
    rgb = colormap(vals, cmap)
    rgb[~inside] = 255
    if curves:
        rgb = _overlay_dashed(rgb, curves, frame)
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (size, size))
        fh.write(np.ascontiguousarray(rgb, dtype=np.uint8).tobytes())
    return path


def emit_heatmap(fld, path, cmap="viridis", curves=()):
    """Heatmap of an indicator field; I2 is shown through its reciprocal."""
    g = fld.grid
    img = fld.display_values().reshape(g.shape)
    return render_polar(g.radii(), g.angles(), img, path, cmap, curves, g.full_circle)


def render_csv(csv_path, ppm_path, cmap="viridis", reciprocal=False):
    r, th, vals = read_field_csv(csv_path)
    radii = np.unique(r)
    angles = np.unique(th)
    if len(radii) * len(angles) != len(vals):
        raise ValueError(f"{csv_path}: rows do not form a polar grid")
    img = vals.reshape(len(radii), len(angles))
    if reciprocal:
        img = 1.0 / np.maximum(img, np.finfo(float).tiny)
    step = angles[1] - angles[0] if len(angles) > 1 else 2 * np.pi
    full = abs(len(angles) * step - 2 * np.pi) < 1e-9 and abs(angles[0]) < 1e-12
    return render_polar(radii, angles, img, ppm_path, cmap, (), full)


def read_ppm(path):
    """Read a binary P6 pixmap written by :func:`render_polar` (for checks)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    header, _, rest = raw.partition(b"\n255\n")
    magic, dims = header.split(b"\n", 1)
    if magic != b"P6":
        raise ValueError("not a P6 pixmap")
    w, h = (int(v) for v in dims.split())
    return np.frombuffer(rest, dtype=np.uint8).reshape(h, w, 3)
