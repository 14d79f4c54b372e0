"""Deterministic SVG rendering of conductivity tensor fields.

Triangles are filled by log10 of the larger eigenvalue of the tensor at
the centroid; where the eigenvalue ratio exceeds a threshold, a short tick
along the principal axis marks the anisotropy direction. Output bytes are
a pure function of the inputs (fixed-precision coordinates, no metadata).
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .mesh import triangle_areas, triangle_centroids

# truncated viridis, dark-to-bright
_STOPS = np.array([
    (0.267004, 0.004874, 0.329415),
    (0.282623, 0.140926, 0.457517),
    (0.253935, 0.265254, 0.529983),
    (0.206756, 0.371758, 0.553117),
    (0.163625, 0.471133, 0.558148),
    (0.127568, 0.566949, 0.550556),
    (0.134692, 0.658636, 0.517649),
    (0.266941, 0.748751, 0.440573),
    (0.477504, 0.821444, 0.318195),
    (0.741388, 0.873449, 0.149561),
    (0.993248, 0.906157, 0.143936),
])


def _color(t):
    t = min(max(float(t), 0.0), 1.0)
    x = t * (len(_STOPS) - 1)
    i = min(int(x), len(_STOPS) - 2)
    frac = x - i
    rgb = (1.0 - frac) * _STOPS[i] + frac * _STOPS[i + 1]
    return "#{:02x}{:02x}{:02x}".format(*(int(round(255 * c)) for c in rgb))


def _principal_axis(mat, lam_max):
    # eigenvector of the larger eigenvalue of a symmetric 2x2 matrix
    p, q, s = mat[0, 0], mat[0, 1], mat[1, 1]
    v = np.array([q, lam_max - p]) if abs(q) > 1e-300 else (
        np.array([1.0, 0.0]) if p >= s else np.array([0.0, 1.0]))
    n = np.hypot(v[0], v[1])
    return v / n if n > 0 else np.array([1.0, 0.0])


def render_field_svg(mesh, sigma, path, glyph_ratio=1.05, size=720):
    """Write an SVG of the field on the mesh; returns the path.

    Anisotropy glyphs appear on triangles whose eigenvalue ratio exceeds
    ``glyph_ratio``.
    """
    centroids = triangle_centroids(mesh)
    mats = sigma.evaluate_many(centroids)
    p = mats[:, 0, 0]
    q = 0.5 * (mats[:, 0, 1] + mats[:, 1, 0])
    s = mats[:, 1, 1]
    mid = 0.5 * (p + s)
    rad = np.sqrt((0.5 * (p - s)) ** 2 + q ** 2)
    lam_min, lam_max = mid - rad, mid + rad
    vals = np.log10(np.maximum(lam_max, 1e-300))
    lo, hi = float(vals.min()), float(vals.max())
    span = hi - lo
    norm = (vals - lo) / span if span > 1e-12 else np.full_like(vals, 0.5)

    R = mesh.outer_radius
    pad = 0.03 * R
    scale = size / (2.0 * (R + pad))

    def to_px(xy):
        return ((xy[0] + R + pad) * scale, (R + pad - xy[1]) * scale)

    root = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                      width=f"{size}", height=f"{size}",
                      viewBox=f"0 0 {size} {size}")
    title = ET.SubElement(root, "title")
    title.text = sigma.label
    group = ET.SubElement(root, "g", attrib={"stroke": "none"})
    for tri, t in zip(mesh.triangles, norm):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in (to_px(mesh.nodes[i]) for i in tri))
        ET.SubElement(group, "polygon", attrib={"points": pts, "fill": _color(t)})

    ratios = lam_max / np.maximum(lam_min, 1e-300)
    lengths = 0.55 * np.sqrt(2.0 * np.abs(triangle_areas(mesh)))
    glyphs = ET.SubElement(root, "g", attrib={
        "stroke": "#ffffff", "stroke-width": f"{0.0035 * size:.2f}", "stroke-opacity": "0.8"})
    for i in np.flatnonzero(ratios > glyph_ratio):
        axis = _principal_axis(mats[i], lam_max[i])
        a = to_px(centroids[i] - 0.5 * lengths[i] * axis)
        b = to_px(centroids[i] + 0.5 * lengths[i] * axis)
        ET.SubElement(glyphs, "line", attrib={
            "x1": f"{a[0]:.2f}", "y1": f"{a[1]:.2f}",
            "x2": f"{b[0]:.2f}", "y2": f"{b[1]:.2f}"})

    ET.ElementTree(root).write(str(path), encoding="utf-8", xml_declaration=True)
    return path
