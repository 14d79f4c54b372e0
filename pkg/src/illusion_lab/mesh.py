"""Interface-fitted triangulations of concentric-disk geometries.

The generator places nodes on concentric rings whose radii include every
requested interface circle, with per-ring node counts growing with radius
(roughly constant azimuthal spacing). Consecutive rings are stitched by a
deterministic angular-merge walk, so every interface circle is a closed
polyline of element edges by construction. Region tags: 0 is the outermost
background annulus, 1 the innermost disk, 2+ intermediate layers from the
inside out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Snap tolerance for circle membership, relative to the outer radius.
SNAP_REL = 1e-12
# Quality floor enforced by the ring-spacing rules below.
MIN_ANGLE_DEG = 15.0

# Ring spacing and azimuthal node spacing as fractions of target_h. Chosen so
# that the longest edge (the band diagonal, ~sqrt(radial^2 + azimuthal^2))
# stays below target_h.
_RADIAL_FACTOR = 0.62
_ANGULAR_FACTOR = 0.62


class MeshError(ValueError):
    """Invalid mesh construction input or violated mesh invariant."""


class MeshFormatError(MeshError):
    """Malformed mesh file; carries the offending line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


@dataclass(frozen=True)
class Mesh:
    """Immutable triangulation of a disk with tagged concentric regions.

    Attributes
    ----------
    nodes : (n, 2) float64
        Node coordinates.
    triangles : (m, 3) int64
        Node indices, counterclockwise.
    regions : (m,) int64
        Region tag per triangle (0 background, 1 innermost, 2+ layers).
    boundary_nodes : (nb,) int64
        Indices of nodes on the outer circle, sorted by polar angle.
    boundary_angles : (nb,) float64
        Polar angles of the boundary nodes, in [0, 2*pi), strictly increasing.
    interface_radii : tuple of float
        Radii of interior circles the mesh conforms to.
    outer_radius : float
    h : float
        Maximum edge length.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    regions: np.ndarray
    boundary_nodes: np.ndarray
    boundary_angles: np.ndarray
    interface_radii: tuple
    outer_radius: float
    h: float

    def __post_init__(self):
        for arr in (self.nodes, self.triangles, self.regions,
                    self.boundary_nodes, self.boundary_angles):
            arr.flags.writeable = False

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def __repr__(self):
        return (f"Mesh(n_nodes={self.n_nodes}, n_triangles={self.n_triangles}, "
                f"R={self.outer_radius}, interfaces={list(self.interface_radii)}, "
                f"h={self.h:.4g})")


@dataclass(frozen=True)
class MeshQuality:
    min_angle_deg: float
    max_aspect: float
    h: float
    n_nodes: int
    n_triangles: int


def triangle_areas(mesh):
    """Signed areas of all triangles (positive for CCW orientation)."""
    p = mesh.nodes[mesh.triangles]
    return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))


def triangle_centroids(mesh):
    return mesh.nodes[mesh.triangles].mean(axis=1)


def _ring_counts(radii, delta):
    """Node count per ring: multiples of 6, roughly proportional to radius.

    The floor of 12 keeps refinement snapping gentle on small interface
    circles (the snap sagitta of a 12-gon edge is ~3% of the radius).
    """
    counts = 6 * np.maximum(2, np.ceil(np.asarray(radii) / delta).astype(int))
    return counts


def _annulus_subradii(a, b, h_r):
    """Ring radii strictly inside (a, b], including b, excluding a.

    Uniform spacing <= h_r; when the inner anchor is small compared to h_r,
    a geometric ramp keeps ring spacing comparable to the local azimuthal
    spacing (which shrinks like the radius near the center).
    """
    radii = []
    start = a
    if a > 0.0:
        r = a
        while r < h_r and (b - r) > 1.5 * h_r:
            step = min(h_r, r)  # local azimuthal spacing is ~1.05*r when counts floor at 6
            r = r + step
            radii.append(r)
        start = radii[-1] if radii else a
    k = max(1, math.ceil((b - start) / h_r - 1e-12))
    for i in range(1, k + 1):
        radii.append(start + (b - start) * i / k)
    radii[-1] = b  # anchor exactly
    return radii


def _stitch_bands(ring_offsets, ring_counts):
    """Triangles between consecutive rings by a deterministic angular merge.

    Ring j has ``ring_counts[j]`` nodes at angles 2*pi*i/count, stored
    contiguously from ``ring_offsets[j]``. Walks both rings in angle order,
    advancing whichever ring has the smaller next angle (inner first on
    ties, which keeps spokes within half a coarse spacing), emitting one
    CCW triangle per step.
    """
    tris = []
    for j in range(len(ring_counts) - 1):
        na, nb = ring_counts[j], ring_counts[j + 1]
        oa, ob = ring_offsets[j], ring_offsets[j + 1]
        i = 0
        k = 0
        while i < na or k < nb:
            next_a = (i + 1) / na
            next_b = (k + 1) / nb
            a_cur = oa + (i % na)
            b_cur = ob + (k % nb)
            if k < nb and (i == na or next_b < next_a):
                tris.append((a_cur, b_cur, ob + ((k + 1) % nb)))
                k += 1
            else:
                tris.append((a_cur, b_cur, oa + ((i + 1) % na)))
                i += 1
    return tris


def build_disk_mesh(outer_radius, interface_radii, target_h):
    """Interface-fitted triangulation of the disk of radius ``outer_radius``.

    Parameters
    ----------
    outer_radius : float
        Radius of the meshed disk.
    interface_radii : sequence of float
        Strictly increasing radii of interior circles that must be unions
        of element edges (material interfaces).
    target_h : float
        Upper bound for the maximum edge length.

    Returns
    -------
    Mesh

    Raises
    ------
    MeshError
        For non-positive or out-of-order radii, radii not strictly inside
        the disk, or interface circles closer together than 2*target_h
        (the mesh would degenerate).
    """
    R = float(outer_radius)
    h = float(target_h)
    radii = [float(r) for r in interface_radii]
    if R <= 0.0:
        raise MeshError(f"outer radius must be positive, got {R}")
    if h <= 0.0:
        raise MeshError(f"target_h must be positive, got {h}")
    for r in radii:
        if r <= 0.0:
            raise MeshError(f"interface radius must be positive, got {r}")
    if any(radii[i] >= radii[i + 1] for i in range(len(radii) - 1)):
        raise MeshError(f"interface radii must be strictly increasing, got {radii}")
    gaps = [b - a for a, b in zip(radii, radii[1:] + [R])]
    if any(g < 2.0 * h for g in gaps):
        raise MeshError(
            f"interface radii {radii} closer than 2*target_h={2 * h} to each "
            f"other or to the outer circle; refine target_h or move the interfaces"
        )

    h_r = _RADIAL_FACTOR * h
    delta = _ANGULAR_FACTOR * h

    ring_radii = []
    anchors = [0.0] + radii + [R]
    for a, b in zip(anchors[:-1], anchors[1:]):
        ring_radii.extend(_annulus_subradii(a, b, h_r))
    ring_radii = np.asarray(ring_radii)
    counts = _ring_counts(ring_radii, delta)

    # nodes: center first, then ring by ring in angle order
    chunks = [np.zeros((1, 2))]
    offsets = np.empty(len(ring_radii), dtype=np.int64)
    pos = 1
    for j, (r, n) in enumerate(zip(ring_radii, counts)):
        theta = 2.0 * np.pi * np.arange(n) / n
        chunks.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        offsets[j] = pos
        pos += n
    nodes = np.vstack(chunks)

    tris = [(0, offsets[0] + i, offsets[0] + (i + 1) % counts[0])
            for i in range(counts[0])]
    tris.extend(_stitch_bands(offsets, counts))
    triangles = np.asarray(tris, dtype=np.int64)

    boundary = np.arange(offsets[-1], offsets[-1] + counts[-1], dtype=np.int64)

    mesh = _finalize_mesh(nodes, triangles, boundary, tuple(radii), R)
    q = mesh_quality(mesh)
    if q.min_angle_deg < MIN_ANGLE_DEG:
        raise MeshError(
            f"generated mesh violates the {MIN_ANGLE_DEG} degree angle floor "
            f"(min angle {q.min_angle_deg:.2f}); this is a generator bug"
        )
    if mesh.h > h * (1.0 + 1e-9):
        raise MeshError(f"generated mesh has h={mesh.h} > target_h={h}")
    return mesh


def _region_tags(nodes, triangles, interface_radii):
    centroids = nodes[triangles].mean(axis=1)
    rc = np.hypot(centroids[:, 0], centroids[:, 1])
    tags = np.zeros(len(triangles), dtype=np.int64)
    if interface_radii:
        layer = np.searchsorted(np.asarray(interface_radii), rc)
        inside = layer < len(interface_radii)
        tags[inside & (layer == 0)] = 1
        tags[inside & (layer > 0)] = layer[inside & (layer > 0)] + 1
    return tags


def _finalize_mesh(nodes, triangles, boundary_idx, interface_radii, R):
    areas2 = ((nodes[triangles[:, 1], 0] - nodes[triangles[:, 0], 0])
              * (nodes[triangles[:, 2], 1] - nodes[triangles[:, 0], 1])
              - (nodes[triangles[:, 2], 0] - nodes[triangles[:, 0], 0])
              * (nodes[triangles[:, 1], 1] - nodes[triangles[:, 0], 1]))
    if np.any(areas2 <= 0.0):
        bad = int(np.argmax(areas2 <= 0.0))
        raise MeshError(f"triangle {bad} has non-positive area")

    angles = np.arctan2(nodes[boundary_idx, 1], nodes[boundary_idx, 0])
    angles = np.where(angles < 0.0, angles + 2.0 * np.pi, angles)
    order = np.argsort(angles, kind="stable")
    boundary_idx = boundary_idx[order]
    angles = angles[order]

    regions = _region_tags(nodes, triangles, list(interface_radii))
    h = float(np.sqrt(_edge_lengths_sq(nodes, triangles).max()))
    return Mesh(nodes=nodes, triangles=triangles, regions=regions,
                boundary_nodes=boundary_idx, boundary_angles=angles,
                interface_radii=tuple(interface_radii), outer_radius=float(R),
                h=h)


def _edge_lengths_sq(nodes, triangles):
    p = nodes[triangles]
    d = p - p[:, [1, 2, 0], :]
    return (d ** 2).sum(axis=2)


def refine(mesh):
    """Uniform 1-to-4 refinement with circle snapping.

    Each triangle is split at its edge midpoints; a midpoint whose parent
    edge has both endpoints on the same interface (or outer) circle is
    snapped radially back onto that circle. Region tags are inherited.
    """
    R = mesh.outer_radius
    snap_tol = SNAP_REL * R
    circles = list(mesh.interface_radii) + [R]
    node_r = np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1])
    # circle index per node, -1 if on none
    on_circle = np.full(mesh.n_nodes, -1, dtype=np.int64)
    for ci, c in enumerate(circles):
        on_circle[np.abs(node_r - c) <= snap_tol] = ci

    new_nodes = [mesh.nodes]
    midpoint = {}
    next_idx = mesh.n_nodes
    mid_chunk = []

    def edge_mid(i, j):
        nonlocal next_idx
        key = (i, j) if i < j else (j, i)
        idx = midpoint.get(key)
        if idx is not None:
            return idx
        p = 0.5 * (mesh.nodes[i] + mesh.nodes[j])
        ci = on_circle[i]
        if ci >= 0 and ci == on_circle[j]:
            p = p * (circles[ci] / np.hypot(p[0], p[1]))
        midpoint[key] = next_idx
        mid_chunk.append(p)
        idx = next_idx
        next_idx += 1
        return idx

    tris = np.empty((4 * mesh.n_triangles, 3), dtype=np.int64)
    regions = np.repeat(mesh.regions, 4)
    for t, (a, b, c) in enumerate(mesh.triangles):
        ab = edge_mid(a, b)
        bc = edge_mid(b, c)
        ca = edge_mid(c, a)
        tris[4 * t + 0] = (a, ab, ca)
        tris[4 * t + 1] = (ab, b, bc)
        tris[4 * t + 2] = (ca, bc, c)
        tris[4 * t + 3] = (ab, bc, ca)

    nodes = np.vstack(new_nodes + [np.asarray(mid_chunk)])
    node_r = np.hypot(nodes[:, 0], nodes[:, 1])
    boundary = np.flatnonzero(np.abs(node_r - R) <= snap_tol)

    out = _finalize_mesh(nodes, tris, boundary, mesh.interface_radii, R)
    # keep inherited tags (identical to centroid tagging away from snapping jitter)
    object.__setattr__(out, "regions", regions)
    regions.flags.writeable = False
    return out


def mesh_quality(mesh):
    """Min angle (degrees), max edge-length aspect ratio, h, and counts."""
    p = mesh.nodes[mesh.triangles]
    lens = np.sqrt(_edge_lengths_sq(mesh.nodes, mesh.triangles))
    aspect = lens.max(axis=1) / lens.min(axis=1)
    angles = np.empty((mesh.n_triangles, 3))
    for i in range(3):
        u = p[:, (i + 1) % 3] - p[:, i]
        v = p[:, (i + 2) % 3] - p[:, i]
        cosang = (u * v).sum(axis=1) / np.sqrt((u ** 2).sum(axis=1) * (v ** 2).sum(axis=1))
        angles[:, i] = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return MeshQuality(min_angle_deg=float(angles.min()),
                       max_aspect=float(aspect.max()),
                       h=mesh.h,
                       n_nodes=mesh.n_nodes,
                       n_triangles=mesh.n_triangles)


def save_mesh(mesh, path):
    """Write the text format: header, node lines, triangle lines."""
    on_boundary = np.zeros(mesh.n_nodes, dtype=np.int64)
    on_boundary[mesh.boundary_nodes] = 1
    with open(path, "w") as f:
        f.write(f"NODES {mesh.n_nodes} TRIANGLES {mesh.n_triangles}\n")
        for (x, y), flag in zip(mesh.nodes, on_boundary):
            f.write(f"{x:.16e} {y:.16e} {flag}\n")
        for (i, j, k), g in zip(mesh.triangles, mesh.regions):
            f.write(f"{i} {j} {k} {g}\n")


def load_mesh(path):
    """Read the text format back; validates indices and orientation.

    Interface radii are reconstructed from the region tags (the outer ring
    of each tagged layer); the format does not store them, so they are
    recovered to roundoff (well inside the snap tolerance) for the
    concentric meshes this package generates.
    """
    with open(path) as f:
        lines = f.readlines()
    if not lines:
        raise MeshFormatError(path, 1, "empty file")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "NODES" or header[2] != "TRIANGLES":
        raise MeshFormatError(path, 1, f"bad header {lines[0].rstrip()!r}")
    try:
        n = int(header[1])
        m = int(header[3])
    except ValueError:
        raise MeshFormatError(path, 1, f"bad header counts {lines[0].rstrip()!r}") from None
    if len(lines) < 1 + n + m:
        raise MeshFormatError(path, len(lines), f"expected {1 + n + m} lines, found {len(lines)}")

    nodes = np.empty((n, 2))
    flags = np.empty(n, dtype=np.int64)
    for i in range(n):
        line_no = 2 + i
        parts = lines[1 + i].split()
        if len(parts) != 3:
            raise MeshFormatError(path, line_no, f"expected 'x y on_boundary', got {lines[1 + i].rstrip()!r}")
        try:
            nodes[i] = (float(parts[0]), float(parts[1]))
            flags[i] = int(parts[2])
        except ValueError:
            raise MeshFormatError(path, line_no, f"unparsable node line {lines[1 + i].rstrip()!r}") from None
        if flags[i] not in (0, 1):
            raise MeshFormatError(path, line_no, f"on_boundary must be 0 or 1, got {parts[2]}")

    triangles = np.empty((m, 3), dtype=np.int64)
    regions = np.empty(m, dtype=np.int64)
    for t in range(m):
        line_no = 2 + n + t
        parts = lines[1 + n + t].split()
        if len(parts) != 4:
            raise MeshFormatError(path, line_no, f"expected 'i j k region', got {lines[1 + n + t].rstrip()!r}")
        try:
            ijk = [int(parts[0]), int(parts[1]), int(parts[2])]
            regions[t] = int(parts[3])
        except ValueError:
            raise MeshFormatError(path, line_no, f"unparsable triangle line {lines[1 + n + t].rstrip()!r}") from None
        for v in ijk:
            if v < 0 or v >= n:
                raise MeshFormatError(path, line_no, f"node index {v} out of range [0, {n})")
        triangles[t] = ijk
        p0, p1, p2 = nodes[ijk]
        if (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]) <= 0.0:
            raise MeshFormatError(path, line_no, f"triangle {t} has non-positive area")

    boundary = np.flatnonzero(flags == 1)
    if boundary.size == 0:
        raise MeshFormatError(path, 1, "no boundary nodes flagged")
    R = float(np.hypot(nodes[boundary, 0], nodes[boundary, 1]).max())

    node_r = np.hypot(nodes[:, 0], nodes[:, 1])
    interfaces = set()
    for g in np.unique(regions):
        if g < 1:
            continue
        radii = node_r[np.unique(triangles[regions == g])]
        ring = radii[radii >= radii.max() * (1.0 - SNAP_REL)]
        interfaces.add(float(np.median(ring)))
    mesh = _finalize_mesh(nodes, triangles, boundary, tuple(sorted(interfaces)), R)
    object.__setattr__(mesh, "regions", regions)
    regions.flags.writeable = False
    return mesh
