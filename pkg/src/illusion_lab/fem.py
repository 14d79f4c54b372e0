"""P1 finite elements for the anisotropic conductivity equation.

Assembly uses one-point (centroid) quadrature for the tensor field, which
is exact for piecewise-constant coefficients on interface-fitted meshes
and never evaluates the field on a discontinuity circle. Dirichlet data is
imposed by elimination; the reduced interior system is solved by a cached
sparse LU factorization and every solve is verified against the relative
residual bound 1e-10 (the contract; an iterative solver meeting the same
bound would be equivalent).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .mesh import triangle_centroids

RESIDUAL_REL_TOL = 1e-10


class AssemblyError(ValueError):
    """Field or mesh unusable for assembly (e.g. non-SPD tensor)."""


class SolverError(RuntimeError):
    """Linear solve failed its residual contract."""


@dataclass
class StiffnessSystem:
    """Assembled stiffness matrix with its interior/boundary partition.

    Immutable by convention; the cached interior factorization makes
    repeated solves (DtN columns) cheap and is safe to share read-only.
    """

    matrix: sp.csr_matrix
    interior: np.ndarray
    boundary: np.ndarray
    mesh: object
    sigma: object
    _lu: object = field(default=None, repr=False)

    @property
    def n_nodes(self):
        return self.matrix.shape[0]

    def interior_factor(self):
        if self._lu is None:
            k_ii = self.matrix[self.interior][:, self.interior].tocsc()
            self._lu = spla.splu(k_ii)
        return self._lu


@dataclass(frozen=True)
class Solution:
    """Nodal solution values together with the boundary datum they satisfy."""

    values: np.ndarray
    datum: np.ndarray
    residual: float


def assemble(mesh, sigma, *, backend=None):
    """Assemble the stiffness matrix int sigma grad(phi_i).grad(phi_j).

    Raises AssemblyError naming the offending triangle if the field is not
    SPD at a centroid, and enforces the symmetry and zero-row-sum
    invariants of the assembled matrix.
    """
    centroids = triangle_centroids(mesh)
    vals = sigma.evaluate_many(centroids)

    finite = np.isfinite(vals).all(axis=(1, 2))
    det = vals[:, 0, 0] * vals[:, 1, 1] - vals[:, 0, 1] * vals[:, 1, 0]
    spd = finite & (vals[:, 0, 0] > 0.0) & (det > 0.0)
    if not spd.all():
        t = int(np.argmin(spd))
        raise AssemblyError(
            f"field {sigma.label} is not SPD at the centroid of triangle {t} "
            f"({centroids[t][0]}, {centroids[t][1]}): {vals[t].tolist()}")

    rows, cols, data = kernels.stiffness_triplets(mesh.nodes, mesh.triangles, vals,
                                                  backend=backend)
    n = mesh.n_nodes
    matrix = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()

    scale = float(np.abs(matrix.data).max())
    asym = sp.coo_matrix(matrix - matrix.T)
    if asym.nnz and np.abs(asym.data).max() > 1e-14 * scale:
        raise AssemblyError("assembled stiffness matrix is not symmetric")
    row_sums = np.abs(matrix @ np.ones(n)).max()
    if row_sums > 1e-10 * scale:
        raise AssemblyError(f"stiffness row sums {row_sums} exceed 1e-10*|K|")

    boundary = np.asarray(mesh.boundary_nodes, dtype=np.int64)
    mask = np.ones(n, dtype=bool)
    mask[boundary] = False
    interior = np.flatnonzero(mask)
    return StiffnessSystem(matrix=matrix, interior=interior, boundary=boundary,
                           mesh=mesh, sigma=sigma)


def solve_dirichlet(system, datum):
    """Solve the conductivity equation with nodal Dirichlet data.

    ``datum`` holds one value per boundary node (in boundary-node order);
    interior values solve K_II u_I = -K_IB f with relative residual
    <= 1e-10, else SolverError.
    """
    f = np.asarray(datum, dtype=np.float64)
    if f.shape != (len(system.boundary),):
        raise ValueError(
            f"datum must have one value per boundary node "
            f"({len(system.boundary)}), got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("datum contains non-finite values")

    k = system.matrix
    k_ib = k[system.interior][:, system.boundary]
    rhs = -(k_ib @ f)
    u_i = system.interior_factor().solve(rhs)

    k_ii = k[system.interior][:, system.interior]
    res = np.linalg.norm(k_ii @ u_i - rhs)
    scale = np.linalg.norm(rhs)
    residual = float(res / scale) if scale > 0.0 else float(res)
    if not np.isfinite(residual) or (scale > 0.0 and residual > RESIDUAL_REL_TOL):
        raise SolverError(
            f"interior solve residual {residual:.3e} exceeds {RESIDUAL_REL_TOL:.0e}; "
            f"ellipticity or mesh quality is broken")

    values = np.empty(system.n_nodes)
    values[system.interior] = u_i
    values[system.boundary] = f
    return Solution(values=values, datum=f, residual=residual)


def dirichlet_energy(system, solution):
    """Quadratic form u^t K u of a solution (or raw nodal vector)."""
    u = solution.values if isinstance(solution, Solution) else np.asarray(solution)
    return float(u @ (system.matrix @ u))


def max_principle_gap(solution):
    """How far the solution range exceeds the datum range (0 when the
    discrete maximum principle holds). Guaranteed small only for isotropic
    fields on quality meshes; for anisotropic fields callers should treat
    a positive gap as a warning, not an error."""
    over = float(solution.values.max() - solution.datum.max())
    under = float(solution.datum.min() - solution.values.min())
    return max(0.0, over, under)


def sample_boundary_datum(mesh, k, parity="cos"):
    """Fourier probe cos(k theta) or sin(k theta) at the boundary nodes."""
    if k < 0 or int(k) != k:
        raise ValueError(f"mode number k must be a non-negative integer, got {k}")
    if parity == "cos":
        return np.cos(k * mesh.boundary_angles)
    if parity == "sin":
        return np.sin(k * mesh.boundary_angles)
    raise ValueError(f"parity must be 'cos' or 'sin', got {parity!r}")


def boundary_mass_matrix(mesh):
    """Cyclic-tridiagonal P1 trace mass matrix on the boundary polyline."""
    pts = mesh.nodes[mesh.boundary_nodes]
    nb = len(pts)
    nxt = np.roll(np.arange(nb), -1)
    lengths = np.linalg.norm(pts[nxt] - pts, axis=1)

    rows = np.concatenate([np.arange(nb), nxt, np.arange(nb), nxt])
    cols = np.concatenate([np.arange(nb), nxt, nxt, np.arange(nb)])
    data = np.concatenate([lengths / 3.0, lengths / 3.0, lengths / 6.0, lengths / 6.0])
    return sp.coo_matrix((data, (rows, cols)), shape=(nb, nb)).tocsr()


def solution_to_csv(mesh, solution, path):
    """Write ``node_index,x,y,u`` rows (full float precision)."""
    with open(path, "w") as f:
        f.write("node_index,x,y,u\n")
        for i, ((x, y), u) in enumerate(zip(mesh.nodes, solution.values)):
            f.write(f"{i},{x:.16e},{y:.16e},{u:.16e}\n")
