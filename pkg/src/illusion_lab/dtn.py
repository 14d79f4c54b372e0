"""Discrete Dirichlet-to-Neumann operators and analytic disk oracles.

The discrete operator is the Schur complement of the stiffness matrix onto
the boundary nodes, i.e. the variational boundary-flux map. It inherits an
exact energy identity from the reduced solve: f^t L f equals the Dirichlet
energy of the harmonic extension of f.

Operator comparison uses low-frequency Fourier probing in boundary-mass
weighted norms: the probe response of the flux difference in the M^{-1}
norm over the M norm of the datum, maximized over modes. For rotationally
symmetric conductivities this reproduces the eigenvalue gaps, which is the
scale the analytic oracles calibrate.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from . import fem

DEFAULT_PROBE_DEPTH = 16


@dataclass(frozen=True)
class DtnMatrix:
    """Dense DtN matrix on the ordered boundary nodes plus trace mass matrix."""

    matrix: np.ndarray
    mass: object
    angles: np.ndarray
    mesh_id: str
    field_id: str

    @property
    def n_boundary(self):
        return self.matrix.shape[0]


def _mesh_digest(mesh):
    h = hashlib.sha256()
    h.update(mesh.nodes.tobytes())
    h.update(mesh.triangles.tobytes())
    return h.hexdigest()[:12]


def schur_dtn(mesh, sigma, *, system=None, block_size=64):
    """Discrete DtN map L = K_BB - K_BI K_II^{-1} K_IB.

    Column blocks of the interior solve are batched through the cached LU
    factor of K_II; column order is fixed, so the result is deterministic.
    Asserts the symmetry and zero-total-flux (conservation) invariants.
    """
    if system is None:
        system = fem.assemble(mesh, sigma)
    k = system.matrix
    interior = system.interior
    boundary = system.boundary
    nb = len(boundary)

    k_bb = k[boundary][:, boundary].toarray()
    k_ib = k[interior][:, boundary].tocsc()
    lu = system.interior_factor()

    lam = np.array(k_bb)
    for start in range(0, nb, block_size):
        stop = min(start + block_size, nb)
        rhs = k_ib[:, start:stop].toarray()
        x = lu.solve(rhs)
        lam[:, start:stop] -= k_ib.T @ x

    scale = float(np.abs(lam).max())
    asym = float(np.abs(lam - lam.T).max())
    if asym > 1e-12 * scale:
        raise fem.SolverError(f"DtN matrix asymmetry {asym:.3e} exceeds 1e-12 relative")
    conservation = float(np.abs(lam @ np.ones(nb)).max())
    if conservation > 1e-9 * scale:
        raise fem.SolverError(
            f"DtN constant-datum flux {conservation:.3e} exceeds 1e-9 relative "
            f"(current is not conserved)")

    return DtnMatrix(matrix=lam, mass=fem.boundary_mass_matrix(mesh),
                     angles=np.array(mesh.boundary_angles),
                     mesh_id=_mesh_digest(mesh), field_id=sigma.label)


def _probe(dtn, k, parity):
    if parity == "cos":
        return np.cos(k * dtn.angles)
    return np.sin(k * dtn.angles)


def dtn_eigenvalue_estimate(dtn, k):
    """Rayleigh quotient (f^t L f)/(f^t M f) averaged over the two k-mode
    parities; estimates the k-th DtN eigenvalue of rotationally symmetric
    conductivities."""
    if k < 0 or int(k) != k:
        raise ValueError(f"mode number k must be a non-negative integer, got {k}")
    if k > dtn.n_boundary // 2:
        raise ValueError(f"mode k={k} is not resolved by {dtn.n_boundary} boundary nodes")
    estimates = []
    parities = ("cos",) if k == 0 else ("cos", "sin")
    for parity in parities:
        f = _probe(dtn, k, parity)
        estimates.append((f @ (dtn.matrix @ f)) / (f @ (dtn.mass @ f)))
    return float(np.mean(estimates))


def oracle_homogeneous(k, R):
    """Continuum DtN eigenvalue |k|/R of the homogeneous unit disk of radius R."""
    if R <= 0.0:
        raise ValueError(f"radius must be positive, got {R}")
    return abs(k) / R


def oracle_layered(k, a, b, r0, R):
    """Continuum DtN eigenvalue of the two-layer disk (conductivity b inside
    radius r0, a outside, disk radius R).

    Separation of variables with u = c r^k inside and alpha r^k + beta r^-k
    outside; continuity of u and of the radial flux at r0 gives

        lambda_k = (a k / R) (1 + g t) / (1 - g t),

    with contrast factor g = (b - a)/(b + a) and t = (r0/R)^(2k). Collapses
    exactly to the homogeneous value for b = a and in the r0 -> 0 limit.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"mode number k must be a positive integer, got {k}")
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"conductivities must be positive, got a={a}, b={b}")
    if not 0.0 < r0 < R:
        raise ValueError(f"need 0 < r0 < R, got r0={r0}, R={R}")
    g = (b - a) / (b + a)
    t = (r0 / R) ** (2 * k)
    return (a * k / R) * (1.0 + g * t) / (1.0 - g * t)


def dtn_distance(d1, d2, probe_depth=DEFAULT_PROBE_DEPTH):
    """Fourier-probe pseudometric between DtN operators on shared boundaries.

    max over modes k <= probe_depth and both parities of
    ||(L1 - L2) f||_{M^{-1}} / ||f||_M. Requires both operators to live on
    the same boundary node set.
    """
    if d1.n_boundary != d2.n_boundary or np.abs(d1.angles - d2.angles).max() > 1e-12:
        raise ValueError(
            f"DtN operators live on different boundary node sets "
            f"({d1.n_boundary} vs {d2.n_boundary} nodes); distances require a "
            f"shared boundary discretization")
    if probe_depth < 1 or probe_depth > d1.n_boundary // 2:
        raise ValueError(f"probe depth {probe_depth} unusable with "
                         f"{d1.n_boundary} boundary nodes")
    mass_solve = spla.factorized(d1.mass.tocsc())
    diff = d1.matrix - d2.matrix
    worst = 0.0
    for k in range(0, probe_depth + 1):
        for parity in ("cos",) if k == 0 else ("cos", "sin"):
            f = _probe(d1, k, parity)
            g = diff @ f
            num = float(np.sqrt(max(g @ mass_solve(g), 0.0)))
            den = float(np.sqrt(f @ (d1.mass @ f)))
            worst = max(worst, num / den)
    return worst


def dtn_to_csv(dtn, path):
    """Dense CSV export with a header row of boundary angles."""
    with open(path, "w") as f:
        f.write("angle," + ",".join(f"{a:.16e}" for a in dtn.angles) + "\n")
        for angle, row in zip(dtn.angles, dtn.matrix):
            f.write(f"{angle:.16e}," + ",".join(f"{v:.16e}" for v in row) + "\n")


def eigenvalue_table_to_csv(rows, path):
    """Write ``k,estimate,oracle,rel_error`` rows; oracle may be None."""
    with open(path, "w") as f:
        f.write("k,estimate,oracle,rel_error\n")
        for k, est, oracle in rows:
            if oracle is None:
                f.write(f"{k},{est:.16e},,\n")
            else:
                rel = abs(est - oracle) / abs(oracle) if oracle != 0.0 else abs(est)
                f.write(f"{k},{est:.16e},{oracle:.16e},{rel:.16e}\n")
