"""Pure-Python (vectorized numpy) assembly kernels.

Fallback used when the compiled extension is unavailable; the arithmetic
mirrors ``_kernels.pyx`` term by term so both backends agree to roundoff.
"""

import numpy as np


def stiffness_triplets(nodes, triangles, sigma):
    """COO triplets of the P1 stiffness matrix for one-point quadrature.

    Parameters
    ----------
    nodes : (n, 2) float64
    triangles : (m, 3) int64
    sigma : (m, 2, 2) float64
        Conductivity tensor at each triangle centroid.

    Returns
    -------
    rows, cols : (9m,) int64
    vals : (9m,) float64
    """
    x = nodes[triangles, 0]
    y = nodes[triangles, 1]
    # gradient of the barycentric basis: grad phi_i = (b_i, c_i) / (2A)
    b = y[:, [1, 2, 0]] - y[:, [2, 0, 1]]
    c = x[:, [2, 0, 1]] - x[:, [1, 2, 0]]
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    area4 = 2.0 * area2
    s00 = sigma[:, 0, 0]
    s01 = sigma[:, 0, 1]
    s11 = sigma[:, 1, 1]

    m = triangles.shape[0]
    elem = np.empty((m, 3, 3))
    for i in range(3):
        for j in range(i, 3):
            e = (b[:, i] * (s00 * b[:, j] + s01 * c[:, j])
                 + c[:, i] * (s01 * b[:, j] + s11 * c[:, j])) / area4
            elem[:, i, j] = e
            elem[:, j, i] = e

    rows = np.repeat(triangles, 3, axis=1).reshape(-1)
    cols = np.tile(triangles, (1, 3)).reshape(-1)
    return rows.astype(np.int64), cols.astype(np.int64), elem.reshape(-1)
