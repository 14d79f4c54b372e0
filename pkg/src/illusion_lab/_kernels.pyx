# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled assembly kernels: the per-triangle stiffness loop."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def stiffness_triplets(const double[:, ::1] nodes, const long long[:, ::1] triangles,
                       const double[:, :, ::1] sigma):
    """COO triplets of the P1 stiffness matrix (one-point quadrature).

    Same contract as ``_kernels_py.stiffness_triplets``.
    """
    cdef Py_ssize_t m = triangles.shape[0]
    rows_arr = np.empty(9 * m, dtype=np.int64)
    cols_arr = np.empty(9 * m, dtype=np.int64)
    vals_arr = np.empty(9 * m, dtype=np.float64)
    cdef long long[::1] rows = rows_arr
    cdef long long[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr

    cdef Py_ssize_t t, i, j, p
    cdef long long n0, n1, n2
    cdef double x0, y0, x1, y1, x2, y2, area4
    cdef double s00, s01, s11, e
    cdef double b[3]
    cdef double c[3]
    cdef long long idx[3]
    cdef double elem[3][3]

    for t in range(m):
        n0 = triangles[t, 0]
        n1 = triangles[t, 1]
        n2 = triangles[t, 2]
        x0 = nodes[n0, 0]; y0 = nodes[n0, 1]
        x1 = nodes[n1, 0]; y1 = nodes[n1, 1]
        x2 = nodes[n2, 0]; y2 = nodes[n2, 1]

        b[0] = y1 - y2
        b[1] = y2 - y0
        b[2] = y0 - y1
        c[0] = x2 - x1
        c[1] = x0 - x2
        c[2] = x1 - x0
        area4 = 2.0 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))

        s00 = sigma[t, 0, 0]
        s01 = sigma[t, 0, 1]
        s11 = sigma[t, 1, 1]

        for i in range(3):
            for j in range(i, 3):
                e = (b[i] * (s00 * b[j] + s01 * c[j])
                     + c[i] * (s01 * b[j] + s11 * c[j])) / area4
                elem[i][j] = e
                elem[j][i] = e

        idx[0] = n0; idx[1] = n1; idx[2] = n2
        p = 9 * t
        for i in range(3):
            for j in range(3):
                rows[p] = idx[i]
                cols[p] = idx[j]
                vals[p] = elem[i][j]
                p += 1

    return rows_arr, cols_arr, vals_arr
