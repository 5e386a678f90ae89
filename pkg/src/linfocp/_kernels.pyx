# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Must stay result-identical to ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

ctypedef cnp.int64_t idx_t

NAME = "compiled"


def close_marking(const idx_t[:, ::1] element_edges,
                  const idx_t[::1] refinement_edge,
                  const idx_t[:, ::1] edge_elements,
                  cnp.uint8_t[::1] edge_marked):
    cdef Py_ssize_t n_edges = edge_marked.shape[0]
    cdef idx_t[::1] stack = np.empty(n_edges, dtype=np.int64)
    cdef Py_ssize_t top = 0, e, k
    cdef idx_t t, r
    for e in range(n_edges):
        if edge_marked[e]:
            stack[top] = e
            top += 1
    while top > 0:
        top -= 1
        e = stack[top]
        for k in range(2):
            t = edge_elements[e, k]
            if t < 0:
                continue
            r = element_edges[t, refinement_edge[t]]
            if not edge_marked[r]:
                edge_marked[r] = 1
                stack[top] = r
                top += 1


def bisect_elements(const idx_t[:, ::1] elements,
                    const idx_t[::1] refinement_edge,
                    const idx_t[:, ::1] element_edges,
                    const idx_t[::1] edge_midpoint):
    cdef Py_ssize_t ne = elements.shape[0], t, n = 0, cap = 0
    cdef idx_t j, m, m1, m2, a, b, c
    for t in range(ne):
        j = refinement_edge[t]
        if edge_midpoint[element_edges[t, j]] < 0:
            cap += 1
        else:
            cap += 2
            if edge_midpoint[element_edges[t, (j + 2) % 3]] >= 0:
                cap += 1
            if edge_midpoint[element_edges[t, (j + 1) % 3]] >= 0:
                cap += 1
    out_np = np.empty((cap, 3), dtype=np.int64)
    ref_np = np.empty(cap, dtype=np.int64)
    par_np = np.empty(cap, dtype=np.int64)
    cdef idx_t[:, ::1] out = out_np
    cdef idx_t[::1] out_ref = ref_np
    cdef idx_t[::1] parent = par_np
    for t in range(ne):
        j = refinement_edge[t]
        m = edge_midpoint[element_edges[t, j]]
        if m < 0:
            out[n, 0] = elements[t, 0]
            out[n, 1] = elements[t, 1]
            out[n, 2] = elements[t, 2]
            out_ref[n] = j
            parent[n] = t
            n += 1
            continue
        c = elements[t, j]
        a = elements[t, (j + 1) % 3]
        b = elements[t, (j + 2) % 3]
        m1 = edge_midpoint[element_edges[t, (j + 2) % 3]]
        m2 = edge_midpoint[element_edges[t, (j + 1) % 3]]
        if m1 < 0:
            n = _put(out, out_ref, parent, n, c, a, m, t)
        else:
            n = _put(out, out_ref, parent, n, m, c, m1, t)
            n = _put(out, out_ref, parent, n, a, m, m1, t)
        if m2 < 0:
            n = _put(out, out_ref, parent, n, b, c, m, t)
        else:
            n = _put(out, out_ref, parent, n, m, b, m2, t)
            n = _put(out, out_ref, parent, n, c, m, m2, t)
    return out_np, ref_np, par_np


cdef inline Py_ssize_t _put(idx_t[:, ::1] out, idx_t[::1] out_ref,
                            idx_t[::1] parent, Py_ssize_t n,
                            idx_t v0, idx_t v1, idx_t v2, idx_t t):
    out[n, 0] = v0
    out[n, 1] = v1
    out[n, 2] = v2
    out_ref[n] = 2
    parent[n] = t
    return n + 1


cdef inline double _clip(double x, double a, double b):
    if x < a:
        return a
    if x > b:
        return b
    return x


def clamp_gap_sup(w_in, u_in, double a, double b):
    cdef const double[:, ::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[:, ::1] u = np.ascontiguousarray(u_in, dtype=np.float64)
    cdef Py_ssize_t ne = w.shape[0], t, k, i, j, q
    res_np = np.empty(ne, dtype=np.float64)
    cdef double[::1] res = res_np
    cdef double best, g, dw, s, level
    for t in range(ne):
        best = 0.0
        for k in range(3):
            g = fabs(_clip(w[t, k], a, b) - u[t, k])
            if g > best:
                best = g
        for i in range(3):
            j = (i + 1) % 3
            dw = w[t, j] - w[t, i]
            if dw == 0.0:
                continue
            for q in range(2):
                level = a if q == 0 else b
                s = (level - w[t, i]) / dw
                if s > 0.0 and s < 1.0:
                    g = fabs(level - (u[t, i] + s * (u[t, j] - u[t, i])))
                    if g > best:
                        best = g
        res[t] = best
    return res_np
