# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled search backend.

Same contract as _search_py.exhaustive_best_per_size; see that module for
the algebra. The DFS here runs per-candidate scalar loops instead of
vectorized nodes, which is what makes it worth compiling.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()

ctypedef double complex cplx

# Floor keeping the Gaussian xi positive against roundoff.
cdef double XI_FLOOR = 1e-300


cdef long _dfs(int s, int start, double loglik,
               cplx[:, ::1] G, double[::1] gdiag, cplx[::1] c,
               double noise_var, double ridge, bint with_logdet, double tol,
               int max_size, int L,
               cplx[:, :, ::1] lam, cplx[:, ::1] u,
               cplx[:, ::1] eta, cplx[:, ::1] w,
               int[::1] sel,
               double[::1] best_ll, int[:, ::1] best_sup):
    cdef long nodes = 0
    cdef int i, j, k
    cdef double xi, dlt, ll, av2, inv_xi
    cdef cplx acc, v
    for i in range(start, L):
        for j in range(s):
            eta[s, j] = G[sel[j], i]
        xi = ridge + gdiag[i]
        v = c[i]
        for j in range(s):
            acc = 0
            for k in range(s):
                acc = acc + lam[s, j, k] * eta[s, k]
            w[s, j] = acc
            xi = xi - (eta[s, j].conjugate() * acc).real
            v = v - eta[s, j].conjugate() * u[s, j]
        nodes += 1
        if with_logdet:
            if xi < XI_FLOOR:
                xi = XI_FLOOR
            av2 = v.real * v.real + v.imag * v.imag
            dlt = av2 / (noise_var * xi) - log(xi / ridge)
        else:
            if xi <= tol:
                continue
            av2 = v.real * v.real + v.imag * v.imag
            dlt = av2 / (noise_var * xi)
        ll = loglik + dlt
        if ll > best_ll[s]:
            best_ll[s] = ll
            for j in range(s):
                best_sup[s, j] = sel[j]
            best_sup[s, s] = i
        if s + 1 < max_size:
            inv_xi = 1.0 / xi
            for j in range(s):
                for k in range(s):
                    lam[s + 1, j, k] = lam[s, j, k] + w[s, j] * w[s, k].conjugate() * inv_xi
                lam[s + 1, j, s] = -w[s, j] * inv_xi
                lam[s + 1, s, j] = -(w[s, j].conjugate()) * inv_xi
                u[s + 1, j] = u[s, j] - (v * inv_xi) * w[s, j]
            lam[s + 1, s, s] = inv_xi
            u[s + 1, s] = v * inv_xi
            sel[s] = i
            nodes += _dfs(s + 1, i + 1, ll, G, gdiag, c, noise_var, ridge,
                          with_logdet, tol, max_size, L, lam, u, eta, w, sel,
                          best_ll, best_sup)
    return nodes


def exhaustive_best_per_size(G, c, double base_loglik, double noise_var,
                             double ridge, bint with_logdet, int max_size,
                             double degenerate_tol):
    """Best support of each size 1..max_size by exhaustive DFS.

    Mirrors _search_py.exhaustive_best_per_size exactly, including the
    lexicographic tie rule and the node count.
    """
    G = np.ascontiguousarray(G, dtype=np.complex128)
    c = np.ascontiguousarray(c, dtype=np.complex128)
    # typed memoryviews below need writable buffers; ascontiguousarray can
    # hand back a read-only view (e.g. the 1x1 diagonal)
    if not G.flags.writeable:
        G = G.copy()
    if not c.flags.writeable:
        c = c.copy()
    cdef int L = G.shape[0]
    if G.shape[1] != L or c.shape[0] != L:
        raise ValueError("G must be square and c conformable")
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    if with_logdet and ridge <= 0:
        raise ValueError("ridge must be positive for the Gaussian chain")
    gdiag = np.diagonal(G).real.astype(np.float64)
    best_ll = np.full(max_size, -np.inf, dtype=np.float64)
    best_sup = np.full((max_size, max_size), -1, dtype=np.int32)
    lam = np.zeros((max_size + 1, max_size, max_size), dtype=np.complex128)
    u = np.zeros((max_size + 1, max_size), dtype=np.complex128)
    eta = np.zeros((max_size + 1, max_size), dtype=np.complex128)
    w = np.zeros((max_size + 1, max_size), dtype=np.complex128)
    sel = np.zeros(max_size, dtype=np.int32)
    cdef long nodes = _dfs(
        0, 0, base_loglik, G, gdiag, c, noise_var, ridge, with_logdet,
        degenerate_tol, max_size, L, lam, u, eta, w, sel, best_ll, best_sup,
    )
    return best_ll, best_sup, int(nodes)
