"""Pure-Python search backend.

Depth-first enumeration of within-cluster supports using the
Gram-parameterized chain: state (Lambda, u) with Lambda = (ridge I + G_S)^-1
and u = Lambda (Psi_S^H y). Extending by column i costs O(|S|^2) via the
Schur complement xi = ridge + g_ii - eta^H Lambda eta and the innovation
v = c_i - eta^H u; the log-likelihood gains |v|^2 / (sigma_n^2 xi), minus
log(xi / ridge) when the Gaussian determinant term is in play.

The compiled backend (_search_cy) implements exhaustive_best_per_size with
identical semantics; keep the two in lockstep.
"""

from __future__ import annotations

import numpy as np

# Floor keeping the Gaussian xi positive against roundoff.
_XI_FLOOR = 1e-300


def eval_candidates(G, gdiag, c, sel, lam, u, loglik, cand, noise_var, ridge,
                    with_logdet, tol):
    """Extend one chain node by each candidate column at once.

    Returns (ll, xi, v, w, ok): per-candidate cumulative log-likelihood,
    Schur complement, innovation, the Lambda eta columns (s x m), and the
    validity mask (all True for the Gaussian chain, xi > tol otherwise).
    """
    s = len(sel)
    nc = cand.size
    if s:
        eta = G[np.ix_(sel, cand)]
        w = lam @ eta
        schur = np.einsum("jm,jm->m", eta.conj(), w).real
        xi = ridge + gdiag[cand] - schur
        v = c[cand] - np.einsum("jm,j->m", eta.conj(), u)
    else:
        w = np.zeros((0, nc), dtype=np.complex128)
        xi = ridge + gdiag[cand]
        v = c[cand].copy()
    if with_logdet:
        xi = np.maximum(xi, _XI_FLOOR)
        ok = np.ones(nc, dtype=bool)
        delta = np.abs(v) ** 2 / (noise_var * xi) - np.log(xi / ridge)
    else:
        ok = xi > tol
        delta = np.full(nc, -np.inf)
        if ok.any():
            delta[ok] = np.abs(v[ok]) ** 2 / (noise_var * xi[ok])
    return loglik + delta, xi, v, w, ok


def extend_state(lam, u, w_j, xi_j, v_j):
    """Block-inversion update of (Lambda, u) for one appended column."""
    s = u.size
    lam2 = np.empty((s + 1, s + 1), dtype=np.complex128)
    lam2[:s, :s] = lam + np.outer(w_j, w_j.conj()) / xi_j
    lam2[:s, s] = -w_j / xi_j
    lam2[s, :s] = -w_j.conj() / xi_j
    lam2[s, s] = 1.0 / xi_j
    u2 = np.empty(s + 1, dtype=np.complex128)
    u2[:s] = u - (v_j / xi_j) * w_j
    u2[s] = v_j / xi_j
    return lam2, u2


def exhaustive_best_per_size(G, c, base_loglik, noise_var, ridge, with_logdet,
                             max_size, degenerate_tol):
    """Best support of each size 1..max_size by exhaustive DFS.

    Returns (best_ll, best_sup, nodes): per-size cumulative log-likelihood
    (-inf where no valid support exists), per-size winning supports as rows
    of local column indices padded with -1, and the number of candidate
    evaluations. Ties keep the lexicographically first support.
    """
    G = np.ascontiguousarray(G, dtype=np.complex128)
    c = np.ascontiguousarray(c, dtype=np.complex128)
    L = G.shape[0]
    if G.shape != (L, L) or c.shape != (L,):
        raise ValueError("G must be square and c conformable")
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    if with_logdet and ridge <= 0:
        raise ValueError("ridge must be positive for the Gaussian chain")
    gdiag = np.ascontiguousarray(G.diagonal().real)
    best_ll = np.full(max_size, -np.inf)
    best_sup = np.full((max_size, max_size), -1, dtype=np.int32)
    nodes = 0

    def rec(sel, lam, u, loglik, start):
        nonlocal nodes
        s = len(sel)
        cand = np.arange(start, L)
        if cand.size == 0:
            return
        ll, xi, v, w, ok = eval_candidates(
            G, gdiag, c, sel, lam, u, loglik, cand, noise_var, ridge,
            with_logdet, degenerate_tol,
        )
        nodes += cand.size
        if ok.any():
            j = int(np.argmax(np.where(ok, ll, -np.inf)))
            if ll[j] > best_ll[s]:
                best_ll[s] = ll[j]
                best_sup[s, :s] = sel
                best_sup[s, s] = cand[j]
        if s + 1 < max_size:
            for j in range(cand.size):
                if not ok[j]:
                    continue
                lam2, u2 = extend_state(lam, u, w[:, j], xi[j], v[j])
                rec(sel + [int(cand[j])], lam2, u2, float(ll[j]), int(cand[j]) + 1)

    rec([], np.zeros((0, 0), dtype=np.complex128),
        np.zeros(0, dtype=np.complex128), float(base_loglik), 0)
    return best_ll, best_sup, nodes
