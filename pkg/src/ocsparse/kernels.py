"""Within-cluster support search: backend selection plus the greedy and
enumerate-everything variants.

The exhaustive per-size search is the hot loop of the whole pipeline, so it
exists twice: a Cython extension (built at install time when a compiler is
available) and a pure-Python fallback. The import below picks the compiled
one when present; everything downstream goes through this module and never
imports a backend directly. ``ocsparse kernel-bench`` times both on
identical inputs.
"""

from __future__ import annotations

import math
from typing import List, Optional, Tuple

import numpy as np

from . import _search_py as _fallback
from ._search_py import eval_candidates, extend_state

try:
    from . import _search_cy as _compiled
except ImportError:  # built without a compiler; fallback carries the load
    _compiled = None

__all__ = [
    "RANK_TOL",
    "backend_name",
    "available_backends",
    "search_space_size",
    "best_supports",
    "greedy_supports",
    "enumerate_subsets",
]

RANK_TOL = 1e-10


def backend_name() -> str:
    """Which implementation best_supports dispatches to by default."""
    return "compiled" if _compiled is not None else "fallback"


def available_backends() -> dict:
    out = {"fallback": _fallback}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


def search_space_size(L: int, max_size: int) -> int:
    """Number of nonempty supports of size <= max_size inside a cluster of
    length L; the quantity compared against the enumeration budget."""
    return sum(math.comb(L, s) for s in range(1, min(max_size, L) + 1))


def _validate(G, c, ridge, with_logdet):
    G = np.ascontiguousarray(G, dtype=np.complex128)
    c = np.ascontiguousarray(c, dtype=np.complex128)
    L = G.shape[0]
    if G.shape != (L, L) or c.shape != (L,):
        raise ValueError("G must be square and c conformable")
    if with_logdet and ridge <= 0:
        raise ValueError("ridge must be positive for the Gaussian chain")
    return G, c, L


def best_supports(
    G: np.ndarray,
    c: np.ndarray,
    base_loglik: float,
    noise_var: float,
    ridge: float,
    with_logdet: bool,
    max_size: int,
    degenerate_tol: float = RANK_TOL,
    backend: Optional[str] = None,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Exhaustive per-size dominant supports; see the backend docstrings."""
    G, c, _ = _validate(G, c, ridge, with_logdet)
    if backend is None:
        impl = _compiled if _compiled is not None else _fallback
    else:
        impl = available_backends()[backend]
    return impl.exhaustive_best_per_size(
        G, c, float(base_loglik), float(noise_var), float(ridge),
        bool(with_logdet), int(max_size), float(degenerate_tol),
    )


def greedy_supports(
    G: np.ndarray,
    c: np.ndarray,
    base_loglik: float,
    noise_var: float,
    ridge: float,
    with_logdet: bool,
    max_size: int,
    degenerate_tol: float = RANK_TOL,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Greedy nested family: per level keep the single best extension.

    Same return convention as best_supports. The size-s entry is the greedy
    path prefix, so supports are nested by construction; values lower-bound
    the exhaustive optimum.
    """
    G, c, L = _validate(G, c, ridge, with_logdet)
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    gdiag = np.ascontiguousarray(G.diagonal().real)
    max_size = min(max_size, L)
    best_ll = np.full(max_size, -np.inf)
    best_sup = np.full((max_size, max_size), -1, dtype=np.int32)
    sel: List[int] = []
    lam = np.zeros((0, 0), dtype=np.complex128)
    u = np.zeros(0, dtype=np.complex128)
    loglik = float(base_loglik)
    nodes = 0
    remaining = np.arange(L)
    for depth in range(max_size):
        if remaining.size == 0:
            break
        ll, xi, v, w, ok = eval_candidates(
            G, gdiag, c, sel, lam, u, loglik, remaining, noise_var, ridge,
            with_logdet, degenerate_tol,
        )
        nodes += remaining.size
        if not ok.any():
            break
        j = int(np.argmax(np.where(ok, ll, -np.inf)))
        lam, u = extend_state(lam, u, w[:, j], xi[j], v[j])
        sel = sel + [int(remaining[j])]
        loglik = float(ll[j])
        best_ll[depth] = loglik
        best_sup[depth, :depth + 1] = sel
        remaining = np.delete(remaining, j)
    return best_ll, best_sup, nodes


def enumerate_subsets(
    G: np.ndarray,
    c: np.ndarray,
    base_loglik: float,
    noise_var: float,
    ridge: float,
    with_logdet: bool,
    max_size: Optional[int] = None,
    degenerate_tol: float = RANK_TOL,
) -> List[Tuple[Tuple[int, ...], float, np.ndarray]]:
    """Every subset up to max_size with its log-likelihood and chain
    estimate u, the empty set included.

    Used by the retain-all mode and by MMSE refinement, where the whole
    family is kept rather than only the per-size winners. Degenerate
    branches (unknown prior) are pruned with their subtrees. Exponential;
    the caller enforces its budget.
    """
    G, c, L = _validate(G, c, ridge, with_logdet)
    if max_size is None:
        max_size = L
    max_size = min(max_size, L)
    gdiag = np.ascontiguousarray(G.diagonal().real)
    out: List[Tuple[Tuple[int, ...], float, np.ndarray]] = [
        ((), float(base_loglik), np.zeros(0, dtype=np.complex128))
    ]
    if max_size < 1:
        return out

    def rec(sel, lam, u, loglik, start):
        s = len(sel)
        cand = np.arange(start, L)
        if cand.size == 0:
            return
        ll, xi, v, w, ok = eval_candidates(
            G, gdiag, c, sel, lam, u, loglik, cand, noise_var, ridge,
            with_logdet, degenerate_tol,
        )
        for j in range(cand.size):
            if not ok[j]:
                continue
            lam2, u2 = extend_state(lam, u, w[:, j], xi[j], v[j])
            sup = tuple(sel + [int(cand[j])])
            out.append((sup, float(ll[j]), u2))
            if s + 1 < max_size:
                rec(sel + [int(cand[j])], lam2, u2, float(ll[j]), int(cand[j]) + 1)

    rec([], np.zeros((0, 0), dtype=np.complex128),
        np.zeros(0, dtype=np.complex128), float(base_loglik), 0)
    return out
