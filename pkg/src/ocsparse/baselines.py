"""Reference recovery algorithms: orthogonal matching pursuit and a
Bayesian refinement that reweights the subsets of a given support."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .bayes import Hypothesis, PosteriorSet, posterior_weights
from .model import SensingMatrix
from .priors import GAUSSIAN, PriorConfig, max_support_size

__all__ = ["OmpResult", "omp_recover", "mmse_refine"]


@dataclass
class OmpResult:
    support: Tuple[int, ...]  # in selection order
    coefficients: np.ndarray
    estimate: np.ndarray
    residual_norms: List[float]
    rank_loss: bool = False

    @property
    def residual_norm(self) -> float:
        return self.residual_norms[-1]


def omp_recover(
    y: np.ndarray,
    m: SensingMatrix,
    max_iter: Optional[int] = None,
    residual_tol: Optional[float] = None,
    p: Optional[float] = None,
    noise_var: Optional[float] = None,
) -> OmpResult:
    """Greedy support growth by residual correlation with least-squares
    re-fitting after each selection.

    Stops on the iteration cap (default: the high-probability support size
    for activity rate p), on the residual dropping to the expected noise
    floor sqrt(M * noise_var), on an exactly zero correlation, or on the
    selected columns going rank deficient (the offending column is dropped
    and the flag set).
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (m.M,):
        raise ValueError(f"observation shape {y.shape}, expected ({m.M},)")
    if max_iter is None:
        if p is None:
            raise ValueError("either max_iter or p is required")
        # derived default; clamp rather than reject since M is ours to see
        max_iter = min(max_support_size(m.N, p, 0.01), m.M)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if max_iter > m.M:
        raise ValueError(f"max_iter={max_iter} exceeds M={m.M}")
    if residual_tol is None:
        if noise_var is None:
            raise ValueError("either residual_tol or noise_var is required")
        residual_tol = float(np.sqrt(m.M * noise_var))
    if residual_tol < 0:
        raise ValueError("residual_tol must be nonnegative")

    selected: List[int] = []
    coeffs = np.zeros(0, dtype=np.complex128)
    residual = y.copy()
    norms = [float(np.linalg.norm(residual))]
    rank_loss = False
    while norms[-1] > residual_tol and len(selected) < max_iter:
        mags = np.abs(m.adjoint_apply(residual))
        if selected:
            mags[selected] = -1.0
        k = int(np.argmax(mags))
        if mags[k] <= 0.0:
            break
        selected.append(k)
        cols = m.columns(np.array(selected, dtype=np.int64))
        coeffs_new, _, rank, _ = np.linalg.lstsq(cols, y, rcond=None)
        if rank < len(selected):
            selected.pop()
            rank_loss = True
            break
        coeffs = coeffs_new
        residual = y - cols @ coeffs
        norms.append(float(np.linalg.norm(residual)))

    estimate = np.zeros(m.N, dtype=np.complex128)
    if selected:
        estimate[selected] = coeffs
    return OmpResult(tuple(selected), coeffs, estimate, norms, rank_loss)


def mmse_refine(
    y: np.ndarray,
    m: SensingMatrix,
    s_r: Sequence[int],
    prior: PriorConfig,
    noise_var: float,
    cap: int = 12,
) -> np.ndarray:
    """Posterior-weighted estimate over subsets of the candidate support.

    Every subset is scored when the candidate has at most ``cap`` elements;
    larger candidates fall back to the nested greedy chain family. Weights
    use the Bernoulli support prior over the full index range, so this is
    the exact MMSE estimate conditioned on the support lying within s_r
    (in the exhaustive regime).
    """
    s_r = tuple(sorted({int(i) for i in s_r}))
    if any(i < 0 or i >= m.N for i in s_r):
        raise ValueError("candidate support outside the index range")
    x = np.zeros(m.N, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    base = float(-np.vdot(y, y).real / noise_var)
    if not s_r:
        return x
    idx = np.asarray(s_r, dtype=np.int64)
    cols = m.columns(idx)
    G = m.gram(idx)
    c = cols.conj().T @ y
    if prior.kind == GAUSSIAN:
        ridge = noise_var / prior.signal_variance
        with_logdet = True
        depth = len(s_r)
    else:
        ridge = 0.0
        with_logdet = False
        depth = min(len(s_r), m.M)

    hyps: List[Hypothesis] = [Hypothesis((), base, np.zeros(0, dtype=np.complex128))]

    def add(local: np.ndarray, ll: float, u: Optional[np.ndarray]) -> None:
        local = np.asarray(local, dtype=np.int64)
        if u is None:
            sub = G[np.ix_(local, local)]
            if ridge:
                sub = sub + ridge * np.eye(local.size)
            u = np.linalg.solve(sub, c[local])
        # s_r is sorted, so local order is already global order
        hyps.append(Hypothesis(tuple(int(idx[j]) for j in local), float(ll), u))

    if len(s_r) <= cap:
        family = kernels.enumerate_subsets(
            G, c, base, noise_var, ridge, with_logdet, max_size=depth
        )
        for sup, ll, u in family:
            if sup:
                add(np.array(sup), ll, u)
    else:
        best_ll, best_sup, _ = kernels.greedy_supports(
            G, c, base, noise_var, ridge, with_logdet, depth
        )
        for s in range(depth):
            if np.isfinite(best_ll[s]):
                add(np.sort(best_sup[s, : s + 1]), float(best_ll[s]), None)

    ps: PosteriorSet = posterior_weights(hyps, m.N, prior.p)
    return ps.mmse(m.N)
