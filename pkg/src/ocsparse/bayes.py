"""Direct Bayesian kernels: per-support likelihoods, conditional
expectations, posterior weighting, and the exhaustive-MMSE oracle.

All routines here evaluate each support from scratch with dense linear
algebra. They are the reference route: the order-recursive machinery and the
clustering pipeline are validated against these, so nothing in this module
may share intermediate state with them.

Notation: y = Psi x + n, Psi has unit-norm columns, x is Bernoulli-activated
with amplitude variance sigma_x^2, n is circular complex Gaussian with
variance sigma_n^2. For a support S, Sigma_S = I_M + (sigma_x^2/sigma_n^2)
Psi_S Psi_S^H. Likelihoods drop constants that are shared across supports;
within one posterior they must all use the same convention, which here is:

    gaussian:  log p(y|S) = -(1/sigma_n^2) y^H Sigma_S^-1 y - log det Sigma_S
    unknown:   log p(y|S) = -(1/sigma_n^2) ||P_S^perp y||^2
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp

from .model import SensingMatrix
from .priors import GAUSSIAN, UNKNOWN, PriorConfig, support_prior_log

__all__ = [
    "Hypothesis",
    "PosteriorSet",
    "DegenerateSupportError",
    "DegenerateModelWarning",
    "gaussian_log_likelihood",
    "unknown_log_likelihood",
    "gaussian_cond_expectation",
    "blue_cond_expectation",
    "posterior_weights",
    "mmse_over_supports",
    "exhaustive_mmse",
    "map_support",
]

_EXHAUSTIVE_N_MAX = 20
_RANK_TOL = 1e-10


class DegenerateSupportError(ValueError):
    """Raised when a support's columns are rank deficient and the requested
    quantity needs the Gram inverse."""


class DegenerateModelWarning(UserWarning):
    """A support larger than M was scored: Sigma_S stays positive definite
    so the Gaussian likelihood remains well defined, but such supports are
    unidentifiable."""


@dataclass(frozen=True)
class Hypothesis:
    """A support set with its log-likelihood and conditional expectation.

    support is a strictly increasing tuple of column indices;
    cond_expectation holds E[x_S | y, S] aligned with that order.
    """

    support: Tuple[int, ...]
    log_likelihood: float
    cond_expectation: np.ndarray

    def __post_init__(self):
        sup = tuple(int(i) for i in self.support)
        if any(b <= a for a, b in zip(sup, sup[1:])):
            raise ValueError(f"support indices must be strictly increasing, got {sup}")
        object.__setattr__(self, "support", sup)
        e = np.asarray(self.cond_expectation, dtype=np.complex128)
        if e.shape != (len(sup),):
            raise ValueError(
                f"expectation length {e.shape} does not match |support|={len(sup)}"
            )
        object.__setattr__(self, "cond_expectation", e)

    def padded(self, N: int) -> np.ndarray:
        out = np.zeros(N, dtype=np.complex128)
        if self.support:
            out[list(self.support)] = self.cond_expectation
        return out


@dataclass(frozen=True)
class PosteriorSet:
    """Hypotheses with their normalized posterior weights."""

    hypotheses: List[Hypothesis]
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if len(self.hypotheses) != w.size:
            raise ValueError("weights and hypotheses length mismatch")
        if w.size and abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()}, expected 1")
        object.__setattr__(self, "weights", w)

    def mmse(self, N: int) -> np.ndarray:
        out = np.zeros(N, dtype=np.complex128)
        for h, w in zip(self.hypotheses, self.weights):
            if h.support:
                out[list(h.support)] += w * h.cond_expectation
        return out


def _support_columns(m: SensingMatrix, support: Sequence[int]) -> np.ndarray:
    sup = [int(i) for i in support]
    if len(set(sup)) != len(sup):
        raise ValueError(f"support has repeated indices: {sup}")
    return m.columns(sup)


def gaussian_log_likelihood(
    y: np.ndarray,
    support: Sequence[int],
    m: SensingMatrix,
    signal_var: float,
    noise_var: float,
) -> float:
    """log p(y|S) under the Gaussian amplitude prior, constants dropped."""
    y = np.asarray(y, dtype=np.complex128)
    if len(support) == 0:
        return float(-np.vdot(y, y).real / noise_var)
    if len(support) > m.M:
        warnings.warn(
            f"support size {len(support)} exceeds M={m.M}; Sigma_S stays valid "
            "but the model is degenerate",
            DegenerateModelWarning,
            stacklevel=2,
        )
    cols = _support_columns(m, support)
    sigma = np.eye(m.M, dtype=np.complex128)
    sigma += (signal_var / noise_var) * (cols @ cols.conj().T)
    cho = cho_factor(sigma, lower=True)
    quad = np.vdot(y, cho_solve(cho, y)).real
    logdet = 2.0 * np.log(np.diag(cho[0]).real).sum()
    return float(-quad / noise_var - logdet)


def unknown_log_likelihood(
    y: np.ndarray,
    support: Sequence[int],
    m: SensingMatrix,
    noise_var: float,
) -> float:
    """log p(y|S) with unknown amplitude statistics: the energy of y outside
    span(Psi_S), scaled by -1/sigma_n^2."""
    y = np.asarray(y, dtype=np.complex128)
    total = np.vdot(y, y).real
    if len(support) == 0:
        return float(-total / noise_var)
    cols = _support_columns(m, support)
    gram = cols.conj().T @ cols
    b = cols.conj().T @ y
    try:
        cho = cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSupportError(
            f"columns {tuple(support)} are rank deficient"
        ) from exc
    if np.diag(cho[0]).real.min() ** 2 <= _RANK_TOL:
        raise DegenerateSupportError(f"columns {tuple(support)} are rank deficient")
    fitted = np.vdot(b, cho_solve(cho, b)).real
    # projection residual; clip the tiny negative roundoff
    resid = max(total - fitted, 0.0)
    return float(-resid / noise_var)


def gaussian_cond_expectation(
    y: np.ndarray,
    support: Sequence[int],
    m: SensingMatrix,
    signal_var: float,
    noise_var: float,
) -> np.ndarray:
    """E[x_S | y, S] = sigma_x^2 Psi_S^H (sigma_x^2 Psi_S Psi_S^H +
    sigma_n^2 I)^-1 y, the exact linear MMSE."""
    y = np.asarray(y, dtype=np.complex128)
    if len(support) == 0:
        return np.zeros(0, dtype=np.complex128)
    cols = _support_columns(m, support)
    cov = signal_var * (cols @ cols.conj().T) + noise_var * np.eye(
        m.M, dtype=np.complex128
    )
    return signal_var * (cols.conj().T @ np.linalg.solve(cov, y))


def blue_cond_expectation(
    y: np.ndarray,
    support: Sequence[int],
    m: SensingMatrix,
) -> np.ndarray:
    """Best linear unbiased estimate (Psi_S^H Psi_S)^-1 Psi_S^H y."""
    y = np.asarray(y, dtype=np.complex128)
    if len(support) == 0:
        return np.zeros(0, dtype=np.complex128)
    cols = _support_columns(m, support)
    gram = cols.conj().T @ cols
    try:
        cho = cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSupportError(
            f"columns {tuple(support)} are rank deficient"
        ) from exc
    if np.diag(cho[0]).real.min() ** 2 <= _RANK_TOL:
        raise DegenerateSupportError(f"columns {tuple(support)} are rank deficient")
    return cho_solve(cho, cols.conj().T @ y)


def posterior_weights(
    hypotheses: Sequence[Hypothesis], N: int, p: float
) -> PosteriorSet:
    """Normalize exp(log-likelihood + log prior) over the given hypotheses.

    The normalization runs through log-sum-exp so widely spread
    log-likelihoods cannot underflow."""
    hs = list(hypotheses)
    if not hs:
        raise ValueError("need at least one hypothesis")
    seen = set()
    for h in hs:
        if h.support in seen:
            raise ValueError(f"duplicate support {h.support} in hypothesis list")
        seen.add(h.support)
    logw = np.array(
        [h.log_likelihood + support_prior_log(len(h.support), N, p) for h in hs]
    )
    w = np.exp(logw - logsumexp(logw))
    w /= w.sum()
    return PosteriorSet(hs, w)


def _hypothesis_for(
    y: np.ndarray,
    support: Tuple[int, ...],
    m: SensingMatrix,
    prior: PriorConfig,
    noise_var: float,
) -> Hypothesis:
    if prior.kind == GAUSSIAN:
        ll = gaussian_log_likelihood(y, support, m, prior.signal_variance, noise_var)
        e = gaussian_cond_expectation(y, support, m, prior.signal_variance, noise_var)
    else:
        ll = unknown_log_likelihood(y, support, m, noise_var)
        e = blue_cond_expectation(y, support, m)
    return Hypothesis(support, ll, e)


def mmse_over_supports(
    y: np.ndarray,
    m: SensingMatrix,
    supports: Iterable[Sequence[int]],
    prior: PriorConfig,
    noise_var: float,
) -> Tuple[np.ndarray, PosteriorSet]:
    """Posterior-weighted MMSE estimate restricted to an explicit support
    family, every support evaluated with the direct kernels.

    Under the unknown prior, rank-deficient supports have no well-defined
    likelihood and are dropped from the family (equivalently, given zero
    prior mass). Gaussian supports beyond size M are scored as usual; the
    per-call degeneracy warning is silenced here because enumerating them
    is this routine's purpose."""
    y = np.asarray(y, dtype=np.complex128)
    hs: List[Hypothesis] = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateModelWarning)
        for sup in supports:
            sup = tuple(sorted(int(i) for i in sup))
            try:
                hs.append(_hypothesis_for(y, sup, m, prior, noise_var))
            except DegenerateSupportError:
                if prior.kind == UNKNOWN:
                    continue
                raise
    posterior = posterior_weights(hs, m.N, prior.p)
    return posterior.mmse(m.N), posterior


def exhaustive_mmse(
    y: np.ndarray,
    m: SensingMatrix,
    prior: PriorConfig,
    noise_var: float,
) -> Tuple[np.ndarray, PosteriorSet]:
    """Full-posterior MMSE: the weighted sum over every support of [0, N).

    Exponential in N; refuses N > 20. Unknown-prior supports larger than M
    are always rank deficient, so that family stops at size M."""
    if m.N > _EXHAUSTIVE_N_MAX:
        raise ValueError(
            f"exhaustive enumeration limited to N <= {_EXHAUSTIVE_N_MAX}, got N={m.N}"
        )
    max_size = m.N if prior.kind == GAUSSIAN else min(m.N, m.M)
    supports = itertools.chain.from_iterable(
        itertools.combinations(range(m.N), s) for s in range(max_size + 1)
    )
    return mmse_over_supports(y, m, supports, prior, noise_var)


def map_support(posterior: PosteriorSet) -> Hypothesis:
    """Hypothesis of maximal weight; ties go to the smaller support, then
    lexicographically."""
    if not posterior.hypotheses:
        raise ValueError("empty posterior")
    order = range(len(posterior.hypotheses))
    best = min(
        order,
        key=lambda i: (
            -posterior.weights[i],
            len(posterior.hypotheses[i].support),
            posterior.hypotheses[i].support,
        ),
    )
    return posterior.hypotheses[best]
