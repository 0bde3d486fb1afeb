"""Order-recursive likelihood and expectation updates, plus the
observation-side shortcuts that map one cluster's inference onto another
(DFT modulation, Toeplitz windowing).

Both chain states extend a support one column at a time using rank-one /
block-inversion identities. Every prefix of a chain must reproduce the
direct kernels in bayes to within roundoff; the test suite pins that at
1e-9 relative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from .model import PartialDFT, SensingMatrix, SubsampledToeplitz

__all__ = [
    "GaussianChainState",
    "UnknownChainState",
    "DegenerateExtensionError",
    "gaussian_chain_init",
    "gaussian_extend",
    "gaussian_chain_expectation",
    "unknown_chain_init",
    "unknown_extend",
    "unknown_chain_expectation",
    "modulate_observation",
    "window_observation",
]

# Schur complements at or below this are treated as a rank-deficient
# extension of the unknown-prior chain.
RANK_TOL = 1e-10


class DegenerateExtensionError(ValueError):
    """Extension column is (numerically) inside the current span."""


@dataclass
class GaussianChainState:
    """Incremental state for the Gaussian-prior likelihood chain.

    Carries Sigma_S^-1 (M x M), its log determinant, the running
    log-likelihood, the cache q = Sigma_S^-1 y that the expectation needs,
    and the omega/xi pair of every extension step taken so far. States are
    value-like: extending returns a new state and leaves the input intact.
    """

    matrix: SensingMatrix
    y: np.ndarray
    signal_var: float
    noise_var: float
    support: Tuple[int, ...]
    sigma_inv: np.ndarray
    logdet: float
    log_likelihood: float
    q: np.ndarray  # Sigma_S^-1 y
    omegas: list = field(default_factory=list)
    xis: list = field(default_factory=list)

    @property
    def expectation(self) -> np.ndarray:
        return gaussian_chain_expectation(self, self.y, self.signal_var, self.noise_var)


@dataclass
class UnknownChainState:
    """Incremental state for the unknown-prior (least-squares) chain.

    Carries Lambda_S = (Psi_S^H Psi_S)^-1, the correlations b = Psi_S^H y,
    the running BLUE u = Lambda_S b (which is the conditional expectation),
    and the log-likelihood -(1/sigma_n^2) ||P_S^perp y||^2.
    """

    matrix: SensingMatrix
    y: np.ndarray
    noise_var: float
    support: Tuple[int, ...]
    lam: np.ndarray
    b: np.ndarray
    u: np.ndarray
    log_likelihood: float
    etas: list = field(default_factory=list)
    xis: list = field(default_factory=list)

    @property
    def expectation(self) -> np.ndarray:
        return self.u.copy()


def gaussian_chain_init(
    y: np.ndarray, m: SensingMatrix, signal_var: float, noise_var: float
) -> GaussianChainState:
    """Chain state for the empty support: Sigma = I, loglik = -||y||^2/sn2."""
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (m.M,):
        raise ValueError(f"observation shape {y.shape} does not match M={m.M}")
    if signal_var <= 0 or noise_var <= 0:
        raise ValueError("variances must be positive")
    energy = np.vdot(y, y).real
    return GaussianChainState(
        matrix=m,
        y=y,
        signal_var=signal_var,
        noise_var=noise_var,
        support=(),
        sigma_inv=np.eye(m.M, dtype=np.complex128),
        logdet=0.0,
        log_likelihood=float(-energy / noise_var),
        q=y.copy(),
    )


def gaussian_extend(state: GaussianChainState, i: int, y: np.ndarray) -> GaussianChainState:
    """Extend the support by column i.

    omega = Sigma_S^-1 psi_i and xi = (1 + (sx2/sn2) psi_i^H omega)^-1 drive
    the rank-one updates: Sigma^-1 loses (sx2/sn2) xi omega omega^H, the log
    determinant grows by -log xi, and the log-likelihood gains
    log xi + (sx2 xi / sn2^2) |omega^H y|^2.
    """
    i = int(i)
    if i in state.support:
        raise ValueError(f"column {i} already in support {state.support}")
    y = np.asarray(y, dtype=np.complex128)
    m = state.matrix
    sx2, sn2 = state.signal_var, state.noise_var
    psi = m.column(i)
    omega = state.sigma_inv @ psi
    xi = 1.0 / (1.0 + (sx2 / sn2) * np.vdot(psi, omega).real)
    corr = np.vdot(omega, y)  # omega^H y
    sigma_inv = state.sigma_inv - (sx2 / sn2) * xi * np.outer(omega, omega.conj())
    return GaussianChainState(
        matrix=m,
        y=state.y,
        signal_var=sx2,
        noise_var=sn2,
        support=state.support + (i,),
        sigma_inv=sigma_inv,
        logdet=state.logdet - np.log(xi),
        log_likelihood=state.log_likelihood
        + np.log(xi)
        + (sx2 * xi / sn2**2) * abs(corr) ** 2,
        q=state.q - (sx2 / sn2) * xi * omega * corr,
        omegas=state.omegas + [omega],
        xis=state.xis + [float(xi)],
    )


def gaussian_chain_expectation(
    state: GaussianChainState, y: np.ndarray, signal_var: float, noise_var: float
) -> np.ndarray:
    """E[x_S | y, S] over the chain's support (insertion order), from the
    cached Sigma_S^-1 y: E = (sx2/sn2) Psi_S^H (Sigma_S^-1 y)."""
    if not state.support:
        return np.zeros(0, dtype=np.complex128)
    cols = state.matrix.columns(state.support)
    return (signal_var / noise_var) * (cols.conj().T @ state.q)


def unknown_chain_init(y: np.ndarray, m: SensingMatrix, noise_var: float) -> UnknownChainState:
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (m.M,):
        raise ValueError(f"observation shape {y.shape} does not match M={m.M}")
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    energy = np.vdot(y, y).real
    return UnknownChainState(
        matrix=m,
        y=y,
        noise_var=noise_var,
        support=(),
        lam=np.zeros((0, 0), dtype=np.complex128),
        b=np.zeros(0, dtype=np.complex128),
        u=np.zeros(0, dtype=np.complex128),
        log_likelihood=float(-energy / noise_var),
    )


def unknown_extend(state: UnknownChainState, i: int, y: np.ndarray) -> UnknownChainState:
    """Extend the support by column i via block inversion of the Gram.

    eta = Psi_S^H psi_i, omega = Lambda eta, xi = ||psi_i||^2 - omega^H eta
    (the Schur complement). xi <= RANK_TOL means psi_i is numerically inside
    span(Psi_S) and the extension is refused. The log-likelihood gains
    |psi_i^H y - omega^H b|^2 / (sn2 xi), always nonnegative.
    """
    i = int(i)
    if i in state.support:
        raise ValueError(f"column {i} already in support {state.support}")
    y = np.asarray(y, dtype=np.complex128)
    m = state.matrix
    psi = m.column(i)
    c_i = np.vdot(psi, y)
    s = len(state.support)
    if s:
        eta = m.columns(state.support).conj().T @ psi
        w = state.lam @ eta
        xi = np.vdot(psi, psi).real - np.vdot(eta, w).real
    else:
        eta = np.zeros(0, dtype=np.complex128)
        w = np.zeros(0, dtype=np.complex128)
        xi = np.vdot(psi, psi).real
    if xi <= RANK_TOL:
        raise DegenerateExtensionError(
            f"column {i} is rank deficient against support {state.support} "
            f"(schur complement {xi:.3e})"
        )
    v = c_i - np.vdot(eta, state.u)  # innovation of psi_i against the BLUE fit
    lam = np.empty((s + 1, s + 1), dtype=np.complex128)
    lam[:s, :s] = state.lam + np.outer(w, w.conj()) / xi
    lam[:s, s] = -w / xi
    lam[s, :s] = -w.conj() / xi
    lam[s, s] = 1.0 / xi
    u = np.empty(s + 1, dtype=np.complex128)
    u[:s] = state.u - (v / xi) * w
    u[s] = v / xi
    return UnknownChainState(
        matrix=m,
        y=state.y,
        noise_var=state.noise_var,
        support=state.support + (i,),
        lam=lam,
        b=np.append(state.b, c_i),
        u=u,
        log_likelihood=state.log_likelihood + abs(v) ** 2 / (state.noise_var * xi),
        etas=state.etas + [eta],
        xis=state.xis + [float(xi)],
    )


def unknown_chain_expectation(state: UnknownChainState) -> np.ndarray:
    """BLUE over the chain's support (insertion order)."""
    return state.u.copy()


def modulate_observation(y: np.ndarray, delta: int, m: SensingMatrix) -> np.ndarray:
    """Map inference on columns shifted by delta onto the reference columns.

    For the partial DFT, psi_{k+delta} = psi_k (.) phi_delta with
    phi_delta(m') = exp(-2j pi (Z+m') delta / N). Multiplying y by the
    conjugate phase makes every likelihood and expectation of a shifted
    support equal that of the unshifted one.
    """
    if not isinstance(m, PartialDFT):
        raise TypeError("modulation applies to the partial DFT variant only")
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (m.M,):
        raise ValueError(f"observation shape {y.shape} does not match M={m.M}")
    mp = np.arange(m.M, dtype=np.int64)
    expo = ((m.Z + mp) * int(delta)) % m.N
    phase = np.exp(-2j * np.pi * expo / m.N)
    return y * phase.conj()


def window_observation(
    y: np.ndarray, cluster, m: SensingMatrix
) -> np.ndarray:
    """Zero y outside the rows touched by the cluster's columns.

    Toeplitz columns have short row support, so Sigma_S^-1 acts as the
    identity off those rows for any S inside the cluster; the windowed
    observation carries all the support-dependent information.
    ``cluster`` is a sequence of column indices or an object with an
    ``indices`` attribute.
    """
    if not isinstance(m, SubsampledToeplitz):
        raise TypeError("windowing applies to the subsampled Toeplitz variant only")
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (m.M,):
        raise ValueError(f"observation shape {y.shape} does not match M={m.M}")
    indices = getattr(cluster, "indices", cluster)
    mask = m.row_support_mask(np.asarray(indices, dtype=np.int64))
    return np.where(mask, y, 0.0 + 0.0j)
