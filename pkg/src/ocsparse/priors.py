"""Sparsity priors, support-size caps, and the noise-calibrated correlation
threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy.special import erfc, erfcinv

__all__ = [
    "PriorConfig",
    "NoiseConfig",
    "support_prior_log",
    "max_support_size",
    "cluster_max_support",
    "correlation_threshold",
    "erfc_inv",
    "GAUSSIAN",
    "UNKNOWN",
]

GAUSSIAN = "gaussian"
UNKNOWN = "unknown"

# Tail mass (fixed, not a knob) behind the per-cluster support cap.
_CLUSTER_TAIL = 1e-2
# Default threshold tail: about a 3-sigma one-sided real-Gaussian excursion.
_DEFAULT_TAIL = 0.00135


@dataclass(frozen=True)
class PriorConfig:
    """Signal prior: Bernoulli(p) activation times an i.i.d. amplitude law.

    kind selects the amplitude model used for estimation: "gaussian" for
    circular complex Gaussian of variance signal_variance, "unknown" for an
    uninformative amplitude (least-squares conditional means). The
    uniform_halfwidth only matters when synthesizing unknown-kind signals;
    when left unset it is derived so the uniform square matches
    signal_variance.
    """

    p: float
    signal_variance: float = 1.0
    kind: str = GAUSSIAN
    uniform_halfwidth: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"sparsity rate p={self.p} outside (0, 1)")
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if self.kind not in (GAUSSIAN, UNKNOWN):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.uniform_halfwidth is not None and self.uniform_halfwidth <= 0:
            raise ValueError("uniform_halfwidth must be positive")

    def halfwidth(self) -> float:
        """Half-side of the centered complex square with the configured
        variance: Var(U(-a,a)) = a^2/3 per real axis."""
        if self.uniform_halfwidth is not None:
            return self.uniform_halfwidth
        return math.sqrt(1.5 * self.signal_variance)


@dataclass(frozen=True)
class NoiseConfig:
    """Noise level and the tail probability used to set the correlation
    threshold."""

    noise_variance: float
    p_n: float = _DEFAULT_TAIL

    def __post_init__(self):
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")
        if not 0.0 < self.p_n <= 0.5:
            raise ValueError(f"tail probability p_n={self.p_n} outside (0, 0.5]")

    def threshold(self) -> float:
        return correlation_threshold(self.noise_variance, self.p_n)


def support_prior_log(s: int, N: int, p: float) -> float:
    """log p(S) for |S| = s under i.i.d. Bernoulli(p) activation."""
    if not 0 <= s <= N:
        raise ValueError(f"support size {s} outside [0, {N}]")
    if not 0.0 < p < 1.0:
        raise ValueError(f"sparsity rate p={p} outside (0, 1)")
    return s * math.log(p) + (N - s) * math.log1p(-p)


def max_support_size(N: int, p: float, eps: float) -> int:
    """Smallest P whose Gaussian-approximated Binomial(N, p) upper tail is
    at most eps: 0.5 erfc((P - Np) / sqrt(2 Np (1-p))) <= eps."""
    if N < 1 or not 0.0 < p < 1.0:
        raise ValueError("need N >= 1 and p in (0, 1)")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"tail bound eps={eps} outside (0, 1)")
    mean = N * p
    sd = math.sqrt(2.0 * N * p * (1.0 - p))

    def tail(P: int) -> float:
        return 0.5 * erfc((P - mean) / sd)

    P = max(0, math.ceil(mean + sd * erfcinv(2.0 * eps)))
    # ceil on a float boundary can land one off in either direction
    while P < N and tail(P) > eps:
        P += 1
    while P > 0 and tail(P - 1) <= eps:
        P -= 1
    return min(P, N)


def cluster_max_support(L_i: int, p: float) -> int:
    """Per-cluster support cap from the Binomial(L_i, p) Gaussian tail at
    fixed mass 1e-2, floored at one."""
    if L_i < 1:
        raise ValueError("cluster length must be >= 1")
    if not 0.0 < p < 1.0:
        raise ValueError(f"sparsity rate p={p} outside (0, 1)")
    val = erfcinv(_CLUSTER_TAIL) * math.sqrt(2.0 * L_i * p * (1.0 - p)) + L_i * p
    return max(1, math.ceil(val))


def correlation_threshold(noise_variance: float, p_n: float = _DEFAULT_TAIL) -> float:
    """Threshold kappa with P(|noise correlation| > kappa) ~= p_n under a
    real-Gaussian tail model: kappa = sqrt(2 sigma_n^2) erfc^-1(2 p_n)."""
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    if not 0.0 < p_n <= 0.5:
        raise ValueError(f"tail probability p_n={p_n} outside (0, 0.5]")
    return math.sqrt(2.0 * noise_variance) * float(erfcinv(2.0 * p_n))


def erfc_inv(v: float) -> float:
    """Inverse of erfc on (0, 2)."""
    if not 0.0 < v < 2.0:
        raise ValueError(f"erfc_inv defined on (0, 2), got {v}")
    return float(erfcinv(v))
