"""The orthogonal-clustering pipeline: dominant-position detection, cluster
formation, per-cluster dominant-support search, and divide-and-conquer
MMSE/MAP combination.

Clusters are contiguous index intervals around above-threshold correlations.
Because structured sensing columns decorrelate with index distance, distinct
clusters are (semi-)orthogonal and their posteriors factorize, so each one
is searched independently and the per-cluster estimates concatenate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .bayes import Hypothesis, PosteriorSet, map_support, posterior_weights
from .model import PartialDFT, SensingMatrix
from .priors import (
    GAUSSIAN,
    PriorConfig,
    cluster_max_support,
    correlation_threshold,
)

__all__ = [
    "Cluster",
    "ClusterSet",
    "OCConfig",
    "OCResult",
    "find_dominant_positions",
    "form_clusters",
    "cluster_search",
    "combine_estimates",
    "oc_recover",
    "VARIABLE",
    "FIXED",
]

VARIABLE = "variable"
FIXED = "fixed"


@dataclass(frozen=True)
class Cluster:
    """A contiguous run of column indices, possibly wrapped mod N.

    ``indices`` walks the run from ``start``; for wrapped clusters the
    values jump back to 0 partway through.
    """

    start: int
    length: int
    indices: np.ndarray

    def member_set(self) -> frozenset:
        return frozenset(int(i) for i in self.indices)


@dataclass(frozen=True)
class ClusterSet:
    clusters: Tuple[Cluster, ...]
    mode: str

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    def member_union(self) -> frozenset:
        out: frozenset = frozenset()
        for c in self.clusters:
            out = out | c.member_set()
        return out


@dataclass(frozen=True)
class OCConfig:
    """Pipeline knobs.

    cluster_length is the interval placed around each seed (variable mode
    may grow clusters past it by merging). budget caps the number of
    support combinations enumerated per cluster before the search degrades
    to greedy. retain_all keeps every subset of every cluster instead of
    only the per-size winners; it is an oracle/diagnostic mode and is
    limited to small clusters by the same budget.
    """

    cluster_length: int = 32
    p_n: float = 0.00135
    formation: str = VARIABLE
    budget: int = 100_000
    retain_all: bool = False

    def __post_init__(self):
        if self.cluster_length < 1:
            raise ValueError("cluster_length must be >= 1")
        if not 0.0 < self.p_n <= 0.5:
            raise ValueError(f"p_n={self.p_n} outside (0, 0.5]")
        if self.formation not in (VARIABLE, FIXED):
            raise ValueError(f"formation must be {VARIABLE!r} or {FIXED!r}")
        if self.budget < self.cluster_length:
            raise ValueError("budget must be at least cluster_length")


@dataclass
class OCResult:
    x_mmse: np.ndarray
    x_map: np.ndarray
    clusters: ClusterSet
    posteriors: List[PosteriorSet]
    diagnostics: dict = field(default_factory=dict)


def find_dominant_positions(
    y: np.ndarray, m: SensingMatrix, kappa: float
) -> List[Tuple[int, float]]:
    """All indices whose correlation magnitude strictly exceeds kappa,
    sorted by decreasing magnitude, ties toward the lower index."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    mags = np.abs(m.adjoint_apply(y))
    hits = np.flatnonzero(mags > kappa)
    ranked = sorted(hits, key=lambda k: (-mags[k], k))
    return [(int(k), float(mags[k])) for k in ranked]


def _as_run(members: set, N: int, wrap: bool) -> Cluster:
    """Rebuild (start, length, ordered indices) from a member set that is
    contiguous, circularly so when wrap is set."""
    srt = np.array(sorted(members), dtype=np.int64)
    n = srt.size
    if n == N:
        return Cluster(0, N, np.arange(N, dtype=np.int64))
    if not wrap or (srt[-1] - srt[0] + 1 == n):
        if srt[-1] - srt[0] + 1 != n:
            raise AssertionError(f"cluster members not contiguous: {srt}")
        return Cluster(int(srt[0]), n, srt)
    # circular run: open the circle at the largest gap
    gaps = np.diff(np.append(srt, srt[0] + N))
    cut = int(np.argmax(gaps))
    start = int(srt[(cut + 1) % n])
    indices = (start + np.arange(n, dtype=np.int64)) % N
    if set(indices.tolist()) != members:
        raise AssertionError(f"cluster members not circularly contiguous: {srt}")
    return Cluster(start, n, indices)


def form_clusters(
    positions: Sequence,
    L: int,
    N: int,
    mode: str = VARIABLE,
    wrap: bool = False,
) -> ClusterSet:
    """Place a length-L interval around each seed position and resolve
    overlaps.

    Seeds are processed in decreasing correlation order. In variable mode an
    interval sharing any index with existing clusters merges them all into
    one larger cluster; in fixed mode such an interval is discarded, keeping
    every cluster exactly length L. Intervals wrap mod N for the DFT family
    and are clipped to [0, N) otherwise. Clusters that touch without sharing
    an index stay separate.
    """
    if mode not in (VARIABLE, FIXED):
        raise ValueError(f"mode must be {VARIABLE!r} or {FIXED!r}")
    if L < 1:
        raise ValueError("cluster length must be >= 1")
    L = min(L, N)
    seeds: List[Tuple[int, Optional[float]]] = []
    for pos in positions:
        if isinstance(pos, (tuple, list)):
            k, mag = int(pos[0]), float(pos[1])
        else:
            k, mag = int(pos), None
        if not 0 <= k < N:
            raise ValueError(f"seed index {k} outside [0, {N})")
        seeds.append((k, mag))
    if any(mag is not None for _, mag in seeds):
        if any(mag is None for _, mag in seeds):
            raise ValueError("mix of weighted and bare seed positions")
        seeds.sort(key=lambda km: (-km[1], km[0]))

    half = -((L - 1) // -2)  # ceil((L-1)/2) indices to the left of the seed
    groups: List[set] = []
    for k, _ in seeds:
        raw = np.arange(k - half, k - half + L, dtype=np.int64)
        if wrap:
            members = set((raw % N).tolist())
        else:
            members = set(raw[(raw >= 0) & (raw < N)].tolist())
        if not members:
            continue
        touching = [g for g in groups if g & members]
        if touching:
            if mode == FIXED:
                continue
            for g in touching:
                groups.remove(g)
                members |= g
        groups.append(members)

    clusters = sorted((_as_run(g, N, wrap) for g in groups), key=lambda c: c.start)
    return ClusterSet(tuple(clusters), mode)


def _search_cluster(
    y: np.ndarray,
    m: SensingMatrix,
    cluster: Cluster,
    prior: PriorConfig,
    noise_var: float,
    max_support: int,
    budget: int,
    retain_all: bool = False,
) -> Tuple[List[Hypothesis], int]:
    """Hypothesis family for one cluster plus the evaluation count."""
    idx = np.asarray(cluster.indices, dtype=np.int64)
    L_i = idx.size
    cols = m.columns(idx)
    G = m.gram(idx)
    c = cols.conj().T @ np.asarray(y, dtype=np.complex128)
    base = float(-np.vdot(y, y).real / noise_var)
    if prior.kind == GAUSSIAN:
        ridge = noise_var / prior.signal_variance
        with_logdet = True
    else:
        ridge = 0.0
        with_logdet = False
    p_c = min(int(max_support), L_i)

    hypotheses: List[Hypothesis] = [
        Hypothesis((), base, np.zeros(0, dtype=np.complex128))
    ]

    def finish(local: np.ndarray, ll: float, u: Optional[np.ndarray]) -> Hypothesis:
        local = np.asarray(local, dtype=np.int64)
        if u is None:
            sub = G[np.ix_(local, local)]
            if ridge:
                sub = sub + ridge * np.eye(local.size)
            u = np.linalg.solve(sub, c[local])
        glob = idx[local]
        order = np.argsort(glob)
        return Hypothesis(tuple(int(g) for g in glob[order]), float(ll), u[order])

    if retain_all:
        if L_i >= 63 or (1 << L_i) - 1 > budget:
            raise ValueError(
                f"retain_all over a cluster of length {L_i} exceeds the "
                f"budget of {budget} combinations"
            )
        family = kernels.enumerate_subsets(
            G, c, base, noise_var, ridge, with_logdet, max_size=L_i
        )
        nodes = len(family) - 1
        for sup, ll, u in family:
            if sup:
                hypotheses.append(finish(np.array(sup), ll, u))
        return hypotheses, nodes

    if kernels.search_space_size(L_i, p_c) <= budget:
        best_ll, best_sup, nodes = kernels.best_supports(
            G, c, base, noise_var, ridge, with_logdet, p_c
        )
    else:
        best_ll, best_sup, nodes = kernels.greedy_supports(
            G, c, base, noise_var, ridge, with_logdet, p_c
        )
    for s in range(p_c):
        if not np.isfinite(best_ll[s]):
            continue
        hypotheses.append(finish(best_sup[s, : s + 1], float(best_ll[s]), None))
    return hypotheses, int(nodes)


def cluster_search(
    y: np.ndarray,
    m: SensingMatrix,
    cluster: Cluster,
    prior: PriorConfig,
    noise_var: float,
    max_support: int,
    budget: int = 100_000,
    retain_all: bool = False,
) -> List[Hypothesis]:
    """Dominant support of every size 1..max_support within the cluster
    (every subset when retain_all), the empty hypothesis always included.

    Exhaustive depth-first enumeration while the combination count fits the
    budget, greedy chain growth beyond it.
    """
    hyps, _ = _search_cluster(
        y, m, cluster, prior, noise_var, max_support, budget, retain_all
    )
    return hyps


def combine_estimates(
    families: Sequence[Tuple[Cluster, Sequence[Hypothesis]]],
    N: int,
    p: float,
) -> Tuple[np.ndarray, np.ndarray, List[PosteriorSet]]:
    """Merge per-cluster hypothesis families into the global estimates.

    Weights are normalized within each cluster (sizes priced by the
    Bernoulli prior over the cluster's own length; the length-independent
    constants cancel in the normalization). The MMSE section is the
    weighted sum of padded expectations, the MAP section the expectation of
    the max-weight hypothesis. Entries outside every cluster stay zero.
    """
    x_mmse = np.zeros(N, dtype=np.complex128)
    x_map = np.zeros(N, dtype=np.complex128)
    posteriors: List[PosteriorSet] = []
    claimed: set = set()
    for cluster, hyps in families:
        members = cluster.member_set()
        if claimed & members:
            raise ValueError("clusters overlap; families must be disjoint")
        claimed |= members
        ps = posterior_weights(list(hyps), cluster.length, p)
        posteriors.append(ps)
        for h, w in zip(ps.hypotheses, ps.weights):
            if h.support:
                x_mmse[list(h.support)] += w * h.cond_expectation
        top = map_support(ps)
        if top.support:
            x_map[list(top.support)] = top.cond_expectation
    return x_mmse, x_map, posteriors


def oc_recover(
    y: np.ndarray,
    m: SensingMatrix,
    prior: PriorConfig,
    noise_var: float,
    config: Optional[OCConfig] = None,
) -> OCResult:
    """Full pipeline: threshold, cluster, search, combine.

    Deterministic given its inputs. An observation with no above-threshold
    correlation yields the all-zero estimate and an empty cluster set.
    """
    if config is None:
        config = OCConfig()
    y = np.asarray(y, dtype=np.complex128)
    t0 = time.perf_counter()
    kappa = correlation_threshold(noise_var, config.p_n)
    positions = find_dominant_positions(y, m, kappa)
    clusters = form_clusters(
        positions,
        config.cluster_length,
        m.N,
        config.formation,
        wrap=isinstance(m, PartialDFT),
    )
    families = []
    nodes_total = 0
    for cluster in clusters:
        p_c = min(cluster_max_support(cluster.length, prior.p), cluster.length, m.M)
        hyps, nodes = _search_cluster(
            y, m, cluster, prior, noise_var, p_c, config.budget, config.retain_all
        )
        families.append((cluster, hyps))
        nodes_total += nodes
    x_mmse, x_map, posteriors = combine_estimates(families, m.N, prior.p)
    elapsed = time.perf_counter() - t0
    lag = min(config.cluster_length, m.N - 1)
    diagnostics = {
        "kappa": kappa,
        "positions": len(positions),
        "clusters": len(clusters),
        "hypotheses": nodes_total + len(clusters.clusters),
        "correlations": m.N,
        "epsilon": m.column_correlation(0, lag) if lag >= 1 else 1.0,
        "wall_time_s": elapsed,
        "backend": kernels.backend_name(),
    }
    return OCResult(x_mmse, x_map, clusters, posteriors, diagnostics)
