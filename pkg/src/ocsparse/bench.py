"""Synthetic instance generation, NMSE scoring, and seeded parameter
sweeps emitting per-trial and aggregated records.

Reproducibility contract: a trial is keyed by (base_seed, coordinate
index, trial index) through numpy's SeedSequence, so records are a pure
function of the experiment description, independent of execution order.
Wall-clock timing is the one impure column; the clock is injectable so
tests can pin it.
"""

from __future__ import annotations

import dataclasses
import io
import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .baselines import mmse_refine, omp_recover
from .bayes import exhaustive_mmse
from .model import (
    DenseMatrix,
    MeasurementInstance,
    PartialDFT,
    SensingMatrix,
    SubsampledToeplitz,
)
from .oc import FIXED, VARIABLE, OCConfig, oc_recover
from .priors import GAUSSIAN, UNKNOWN, PriorConfig

__all__ = [
    "ALGORITHMS",
    "CSV_COLUMNS",
    "ExperimentSpec",
    "TrialRecord",
    "generate_instance",
    "nmse",
    "nmse_ratio",
    "run_algorithm",
    "run_sweep",
    "records_to_csv",
    "write_csv",
]

ALGORITHMS = ("oc", "oc_fixed_L", "omp", "omp_refined", "oracle")

CSV_COLUMNS = (
    "algorithm",
    "matrix",
    "prior",
    "N",
    "M",
    "p",
    "snr_db",
    "L",
    "trial",
    "seed",
    "nmse",
    "nmse_db",
    "runtime_ms",
    "clusters",
    "hypotheses",
    "error",
)

ScalarOrList = Union[float, int, Sequence]


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: dimensions, prior, sweep axes, and algorithm list.

    snr_db and cluster_length may be lists; the sweep runs their cartesian
    product. matrix is "dft" (params: Z), "toeplitz" (params: d, h_length;
    M then follows from N and d and the M field is ignored), or "dense".
    """

    N: int = 800
    M: int = 200
    p: float = 0.01
    snr_db: ScalarOrList = 25.0
    matrix: str = "dft"
    matrix_params: dict = field(default_factory=dict)
    prior: str = GAUSSIAN
    signal_variance: float = 1.0
    trials: int = 100
    base_seed: int = 0
    algorithms: Tuple[str, ...] = ("oc", "omp_refined")
    cluster_length: ScalarOrList = 32
    formation: str = VARIABLE
    budget: int = 100_000
    p_n: float = 0.00135
    refine_cap: int = 12
    omp_max_iter: Optional[int] = None
    omp_residual_tol: Optional[float] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p={self.p} outside (0, 1)")
        if self.matrix not in ("dft", "toeplitz", "dense"):
            raise ValueError(f"unknown matrix kind {self.matrix!r}")
        if self.prior not in (GAUSSIAN, UNKNOWN):
            raise ValueError(f"unknown prior kind {self.prior!r}")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")
        if not self.algorithms:
            raise ValueError("algorithm list is empty")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))

    def snr_values(self) -> List[float]:
        v = self.snr_db
        return [float(s) for s in v] if _is_listlike(v) else [float(v)]

    def length_values(self) -> List[int]:
        v = self.cluster_length
        return [int(L) for L in v] if _is_listlike(v) else [int(v)]

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["algorithms"] = list(self.algorithms)
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(payload) - known
        if extra:
            raise ValueError(f"unknown experiment fields {sorted(extra)}")
        data = dict(payload)
        if "algorithms" in data:
            data["algorithms"] = tuple(data["algorithms"])
        return cls(**data)


def _is_listlike(v) -> bool:
    return isinstance(v, (list, tuple, np.ndarray))


def _scalar_snr(spec: ExperimentSpec) -> float:
    if _is_listlike(spec.snr_db):
        raise ValueError("spec.snr_db is a sweep list; resolve it to a scalar first")
    return float(spec.snr_db)


def _build_matrix(spec: ExperimentSpec, rng: np.random.Generator) -> SensingMatrix:
    params = spec.matrix_params
    if spec.matrix == "dft":
        return PartialDFT(spec.N, spec.M, int(params.get("Z", 0)))
    if spec.matrix == "toeplitz":
        d = int(params.get("d", max(1, spec.N // max(spec.M, 1))))
        h_length = int(params.get("h_length", d))
        h = rng.standard_normal(h_length) + 1j * rng.standard_normal(h_length)
        return SubsampledToeplitz(spec.N, h, d)
    entries = rng.standard_normal((spec.M, spec.N)) + 1j * rng.standard_normal(
        (spec.M, spec.N)
    )
    return DenseMatrix(entries)


def noise_variance_for(spec: ExperimentSpec, M: int, snr_db: float) -> float:
    """SNR is the expected signal-to-noise power ratio E||Ax||^2 / E||n||^2
    = N*p*sigma_x^2 / (M*sigma_n^2) for unit-norm columns."""
    return spec.N * spec.p * spec.signal_variance / (M * 10.0 ** (snr_db / 10.0))


def generate_instance(spec: ExperimentSpec, seed) -> MeasurementInstance:
    """Draw one (matrix, truth, observation) triple, deterministic in seed.

    Draw order is fixed: matrix randomness first (Toeplitz taps / dense
    entries), then the support and amplitudes (redrawn together while the
    truth is identically zero, redraws counted in meta), then the noise.
    Amplitudes are complex Gaussian under the gaussian prior and uniform
    on a centered complex square of matched variance under the unknown
    prior.
    """
    snr_db = _scalar_snr(spec)
    rng = np.random.default_rng(seed)
    m = _build_matrix(spec, rng)
    sx2 = spec.signal_variance

    redraws = 0
    while True:
        active = rng.random(spec.N) < spec.p
        if spec.prior == GAUSSIAN:
            amps = np.sqrt(sx2 / 2.0) * (
                rng.standard_normal(spec.N) + 1j * rng.standard_normal(spec.N)
            )
        else:
            a = np.sqrt(1.5 * sx2)
            amps = rng.uniform(-a, a, spec.N) + 1j * rng.uniform(-a, a, spec.N)
        if active.any():
            break
        redraws += 1
    x = np.where(active, amps, 0.0).astype(np.complex128)

    noise_var = noise_variance_for(spec, m.M, snr_db)
    noise = np.sqrt(noise_var / 2.0) * (
        rng.standard_normal(m.M) + 1j * rng.standard_normal(m.M)
    )
    y = m.apply(x) + noise
    meta = {
        "snr_db": snr_db,
        "redraws": redraws,
        "p": spec.p,
        "prior": spec.prior,
        "signal_variance": sx2,
    }
    return MeasurementInstance(y, m, noise_var, truth_x=x, meta=meta)


def nmse_ratio(x_hat: np.ndarray, x_true: np.ndarray) -> float:
    """Single-trial error ratio ||x_hat - x||^2 / ||x||^2."""
    x_true = np.asarray(x_true)
    denom = float(np.vdot(x_true, x_true).real)
    if denom <= 0.0:
        raise ValueError("zero-norm truth; NMSE undefined")
    diff = np.asarray(x_hat) - x_true
    return float(np.vdot(diff, diff).real) / denom


def nmse(values) -> float:
    """Trial-averaged NMSE: the arithmetic mean of per-trial error ratios.

    Accepts raw ratios or TrialRecord rows (error rows excluded first)."""
    ratios = []
    for v in values:
        if isinstance(v, TrialRecord):
            if v.error:
                continue
            ratios.append(float(v.nmse))
        else:
            ratios.append(float(v))
    if not ratios:
        raise ValueError("no trials to average")
    if any(r < 0 for r in ratios):
        raise ValueError("negative error ratio")
    return float(np.mean(ratios))


def nmse_db(value: float) -> float:
    return float(10.0 * np.log10(value))


@dataclass
class TrialRecord:
    algorithm: str
    matrix: str
    prior: str
    N: int
    M: int
    p: float
    snr_db: float
    L: int
    trial: Union[int, str]
    seed: str
    nmse: Optional[float]
    nmse_db: Optional[float]
    runtime_ms: Optional[float]
    clusters: Optional[float] = None
    hypotheses: Optional[float] = None
    error: str = ""

    def __post_init__(self):
        if self.nmse is not None:
            if not np.isfinite(self.nmse) or self.nmse < 0:
                raise ValueError(f"bad nmse {self.nmse}")


def _prior_for(spec: ExperimentSpec) -> PriorConfig:
    return PriorConfig(spec.p, spec.signal_variance, spec.prior)


def run_algorithm(
    name: str, inst: MeasurementInstance, spec: ExperimentSpec, L: int
) -> Tuple[np.ndarray, dict]:
    """Run one named algorithm on a shared instance; returns the estimate
    and search diagnostics (cluster/hypothesis counts when applicable)."""
    prior = _prior_for(spec)
    m = inst.matrix
    y = inst.y
    nv = inst.noise_variance
    if name in ("oc", "oc_fixed_L"):
        formation = FIXED if name == "oc_fixed_L" else spec.formation
        config = OCConfig(
            cluster_length=L,
            p_n=spec.p_n,
            formation=formation,
            budget=spec.budget,
        )
        res = oc_recover(y, m, prior, nv, config)
        return res.x_mmse, {
            "clusters": res.diagnostics["clusters"],
            "hypotheses": res.diagnostics["hypotheses"],
        }
    if name == "omp":
        res = omp_recover(
            y, m, spec.omp_max_iter, spec.omp_residual_tol, p=spec.p, noise_var=nv
        )
        return res.estimate, {}
    if name == "omp_refined":
        res = omp_recover(
            y, m, spec.omp_max_iter, spec.omp_residual_tol, p=spec.p, noise_var=nv
        )
        x = mmse_refine(y, m, res.support, prior, nv, cap=spec.refine_cap)
        return x, {}
    if name == "oracle":
        x, posterior = exhaustive_mmse(y, m, prior, nv)
        return x, {"hypotheses": len(posterior.hypotheses)}
    raise ValueError(f"unknown algorithm {name!r}")


def run_sweep(
    spec: ExperimentSpec,
    clock: Callable[[], float] = time.perf_counter,
) -> List[TrialRecord]:
    """Every (snr_db, cluster_length) coordinate x trial x algorithm.

    All algorithms at one trial share the instance. Per-trial rows come
    first within a coordinate, then one aggregate row per algorithm with
    trial="mean" (averaged over non-error trials; the error cell carries
    the failure count when nonzero). Failures become flagged rows, never
    exceptions.
    """
    records: List[TrialRecord] = []
    coords = list(itertools.product(spec.snr_values(), spec.length_values()))
    for coord_idx, (snr, L) in enumerate(coords):
        resolved = dataclasses.replace(spec, snr_db=snr, cluster_length=L)
        coord_rows: List[TrialRecord] = []
        for trial in range(spec.trials):
            seed = np.random.SeedSequence([spec.base_seed, coord_idx, trial])
            seed_str = f"{spec.base_seed}-{coord_idx}-{trial}"
            inst = generate_instance(resolved, seed)
            common = dict(
                matrix=spec.matrix,
                prior=spec.prior,
                N=spec.N,
                M=inst.matrix.M,
                p=spec.p,
                snr_db=snr,
                L=L,
                trial=trial,
                seed=seed_str,
            )
            for alg in spec.algorithms:
                t0 = clock()
                try:
                    x_hat, extras = run_algorithm(alg, inst, resolved, L)
                    dt_ms = (clock() - t0) * 1e3
                    ratio = nmse_ratio(x_hat, inst.truth_x)
                    coord_rows.append(
                        TrialRecord(
                            algorithm=alg,
                            nmse=ratio,
                            nmse_db=nmse_db(ratio) if ratio > 0 else None,
                            runtime_ms=dt_ms,
                            clusters=extras.get("clusters"),
                            hypotheses=extras.get("hypotheses"),
                            **common,
                        )
                    )
                except Exception as exc:  # noqa: BLE001 - flagged, not fatal
                    dt_ms = (clock() - t0) * 1e3
                    coord_rows.append(
                        TrialRecord(
                            algorithm=alg,
                            nmse=None,
                            nmse_db=None,
                            runtime_ms=dt_ms,
                            error=f"{type(exc).__name__}: {exc}"[:200],
                            **common,
                        )
                    )
        records.extend(coord_rows)
        for alg in spec.algorithms:
            rows = [r for r in coord_rows if r.algorithm == alg]
            good = [r for r in rows if not r.error]
            failures = len(rows) - len(good)
            mean_ratio = nmse([r.nmse for r in good]) if good else None
            records.append(
                TrialRecord(
                    algorithm=alg,
                    matrix=spec.matrix,
                    prior=spec.prior,
                    N=spec.N,
                    M=rows[0].M,
                    p=spec.p,
                    snr_db=snr,
                    L=L,
                    trial="mean",
                    seed="",
                    nmse=mean_ratio,
                    nmse_db=(
                        nmse_db(mean_ratio)
                        if mean_ratio is not None and mean_ratio > 0
                        else None
                    ),
                    runtime_ms=(
                        float(np.mean([r.runtime_ms for r in good])) if good else None
                    ),
                    clusters=(
                        float(np.mean([r.clusters for r in good]))
                        if good and good[0].clusters is not None
                        else None
                    ),
                    hypotheses=(
                        float(np.mean([r.hypotheses for r in good]))
                        if good and good[0].hypotheses is not None
                        else None
                    ),
                    error=str(failures) if failures else "",
                )
            )
    return records


def _cell(value, fmt: Optional[str] = None) -> str:
    if value is None:
        return ""
    if fmt:
        return fmt % value
    return str(value)


def records_to_csv(records: Sequence[TrialRecord]) -> str:
    """Fixed-format CSV; byte-identical for identical records."""
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for r in records:
        row = [
            r.algorithm,
            r.matrix,
            r.prior,
            str(r.N),
            str(r.M),
            _cell(r.p, "%.10g"),
            _cell(r.snr_db, "%.10g"),
            str(r.L),
            str(r.trial),
            r.seed,
            _cell(r.nmse, "%.10g"),
            _cell(r.nmse_db, "%.6f"),
            _cell(r.runtime_ms, "%.3f"),
            _cell(r.clusters, "%.10g"),
            _cell(r.hypotheses, "%.10g"),
            r.error.replace(",", ";").replace("\n", " "),
        ]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_csv(records: Sequence[TrialRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records))
