"""Structured sensing matrices with fast apply/adjoint and column-correlation
analytics.

Three variants share one interface: a partial DFT (a contiguous band of M
DFT rows), a row-decimated causal Toeplitz (convolution with a short filter,
observed at stride d), and a dense fallback used as an oracle path in tests.
All variants expose unit-norm columns, so cross-correlations live in [0, 1]
and every likelihood formula downstream can assume ||psi_k|| = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "SensingMatrix",
    "PartialDFT",
    "SubsampledToeplitz",
    "DenseMatrix",
    "MeasurementInstance",
    "partial_dft",
    "subsampled_toeplitz",
    "dense_matrix",
    "matrix_from_dict",
    "column_correlation",
    "apply",
    "adjoint_apply",
    "coherence",
]

_NORM_TOL = 1e-12


class SensingMatrix:
    """Common interface of all measurement-operator variants.

    Subclasses must provide ``N`` (columns), ``M`` (rows), ``kind`` (a short
    tag used in serialization and CSV output), plus ``column``, ``apply`` and
    ``adjoint_apply``. Everything else has generic implementations here.
    Instances are immutable after construction and safe to share.
    """

    N: int
    M: int
    kind: str

    # -- mandatory primitives -------------------------------------------------

    def column(self, k: int) -> np.ndarray:
        raise NotImplementedError

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint_apply(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- generic helpers -------------------------------------------------------

    def columns(self, indices: Sequence[int]) -> np.ndarray:
        """Return the M x len(indices) submatrix of the requested columns."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError("indices must be one-dimensional")
        out = np.empty((self.M, idx.size), dtype=np.complex128)
        for j, k in enumerate(idx):
            out[:, j] = self.column(int(k))
        return out

    def gram(self, indices: Sequence[int]) -> np.ndarray:
        """Hermitian Gram matrix of the requested columns."""
        cols = self.columns(indices)
        return cols.conj().T @ cols

    def column_correlation(self, k: int, kp: int) -> float:
        """|psi_k^H psi_k'|, in [0, 1] for unit-norm columns."""
        self._check_index(k)
        self._check_index(kp)
        if k == kp:
            return 1.0
        val = abs(np.vdot(self.column(k), self.column(kp)))
        return float(min(val, 1.0))

    def coherence(self) -> float:
        """max_{i != j} |psi_i^H psi_j|."""
        if self.N < 2:
            raise ValueError("coherence needs at least two columns")
        g = np.abs(self.to_dense().conj().T @ self.to_dense())
        np.fill_diagonal(g, 0.0)
        return float(min(g.max(), 1.0))

    def to_dense(self) -> np.ndarray:
        return self.columns(np.arange(self.N))

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- validation ------------------------------------------------------------

    def _check_index(self, k: int) -> None:
        if not 0 <= int(k) < self.N:
            raise IndexError(f"column index {k} outside [0, {self.N})")

    def _check_signal(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if x.shape != (self.N,):
            raise ValueError(f"expected signal of length {self.N}, got shape {x.shape}")
        return x

    def _check_observation(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.complex128)
        if y.shape != (self.M,):
            raise ValueError(f"expected observation of length {self.M}, got shape {y.shape}")
        return y

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"{type(self).__name__}(N={self.N}, M={self.M})"


class PartialDFT(SensingMatrix):
    """A contiguous band of M rows of the N-point DFT, columns scaled to unit
    norm.

    Column k, entry m is (1/sqrt(M)) exp(-2j pi (Z+m) k / N) with Z the band
    start offset, 0 <= Z <= N - M. Column correlations depend only on the
    index difference mod N and have the closed form of a Dirichlet kernel,
    which this class evaluates with exact integer phase reduction so the
    analytic values track the explicit inner products to machine precision.
    """

    kind = "dft"

    def __init__(self, N: int, M: int, Z: int = 0):
        N, M, Z = int(N), int(M), int(Z)
        if N < 1 or M < 1:
            raise ValueError("N and M must be positive")
        if M >= N:
            raise ValueError(f"partial DFT requires M < N, got M={M}, N={N}")
        if not 0 <= Z <= N - M:
            raise ValueError(f"band offset Z={Z} outside [0, {N - M}]")
        self.N = N
        self.M = M
        self.Z = Z

    def column(self, k: int) -> np.ndarray:
        self._check_index(k)
        m = np.arange(self.M, dtype=np.int64)
        # exponent reduced mod N before the float divide: exact phases
        expo = ((self.Z + m) * int(k)) % self.N
        return np.exp(-2j * np.pi * expo / self.N) / np.sqrt(self.M)

    def columns(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        for k in idx:
            self._check_index(int(k))
        m = np.arange(self.M, dtype=np.int64)
        expo = ((self.Z + m)[:, None] * idx[None, :]) % self.N
        return np.exp(-2j * np.pi * expo / self.N) / np.sqrt(self.M)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = self._check_signal(x)
        spectrum = np.fft.fft(x)
        return spectrum[self.Z:self.Z + self.M] / np.sqrt(self.M)

    def adjoint_apply(self, y: np.ndarray) -> np.ndarray:
        y = self._check_observation(y)
        padded = np.zeros(self.N, dtype=np.complex128)
        padded[self.Z:self.Z + self.M] = y
        return np.fft.ifft(padded) * (self.N / np.sqrt(self.M))

    def complex_correlation(self, delta) -> np.ndarray:
        """psi_k^H psi_{k+delta}, independent of k.

        Equals exp(-j pi (2Z + M - 1) delta / N) sin(pi M delta / N) /
        (M sin(pi delta / N)) away from delta = 0 mod N, and 1 there. Phase
        arguments are reduced mod 2N in integer arithmetic first.
        """
        d = np.asarray(delta, dtype=np.int64)
        two_n = 2 * self.N
        phase_r = ((2 * self.Z + self.M - 1) * d) % two_n
        num_r = (self.M * d) % two_n
        den_r = d % two_n
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.sin(np.pi * num_r / self.N) / (
                self.M * np.sin(np.pi * den_r / self.N)
            )
        val = np.exp(-1j * np.pi * phase_r / self.N) * ratio
        return np.where(d % self.N == 0, np.complex128(1.0), val)

    def gram(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        for k in idx:
            self._check_index(int(k))
        return self.complex_correlation(idx[None, :] - idx[:, None])

    def column_correlation(self, k: int, kp: int) -> float:
        self._check_index(k)
        self._check_index(kp)
        return float(min(abs(self.complex_correlation(np.int64(kp - k))), 1.0))

    def coherence(self) -> float:
        deltas = np.arange(1, self.N, dtype=np.int64)
        return float(min(np.abs(self.complex_correlation(deltas)).max(), 1.0))

    def to_dict(self) -> dict:
        return {"variant": "dft", "N": self.N, "M": self.M, "Z": self.Z}


class SubsampledToeplitz(SensingMatrix):
    """Causal N x N Toeplitz convolution matrix observed on a decimated row
    grid, columns normalized to unit norm.

    T[r, k] = h[r - k] for 0 <= r - k < len(h); rows are kept at stride d on
    the grid anchored at the last row, r in {(N-1) mod d, ..., N-1}, which
    keeps every column alive whenever len(h) >= d. Columns whose decimated
    support is empty would be identically zero and are rejected.
    """

    kind = "toeplitz"

    def __init__(self, N: int, h: Sequence[complex], d: int):
        N, d = int(N), int(d)
        if N < 1:
            raise ValueError("N must be positive")
        if d < 1:
            raise ValueError("decimation factor must be >= 1")
        h = np.asarray(h, dtype=np.complex128)
        if h.ndim != 1 or h.size < 1:
            raise ValueError("h must be a nonempty vector")
        rows = np.arange((N - 1) % d, N, d, dtype=np.int64)
        offsets = rows[:, None] - np.arange(N, dtype=np.int64)[None, :]
        valid = (offsets >= 0) & (offsets < h.size)
        dense = np.zeros((rows.size, N), dtype=np.complex128)
        dense[valid] = h[offsets[valid]]
        norms = np.linalg.norm(dense, axis=0)
        dead = np.flatnonzero(norms == 0.0)
        if dead.size:
            raise ValueError(
                f"columns {dead.tolist()} are identically zero after decimation "
                f"(len(h)={h.size}, d={d}); cannot normalize"
            )
        self.N = N
        self.M = int(rows.size)
        self.h = h
        self.d = d
        self.rows = rows
        self._dense = dense / norms

    def column(self, k: int) -> np.ndarray:
        self._check_index(k)
        return self._dense[:, k].copy()

    def columns(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        for k in idx:
            self._check_index(int(k))
        return self._dense[:, idx].copy()

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = self._check_signal(x)
        return self._dense @ x

    def adjoint_apply(self, y: np.ndarray) -> np.ndarray:
        y = self._check_observation(y)
        return self._dense.conj().T @ y

    def gram(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        for k in idx:
            self._check_index(int(k))
        sub = self._dense[:, idx]
        return sub.conj().T @ sub

    def row_support_mask(self, indices: Sequence[int]) -> np.ndarray:
        """Boolean mask over the M kept rows where any of the given columns
        is nonzero."""
        idx = np.asarray(indices, dtype=np.int64)
        for k in idx:
            self._check_index(int(k))
        return (np.abs(self._dense[:, idx]) > 0).any(axis=1)

    def to_dense(self) -> np.ndarray:
        return self._dense.copy()

    def to_dict(self) -> dict:
        return {
            "variant": "toeplitz",
            "N": self.N,
            "d": self.d,
            "h": [[float(v.real), float(v.imag)] for v in self.h],
        }


class DenseMatrix(SensingMatrix):
    """Explicit M x N matrix, columns normalized at construction.

    Oracle/teaching variant: tests use it to cross-check the structured fast
    paths. M <= N is allowed (square instances appear in the oracle suites).
    """

    kind = "dense"

    def __init__(self, entries: np.ndarray):
        a = np.asarray(entries, dtype=np.complex128)
        if a.ndim != 2 or a.size == 0:
            raise ValueError("entries must be a nonempty 2-D array")
        if a.shape[0] > a.shape[1]:
            raise ValueError(
                f"expected M <= N, got shape {a.shape} (tall matrices unsupported)"
            )
        norms = np.linalg.norm(a, axis=0)
        dead = np.flatnonzero(norms == 0.0)
        if dead.size:
            raise ValueError(f"columns {dead.tolist()} are identically zero")
        self.M, self.N = a.shape
        self._dense = a / norms

    def column(self, k: int) -> np.ndarray:
        self._check_index(k)
        return self._dense[:, k].copy()

    def columns(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        for k in idx:
            self._check_index(int(k))
        return self._dense[:, idx].copy()

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = self._check_signal(x)
        return self._dense @ x

    def adjoint_apply(self, y: np.ndarray) -> np.ndarray:
        y = self._check_observation(y)
        return self._dense.conj().T @ y

    def gram(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        for k in idx:
            self._check_index(int(k))
        sub = self._dense[:, idx]
        return sub.conj().T @ sub

    def to_dense(self) -> np.ndarray:
        return self._dense.copy()

    def to_dict(self) -> dict:
        flat = []
        for r in range(self.M):
            for c in range(self.N):
                v = self._dense[r, c]
                flat.append([float(v.real), float(v.imag)])
        return {"variant": "dense", "M": self.M, "N": self.N, "entries": flat}


@dataclass
class MeasurementInstance:
    """One observation y = Psi x + n with its operator and noise level.

    ``truth_x`` is the ground-truth sparse vector when known (synthetic
    data); ``meta`` carries generation diagnostics such as redraw counts.
    """

    y: np.ndarray
    matrix: SensingMatrix
    noise_variance: float
    truth_x: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.complex128)
        if self.y.shape != (self.matrix.M,):
            raise ValueError(
                f"observation length {self.y.shape} does not match M={self.matrix.M}"
            )
        if self.noise_variance <= 0:
            raise ValueError("noise_variance must be positive")
        if self.truth_x is not None:
            self.truth_x = np.asarray(self.truth_x, dtype=np.complex128)
            if self.truth_x.shape != (self.matrix.N,):
                raise ValueError(
                    f"truth length {self.truth_x.shape} does not match N={self.matrix.N}"
                )

    @property
    def truth_support(self) -> Optional[np.ndarray]:
        if self.truth_x is None:
            return None
        return np.flatnonzero(self.truth_x)


# -- constructor and free-function forms --------------------------------------


def partial_dft(N: int, M: int, Z: int = 0) -> PartialDFT:
    """Band-limited DFT sensing matrix; see PartialDFT."""
    return PartialDFT(N, M, Z)


def subsampled_toeplitz(N: int, h: Sequence[complex], d: int) -> SubsampledToeplitz:
    """Row-decimated Toeplitz sensing matrix; see SubsampledToeplitz."""
    return SubsampledToeplitz(N, h, d)


def dense_matrix(entries: np.ndarray) -> DenseMatrix:
    """Dense sensing matrix with column normalization; see DenseMatrix."""
    return DenseMatrix(entries)


def matrix_from_dict(payload: dict) -> SensingMatrix:
    """Inverse of SensingMatrix.to_dict."""
    variant = payload.get("variant")
    if variant == "dft":
        return PartialDFT(payload["N"], payload["M"], payload["Z"])
    if variant == "toeplitz":
        h = np.array([complex(re, im) for re, im in payload["h"]])
        return SubsampledToeplitz(payload["N"], h, payload["d"])
    if variant == "dense":
        m, n = payload["M"], payload["N"]
        flat = np.array([complex(re, im) for re, im in payload["entries"]])
        return DenseMatrix(flat.reshape(m, n))
    raise ValueError(f"unknown matrix variant {variant!r}")


def column_correlation(m: SensingMatrix, k: int, kp: int) -> float:
    return m.column_correlation(k, kp)


def apply(m: SensingMatrix, x: np.ndarray) -> np.ndarray:
    return m.apply(x)


def adjoint_apply(m: SensingMatrix, y: np.ndarray) -> np.ndarray:
    return m.adjoint_apply(y)


def coherence(m: SensingMatrix) -> float:
    return m.coherence()
