"""Exact covariance construction for sums of evanescent components.

Each component contributes Gamma_q = D_q^H A_q^T R_q A_q D_q, where A_q
gathers the short modulating process onto the lattice, D_q carries the
complex modulation, and R_q is the process covariance.  Stacking the
factors across components gives Gamma = C^H R C with R block-diagonal and
positive definite, so the rank of Gamma is exactly the rank of C; the
builders here keep both forms so that identity can be checked rather than
assumed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    EvanescentComponent,
    FieldSample,
    ModulatingProcessSpec,
    ProcessKind,
    check_distinct_triples,
    modulating_indices,
)
from .lattice import LatticeRect, SlopePair

BINARY_MAGIC = b"EVCM0001"


@dataclass
class SelectionMatrix:
    """0/1 gather matrix from modulating samples to lattice positions.

    One 1 per column: column n*M + m selects row n*a + m*b - k_min.  Rows
    whose index value is never attained stay identically zero (that happens
    only when |a| > 1 and |b| > 1).
    """

    slope: SlopePair
    rect: LatticeRect
    k_min: int
    k_max: int
    row_index: np.ndarray  # shape (N*M,), row hit by each column

    @property
    def rows(self) -> int:
        return self.k_max - self.k_min + 1

    @property
    def cols(self) -> int:
        return self.rect.size

    def dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        out[self.row_index, np.arange(self.cols)] = 1.0
        return out

    def distinct_column_count(self) -> int:
        """Number of distinct columns == number of rows actually hit."""
        return int(np.unique(self.row_index).size)


@dataclass
class ModulationDiagonal:
    """Diagonal exp(-1j * omega * (n*c + m*d)) in vectorization order."""

    omega: float
    row_coords: np.ndarray  # n*c + m*d per lattice point, shape (N*M,)

    @property
    def entries(self) -> np.ndarray:
        return np.exp(-1j * self.omega * self.row_coords)

    def dense(self) -> np.ndarray:
        return np.diag(self.entries)


def build_selection(slope: SlopePair, rect: LatticeRect) -> SelectionMatrix:
    k_min, k_max = modulating_indices(slope, rect)
    n = np.arange(rect.N)[:, None]
    m = np.arange(rect.M)[None, :]
    row_index = (n * slope.a + m * slope.b - k_min).reshape(rect.size)
    return SelectionMatrix(slope, rect, k_min, k_max, row_index)


def build_modulation(comp: EvanescentComponent, rect: LatticeRect) -> ModulationDiagonal:
    n = np.arange(rect.N)[:, None]
    m = np.arange(rect.M)[None, :]
    coords = (n * comp.slope.c + m * comp.slope.d).reshape(rect.size)
    return ModulationDiagonal(comp.omega, coords)


def process_covariance(spec: ModulatingProcessSpec, size: int) -> np.ndarray:
    """Covariance of `size` consecutive modulating samples.

    White noise gives variance * I; the AR(1) family gives the symmetric
    Toeplitz matrix with entry variance * ar^|i-j| / (1 - ar^2).  Both are
    real and positive definite, which is what makes rank(Gamma) = rank(C)
    an identity rather than an inequality.
    """
    if size < 1:
        raise ValueError("process covariance needs a positive size")
    if spec.kind is ProcessKind.WHITE:
        return spec.variance * np.eye(size)
    lags = np.abs(np.arange(size)[:, None] - np.arange(size)[None, :])
    ar = spec.ar_coefficient
    return spec.variance * ar ** lags / (1.0 - ar * ar)


@dataclass
class CovarianceModel:
    """Assembled covariance with its factored form kept alongside.

    `stacked` is the vertical stack of the per-component factor blocks and
    `block_covs` the matching process covariances, so
    Gamma == stacked^H * blockdiag(block_covs) * stacked up to roundoff.
    In the real-valued mode each component contributes a cosine and a sine
    block sharing one process covariance.
    """

    rect: LatticeRect
    components: list[EvanescentComponent]
    real_valued: bool
    selections: list[SelectionMatrix]
    modulations: list[ModulationDiagonal]
    gamma: np.ndarray
    stacked: np.ndarray
    stacked_blocks: list[np.ndarray] = field(repr=False, default_factory=list)
    block_covs: list[np.ndarray] = field(repr=False, default_factory=list)

    def column(self, n: int, m: int) -> np.ndarray:
        """Column of the stacked factor for lattice point (n, m)."""
        return self.stacked[:, self.rect.vec_index(n, m)]

    def factored_gamma(self) -> np.ndarray:
        out = np.zeros((self.rect.size, self.rect.size), dtype=self.gamma.dtype)
        for block, cov in zip(self.stacked_blocks, self.block_covs):
            out = out + block.conj().T @ cov @ block
        return out

    def factorization_residual(self) -> float:
        """Relative Frobenius gap between Gamma and its factored form."""
        denom = np.linalg.norm(self.gamma)
        if denom == 0.0:
            return 0.0
        return float(np.linalg.norm(self.gamma - self.factored_gamma()) / denom)


def _scaled_selection(sel: SelectionMatrix, weights: np.ndarray) -> np.ndarray:
    # Dense A * diag(weights) without forming the product.
    block = np.zeros((sel.rows, sel.cols), dtype=weights.dtype)
    block[sel.row_index, np.arange(sel.cols)] = weights
    return block


def assemble_gamma(
    components, rect: LatticeRect, real_valued: bool = False
) -> CovarianceModel:
    """Builds the exact covariance of the component sum over the rectangle.

    Args:
        components: iterable of EvanescentComponent with distinct
            (a, b, omega) triples; processes are treated as mutually
            independent.
        rect: lattice rectangle.
        real_valued: build the real field model (cosine/sine carriers with
            independent same-covariance processes) instead of the complex
            one.

    Returns:
        CovarianceModel holding Gamma, the stacked factor, and the
        per-component pieces.
    """
    components = list(components)
    check_distinct_triples(components)
    size = rect.size
    dtype = np.float64 if real_valued else np.complex128
    gamma = np.zeros((size, size), dtype=dtype)
    selections: list[SelectionMatrix] = []
    modulations: list[ModulationDiagonal] = []
    stacked_blocks: list[np.ndarray] = []
    block_covs: list[np.ndarray] = []

    for comp in components:
        sel = build_selection(comp.slope, rect)
        mod = build_modulation(comp, rect)
        cov = process_covariance(comp.process, sel.rows)
        gathered = cov[sel.row_index[:, None], sel.row_index[None, :]]
        if real_valued:
            cosv = np.cos(comp.omega * mod.row_coords)
            sinv = np.sin(comp.omega * mod.row_coords)
            gamma += cosv[:, None] * gathered * cosv[None, :]
            gamma += sinv[:, None] * gathered * sinv[None, :]
            stacked_blocks.append(_scaled_selection(sel, cosv))
            stacked_blocks.append(_scaled_selection(sel, sinv))
            block_covs.extend([cov, cov])
        else:
            phase = np.exp(1j * comp.omega * mod.row_coords)
            gamma += phase[:, None] * gathered * phase.conj()[None, :]
            stacked_blocks.append(_scaled_selection(sel, mod.entries))
            block_covs.append(cov)
        selections.append(sel)
        modulations.append(mod)

    gamma = (gamma + gamma.conj().T) / 2.0  # enforce exact Hermitian symmetry
    stacked = (
        np.vstack(stacked_blocks) if stacked_blocks else np.zeros((0, size), dtype=dtype)
    )
    return CovarianceModel(
        rect=rect,
        components=components,
        real_valued=real_valued,
        selections=selections,
        modulations=modulations,
        gamma=gamma,
        stacked=stacked,
        stacked_blocks=stacked_blocks,
        block_covs=block_covs,
    )


def sample_covariance(snapshots) -> np.ndarray:
    """Empirical covariance (1/L) * sum of outer products e e^H.

    Accepts a list of FieldSample or a 2-D array with one snapshot per row.
    """
    if isinstance(snapshots, np.ndarray):
        data = snapshots
    else:
        rows = [s.vectorized if isinstance(s, FieldSample) else np.asarray(s) for s in snapshots]
        if not rows:
            raise ValueError("sample covariance needs at least one snapshot")
        data = np.vstack(rows)
    if data.ndim != 2 or data.shape[0] < 1:
        raise ValueError("snapshots must form a non-empty (L, N*M) array")
    # Entry (i, j) must be the mean of e_i * conj(e_j), snapshots as rows.
    return data.T @ data.conj() / data.shape[0]


def save_matrix_csv(matrix: np.ndarray, path) -> None:
    """Writes a complex matrix as CSV with interleaved real/imag cells."""
    matrix = np.asarray(matrix, dtype=np.complex128)
    with open(path, "w", encoding="ascii") as fh:
        for row in matrix:
            cells: list[str] = []
            for value in row:
                cells.append(f"{value.real:.17g}")
                cells.append(f"{value.imag:.17g}")
            fh.write(",".join(cells) + "\n")


def save_matrix_binary(matrix: np.ndarray, path) -> None:
    """Writes a 16-byte header (magic, rows, cols) then row-major
    little-endian float64 (re, im) pairs."""
    matrix = np.ascontiguousarray(np.asarray(matrix, dtype=np.complex128))
    rows, cols = matrix.shape
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<II", rows, cols))
        fh.write(matrix.astype("<c16").tobytes())


def load_matrix_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != BINARY_MAGIC:
            raise ValueError(f"bad matrix file magic {magic!r}")
        rows, cols = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != rows * cols:
        raise ValueError("matrix file payload does not match header dimensions")
    return data.reshape(rows, cols).astype(np.complex128)
