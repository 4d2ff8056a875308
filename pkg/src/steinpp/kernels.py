"""Determinantal kernels on weighted grids and the spectral sampler.

A kernel is handed over as function values K(x_i, x_j) at the cells of a
:class:`~steinpp.geometry.Grid`; the class stores the weighted symmetric
matrix K~_ij = K(x_i, x_j) * sqrt(w_i w_j), whose spectrum is the
operator spectrum on L2 of the grid.  Inclusion probabilities of the
determinantal process are principal minors of K~, and the interaction
kernel J = (I + alpha*K)^(-1) K carries the Papangelou intensities.
"""

from __future__ import annotations

import warnings

import numpy as np

from .geometry import Configuration, Disk, Grid

__all__ = ["Kernel", "SpectrumError", "ginibre_kernel", "sample_discrete_dpp",
           "alpha_determinant"]

SPECTRUM_CAP = 1.0 - 1e-6


class SpectrumError(ValueError):
    """Kernel spectrum escapes [0, 1)."""


class Kernel:
    """Symmetric kernel over grid cells with spectrum in [0, 1).

    alpha is -1 (plain determinantal) or -1/n for an integer n >= 1.
    """

    def __init__(self, grid: Grid, weighted_matrix: np.ndarray,
                 alpha: float = -1.0, clip: bool = False):
        m = np.asarray(weighted_matrix, dtype=float)
        if m.shape != (grid.n_cells, grid.n_cells):
            raise ValueError("kernel matrix must be n_cells x n_cells")
        if not np.allclose(m, m.T, atol=1e-10):
            raise ValueError("kernel matrix must be symmetric to 1e-10")
        m = 0.5 * (m + m.T)
        lam, vec = np.linalg.eigh(m)
        self.clipped_mass = 0.0
        if lam[0] < -1e-10 or lam[-1] > SPECTRUM_CAP:
            if not clip:
                raise SpectrumError(
                    f"eigenvalues in [{lam[0]:.3g}, {lam[-1]:.3g}], "
                    f"outside [0, {SPECTRUM_CAP}]"
                )
            clipped = np.clip(lam, 0.0, SPECTRUM_CAP)
            self.clipped_mass = float(np.abs(lam - clipped).sum())
            lam = clipped
            m = (vec * lam) @ vec.T
        self.grid = grid
        self.matrix = m
        self.eigenvalues = np.clip(lam, 0.0, SPECTRUM_CAP)
        self.eigenvectors = vec
        self.alpha = float(alpha)
        if alpha == -1.0:
            self._n = 1
        else:
            n = -1.0 / alpha
            if abs(n - round(n)) > 1e-9 or n < 1:
                raise ValueError("alpha must be -1 or -1/n for integer n")
            self._n = int(round(n))
        self._j = None

    # -- constructors -------------------------------------------------------

    @staticmethod
    def from_function_values(values: np.ndarray, grid: Grid,
                             alpha: float = -1.0, clip: bool = False) -> "Kernel":
        """Build from raw kernel values K(x_i, x_j) (weight-normalizes)."""
        v = np.asarray(values, dtype=float)
        s = np.sqrt(grid.weights)
        return Kernel(grid, v * np.outer(s, s), alpha=alpha, clip=clip)

    # -- basic quantities ----------------------------------------------------

    @property
    def alpha_denominator(self) -> int:
        return self._n

    @property
    def trace(self) -> float:
        """Integral of K(x,x) against the reference measure."""
        return float(np.trace(self.matrix))

    def function_values(self) -> np.ndarray:
        s = np.sqrt(self.grid.weights)
        return self.matrix / np.outer(s, s)

    def diagonal_density(self) -> np.ndarray:
        """K(x,x) per cell (the intensity of the alpha = -1 process)."""
        return np.diag(self.matrix) / self.grid.weights

    def j_matrix(self) -> np.ndarray:
        """Weighted matrix of J = (I + alpha K)^(-1) K."""
        if self._j is None:
            lam = self.eigenvalues
            jl = lam / (1.0 + self.alpha * lam)
            v = self.eigenvectors
            self._j = (v * jl) @ v.T
        return self._j

    def j_function_values(self) -> np.ndarray:
        s = np.sqrt(self.grid.weights)
        return self.j_matrix() / np.outer(s, s)

    # -- algebra -------------------------------------------------------------

    def scaled(self, factor: float) -> "Kernel":
        if factor < 0:
            raise ValueError("scaling factor must be >= 0")
        return Kernel(self.grid, self.matrix * factor, alpha=self.alpha)

    def with_alpha(self, alpha: float) -> "Kernel":
        return Kernel(self.grid, self.matrix, alpha=alpha)

    def restricted(self, mask: np.ndarray) -> "Kernel":
        """Zero all rows/columns outside ``mask`` (reduction to a subset)."""
        m = self.matrix.copy()
        m[~mask, :] = 0.0
        m[:, ~mask] = 0.0
        return Kernel(self.grid, m, alpha=self.alpha)

    def rescaled(self, eps: float) -> "Kernel":
        """eps-rescaling: cells move to eps^(1/d) x, weights pick up a
        factor eps, kernel values shrink by 1/eps.  The weighted matrix is
        invariant, so the spectrum is re-asserted rather than clipped."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        d = self.grid.dim
        g = Grid(self.grid.locations * eps ** (1.0 / d), self.grid.weights * eps)
        return Kernel(g, self.matrix, alpha=self.alpha)


def ginibre_kernel(gamma: float, beta: float, disk: Disk,
                   grid_resolution: int = 16) -> Kernel:
    """Gaussian-repulsion kernel on a polar discretization of a disk.

    Kernel values are (gamma/pi) exp(-(gamma/2 beta)(|x|^2+|y|^2))
    exp((gamma/beta) x conj(y)); the weighted Hermitian form is
    real-symmetrized by its real part, which keeps the diagonal, the
    positive semidefiniteness and the Gaussian modulus decay.  Eigenvalues
    are clipped into [0, 1-1e-6]; a clip above 1% of the trace triggers a
    warning.
    """
    if not (0 < beta <= 1):
        raise ValueError("beta must be in (0, 1]")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    grid = Grid.polar(disk.radius, grid_resolution, disk.center)
    z = (grid.locations[:, 0] - disk.center[0]) + 1j * (grid.locations[:, 1] - disk.center[1])
    sq = np.abs(z) ** 2
    h = (gamma / np.pi) * np.exp(
        -(gamma / (2 * beta)) * (sq[:, None] + sq[None, :])
        + (gamma / beta) * np.outer(z, np.conj(z))
    )
    s = np.sqrt(grid.weights)
    weighted = np.real(h) * np.outer(s, s)
    kernel = Kernel(grid, weighted, alpha=-1.0, clip=True)
    if kernel.clipped_mass > 0.01 * max(kernel.trace, 1e-30):
        warnings.warn(
            f"spectrum clip removed {kernel.clipped_mass:.3g} "
            f"({100 * kernel.clipped_mass / kernel.trace:.2f}% of trace); "
            "refine the grid",
            stacklevel=2,
        )
    return kernel


# ---------------------------------------------------------------------------
# sampling


def sample_discrete_dpp(kernel: Kernel, rng) -> Configuration:
    """Exact spectral draw of the determinantal process (alpha = -1).

    Eigenvector n enters the active set with probability lambda_n; the
    resulting projection process is sampled sequentially, eliminating the
    chosen cell's direction from the active eigenvector span at each step.
    """
    if kernel.alpha_denominator != 1:
        raise ValueError("spectral sampler needs alpha = -1")
    lam = kernel.eigenvalues
    if lam[-1] >= 1.0:
        raise SpectrumError("spectrum must stay below 1")
    active = rng.random(len(lam)) < lam
    k = int(active.sum())
    if k == 0:
        return Configuration()
    v = kernel.eigenvectors[:, active]  # (cells, k), orthonormal columns
    chosen = []
    for step in range(k):
        p = np.sum(v**2, axis=1)
        p = np.maximum(p, 0.0)
        p /= p.sum()
        cell = int(rng.choice(len(p), p=p))
        chosen.append(cell)
        if step == k - 1:
            break
        # project the span orthogonally to e_cell
        row = v[cell]
        j = int(np.argmax(np.abs(row)))
        col = v[:, j].copy()
        v = np.delete(v, j, axis=1)
        v = v - np.outer(col, v[cell] / row[j])
        # re-orthonormalize for numerical stability
        q, _ = np.linalg.qr(v)
        v = q
    return Configuration(chosen)


# ---------------------------------------------------------------------------
# alpha-determinants (brute-force oracle)


def _permutations_with_cycles(n: int):
    """Yield (permutation, cycle_count) over S_n; n <= 8 only."""
    import itertools

    for perm in itertools.permutations(range(n)):
        seen = [False] * n
        cycles = 0
        for i in range(n):
            if not seen[i]:
                cycles += 1
                j = i
                while not seen[j]:
                    seen[j] = True
                    j = perm[j]
        yield perm, cycles


def alpha_determinant(matrix: np.ndarray, alpha: float) -> float:
    """det_alpha(A) = sum over permutations of alpha^(n - #cycles) * prod A_{i,s(i)}.

    Exponential-cost permutation sum; refuses matrices larger than 8x8.
    alpha = -1 recovers the determinant, alpha = 1 the permanent.
    """
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    if n == 0:
        return 1.0
    if n > 8:
        raise ValueError("alpha-determinant oracle is limited to 8x8")
    total = 0.0
    for perm, cycles in _permutations_with_cycles(n):
        prod = 1.0
        for i, j in enumerate(perm):
            prod *= a[i, j]
            if prod == 0.0:
                break
        total += alpha ** (n - cycles) * prod
    return total
