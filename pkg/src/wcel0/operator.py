"""Forward model for super-resolved localization: periodic blur + block-sum downsampling.

Images live on an ``N x N`` fine grid (``N = L * M``) and are observed on an
``M x M`` coarse grid. Vectors are row-major flattenings of these images.

The downsampling ``R_L`` (sum over ``L x L`` blocks) is written as a periodic
convolution with a box kernel followed by selection of every ``L``-th pixel,
so the enlarged operator ``A_E = K_L H`` is block-circulant and diagonalized
by the 2-D FFT. Both the matrix-vector products and the weighted column
norms are computed through ``A_E``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import CapExceededError, DimensionError, ParameterError

FWHM_TO_SIGMA = 1.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))

DENSE_CAP = 4096


@dataclass(frozen=True)
class GridSpec:
    """Coarse/fine grid geometry.

    Parameters
    ----------
    M : int
        Coarse grid side length in pixels.
    L : int
        Super-resolution factor.
    coarse_pixel_nm : float
        Physical size of a coarse pixel.
    """

    M: int
    L: int
    coarse_pixel_nm: float = 100.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ParameterError(f"M must be a positive integer, got {self.M}")
        if int(self.L) != self.L or self.L < 1:
            raise ParameterError(f"L must be a positive integer, got {self.L}")
        if not np.isfinite(self.coarse_pixel_nm) or self.coarse_pixel_nm <= 0:
            raise ParameterError(f"coarse_pixel_nm must be positive, got {self.coarse_pixel_nm}")

    @property
    def N(self) -> int:
        return self.L * self.M

    @property
    def fine_pixel_nm(self) -> float:
        return self.coarse_pixel_nm / self.L

    @property
    def field_nm(self) -> float:
        return self.M * self.coarse_pixel_nm

    def to_dict(self):
        return {"M": self.M, "L": self.L, "coarse_pixel_nm": self.coarse_pixel_nm}


@dataclass(frozen=True)
class FidelityWeights:
    """Diagonal of the weight matrix ``W`` of the weighted-l2 data term.

    Use :meth:`from_counts` for the Poisson weights ``1 / y`` and
    :meth:`uniform` for the unweighted (``W = I``) case.
    """

    w: np.ndarray
    epsilon: float | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float).ravel()
        if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ParameterError("weights must be positive and finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_counts(cls, y, epsilon: float | None = 1.0) -> "FidelityWeights":
        """Weights ``1 / max(y, epsilon)``.

        With ``epsilon=None`` no stabilization is applied and every count must
        be strictly positive.
        """
        y = np.asarray(y, dtype=float).ravel()
        if epsilon is None:
            if np.any(y <= 0):
                raise ParameterError("zero or negative counts need a stabilization floor")
            return cls(1.0 / y, None)
        if epsilon <= 0:
            raise ParameterError(f"stabilization floor must be positive, got {epsilon}")
        return cls(1.0 / np.maximum(y, epsilon), float(epsilon))

    @classmethod
    def uniform(cls, size: int) -> "FidelityWeights":
        return cls(np.ones(size))

    def scaled(self, c: float) -> "FidelityWeights":
        return FidelityWeights(self.w * c, self.epsilon)

    def __len__(self):
        return self.w.size


def build_psf(grid: GridSpec, fwhm_nm: float) -> np.ndarray:
    """Isotropic Gaussian PSF on the fine grid, unit sum, peak at index (0, 0).

    The kernel is periodic: pixel ``(i, j)`` sits at the wrapped distance
    ``min(i, N - i)``, ``min(j, N - j)`` from the origin.
    """
    if not np.isfinite(fwhm_nm) or fwhm_nm <= 0:
        raise ParameterError(f"FWHM must be positive, got {fwhm_nm}")
    sigma = psf_sigma_pixels(grid, fwhm_nm)
    return gaussian_kernel(grid.N, sigma)


def psf_sigma_pixels(grid: GridSpec, fwhm_nm: float) -> float:
    """Gaussian standard deviation in fine-grid pixels."""
    return fwhm_nm * FWHM_TO_SIGMA / grid.fine_pixel_nm


def gaussian_kernel(n: int, sigma: float) -> np.ndarray:
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    k = np.arange(n)
    d = np.minimum(k, n - k).astype(float)
    g = np.exp(-(d ** 2) / (2.0 * sigma ** 2))
    h = np.outer(g, g)
    return h / h.sum()


def _box_kernel(n: int, L: int) -> np.ndarray:
    # Ones at displacements 0, -1, ..., -(L-1) (mod n) in both axes, so that
    # (k * z)(u) sums z over the L x L block starting at u.
    k1 = np.zeros(n)
    k1[(-np.arange(L)) % n] = 1.0
    return np.outer(k1, k1)


class ForwardOperator:
    """``A = R_L H``: periodic convolution with ``psf`` then ``L x L`` block sums.

    Immutable after construction; one instance may be shared by concurrent
    solves.

    Parameters
    ----------
    grid : GridSpec
    psf : ndarray, shape (N, N)
        Nonnegative kernel with its origin at index (0, 0). It is rescaled to
        unit sum.
    """

    def __init__(self, grid: GridSpec, psf: np.ndarray):
        psf = np.asarray(psf, dtype=float)
        N = grid.N
        if psf.shape != (N, N):
            raise DimensionError(f"psf must be {N}x{N}, got {psf.shape}")
        if not np.all(np.isfinite(psf)) or np.any(psf < 0) or psf.sum() <= 0:
            raise ParameterError("psf must be nonnegative with positive sum")
        psf = psf / psf.sum()
        psf.setflags(write=False)
        self.grid = grid
        self.psf = psf
        self.psf_fft = sfft.rfft2(psf)
        self.downsample_kernel_fft = sfft.rfft2(_box_kernel(N, grid.L))
        self.combined_fft = self.psf_fft * self.downsample_kernel_fft
        combined = sfft.irfft2(self.combined_fft, s=(N, N))
        self.combined_sq_fft = sfft.rfft2(combined ** 2)
        for arr in (self.psf_fft, self.downsample_kernel_fft, self.combined_fft, self.combined_sq_fft):
            arr.setflags(write=False)

    @classmethod
    def gaussian(cls, grid: GridSpec, fwhm_nm: float) -> "ForwardOperator":
        return cls(grid, build_psf(grid, fwhm_nm))

    @property
    def shape(self):
        return (self.grid.M ** 2, self.grid.N ** 2)

    def _check(self, v, size, what):
        v = np.asarray(v, dtype=float)
        if v.size != size:
            raise DimensionError(f"{what} has {v.size} entries, expected {size}")
        return v

    def forward(self, x):
        """``A x`` as a flat ``M**2`` vector."""
        N, L = self.grid.N, self.grid.L
        x = self._check(x, N * N, "x").reshape(N, N)
        full = sfft.irfft2(sfft.rfft2(x) * self.combined_fft, s=(N, N))
        return full[::L, ::L].ravel()

    def adjoint(self, r):
        """``A^T r`` as a flat ``N**2`` vector."""
        M, N, L = self.grid.M, self.grid.N, self.grid.L
        r = self._check(r, M * M, "r").reshape(M, M)
        z = np.zeros((N, N))
        z[::L, ::L] = r
        return sfft.irfft2(sfft.rfft2(z) * np.conj(self.combined_fft), s=(N, N)).ravel()

    def column_norms_sq(self, weights: FidelityWeights):
        """``sum_j a_ji**2 w_j`` for every column ``i``.

        The weight image is embedded on the fine grid at the sampling
        positions and correlated with the squared combined kernel.
        """
        M, N, L = self.grid.M, self.grid.N, self.grid.L
        w = self._check(weights.w, M * M, "weights").reshape(M, M)
        emb = np.zeros((N, N))
        emb[::L, ::L] = w
        v = sfft.irfft2(sfft.rfft2(emb) * np.conj(self.combined_sq_fft), s=(N, N))
        # exact values are >= 0; clip FFT round-off only
        return np.maximum(v.ravel(), 0.0)

    def lipschitz_bound(self, weights: FidelityWeights) -> float:
        """``L**2 max|F(h)|**2 max(w)``, an upper bound on ``||A^T W A||``."""
        return float(self.grid.L ** 2 * np.max(np.abs(self.psf_fft)) ** 2 * np.max(weights.w))


class DenseOperator:
    """Explicit-matrix operator with the same interface as :class:`ForwardOperator`.

    Meant for tiny problems (tests, brute force).
    """

    def __init__(self, matrix):
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        if A.ndim != 2:
            raise DimensionError("matrix must be 2-D")
        A.setflags(write=False)
        self.matrix = A

    @property
    def shape(self):
        return self.matrix.shape

    def forward(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.shape[1]:
            raise DimensionError(f"x has {x.size} entries, expected {self.shape[1]}")
        return self.matrix @ x

    def adjoint(self, r):
        r = np.asarray(r, dtype=float).ravel()
        if r.size != self.shape[0]:
            raise DimensionError(f"r has {r.size} entries, expected {self.shape[0]}")
        return self.matrix.T @ r

    def column_norms_sq(self, weights: FidelityWeights):
        if len(weights) != self.shape[0]:
            raise DimensionError("weights do not match the operator")
        return (self.matrix ** 2).T @ weights.w

    def lipschitz_bound(self, weights: FidelityWeights) -> float:
        return float(np.linalg.norm(self.matrix, 2) ** 2 * np.max(weights.w))


def apply_forward(op, x):
    return op.forward(x)


def apply_adjoint(op, r):
    return op.adjoint(r)


def weighted_column_norms(op, weights: FidelityWeights):
    return op.column_norms_sq(weights)


def naive_lipschitz_bound(op, weights: FidelityWeights) -> float:
    return op.lipschitz_bound(weights)


def materialize_dense(op, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense ``M**2 x N**2`` matrix whose column ``i`` is ``op.forward(e_i)``."""
    m, n = op.shape
    if n > cap:
        raise CapExceededError(f"{n} columns exceeds the dense cap of {cap}")
    A = np.empty((m, n))
    e = np.zeros(n)
    for i in range(n):
        e[i] = 1.0
        A[:, i] = op.forward(e)
        e[i] = 0.0
    return A


def power_iteration_norm(op, weights: FidelityWeights, iters: int = 50) -> float:
    """Estimate ``||A^T W A||`` by power iteration from a fixed seed vector.

    The estimate ``||B v_{k+1}|| / ||v_{k+1}||`` with ``v_{k+1} = B v_k`` is
    nondecreasing in ``k`` for symmetric PSD ``B``.
    """
    if iters < 1:
        raise ParameterError("iters must be >= 1")
    w = weights.w
    v = np.random.default_rng(0).random(op.shape[1]) + 0.5
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        bv = op.adjoint(w * op.forward(v))
        nrm = np.linalg.norm(bv)
        if nrm == 0.0:
            return 0.0
        est = nrm
        v = bv / nrm
    return float(est)
