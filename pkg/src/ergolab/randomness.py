"""Haar-measure sampling and empirical checks of its low moments.

Unitaries are drawn by QR-factoring a complex Ginibre matrix and absorbing
the phases of the R diagonal into Q, which makes the distribution exactly
invariant under left and right unitary multiplication.  Random states are
normalized complex Gaussian vectors (equivalently, first columns of Haar
unitaries).  A random decomposition is the coordinate partition of given
ranks conjugated by a single Haar unitary.

All observables handled here (entry moduli, projection weights) are
invariant under a global phase, so sampling from the full unitary group
rather than its unit-determinant subgroup leaves their distributions
unchanged.

Statistical reports follow one record shape per estimated quantity:
``{"estimate", "stderr", "target", "pass"}`` with 5-standard-error gates,
which keeps the false-alarm rate of a seeded check below ~1e-6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_SEED",
    "ORTHO_TOL",
    "substream",
    "sample_haar_unitary",
    "sample_random_state",
    "Projection",
    "Decomposition",
    "coordinate_projection",
    "sample_decomposition",
    "state_weight_statistics",
    "hypersphere_moments",
    "unitary_block_statistics",
]

DEFAULT_SEED = 12345

# Orthonormality / completeness tolerance for projection cells.
ORTHO_TOL = 1e-10

# Internal batch size for vectorized moment estimation; fixed so that a
# given seed always consumes the generator in the same order.
_BATCH = 4096


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for (seed, index, ...).

    Trials seeded this way are reproducible regardless of execution order,
    so concurrent callers can draw their own substreams and still aggregate
    deterministically.
    """
    return np.random.default_rng([int(seed), *(int(p) for p in path)])


def sample_haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via Ginibre + QR with phase-fixed diagonal."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    z /= math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r).copy()
    d[d == 0] = 1.0  # measure-zero guard
    return q * (d / np.abs(d))


def sample_random_state(dim: int, rng: np.random.Generator, size: int | None = None):
    """Uniformly random unit vector(s) in a dim-dimensional complex space.

    With ``size=None`` returns one vector of shape (dim,); otherwise an
    array of shape (size, dim) with unit rows.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    shape = (dim,) if size is None else (int(size), dim)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    norms = np.linalg.norm(z, axis=-1, keepdims=True)
    return z / norms


@dataclass(eq=False)
class Projection:
    """Rank-d orthogonal projection stored as d orthonormal basis columns.

    ``basis`` has shape (D, d); the projector itself (basis @ basis^H) is
    never materialized.  ``indices`` records which coordinates of the parent
    partition the cell came from.
    """

    basis: np.ndarray
    indices: tuple[int, ...]

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=complex)
        if self.basis.ndim != 2:
            raise ValueError("projection basis must be a (D, d) matrix")
        self.indices = tuple(int(i) for i in self.indices)
        if len(self.indices) != self.basis.shape[1]:
            raise ValueError("rank must equal the size of the index set")
        gram = self.basis.conj().T @ self.basis
        if np.abs(gram - np.eye(self.rank)).max() > ORTHO_TOL:
            raise ValueError("projection basis is not orthonormal")

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


@dataclass(eq=False)
class Decomposition:
    """Ordered list of mutually orthogonal cells partitioning the space."""

    cells: tuple[Projection, ...]

    def __post_init__(self):
        self.cells = tuple(self.cells)
        if not self.cells:
            raise ValueError("decomposition needs at least one cell")
        dim = self.cells[0].dim
        if any(c.dim != dim for c in self.cells):
            raise ValueError("cells live in different spaces")
        if sum(c.rank for c in self.cells) != dim:
            raise ValueError(
                f"cell ranks {self.ranks} do not sum to the dimension {dim}"
            )
        # One unitarity check covers orthonormality within each cell,
        # orthogonality across cells, and joint completeness.
        stacked = np.hstack([c.basis for c in self.cells])
        if np.abs(stacked.conj().T @ stacked - np.eye(dim)).max() > ORTHO_TOL:
            raise ValueError("cells are not jointly orthonormal and complete")

    @property
    def dim(self) -> int:
        return self.cells[0].dim

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(c.rank for c in self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)


def coordinate_projection(dim: int, indices) -> Projection:
    """Projection onto a subset of coordinate axes."""
    indices = tuple(int(i) for i in indices)
    basis = np.zeros((dim, len(indices)), dtype=complex)
    for col, i in enumerate(indices):
        basis[i, col] = 1.0
    return Projection(basis=basis, indices=indices)


def sample_decomposition(dims, rng: np.random.Generator) -> Decomposition:
    """Coordinate partition of the given ranks rotated by one Haar unitary."""
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise ValueError(f"all cell ranks must be >= 1, got {dims}")
    total = sum(dims)
    u = sample_haar_unitary(total, rng)
    cells = []
    start = 0
    for d in dims:
        cells.append(
            Projection(basis=u[:, start:start + d], indices=range(start, start + d))
        )
        start += d
    return Decomposition(cells=tuple(cells))


def _mean_record(samples: np.ndarray, target: float) -> dict:
    n = samples.size
    est = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(n))
    return {
        "estimate": est,
        "stderr": se,
        "target": float(target),
        "pass": abs(est - target) <= 5 * se,
    }


def _variance_record(samples: np.ndarray, target: float) -> dict:
    # Asymptotic stderr of the sample variance: sqrt((m4 - v^2)/n).
    n = samples.size
    centered = samples - samples.mean()
    v = float(np.sum(centered**2) / (n - 1))
    m4 = float(np.mean(centered**4))
    se = math.sqrt(max(m4 - v * v, 0.0) / n)
    return {
        "estimate": v,
        "stderr": se,
        "target": float(target),
        "pass": abs(v - target) <= 5 * se,
    }


def _covariance_record(a: np.ndarray, b: np.ndarray, target: float) -> dict:
    n = a.size
    da = a - a.mean()
    db = b - b.mean()
    c = float(np.sum(da * db) / (n - 1))
    m22 = float(np.mean(da**2 * db**2))
    se = math.sqrt(max(m22 - c * c, 0.0) / n)
    return {
        "estimate": c,
        "stderr": se,
        "target": float(target),
        "pass": abs(c - target) <= 5 * se,
    }


def state_weight_statistics(
    dim: int, rank: int, samples: int, rng: np.random.Generator
) -> dict:
    """Empirical mean and variance of the weight of a rank-d cell on random states.

    The projection is taken on the first ``rank`` coordinates; by unitary
    invariance of the state distribution this loses no generality.  Targets
    are d/D and (1/d)(d/D)^2 (D-d)/(D+1).
    """
    if not 1 <= rank <= dim:
        raise ValueError(f"need 1 <= rank <= dim, got rank={rank}, dim={dim}")
    samples = int(samples)
    w = np.empty(samples)
    done = 0
    while done < samples:
        k = min(_BATCH, samples - done)
        z = rng.standard_normal((k, dim)) + 1j * rng.standard_normal((k, dim))
        z2 = np.abs(z) ** 2
        w[done:done + k] = z2[:, :rank].sum(axis=1) / z2.sum(axis=1)
        done += k
    frac = rank / dim
    var_target = (1 / rank) * frac**2 * (dim - rank) / (dim + 1)
    return {
        "dim": dim,
        "rank": rank,
        "samples": samples,
        "mean": _mean_record(w, frac),
        "variance": _variance_record(w, var_target),
    }


def hypersphere_moments(dim: int, samples: int, rng: np.random.Generator) -> dict:
    """Low moments of a uniform point on the unit sphere in 2D real dimensions.

    A normalized complex D-vector has 2D real coordinates on the unit
    sphere.  The mean record is for one squared real coordinate (target
    1/(2D)).  The variance and covariance records are for the squared
    moduli of complex coefficients, i.e. sums of two sphere coordinates:
    these are the variables whose D-term decomposition reproduces the
    variance of a rank-d cell weight, with targets (D-1)/(D^2 (D+1)) and,
    between two distinct coefficients, -1/(D^2 (D+1)).
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    samples = int(samples)
    x2 = np.empty(samples)   # squared real part of coefficient 0
    m0 = np.empty(samples)   # squared modulus of coefficient 0
    m1 = np.empty(samples)   # squared modulus of coefficient 1
    done = 0
    while done < samples:
        k = min(_BATCH, samples - done)
        z = sample_random_state(dim, rng, size=k)
        x2[done:done + k] = z[:, 0].real ** 2
        m0[done:done + k] = np.abs(z[:, 0]) ** 2
        m1[done:done + k] = np.abs(z[:, min(1, dim - 1)]) ** 2
        done += k
    mean_target = 1 / (2 * dim)
    var_target = (dim - 1) / (dim**2 * (dim + 1))
    cov_target = -1 / (dim**2 * (dim + 1))
    out = {
        "dim": dim,
        "samples": samples,
        "mean": _mean_record(x2, mean_target),
        "variance": _variance_record(m0, var_target),
    }
    if dim >= 2:
        out["covariance"] = _covariance_record(m0, m1, cov_target)
    return out


def unitary_block_statistics(
    dim: int, rank: int, ensemble: int, rng: np.random.Generator
) -> dict:
    """Ensemble means of the worst column overlaps of a d-row block of Haar unitaries.

    For each sampled unitary U, with V its first ``rank`` rows and
    W = V^H V, records max_{i != j} |W_ij|^2 and max_i (W_ii - d/D)^2.
    The reference thresholds log(D)/D and 9 d log(D)/D^2 (natural log) are
    included for the caller to compare against; no pass flag is attached
    because the comparison is only meaningful when the dimension ordering
    that licenses it holds.
    """
    if not 1 <= rank < dim:
        raise ValueError(f"need 1 <= rank < dim, got rank={rank}, dim={dim}")
    ensemble = int(ensemble)
    if ensemble < 1:
        raise ValueError("ensemble size must be >= 1")
    frac = rank / dim
    max_off = np.empty(ensemble)
    max_diag = np.empty(ensemble)
    offdiag_mask = ~np.eye(dim, dtype=bool)
    for t in range(ensemble):
        u = sample_haar_unitary(dim, rng)
        v = u[:rank, :]
        w = v.conj().T @ v
        max_off[t] = (np.abs(w) ** 2)[offdiag_mask].max()
        max_diag[t] = ((w.diagonal().real - frac) ** 2).max()
    log_dim = math.log(dim)
    return {
        "dim": dim,
        "rank": rank,
        "ensemble": ensemble,
        "max_offdiag": {
            "estimate": float(max_off.mean()),
            "stderr": float(max_off.std(ddof=1) / math.sqrt(ensemble)) if ensemble > 1 else 0.0,
            "threshold": log_dim / dim,
        },
        "max_diag_dev": {
            "estimate": float(max_diag.mean()),
            "stderr": float(max_diag.std(ddof=1) / math.sqrt(ensemble)) if ensemble > 1 else 0.0,
            "threshold": 9 * rank * log_dim / dim**2,
        },
    }
