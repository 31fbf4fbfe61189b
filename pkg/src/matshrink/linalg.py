"""Small dense matrix kernel: products, Gram matrices, a cyclic Jacobi
eigensolver for symmetric matrices, and SPD solve / inverse square root.

Everything here targets small problems (p up to ~20 columns, n up to ~1000
rows).  The eigensolver is plain cyclic Jacobi with a fixed sweep order so
results are deterministic down to the last bit for a given input, which the
Monte Carlo reproducibility contract relies on.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

_JACOBI_MAX_SWEEPS = 100
_JACOBI_TOL = 1e-12
_SPD_RTOL = 1e-12


class SingularMatrixError(ValueError):
    """Matrix is singular or too close to singular for the requested
    operation.  Carries the offending minimum eigenvalue."""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(f"{message} (min eigenvalue {min_eigenvalue:.6e})")
        self.min_eigenvalue = min_eigenvalue


class SymEig(NamedTuple):
    """Symmetric eigendecomposition, eigenvalues ascending, orthonormal
    eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_matrix(a, name: str) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product A @ B with explicit conformability checking."""
    a = _as_matrix(a, "A")
    b = _as_matrix(b, "B")
    if a.shape[1] != b.shape[0]:
        raise ValueError(
            f"dimension mismatch: ({a.shape[0]}x{a.shape[1]}) @ "
            f"({b.shape[0]}x{b.shape[1]})"
        )
    return a @ b


def gram(x) -> np.ndarray:
    """Gram matrix X'X (symmetric positive semidefinite).

    Computed entrywise so the (j, k) and (k, j) sums run in the same
    order; the result is exactly symmetric.
    """
    x = _as_matrix(x, "X")
    return np.einsum("ij,ik->jk", x, x)


def frobenius(m) -> float:
    return float(np.sqrt(np.sum(np.square(np.asarray(m, dtype=np.float64)))))


def sym_eigen(m) -> SymEig:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run in fixed row order (0,1), (0,2), ..., (p-2,p-1) until the
    off-diagonal Frobenius norm falls below 1e-12 times the input norm,
    up to 100 sweeps.  Deterministic for a given input.

    Raises ValueError for non-square or non-symmetric input (relative
    asymmetry above 1e-10).
    """
    m = _as_matrix(m, "M")
    p = m.shape[0]
    if m.shape[1] != p:
        raise ValueError(f"M must be square, got shape {m.shape}")
    norm = frobenius(m)
    if frobenius(m - m.T) > 1e-10 * max(1.0, norm):
        raise ValueError("M is not symmetric within 1e-10 relative tolerance")

    a = 0.5 * (m + m.T)
    v = np.eye(p)
    threshold = _JACOBI_TOL * norm
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off == 0.0 or off < threshold:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                apq = a[i, j]
                if apq == 0.0:
                    continue
                diff = a[j, j] - a[i, i]
                # stable rotation angle; guard the theta**2 overflow
                theta = 0.5 * diff / apq
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) if theta != 0.0 else 1.0
                    t = t / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                ai = a[:, i].copy()
                aj = a[:, j].copy()
                a[:, i] = c * ai - s * aj
                a[:, j] = s * ai + c * aj
                ai = a[i, :].copy()
                aj = a[j, :].copy()
                a[i, :] = c * ai - s * aj
                a[j, :] = s * ai + c * aj
                a[i, j] = 0.0
                a[j, i] = 0.0

                vi = v[:, i].copy()
                vj = v[:, j].copy()
                v[:, i] = c * vi - s * vj
                v[:, j] = s * vi + c * vj
    else:
        raise RuntimeError(
            f"Jacobi eigensolver did not converge in {_JACOBI_MAX_SWEEPS} sweeps"
        )

    eigvals = np.diag(a).copy()
    order = np.argsort(eigvals, kind="stable")
    return SymEig(eigvals[order], v[:, order])


def _spd_eigen(m, name: str) -> SymEig:
    eig = sym_eigen(m)
    p = m.shape[0] if hasattr(m, "shape") else len(m)
    lo = float(eig.eigenvalues[0])
    hi = float(eig.eigenvalues[-1])
    if hi <= 0.0 or lo <= p * _SPD_RTOL * hi:
        raise SingularMatrixError(f"{name} is not positive definite", lo)
    return eig


def solve_spd(m, b) -> np.ndarray:
    """Solve M X = B for symmetric positive definite M via the Jacobi
    eigendecomposition.  Raises SingularMatrixError when the smallest
    eigenvalue is below p * 1e-12 times the largest."""
    m = _as_matrix(m, "M")
    b_arr = np.asarray(b, dtype=np.float64)
    vec_in = b_arr.ndim == 1
    b2 = b_arr[:, None] if vec_in else _as_matrix(b_arr, "B")
    if b2.shape[0] != m.shape[0]:
        raise ValueError(f"B has {b2.shape[0]} rows, expected {m.shape[0]}")
    eig = _spd_eigen(m, "M")
    x = eig.eigenvectors @ ((eig.eigenvectors.T @ b2) / eig.eigenvalues[:, None])
    return x[:, 0] if vec_in else x


def _symmetrized(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def spd_sqrt_inv(sigma) -> np.ndarray:
    """Symmetric square root of the inverse of an SPD matrix: the A with
    A A' = Sigma^-1, fixed to the symmetric convention Sigma^{-1/2}."""
    sigma = _as_matrix(sigma, "Sigma")
    if sigma.shape[0] != sigma.shape[1]:
        raise ValueError("Sigma must be square")
    eig = _spd_eigen(sigma, "Sigma")
    a = (eig.eigenvectors / np.sqrt(eig.eigenvalues)) @ eig.eigenvectors.T
    return _symmetrized(a)


def spd_sqrt(sigma) -> np.ndarray:
    """Symmetric square root Sigma^{1/2} of an SPD matrix."""
    sigma = _as_matrix(sigma, "Sigma")
    if sigma.shape[0] != sigma.shape[1]:
        raise ValueError("Sigma must be square")
    eig = _spd_eigen(sigma, "Sigma")
    a = (eig.eigenvectors * np.sqrt(eig.eigenvalues)) @ eig.eigenvectors.T
    return _symmetrized(a)


def spd_sqrt_inv_pair(sigma) -> tuple[np.ndarray, np.ndarray]:
    """(Sigma^{-1/2}, Sigma^{1/2}) from a single eigendecomposition, so the
    pair is mutually consistent."""
    sigma = _as_matrix(sigma, "Sigma")
    if sigma.shape[0] != sigma.shape[1]:
        raise ValueError("Sigma must be square")
    eig = _spd_eigen(sigma, "Sigma")
    root = np.sqrt(eig.eigenvalues)
    inv_half = _symmetrized((eig.eigenvectors / root) @ eig.eigenvectors.T)
    half = _symmetrized((eig.eigenvectors * root) @ eig.eigenvectors.T)
    return inv_half, half
