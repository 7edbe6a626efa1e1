"""Symmetric eigendecomposition by cyclic Jacobi rotations."""

from __future__ import annotations

import math

import numpy as np

from ..errors import NotSymmetric, NoConvergence, SingularMatrix

SYMMETRY_TOL = 1e-10
OFF_TOL = 1e-12
MAX_SWEEPS = 100


def _off_norm(a: np.ndarray) -> float:
    # summed directly: subtracting the diagonal from the full norm cancels catastrophically
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return float(np.sqrt(off @ off))


def eig_sym(a, tol: float = OFF_TOL, max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvectors (columns) of a symmetric matrix.

    Sweeps over all (p, q) pairs, annihilating each off-diagonal entry with a
    plane rotation, until the off-diagonal Frobenius norm falls below
    ``tol * max(1, ||A||_F)``.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)
    if a.size and np.max(np.abs(a - a.T)) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric")
    a = (a + a.T) / 2.0
    v = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    sweeps = 0
    while _off_norm(a) >= threshold:
        if sweeps == max_sweeps:
            raise NoConvergence(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    continue
                theta = diff / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]


def sym_inverse(a, max_condition: float = 1e12) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix via its eigendecomposition.

    Raises :class:`SingularMatrix` when the condition number exceeds
    ``max_condition`` or an eigenvalue is not positive.
    """
    w, v = eig_sym(a)
    if w[-1] <= 0.0 or w[0] / w[-1] > max_condition:
        cond = math.inf if w[-1] <= 0.0 else w[0] / w[-1]
        raise SingularMatrix(f"matrix is singular or ill-conditioned (condition estimate {cond:.3g})")
    inv = (v / w) @ v.T
    return (inv + inv.T) / 2.0
