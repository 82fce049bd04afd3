import logging
import math

import numpy as np

from hqmm_lib.config import APP_CONFIG
from hqmm_lib.errors import EigenSolverError


def _off_diagonal_norm(a):
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def jacobi_eigh(matrix, threshold=None, max_sweeps=None):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with matrix = V diag(w) V^T, eigenvalues
    sorted descending. Stops once the off-diagonal Frobenius norm drops below
    threshold * max(1, ||matrix||_F).
    """
    threshold = APP_CONFIG["jacobi_threshold"] if threshold is None else threshold
    max_sweeps = APP_CONFIG["jacobi_max_sweeps"] if max_sweeps is None else max_sweeps

    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"jacobi_eigh needs a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)):
        raise ValueError("jacobi_eigh needs a symmetric matrix")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(a)))

    sweeps = 0
    off = _off_diagonal_norm(a)
    while off > threshold * scale:
        if sweeps >= max_sweeps:
            raise EigenSolverError(
                f"Jacobi eigensolver did not converge after {max_sweeps} sweeps "
                f"(off-diagonal residual {off:.3g}).")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c

                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
        sweeps += 1
        off = _off_diagonal_norm(a)

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    logging.debug(f"Jacobi converged in {sweeps} sweep(s) for n={n}, off-diagonal residual {off:.3g}")
    return eigenvalues[order], v[:, order]


def hermitian_eigvalsh(matrix, threshold=None, max_sweeps=None):
    """Eigenvalues (descending) of a Hermitian matrix through the Jacobi solver.

    A complex Hermitian H = A + iB has the same spectrum as the real symmetric
    [[A, -B], [B, A]], with every eigenvalue doubled.
    """
    h = np.asarray(matrix)
    if not np.iscomplexobj(h) or not np.any(np.imag(h)):
        return jacobi_eigh(np.real(h), threshold, max_sweeps)[0]
    a, b = np.real(h), np.imag(h)
    embedded = np.block([[a, -b], [b, a]])
    eigenvalues = jacobi_eigh(embedded, threshold, max_sweeps)[0]
    return eigenvalues[::2]
