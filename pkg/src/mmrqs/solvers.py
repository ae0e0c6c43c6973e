"""Stationary vectors of finite continuous-time Markov chains."""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu, spsolve_triangular

from .errors import NonConvergenceError, NumericError

DENSE_LIMIT = 2000
SPARSE_LIMIT = 300_000
SWEEP_TOL = 1e-12
MAX_SWEEPS = 100_000
RESIDUAL_TOL = 1e-10


def assemble(n: int, rows, cols, rates) -> sp.csr_matrix:
    """Build a generator from off-diagonal transitions; duplicates are summed.

    Self-loops are dropped and the diagonal is set so that rows sum to zero.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    rates = np.asarray(rates, dtype=float)
    keep = (rows != cols) & (rates > 0)
    rows, cols, rates = rows[keep], cols[keep], rates[keep]
    off = sp.coo_matrix((rates, (rows, cols)), shape=(n, n)).tocsr()
    out = np.asarray(off.sum(axis=1)).ravel()
    return (off - sp.diags(out)).tocsr()


def residual(A, q: np.ndarray) -> float:
    return float(np.max(np.abs(A.T @ q))) if q.size else 0.0


def _dense(A) -> np.ndarray:
    M = A.toarray().T if sp.issparse(A) else np.asarray(A, dtype=float).T.copy()
    n = M.shape[0]
    M[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        q = scipy.linalg.solve(M, b)
    except scipy.linalg.LinAlgError as exc:
        raise NumericError(f"singular balance system: {exc}") from exc
    return q


def _sparse_direct(A) -> np.ndarray | None:
    """Sparse LU of the transposed generator with one equation swapped for the normalisation.

    Returns None when the factorisation fails so the caller can fall back.
    """
    n = A.shape[0]
    M = sp.lil_matrix(A.T)
    M[n - 1, :] = np.ones(n)
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        q = splu(sp.csc_matrix(M)).solve(b)
    except RuntimeError:
        return None
    return q if np.all(np.isfinite(q)) else None


def _gauss_seidel(A, tol: float, max_sweeps: int) -> np.ndarray:
    """Gauss-Seidel on q A = 0 with relaxation factor 1.

    Works on the transposed system; each sweep is one sparse triangular solve.
    """
    At = sp.csr_matrix(A.T)
    n = At.shape[0]
    lower = sp.tril(At, format="csr")
    upper = sp.triu(At, k=1, format="csr")
    q = np.full(n, 1.0 / n)
    delta = np.inf
    for sweep in range(1, max_sweeps + 1):
        new = spsolve_triangular(lower, -(upper @ q), lower=True)
        new = np.abs(new)
        new /= new.sum()
        delta = float(np.max(np.abs(new - q)))
        q = new
        if delta < tol:
            return q
    raise NonConvergenceError(
        f"Gauss-Seidel did not converge in {max_sweeps} sweeps (last change {delta:.3e})",
        residual=residual(A, q), iterations=max_sweeps, last=q)


_settings = {"tol": SWEEP_TOL, "max_sweeps": MAX_SWEEPS, "method": "auto"}


@contextmanager
def solver_settings(**overrides):
    """Temporarily change the defaults used by solve_stationary (tol, max_sweeps, method)."""
    unknown = set(overrides) - set(_settings)
    if unknown:
        raise ValueError(f"unknown solver settings {sorted(unknown)}")
    saved = dict(_settings)
    _settings.update({k: v for k, v in overrides.items() if v is not None})
    try:
        yield
    finally:
        _settings.clear()
        _settings.update(saved)


def solve_stationary(A, tol: float | None = None, max_sweeps: int | None = None,
                     dense_limit: int = DENSE_LIMIT, sparse_limit: int = SPARSE_LIMIT,
                     method: str | None = None) -> np.ndarray:
    """Probability row vector q with q A = 0 and sum(q) = 1.

    ``auto`` picks a dense solve below ``dense_limit`` states, a sparse LU up
    to ``sparse_limit`` and Gauss-Seidel sweeps beyond (or if LU fails).
    """
    tol = _settings["tol"] if tol is None else tol
    max_sweeps = _settings["max_sweeps"] if max_sweeps is None else max_sweeps
    method = _settings["method"] if method is None else method
    n = A.shape[0]
    if n == 1:
        return np.ones(1)
    if method not in ("auto", "dense", "sparse", "gauss_seidel"):
        raise ValueError(f"unknown solver method {method!r}")
    q = None
    if method == "dense" or (method == "auto" and n < dense_limit):
        q = _dense(A)
    elif method == "sparse" or (method == "auto" and n < sparse_limit):
        q = _sparse_direct(A)
    if q is None:
        q = _gauss_seidel(A, tol, max_sweeps)
    q = np.where(q < 0, np.where(q > -1e-13, 0.0, q), q)
    if np.any(q < 0):
        raise NumericError("stationary solve produced negative probabilities")
    q /= q.sum()
    res = residual(A, q)
    scale = max(1.0, float(np.max(np.abs(A.diagonal()))))
    if res > RESIDUAL_TOL * scale:
        raise NumericError(f"stationary residual {res:.3e} exceeds tolerance")
    return q
