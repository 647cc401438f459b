"""Thin conic-programming layer on top of cvxpy.

Hermitian operators enter the optimization through real coordinates in an
orthonormal Hermitian basis ``G_k`` (``Tr G_j G_k = delta_jk``), so trace
inner products become dot products. Positivity of a coordinate row is
imposed either as a Lorentz cone (qubits) or through the real-symmetric
embedding ``[[Re H, -Im H], [Im H, Re H]]`` (any dimension).

The backend is chosen with the ``STEERKIT_SOLVER`` environment variable
(any cvxpy solver name; default ``CLARABEL``).
"""

from __future__ import annotations

import os
import time
import warnings
from dataclasses import dataclass
from functools import lru_cache

import cvxpy as cp
import numpy as np

from steerkit.errors import SolverError

DEFAULT_SOLVER = "CLARABEL"

_SOLVER_OPTIONS = {
    "CLARABEL": {"tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10, "tol_feas": 1e-10, "max_iter": 500},
    "SCS": {"eps_abs": 1e-9, "eps_rel": 1e-9, "max_iters": 200000},
    "CVXOPT": {"abstol": 1e-10, "reltol": 1e-10, "feastol": 1e-10},
}

# second attempt after a numerical failure at the tight settings
_RELAXED_OPTIONS = {
    "CLARABEL": {"tol_gap_abs": 1e-8, "tol_gap_rel": 1e-8, "tol_feas": 1e-8, "max_iter": 1000},
}


def solver_name() -> str:
    return os.environ.get("STEERKIT_SOLVER", DEFAULT_SOLVER).upper()


@lru_cache(maxsize=None)
def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal Hermitian basis, shape ``(d*d, d, d)``; element 0 is ``I/sqrt(d)``.

    For ``d = 2`` this is ``(I, X, Y, Z)/sqrt(2)``.
    """
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1 / np.sqrt(2)
            a = np.zeros((d, d), dtype=complex)
            a[j, k], a[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            basis += [s, a]
    for k in range(1, d):
        diag = np.zeros(d)
        diag[:k] = 1
        diag[k] = -k
        basis.append(np.diag(diag / np.sqrt(k * (k + 1))).astype(complex))
    out = np.stack(basis)
    out.setflags(write=False)
    return out


def to_coords(ops) -> np.ndarray:
    """Real coordinates of Hermitian operators (last two axes) in :func:`hermitian_basis`."""
    ops = np.asarray(ops, dtype=complex)
    g = hermitian_basis(ops.shape[-1])
    return np.einsum("kij,...ji->...k", g, ops).real


def from_coords(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    d = int(round(np.sqrt(x.shape[-1])))
    return np.einsum("...k,kij->...ij", x, hermitian_basis(d))


@lru_cache(maxsize=None)
def _embedding(d: int) -> np.ndarray:
    """Matrix mapping coordinates to the flattened ``2d x 2d`` real embedding."""
    g = hermitian_basis(d)
    emb = np.stack([np.block([[h.real, -h.imag], [h.imag, h.real]]).ravel() for h in g], axis=1)
    emb.setflags(write=False)
    return emb


def psd_rows(x, d: int, shift=0.0) -> list:
    """Constraints ``H(x_r) - shift * I >= 0`` for every row ``x_r`` of ``x``."""
    n = x.shape[0]
    if d == 1:
        return [x[:, 0] >= shift]
    if d == 2:
        return [cp.SOC(x[:, 0] - np.sqrt(2) * shift, x[:, 1:], axis=1)]
    emb = _embedding(d)
    eye = np.eye(2 * d)
    return [cp.reshape(emb @ x[r], (2 * d, 2 * d), order="C") - shift * eye >> 0 for r in range(n)]


def trace_weights(d: int) -> np.ndarray:
    """Vector ``w`` with ``Tr H(x) = w @ x``."""
    w = np.zeros(d * d)
    w[0] = np.sqrt(d)
    return w


@dataclass
class SolveInfo:
    solver: str
    status: str
    value: float
    seconds: float

    def as_dict(self) -> dict:
        return {"solver": self.solver, "status": self.status, "value": self.value, "seconds": self.seconds}


def _attempt(problem: cp.Problem, name: str, opts: dict) -> None:
    with warnings.catch_warnings():
        # inaccuracy is reported through the returned status instead
        warnings.simplefilter("ignore", UserWarning)
        problem.solve(solver=name, **opts)


def solve(problem: cp.Problem, solver: str | None = None) -> SolveInfo:
    """Solve ``problem``; raise :class:`SolverError` unless the result is optimal."""
    name = (solver or solver_name()).upper()
    opts = _SOLVER_OPTIONS.get(name, {})
    start = time.perf_counter()
    try:
        _attempt(problem, name, opts)
    except cp.error.SolverError as exc:
        if name not in _RELAXED_OPTIONS:
            raise SolverError(f"{name} failed: {exc}", status="solver_error") from exc
        try:
            _attempt(problem, name, _RELAXED_OPTIONS[name])
        except cp.error.SolverError as again:
            raise SolverError(f"{name} failed: {again}", status="solver_error") from again
    status = problem.status
    if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise SolverError(f"{name} returned status {status!r}", status=status)
    return SolveInfo(name, status, float(problem.value), time.perf_counter() - start)
