"""Independent reference computations used to freeze test baselines.

Nothing here imports the package's optimization or radius code: each oracle
reaches its number by a different route (linear programming on a grid,
adaptive quadrature, exact arithmetic, explicit index loops).
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import integrate
from scipy.optimize import linprog

SQ2 = math.sqrt(2)


def partial_trace_loops(rho, d_a, d_b, keep="B"):
    """Partial trace by explicit index sums."""
    rho = np.asarray(rho)
    if keep == "B":
        out = np.zeros((d_b, d_b), dtype=complex)
        for j in range(d_b):
            for l in range(d_b):
                out[j, l] = sum(rho[i * d_b + j, i * d_b + l] for i in range(d_a))
        return out
    out = np.zeros((d_a, d_a), dtype=complex)
    for i in range(d_a):
        for k in range(d_a):
            out[i, k] = sum(rho[i * d_b + j, k * d_b + j] for j in range(d_b))
    return out


def tstate_radius_quad(T) -> float:
    """``2 pi |det T| / int dS (n^T T^-2 n)^-2`` by adaptive quadrature in polar angles."""
    T = np.asarray(T, dtype=float)
    m = np.linalg.inv(T @ T.T)

    def f(phi, theta):
        n = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
        return (n @ m @ n) ** -2 * math.sin(theta)

    val, _ = integrate.dblquad(f, 0, math.pi, 0, 2 * math.pi, epsabs=1e-12, epsrel=1e-10)
    return 2 * math.pi * abs(np.linalg.det(T)) / val


def threshold_exact(family: str, cls: str, d: int, dps: int = 40) -> float:
    """Closed-form thresholds evaluated in 40-digit arithmetic."""
    with mpmath.workdps(dps):
        d = mpmath.mpf(d)
        if (family, cls) == ("werner", "projective"):
            v = 1 - 1 / d
        elif (family, cls) == ("werner", "dichotomic"):
            v = (d - 1) ** 2 * (1 - (1 - 1 / d) ** (1 / (d - 1)))
        elif (family, cls) == ("isotropic", "projective"):
            v = (sum(1 / mpmath.mpf(k) for k in range(1, int(d) + 1)) - 1) / (d - 1)
        elif (family, cls) == ("isotropic", "dichotomic"):
            v = 1 - d ** (-1 / (d - 1))
        elif (family, cls) == ("isotropic", "povm-barrett"):
            v = (3 * d - 1) / (d + 1) * (d - 1) ** (d - 1) / d**d
        else:
            v = (1 + (d - 1) ** (d + 1) / d**d) / (d + 1)
        return float(v)


def binary_entropy_nats(p: float) -> float:
    return -sum(x * math.log(x) for x in (p, 1 - p) if x > 0)


def entropic_werner_threshold() -> float:
    """Werner mixing at which ``2 h((1 + eta)/2) = ln 2`` for matched x and z measurements."""
    from scipy.optimize import brentq

    return brentq(lambda e: 2 * binary_entropy_nats((1 + e) / 2) - math.log(2), 1e-9, 1 - 1e-12, xtol=1e-15)


def tmsv_min_eigenvalue(r: float) -> float:
    """Smallest eigenvalue of ``V + i(0 (+) Omega_B)`` for the two-mode squeezed vacuum, via mpmath."""
    with mpmath.workdps(30):
        c, s = mpmath.cosh(2 * r), mpmath.sinh(2 * r)
        m = mpmath.matrix(
            [
                [c, 0, s, 0],
                [0, c, 0, -s],
                [s, 0, c, 1j],
                [0, -s, -1j, c],
            ]
        )
        ev = mpmath.eighe(m, eigvals_only=True)
        return float(min(mpmath.re(e) for e in ev))


def _singlet_xz_members():
    """Real Bloch data ``(t, x, z)`` of the singlet assemblage for Alice's sigma_x and sigma_z.

    Outcome 0 is +1; Bob's conditional state is ``(I - n.sigma)/4``.
    """
    return {
        (0, 0): np.array([0.5, -0.5, 0.0]),
        (0, 1): np.array([0.5, 0.5, 0.0]),
        (1, 0): np.array([0.5, 0.0, -0.5]),
        (1, 1): np.array([0.5, 0.0, 0.5]),
    }


def lp_grid_singlet_xz(kind: str, n_states: int = 10_000, seed_cuts: int = 64, max_rounds: int = 500, cut_tol: float = 1e-6) -> float:
    """Steering weight (``kind="weight"``) or robustness of the singlet with sigma_x, sigma_z.

    A real symmetric 2x2 operator is stored as ``(t, x, z)`` with
    ``Tr = t`` and positivity ``t >= |(x, z)|``. Hidden states are
    nonnegative combinations of ``n_states`` real pure states on a circle;
    the residual cones are relaxed to tangent half-planes and refined by
    cutting planes until their violation falls below ``cut_tol``. Fixing a
    residual violation ``v`` moves the objective by at most ``2 v`` per
    member. The assemblage is real, so restricting to real operators loses
    nothing.
    """
    from scipy import sparse

    members = _singlet_xz_members()
    keys = list(members)
    phis = 2 * np.pi * np.arange(n_states) / n_states
    pure = np.stack([np.ones(n_states), np.cos(phis), np.sin(phis)], axis=1)
    strategies = [(a0, a1) for a0 in (0, 1) for a1 in (0, 1)]
    blocks = []
    for x, a in keys:
        sel = np.array([1.0 if lam[x] == a else 0.0 for lam in strategies])
        blocks.append(np.kron(sel, pure.T))  # (3, n_cols)
    # variables: grid weights, then s_key = LHS part of member key (3 each)
    n_cols = len(strategies) * n_states
    n_aux = 3 * len(keys)
    a_eq = sparse.hstack([sparse.csr_matrix(np.concatenate(blocks)), -sparse.eye(n_aux)]).tocsr()
    # weight: rho - LHS part >= 0; robustness: LHS part - rho >= 0
    sign = 1.0 if kind == "weight" else -1.0
    c = np.zeros(n_cols + n_aux)
    c[:n_cols] = -1.0 if kind == "weight" else 1.0
    bounds = [(0, None)] * n_cols + [(None, None)] * n_aux
    cuts = {key: list(2 * np.pi * np.arange(seed_cuts) / seed_cuts) for key in keys}
    for _ in range(max_rounds):
        rows, rhs = [], []
        for i, key in enumerate(keys):
            angles = np.asarray(cuts[key])
            w = np.stack([np.ones(len(angles)), -np.cos(angles), -np.sin(angles)], axis=1)
            block = np.zeros((len(angles), n_aux))
            block[:, 3 * i : 3 * i + 3] = sign * w
            rows.append(block)
            rhs.append(sign * (w @ members[key]))
        rows = np.concatenate(rows)
        a_ub = sparse.hstack([sparse.csr_matrix((len(rows), n_cols)), sparse.csr_matrix(rows)])
        res = linprog(c, A_ub=a_ub, b_ub=np.concatenate(rhs), A_eq=a_eq, b_eq=np.zeros(n_aux), bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(res.message)
        converged = True
        for i, key in enumerate(keys):
            r = sign * (members[key] - res.x[n_cols + 3 * i : n_cols + 3 * i + 3])
            if np.hypot(r[1], r[2]) - r[0] > cut_tol:
                cuts[key].append(math.atan2(r[2], r[1]))
                converged = False
        if converged:
            total = float(res.x[:n_cols].sum())
            return 1 - total if kind == "weight" else total - 1
    raise RuntimeError("cutting planes did not converge")
