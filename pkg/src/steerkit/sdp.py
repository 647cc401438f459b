"""Semidefinite programs for finite assemblages.

Every program here is built over the deterministic strategies
``lambda = (a_1, ..., a_m)`` with response ``D(a|x, lambda) = [lambda(x) == a]``.
The same decomposition machinery serves joint measurability, where the
"assemblage" is a set of POVMs and the hidden states form a parent POVM.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from steerkit import conic
from steerkit.errors import DimensionError, SolverError
from steerkit.operators import Assemblage, MeasurementSet, assemblage_from_state, partial_trace

STRATEGY_LIMIT = 10**6
# Programs with more deterministic strategies than this are solved by column generation.
COLUMN_GENERATION_ABOVE = 4096
DEFAULT_TOL = 1e-7


@dataclass(frozen=True)
class DeterministicStrategySet:
    m: int
    q: int
    strategies: np.ndarray  # (q**m, m), lexicographic

    @property
    def size(self) -> int:
        return self.strategies.shape[0]

    def response(self, a: int, x: int, lam: int) -> int:
        return int(self.strategies[lam, x] == a)

    @property
    def matrix(self) -> np.ndarray:
        """``D[x*q + a, lambda]``."""
        mat = np.zeros((self.m * self.q, self.size))
        for x in range(self.m):
            mat[x * self.q + self.strategies[:, x], np.arange(self.size)] = 1.0
        return mat


_strategy_cache: dict[tuple[int, int], DeterministicStrategySet] = {}


def enumerate_strategies(m: int, q: int, limit: int = STRATEGY_LIMIT) -> DeterministicStrategySet:
    if m < 1 or q < 1:
        raise ValueError("need m >= 1 settings and q >= 1 outcomes")
    if q**m > limit:
        raise ValueError(f"q^m = {q}^{m} strategies exceeds the guard {limit}")
    key = (m, q)
    if key not in _strategy_cache:
        strat = np.array(list(itertools.product(range(q), repeat=m)), dtype=np.int64).reshape(-1, m)
        strat.setflags(write=False)
        _strategy_cache[key] = DeterministicStrategySet(m, q, strat)
    return _strategy_cache[key]


@dataclass(frozen=True)
class LhsModel:
    """Hidden states aligned with ``strategies``."""

    strategies: DeterministicStrategySet
    hidden_states: np.ndarray  # (q**m, d, d)

    def reproduce(self) -> np.ndarray:
        s = self.strategies
        flat = np.einsum("kl,lij->kij", s.matrix, self.hidden_states)
        return flat.reshape(s.m, s.q, *self.hidden_states.shape[1:])

    def residual(self, members) -> float:
        return float(np.max(np.abs(self.reproduce() - np.asarray(members))))

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(h)[0] for h in self.hidden_states))


@dataclass(frozen=True)
class SteeringInequality:
    """Operators ``F[x, a]`` with ``sum_{a,x} F_{a|x} D(a|x,lambda) >= 0`` for all strategies.

    Any assemblage with ``value(asm) < 0`` is steerable.
    """

    strategies: DeterministicStrategySet
    coefficients: np.ndarray  # (m, q, d, d)

    def strategy_operators(self) -> np.ndarray:
        s = self.strategies
        flat = self.coefficients.reshape(s.m * s.q, *self.coefficients.shape[2:])
        return np.einsum("kl,kij->lij", s.matrix, flat)

    @property
    def normalization(self) -> float:
        return float(np.trace(self.strategy_operators().sum(axis=0)).real)

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(z)[0] for z in self.strategy_operators()))

    def value(self, members) -> float:
        if isinstance(members, Assemblage):
            members = members.members
        return float(np.einsum("xaij,xaji->", self.coefficients, np.asarray(members)).real)


@dataclass
class SteerVerdict:
    steerable: bool
    status: str  # "steerable" | "unsteerable" | "boundary"
    mu: float
    tol: float
    model: LhsModel | None = None
    inequality: SteeringInequality | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def boundary(self) -> bool:
        return self.status == "boundary"


def classify(value: float, tol: float) -> str:
    if value < -tol:
        return "steerable"
    if value > tol:
        return "unsteerable"
    return "boundary"


# Problems are compiled once per shape and re-solved with new parameter
# values; the cache is per thread so no problem object is shared between
# concurrent solves.
_local = threading.local()


def _cached(key, build):
    cache = getattr(_local, "problems", None)
    if cache is None:
        cache = _local.problems = {}
    if key not in cache:
        cache[key] = build()
    return cache[key]


def _shape(members) -> tuple[int, int, int]:
    members = np.asarray(members)
    if members.ndim != 4 or members.shape[2] != members.shape[3]:
        raise DimensionError(f"expected operators of shape (m, q, d, d), got {members.shape}")
    return members.shape[0], members.shape[1], members.shape[2]


def _targets(members) -> np.ndarray:
    m, q, d = _shape(members)
    return conic.to_coords(np.asarray(members).reshape(m * q, d, d))


def _reproduces(strat: DeterministicStrategySet, x, target) -> list:
    """``sum_lambda D(a|x, lambda) x_lambda == target_{a|x}`` without redundant rows.

    For a no-signalling target the last outcome of every setting follows
    from the others and the common marginal; dropping those rows keeps the
    equality system full rank, which large programs need.
    """
    m, q = strat.m, strat.q
    rows = [k * q + a for k in range(m) for a in range(q - 1)]
    cons = [cp.sum(x, axis=0) == cp.sum(target[:q], axis=0)]
    if rows:
        cons.append(strat.matrix[rows] @ x == target[rows])
    return cons


def _feasibility_problem(m, q, d):
    def build():
        strat = enumerate_strategies(m, q)
        target = cp.Parameter((m * q, d * d))
        x = cp.Variable((strat.size, d * d))
        mu = cp.Variable()
        cons = [*_reproduces(strat, x, target), *conic.psd_rows(x, d, shift=mu)]
        return cp.Problem(cp.Maximize(mu), cons), target, x, mu

    return _cached(("feasibility", m, q, d), build)


def _dual_problem(m, q, d):
    def build():
        strat = enumerate_strategies(m, q)
        target = cp.Parameter((m * q, d * d))
        f = cp.Variable((m * q, d * d))
        z = strat.matrix.T @ f
        cons = [*conic.psd_rows(z, d), cp.sum(z @ conic.trace_weights(d)) == 1]
        return cp.Problem(cp.Minimize(cp.sum(cp.multiply(f, target))), cons), target, f

    return _cached(("dual", m, q, d), build)


def _weight_problem(m, q, d):
    def build():
        strat = enumerate_strategies(m, q)
        target = cp.Parameter((m * q, d * d))
        x = cp.Variable((strat.size, d * d))
        cons = [*conic.psd_rows(target - strat.matrix @ x, d), *conic.psd_rows(x, d)]
        obj = cp.Minimize(1 - cp.sum(x @ conic.trace_weights(d)))
        return cp.Problem(obj, cons), target, x

    return _cached(("weight", m, q, d), build)


def _robustness_problem(m, q, d):
    def build():
        strat = enumerate_strategies(m, q)
        target = cp.Parameter((m * q, d * d))
        x = cp.Variable((strat.size, d * d))
        cons = [*conic.psd_rows(strat.matrix @ x - target, d), *conic.psd_rows(x, d)]
        obj = cp.Minimize(cp.sum(x @ conic.trace_weights(d)) - 1)
        return cp.Problem(obj, cons), target, x

    return _cached(("robustness", m, q, d), build)


def _alpha_problem(m, q, d, alpha_max):
    def build():
        strat = enumerate_strategies(m, q)
        signal = cp.Parameter((m * q, d * d))
        noise = cp.Parameter((m * q, d * d))
        x = cp.Variable((strat.size, d * d))
        alpha = cp.Variable()
        cons = [*_reproduces(strat, x, noise + alpha * (signal - noise)), *conic.psd_rows(x, d)]
        if alpha_max is not None:
            cons.append(alpha <= alpha_max)
        return cp.Problem(cp.Maximize(alpha), cons), signal, noise, x, alpha

    return _cached(("alpha", m, q, d, alpha_max), build)


def _min_eigs(coords: np.ndarray, d: int) -> np.ndarray:
    if d == 1:
        return coords[:, 0]
    if d == 2:
        return (coords[:, 0] - np.linalg.norm(coords[:, 1:], axis=1)) / np.sqrt(2)
    return np.linalg.eigvalsh(conic.from_coords(coords))[:, 0]


def _comonotone_columns(strat: DeterministicStrategySet, probs: np.ndarray) -> list[int]:
    """Strategies of the comonotone coupling of the marginals ``probs[x, a]``.

    Mixing them reproduces every marginal, so restricted programs that start
    from these columns are feasible for the product assemblage.
    """
    cuts = np.unique(np.concatenate([[0.0], np.cumsum(probs, axis=1)[:, :-1].ravel(), [1.0]]))
    cum = np.cumsum(probs, axis=1)
    cols = set()
    for u in (cuts[:-1] + cuts[1:]) / 2:
        lam = [int(min(np.searchsorted(cum[x], u, side="right"), strat.q - 1)) for x in range(strat.m)]
        cols.add(int(np.ravel_multi_index(lam, (strat.q,) * strat.m)))
    return sorted(cols)


def _greedy_columns(strat: DeterministicStrategySet, members, samples: int = 256, seed: int = 0) -> list[int]:
    """Strategies ``lambda_v(x) = argmax_a <v|rho_{a|x}|v>`` for pure states ``v`` on Bob's space."""
    d = members.shape[-1]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((samples, d)) + 1j * rng.standard_normal((samples, d))
    scores = np.einsum("si,xaij,sj->sxa", v.conj(), members, v).real
    lam = np.concatenate([scores.argmax(axis=2), scores.argmin(axis=2)])
    return [int(i) for i in np.unique(np.ravel_multi_index(lam.T, (strat.q,) * strat.m))]


def _unit_columns(strat: DeterministicStrategySet) -> list[int]:
    """The constant strategy 0 and every strategy differing from it in one setting.

    Their indicator vectors span all of the marginal constraints, so together
    with ``mu I`` on every column the restricted margin program is feasible.
    """
    lam = np.zeros((1 + strat.m * (strat.q - 1), strat.m), dtype=int)
    r = 1
    for x in range(strat.m):
        for a in range(1, strat.q):
            lam[r, x] = a
            r += 1
    return [int(i) for i in np.ravel_multi_index(lam.T, (strat.q,) * strat.m)]


def _shift_closure(strat: DeterministicStrategySet, cols) -> list[int]:
    """Close a column set under ``lambda(x) -> lambda(x) + 1 mod q``.

    Each orbit reproduces the uniform marginals, so a common ``mu I`` on every
    strategy is always representable by the active columns.
    """
    lam = strat.strategies[sorted(cols)]
    orbit = [(lam + k) % strat.q for k in range(strat.q)]
    idx = np.ravel_multi_index(np.concatenate(orbit).T, (strat.q,) * strat.m)
    return sorted(set(int(i) for i in idx))


@dataclass
class _ColumnResult:
    value: float
    hidden: np.ndarray  # (q**m, d, d), zero outside the active columns
    certificate: np.ndarray  # dual operators F[x, a], normalized
    info: conic.SolveInfo
    columns: int
    rounds: int


def _column_generation(kind, m, q, d, target=None, signal=None, noise=None, alpha_max=None, solver=None):
    """Solve the margin (``kind="margin"``) or critical-alpha program by pricing strategies.

    A restricted program over a subset of strategies is solved; its equality
    multipliers define operators ``F`` and every strategy with
    ``sum_x F_{lambda(x)|x}`` not positive semidefinite enters the next
    round. The loop stops when the multipliers are dual feasible for all
    ``q**m`` strategies, at which point the restricted optimum is the full one.
    """
    strat = enumerate_strategies(m, q)
    full = strat.matrix
    base = target if kind == "margin" else noise
    probs = np.einsum("xaii->xa", base).real
    probs = probs / probs.sum(axis=1, keepdims=True)
    seeds = _comonotone_columns(strat, probs) + _unit_columns(strat)
    seeds += _greedy_columns(strat, target if kind == "margin" else signal)
    cols = _shift_closure(strat, seeds)
    t_coords = _targets(base)
    s_coords = None if kind == "margin" else _targets(signal)
    rows = [k * q + a for k in range(m) for a in range(q - 1)]
    eye = conic.to_coords(np.eye(d))
    total_seconds, rounds = 0.0, 0
    while True:
        rounds += 1
        x = cp.Variable((len(cols), d * d))
        sub = DeterministicStrategySet(m, q, strat.strategies[cols])
        t = cp.Variable()
        if kind == "margin":
            # sigma_lambda = mu I + tau_lambda, with tau = 0 off the active columns
            goal = t_coords - t * q ** (m - 1) * eye
        else:
            goal = t_coords + t * (s_coords - t_coords)
        eq = _reproduces(sub, x, goal)
        cons = [*eq, *conic.psd_rows(x, d)]
        if kind == "alpha" and alpha_max is not None:
            cons.append(t <= alpha_max)
        prob = cp.Problem(cp.Maximize(t), cons)
        info = conic.solve(prob, solver)
        total_seconds += info.seconds
        y = np.zeros((m * q, d * d))
        if rows:
            y[rows] = eq[1].dual_value
        y[:q] += eq[0].dual_value
        z_active = full[:, cols].T @ y
        sign = 1.0 if _min_eigs(z_active, d).min() >= _min_eigs(-z_active, d).min() else -1.0
        y *= sign
        norm = q ** (m - 1) * np.sqrt(d) * y.sum(axis=0)[0]
        if norm > 0:
            y /= norm
        eigs = _min_eigs(full.T @ y, d)
        violated = np.flatnonzero(eigs < -1e-9)
        violated = np.setdiff1d(violated, cols)
        if violated.size == 0 or rounds >= 200:
            break
        worst = violated[np.argsort(eigs[violated])[: max(8 * m, 32)]]
        cols = _shift_closure(strat, set(cols) | set(int(c) for c in worst))
    hidden = np.zeros((strat.size, d, d), dtype=complex)
    if kind == "margin":
        hidden += float(t.value) * np.eye(d)
    hidden[cols] += conic.from_coords(x.value)
    summary = conic.SolveInfo(info.solver, info.status, float(t.value), total_seconds)
    cert = conic.from_coords(y).reshape(m, q, d, d)
    return _ColumnResult(float(t.value), hidden, cert, summary, len(cols), rounds)


def _large(m: int, q: int) -> bool:
    return q**m > COLUMN_GENERATION_ABOVE


def decomposition_margin(members, solver: str | None = None):
    """Solve ``max mu`` s.t. ``members = sum D sigma_lambda``, ``sigma_lambda >= mu I``.

    Returns ``(mu, hidden_states, info)``.
    """
    m, q, d = _shape(members)
    if _large(m, q):
        r = _column_generation("margin", m, q, d, target=np.asarray(members), solver=solver)
        return r.value, r.hidden, r.info
    prob, target, x, mu = _feasibility_problem(m, q, d)
    target.value = _targets(members)
    info = conic.solve(prob, solver)
    return float(mu.value), conic.from_coords(x.value), info


def decomposition_dual(members, solver: str | None = None):
    """Solve the dual program; returns ``(F[x, a], value, info)``.

    Beyond :data:`COLUMN_GENERATION_ABOVE` strategies the operators are the
    final multipliers of the column-generation solve instead.
    """
    m, q, d = _shape(members)
    if _large(m, q):
        r = _column_generation("margin", m, q, d, target=np.asarray(members), solver=solver)
        value = float(np.einsum("xaij,xaji->", r.certificate, np.asarray(members)).real)
        return r.certificate, value, r.info
    prob, target, f = _dual_problem(m, q, d)
    target.value = _targets(members)
    info = conic.solve(prob, solver)
    coeffs = conic.from_coords(f.value).reshape(m, q, d, d)
    return coeffs, info.value, info


def _support(reduced, cutoff: float = 1e-10) -> np.ndarray | None:
    """Isometry onto the range of ``reduced``, or ``None`` when it has full rank."""
    w, v = np.linalg.eigh(reduced)
    keep = w > cutoff * max(1.0, float(w[-1]))
    if keep.all():
        return None
    return v[:, keep]


def lhs_feasibility(asm: Assemblage, tol: float = DEFAULT_TOL, solver: str | None = None) -> SteerVerdict:
    """Decide whether ``asm`` admits an LHS model.

    When the reduced state is rank deficient the problem is solved on its
    support, where every member lives.
    """
    members = np.asarray(asm.members)
    iso = _support(asm.reduced)
    if iso is not None:
        members = np.einsum("ip,xaij,jr->xapr", iso.conj(), members, iso)
    mu, hidden, info = decomposition_margin(members, solver)
    status = classify(mu, tol)
    strat = enumerate_strategies(asm.settings, asm.outcomes)
    lift = (lambda ops: ops) if iso is None else (lambda ops: iso @ ops @ iso.conj().T)
    verdict = SteerVerdict(
        steerable=status == "steerable",
        status=status,
        mu=mu,
        tol=tol,
        diagnostics={"primal": info.as_dict(), "support_rank": asm.dim if iso is None else iso.shape[1]},
    )
    if status != "steerable":
        verdict.model = LhsModel(strat, lift(hidden))
    if status != "unsteerable":
        coeffs, value, dual_info = decomposition_dual(members, solver)
        verdict.inequality = SteeringInequality(strat, lift(coeffs))
        verdict.diagnostics["dual"] = dual_info.as_dict()
    return verdict


def dual_inequality(asm: Assemblage, solver: str | None = None) -> SteeringInequality:
    """Optimal steering inequality for ``asm`` (minimizer of the dual program)."""
    members = np.asarray(asm.members)
    iso = _support(asm.reduced)
    if iso is not None:
        members = np.einsum("ip,xaij,jr->xapr", iso.conj(), members, iso)
    coeffs, _, _ = decomposition_dual(members, solver)
    if iso is not None:
        coeffs = iso @ coeffs @ iso.conj().T
    return SteeringInequality(enumerate_strategies(asm.settings, asm.outcomes), coeffs)


@dataclass
class WeightResult:
    weight: float
    model: LhsModel  # unnormalized hidden states of the LHS part
    lhs_part: np.ndarray  # sum_lambda D sigma_lambda
    steerable_part: np.ndarray | None  # (rho - lhs_part) / weight
    info: conic.SolveInfo


def steering_weight(asm: Assemblage, solver: str | None = None) -> WeightResult:
    m, q, d = asm.settings, asm.outcomes, asm.dim
    prob, target, x = _weight_problem(m, q, d)
    target.value = _targets(asm.members)
    info = conic.solve(prob, solver)
    strat = enumerate_strategies(m, q)
    model = LhsModel(strat, conic.from_coords(x.value))
    w = min(max(info.value, 0.0), 1.0)
    lhs_part = model.reproduce()
    steer = (asm.members - lhs_part) / info.value if info.value > 1e-12 else None
    return WeightResult(w, model, lhs_part, steer, info)


@dataclass
class RobustnessResult:
    robustness: float
    model: LhsModel  # hidden states of (rho + t gamma), unnormalized
    noise: np.ndarray | None  # gamma_{a|x}
    info: conic.SolveInfo


def steering_robustness(asm: Assemblage, solver: str | None = None) -> RobustnessResult:
    m, q, d = asm.settings, asm.outcomes, asm.dim
    prob, target, x = _robustness_problem(m, q, d)
    target.value = _targets(asm.members)
    info = conic.solve(prob, solver)
    strat = enumerate_strategies(m, q)
    model = LhsModel(strat, conic.from_coords(x.value))
    t = max(info.value, 0.0)
    noise = (model.reproduce() - asm.members) / info.value if info.value > 1e-12 else None
    return RobustnessResult(t, model, noise, info)


def alpha_family_members(rho, measurements: MeasurementSet, dims=None):
    """Assemblage of ``rho`` and of the noise ``I/d_A (x) rho_B`` for the same measurements."""
    rho = np.asarray(rho, dtype=complex)
    d_a = measurements.dim
    dims = dims or (d_a, rho.shape[0] // d_a)
    signal = assemblage_from_state(rho, measurements, dims).members
    rho_b = partial_trace(rho, dims, "A")
    weights = np.einsum("xaii->xa", measurements.effects).real / d_a
    noise = weights[:, :, None, None] * rho_b
    return np.asarray(signal), noise


def critical_alpha_result(
    rho,
    measurements: MeasurementSet,
    tol: float = 1e-4,
    method: str = "sdp",
    alpha_max: float | None = 1.0,
    dims=None,
    solver: str | None = None,
):
    """Largest ``alpha`` for which ``alpha rho + (1 - alpha) I/d_A (x) rho_B`` gives an unsteerable assemblage.

    Returns ``(alpha, diagnostics)``.
    """
    signal, noise = alpha_family_members(rho, measurements, dims)
    m, q, d = _shape(signal)
    if method == "sdp" and _large(m, q):
        try:
            r = _column_generation("alpha", m, q, d, signal=signal, noise=noise, alpha_max=alpha_max, solver=solver)
        except SolverError as exc:
            if exc.status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE) and alpha_max is None:
                return float("inf"), {"method": method, "status": exc.status}
            raise
        return r.value, {"method": "column-generation", "columns": r.columns, "rounds": r.rounds, **r.info.as_dict()}
    if method == "sdp":
        prob, p_sig, p_noise, x, alpha = _alpha_problem(m, q, d, alpha_max)
        p_sig.value = _targets(signal)
        p_noise.value = _targets(noise)
        try:
            info = conic.solve(prob, solver)
        except SolverError as exc:
            if exc.status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE) and alpha_max is None:
                return float("inf"), {"method": method, "status": exc.status}
            raise
        return float(alpha.value), {"method": method, **info.as_dict()}
    if method != "bisection":
        raise ValueError(f"unknown method {method!r}")
    if alpha_max is None:
        raise ValueError("bisection needs a finite alpha_max")

    def unsteerable(a: float) -> bool:
        mu, _, _ = decomposition_margin(noise + a * (signal - noise), solver)
        return mu >= -DEFAULT_TOL

    if unsteerable(alpha_max):
        return float(alpha_max), {"method": method, "iterations": 0}
    lo, hi, it = 0.0, float(alpha_max), 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if unsteerable(mid) else (lo, mid)
        it += 1
    return 0.5 * (lo + hi), {"method": method, "iterations": it, "tol": tol}


def critical_alpha(rho, measurements: MeasurementSet, tol: float = 1e-4, **kwargs) -> float:
    return critical_alpha_result(rho, measurements, tol, **kwargs)[0]
