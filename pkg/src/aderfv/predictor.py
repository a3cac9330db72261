"""Implicit-Taylor space-time predictor.

Within each cell the reconstruction polynomial is evolved to the quadrature
times of the update by solving, pointwise, the implicit Taylor system

  D_0 = w_0 - sum_{k=1}^{M} (-tau)^k / k! * G^(k)(D_0, D_1, ..., D_k)
  D_k = w_k + tau * (J_S(D_0) D_k - A(D_0) D_{k+1}),   k = 1..M-1
  D_M = w_M + tau * J_S(D_0) D_M

with w_k the reconstruction derivatives at tau = 0 and G^(k) the
Cauchy-Kowalewskaya time-derivative functionals. The derivative chain is a
linear back-substitution once D_0 is frozen; the state equation is advanced by
one Newton step per outer sweep. All points of a step (every cell, every
quadrature node) are solved together in batched array arithmetic; converged
points drop out of the iteration, so results do not depend on how the batch
is partitioned.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import weno
from .ckjet import predictor_residual, residual_and_jacobian
from .grid import QuadratureRule, RunConfig, gauss_legendre, gauss_lobatto
from .systems import SystemDescriptor

__all__ = [
    "PredictorError",
    "SpaceTimeRules",
    "space_time_rules",
    "DerivativeStack",
    "PredictorTable",
    "solve_derivative_chain",
    "solve_predictor_from_derivatives",
    "solve_predictor_point",
    "build_predictor_table",
    "build_predictor_tables",
]

# Refresh cadence for finite-difference Jacobians: a fresh Jacobian on the
# first sweep and every fourth sweep after; in between the stored one is
# reused (the outer fixed point converges linearly anyway).
_JACOBIAN_REFRESH = 4
_BACKTRACK_LIMIT = 5
# Newton steps larger than this fraction of the state scale must not increase
# the residual; smaller steps skip the descent check entirely.
_DESCENT_GATE = 0.05


class PredictorError(RuntimeError):
    """Predictor fixed point failed (non-convergence or inadmissible state)."""

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


def _lagrange_diff_matrix(nodes: np.ndarray) -> np.ndarray:
    """Derivative of the Lagrange interpolant through ``nodes``, at the nodes."""
    n = nodes.size
    if n == 1:
        return np.zeros((1, 1))
    bary = np.ones(n)
    for p in range(n):
        diff = nodes[p] - np.delete(nodes, p)
        bary[p] = 1.0 / np.prod(diff)
    d = np.zeros((n, n))
    for l in range(n):
        for p in range(n):
            if p != l:
                d[l, p] = (bary[p] / bary[l]) / (nodes[l] - nodes[p])
        d[l, l] = -np.sum(d[l])
    return d


def _basis_tensor(degree: int, nodes: np.ndarray) -> np.ndarray:
    """B[k, l, p] = d^k theta_p / d xi^k evaluated at nodes[l] (unit cell)."""
    out = np.empty((degree + 1, nodes.size, degree + 1))
    for k in range(degree + 1):
        for p in range(degree + 1):
            out[k, :, p] = weno.legendre_derivative(p, nodes, k)
    return out


@dataclass(frozen=True)
class SpaceTimeRules:
    """Quadrature rules and cached basis tensors for one scheme order."""

    degree: int
    xi_rule: QuadratureRule          # interior spatial nodes (volume integrals)
    tau_rule: QuadratureRule         # interior temporal nodes (volume integrals)
    trace_rule: QuadratureRule       # temporal nodes of the interface traces
    path_rule: QuadratureRule        # segment-path rule for two-state averages
    basis_interior: np.ndarray       # (M+1, n_xi, M+1)
    basis_trace: np.ndarray          # (M+1, 2, M+1) at xi = 0 and xi = 1
    diff_matrix: np.ndarray          # (n_xi, n_xi) unit-cell Lagrange derivative


@lru_cache(maxsize=None)
def space_time_rules(order: int) -> SpaceTimeRules:
    degree = order - 1
    xi_rule = gauss_legendre(degree + 1)
    tau_rule = gauss_legendre(degree + 1)
    trace_rule = gauss_lobatto(max(degree + 1, 2))
    return SpaceTimeRules(
        degree=degree,
        xi_rule=xi_rule,
        tau_rule=tau_rule,
        trace_rule=trace_rule,
        path_rule=gauss_legendre(3),
        basis_interior=_basis_tensor(degree, xi_rule.nodes),
        basis_trace=_basis_tensor(degree, np.array([0.0, 1.0])),
        diff_matrix=_lagrange_diff_matrix(xi_rule.nodes),
    )


@dataclass
class DerivativeStack:
    """State and spatial derivatives (D_0..D_M) at one space-time point."""

    derivatives: np.ndarray  # (M+1, m)
    iterations: int = 0

    @property
    def state(self) -> np.ndarray:
        return self.derivatives[0]


@dataclass
class PredictorTable:
    """Predictor evaluations of one cell (or a leading batch of cells).

    ``values`` holds Q at the interior tensor nodes (..., n_tau, n_xi, m);
    ``x_derivative`` is the spatial derivative of the Lagrange interpolant
    through the interior nodes, in physical units. The interface traces are
    stored at the trace-rule times.
    """

    dt: float
    dx: float
    xi_nodes: np.ndarray
    tau_nodes: np.ndarray
    values: np.ndarray
    x_derivative: np.ndarray
    trace_taus: np.ndarray
    trace_left: np.ndarray   # Q(xi=0, tau), shape (..., n_trace, m)
    trace_right: np.ndarray  # Q(xi=1, tau), shape (..., n_trace, m)
    iterations: int = 0


def solve_derivative_chain(
    system: SystemDescriptor,
    d0_frozen: np.ndarray,
    w_rest: np.ndarray,
    tau: np.ndarray,
    order: int,
) -> np.ndarray:
    """Back-substitute the linearized derivative equations for D_1..D_M.

    With J = source Jacobian and A = system matrix both evaluated at the
    frozen D_0, solve (I - tau J) D_M = w_M and then
    (I - tau J) D_k = w_k - tau A D_{k+1} for k = M-1..1.
    """
    d0_frozen = np.asarray(d0_frozen, dtype=float)
    w_rest = np.asarray(w_rest, dtype=float)
    tau = np.asarray(tau, dtype=float)
    m = system.m
    batch = d0_frozen.shape[:-1]
    out = np.empty(batch + (order, m))
    if order == 0:
        return out
    jac = system.source_jacobian(d0_frozen)
    amat = system.matrix(d0_frozen)
    lhs = np.eye(m) - tau[..., None, None] * jac
    try:
        out[..., order - 1, :] = np.linalg.solve(lhs, w_rest[..., order - 1, :, None])[..., 0]
        for k in range(order - 2, -1, -1):
            rhs = w_rest[..., k, :] - tau[..., None] * np.einsum(
                "...ab,...b->...a", amat, out[..., k + 1, :]
            )
            out[..., k, :] = np.linalg.solve(lhs, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise PredictorError(f"singular derivative chain (I - tau J): {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise PredictorError("non-finite derivative chain solution")
    return out


def _solve_point_batch(
    system: SystemDescriptor, w: np.ndarray, tau: np.ndarray, config: RunConfig
) -> tuple[np.ndarray, int]:
    """Nested fixed point for a flat batch of predictor points.

    ``w`` has shape (B, M+1, m) holding the reconstruction derivatives; ``tau``
    the elapsed physical times. Returns the full derivative stacks (B, M+1, m)
    and the largest sweep count used by any point.
    """
    w = np.asarray(w, dtype=float)
    tau = np.asarray(tau, dtype=float)
    nb, nderiv, m = w.shape
    order = nderiv - 1
    d0 = w[:, 0].copy()
    d_rest = w[:, 1:].copy()
    w0 = w[:, 0]
    w_rest = w[:, 1:]

    closed = system.ck_matrices is not None
    jac_store = np.empty((nb, m, m)) if not closed else None
    # Points whose last step was large sit outside the chord Jacobian's
    # validity (the source Jacobian can change sign across a reaction front),
    # so they get a fresh finite-difference Jacobian on the next sweep.
    stale = np.zeros(nb, dtype=bool)
    active = np.arange(nb)
    sweeps = 0

    while active.size:
        sweeps += 1
        if sweeps > config.fp_max_iter:
            raise PredictorError(
                "predictor fixed point did not converge",
                details={"points": active.copy(), "tau": tau[active].copy()},
            )
        d0_a = d0[active]
        tau_a = tau[active]
        w0_a = w0[active]
        rest_a = solve_derivative_chain(system, d0_a, w_rest[active], tau_a, order)

        if closed:
            h, jac = residual_and_jacobian(
                system, d0_a, rest_a, tau_a, w0_a, method="closed"
            )
        elif (sweeps - 1) % _JACOBIAN_REFRESH == 0:
            h, jac = residual_and_jacobian(
                system, d0_a, rest_a, tau_a, w0_a, method="fd"
            )
            jac_store[active] = jac
        else:
            h = predictor_residual(system, d0_a, rest_a, tau_a, w0_a, method="series")
            refresh = stale[active]
            if np.any(refresh):
                _, jac_sub = residual_and_jacobian(
                    system,
                    d0_a[refresh],
                    rest_a[refresh],
                    tau_a[refresh],
                    w0_a[refresh],
                    method="fd",
                )
                jac_store[active[refresh]] = jac_sub
            jac = jac_store[active]

        try:
            delta = np.linalg.solve(jac, h[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise PredictorError(f"singular predictor Jacobian: {exc}") from exc
        d0_new = d0_a - delta
        if system.admissible is not None:
            for _ in range(_BACKTRACK_LIMIT):
                bad = ~system.admissible(d0_new)
                if not np.any(bad):
                    break
                delta = np.where(bad[:, None], 0.5 * delta, delta)
                d0_new = d0_a - delta
            else:
                bad = ~system.admissible(d0_new)
                if np.any(bad):
                    raise PredictorError(
                        "inadmissible predictor state after step halving",
                        details={"points": active[bad], "states": d0_new[bad]},
                    )
        if not np.all(np.isfinite(d0_new)):
            raise PredictorError("non-finite predictor iterate")

        # Descent safeguard: a large Newton step must not increase the
        # residual, or the iteration can bounce between basins of a
        # non-monotone source (e.g. at a reaction front whose state sits near
        # an unstable equilibrium). Halve offending steps a bounded number of
        # times; small steps are in the locally convergent regime and skip
        # the extra residual evaluation.
        big = np.flatnonzero(
            np.max(np.abs(delta), axis=-1)
            > _DESCENT_GATE * (1.0 + np.max(np.abs(d0_a), axis=-1))
        )
        if big.size:
            h_ref = np.max(np.abs(h[big]), axis=-1)
            res_method = "closed" if closed else "series"
            for _ in range(_BACKTRACK_LIMIT):
                h_try = predictor_residual(
                    system, d0_new[big], rest_a[big], tau_a[big], w0_a[big],
                    method=res_method,
                )
                h_try = np.max(np.abs(h_try), axis=-1)
                worse = ~np.isfinite(h_try) | (h_try > h_ref)
                if system.admissible is not None:
                    worse |= ~system.admissible(d0_new[big])
                if not np.any(worse):
                    break
                sub = big[worse]
                delta[sub] *= 0.5
                d0_new[sub] = d0_a[sub] - delta[sub]

        step = np.max(np.abs(d0_new - d0_a), axis=-1)
        scale = 1.0 + np.max(np.abs(d0_new), axis=-1)
        done = step <= config.fp_tol * scale

        stale[active] = step > _DESCENT_GATE * scale
        d0[active] = d0_new
        d_rest[active] = rest_a
        active = active[~done]

    return np.concatenate([d0[:, None, :], d_rest], axis=1), sweeps


def solve_predictor_from_derivatives(
    system: SystemDescriptor, w: np.ndarray, tau: float, config: RunConfig
) -> DerivativeStack:
    """Predictor point solve seeded directly with a derivative stack w (M+1, m)."""
    w = np.asarray(w, dtype=float)
    stacks, sweeps = _solve_point_batch(system, w[None], np.array([float(tau)]), config)
    order = w.shape[0] - 1
    final = stacks[0]
    # Re-solve the chain at the converged state so the stack is self-consistent.
    if order > 0:
        final = final.copy()
        final[1:] = solve_derivative_chain(
            system, final[0][None], w[None, 1:], np.array([float(tau)]), order
        )[0]
    return DerivativeStack(final, sweeps)


def solve_predictor_point(
    system: SystemDescriptor,
    poly: weno.ReconstructionPolynomial,
    xi: float,
    tau: float,
    config: RunConfig,
) -> DerivativeStack:
    """Solve the implicit Taylor system at unit-cell position xi, elapsed tau."""
    degree = poly.degree
    w = np.stack([weno.eval_derivative(poly, xi, k) for k in range(degree + 1)])
    return solve_predictor_from_derivatives(system, w, tau, config)


def _node_derivatives(coeffs: np.ndarray, basis: np.ndarray, dx: float) -> np.ndarray:
    """Reconstruction derivatives at basis nodes: (C, n_nodes, M+1, m), physical."""
    w = np.einsum("cmp,klp->clkm", coeffs, basis)
    scale = dx ** -np.arange(basis.shape[0])
    return w * scale[None, None, :, None]


def _build_tables_chunk(
    system: SystemDescriptor,
    coeffs: np.ndarray,
    dt: float,
    dx: float,
    config: RunConfig,
    rules: SpaceTimeRules,
) -> PredictorTable:
    ncells = coeffs.shape[0]
    m = system.m
    n_xi = rules.xi_rule.n
    n_tau = rules.tau_rule.n
    n_tr = rules.trace_rule.n

    w_int = _node_derivatives(coeffs, rules.basis_interior, dx)  # (C, n_xi, M+1, m)
    w_tr = _node_derivatives(coeffs, rules.basis_trace, dx)      # (C, 2, M+1, m)

    # Flat point batch: interior tensor nodes first, then the traces.
    w_int_b = np.repeat(w_int[:, None], n_tau, axis=1).reshape(ncells * n_tau * n_xi, -1, m)
    tau_int = np.tile(np.repeat(rules.tau_rule.nodes, n_xi), ncells) * dt
    w_tr_b = np.repeat(w_tr[:, None], n_tr, axis=1).reshape(ncells * n_tr * 2, -1, m)
    tau_tr = np.tile(np.repeat(rules.trace_rule.nodes, 2), ncells) * dt

    w_all = np.concatenate([w_int_b, w_tr_b])
    tau_all = np.concatenate([tau_int, tau_tr])
    stacks, sweeps = _solve_point_batch(system, w_all, tau_all, config)
    states = stacks[:, 0]

    split = ncells * n_tau * n_xi
    values = states[:split].reshape(ncells, n_tau, n_xi, m)
    traces = states[split:].reshape(ncells, n_tr, 2, m)
    x_deriv = np.einsum("lp,ctpm->ctlm", rules.diff_matrix, values) / dx

    return PredictorTable(
        dt=dt,
        dx=dx,
        xi_nodes=rules.xi_rule.nodes,
        tau_nodes=rules.tau_rule.nodes,
        values=values,
        x_derivative=x_deriv,
        trace_taus=rules.trace_rule.nodes,
        trace_left=traces[:, :, 0, :],
        trace_right=traces[:, :, 1, :],
        iterations=sweeps,
    )


def build_predictor_tables(
    system: SystemDescriptor,
    coeffs: np.ndarray,
    dt: float,
    dx: float,
    config: RunConfig,
    threads: int = 1,
) -> PredictorTable:
    """Predictor tables for a batch of cells given reconstruction coefficients.

    ``coeffs`` has shape (cells, m, M+1). With ``threads > 1`` the cell batch
    is split into contiguous chunks solved concurrently; chunking does not
    change any result because every point iterates to its own tolerance.
    """
    rules = space_time_rules(config.order)
    ncells = coeffs.shape[0]
    if threads <= 1 or ncells < 2 * threads:
        return _build_tables_chunk(system, coeffs, dt, dx, config, rules)
    bounds = np.linspace(0, ncells, threads + 1).astype(int)
    chunks = [(coeffs[a:b],) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(
            pool.map(
                lambda args: _build_tables_chunk(system, args[0], dt, dx, config, rules),
                chunks,
            )
        )
    first = parts[0]
    return PredictorTable(
        dt=dt,
        dx=dx,
        xi_nodes=first.xi_nodes,
        tau_nodes=first.tau_nodes,
        values=np.concatenate([p.values for p in parts]),
        x_derivative=np.concatenate([p.x_derivative for p in parts]),
        trace_taus=first.trace_taus,
        trace_left=np.concatenate([p.trace_left for p in parts]),
        trace_right=np.concatenate([p.trace_right for p in parts]),
        iterations=max(p.iterations for p in parts),
    )


def build_predictor_table(
    system: SystemDescriptor,
    poly: weno.ReconstructionPolynomial,
    dt: float,
    config: RunConfig,
) -> PredictorTable:
    """Predictor table of a single cell from its reconstruction polynomial."""
    batch = build_predictor_tables(system, poly.coefficients[None], dt, poly.dx, config)
    return PredictorTable(
        dt=batch.dt,
        dx=batch.dx,
        xi_nodes=batch.xi_nodes,
        tau_nodes=batch.tau_nodes,
        values=batch.values[0],
        x_derivative=batch.x_derivative[0],
        trace_taus=batch.trace_taus,
        trace_left=batch.trace_left[0],
        trace_right=batch.trace_right[0],
        iterations=batch.iterations,
    )
