"""Descriptors for the hyperbolic balance-law systems solved by the package.

Each system is described by its quasi-linear matrix A(Q), algebraic source
S(Q), source Jacobian, eigenvalues, and (for the manufactured tests) exact
solutions. Every scalar formula is also exposed in a "generic" form written
purely with arithmetic operators so the Cauchy-Kowalewskaya engine can
evaluate it over truncated power series as well as over floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SystemDescriptor",
    "scalar_advection_reaction",
    "leveque_yee",
    "linear_system",
    "noncons_system",
    "euler_ideal_gas",
    "primitive_to_conserved",
    "conserved_to_primitive",
    "linear_ck_matrices",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SystemDescriptor:
    """Bundle of callables defining one balance law dQ/dt + A(Q) dQ/dx = S(Q).

    Vectorized callables map state arrays of shape (..., m); the generic
    callables take a sequence of m scalar-like components (floats or truncated
    series) and return nested lists of scalar-likes.
    """

    name: str
    m: int
    matrix: Callable[[np.ndarray], np.ndarray]
    source: Callable[[np.ndarray], np.ndarray]
    source_jacobian: Callable[[np.ndarray], np.ndarray]
    eigenvalues: Callable[[np.ndarray], np.ndarray]
    initial_condition: Callable[[np.ndarray], np.ndarray]
    matrix_rows: Callable[[Sequence], list]
    source_terms: Callable[[Sequence], list] | None = None
    flux_terms: Callable[[Sequence], list] | None = None
    exact_solution: Callable[[np.ndarray, float], np.ndarray] | None = None
    admissible: Callable[[np.ndarray], np.ndarray] | None = None
    source_free: bool = False
    ck_matrices: Callable[[int], np.ndarray] | None = None

    def max_wave_speed(self, states: np.ndarray) -> float:
        return float(np.max(np.abs(self.eigenvalues(states))))


def _batch_eye(states: np.ndarray, m: int) -> np.ndarray:
    out = np.zeros(states.shape[:-1] + (m, m))
    for i in range(m):
        out[..., i, i] = 1.0
    return out


def linear_ck_matrices(a: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """Coefficient matrices C[k, j] with d_t^{k+1} Q = sum_j C[k, j] @ (d_x^j Q).

    Valid for constant-coefficient linear systems dQ/dt = B Q - A dQ/dx: apply
    the operator (B - A d_x) repeatedly, so C'_{k+1,j} = C'_{k,j} B - C'_{k,j-1} A
    with C'_{0,0} = I. Rows are returned for k = 1..order.
    """
    m = a.shape[0]
    prev = np.zeros((order + 1, m, m))
    prev[0] = np.eye(m)
    rows = []
    for _ in range(order):
        nxt = np.zeros_like(prev)
        for j in range(order + 1):
            nxt[j] = prev[j] @ b
            if j > 0:
                nxt[j] -= prev[j - 1] @ a
        rows.append(nxt.copy())
        prev = nxt
    return np.array(rows)  # (order, order+1, m, m)


# ---------------------------------------------------------------------------
# Scalar advection-reaction: q_t + lam q_x = beta q
# ---------------------------------------------------------------------------

def scalar_advection_reaction(lam: float = 1.0, beta: float = -1.0) -> SystemDescriptor:
    lam = float(lam)
    beta = float(beta)

    def matrix(q):
        q = np.asarray(q)
        return np.full(q.shape[:-1] + (1, 1), lam)

    def source(q):
        return beta * np.asarray(q)

    def source_jacobian(q):
        q = np.asarray(q)
        return np.full(q.shape[:-1] + (1, 1), beta)

    def eigenvalues(q):
        q = np.asarray(q)
        return np.full(q.shape[:-1] + (1,), lam)

    def initial_condition(x):
        x = np.asarray(x)
        return np.sin(TWO_PI * x)[..., None]

    def exact_solution(x, t):
        x = np.asarray(x)
        return (math.exp(beta * t) * np.sin(TWO_PI * (x - lam * t)))[..., None]

    def matrix_rows(q):
        return [[lam]]

    def source_terms(q):
        return [beta * q[0]]

    def flux_terms(q):
        return [lam * q[0]]

    def ck(order):
        return linear_ck_matrices(np.array([[lam]]), np.array([[beta]]), order)

    return SystemDescriptor(
        name="scalar-advection-reaction",
        m=1,
        matrix=matrix,
        source=source,
        source_jacobian=source_jacobian,
        eigenvalues=eigenvalues,
        initial_condition=initial_condition,
        matrix_rows=matrix_rows,
        source_terms=source_terms,
        flux_terms=flux_terms,
        exact_solution=exact_solution,
        ck_matrices=ck,
    )


# ---------------------------------------------------------------------------
# Stiff bistable reaction with unit advection:
#   q_t + q_x = beta q (q - 1) (q - 1/2),   beta << 0
# q = 0 and q = 1 are the stable states; a step profile propagates at speed 1.
# ---------------------------------------------------------------------------

def leveque_yee(beta: float = -1000.0, step_position: float = 0.3) -> SystemDescriptor:
    beta = float(beta)
    x0 = float(step_position)

    def matrix(q):
        q = np.asarray(q)
        return np.ones(q.shape[:-1] + (1, 1))

    def source(q):
        q = np.asarray(q)
        return beta * q * (q - 1.0) * (q - 0.5)

    def source_jacobian(q):
        q = np.asarray(q)
        jac = beta * (3.0 * q**2 - 3.0 * q + 0.5)
        return jac[..., None]

    def eigenvalues(q):
        q = np.asarray(q)
        return np.ones(q.shape[:-1] + (1,))

    def initial_condition(x):
        x = np.asarray(x)
        return np.where(x < x0, 1.0, 0.0)[..., None]

    def matrix_rows(q):
        return [[1.0]]

    def source_terms(q):
        return [beta * q[0] * (q[0] - 1.0) * (q[0] - 0.5)]

    def flux_terms(q):
        return [q[0]]

    return SystemDescriptor(
        name="stiff-bistable-advection",
        m=1,
        matrix=matrix,
        source=source,
        source_jacobian=source_jacobian,
        eigenvalues=eigenvalues,
        initial_condition=initial_condition,
        matrix_rows=matrix_rows,
        source_terms=source_terms,
        flux_terms=flux_terms,
    )


# ---------------------------------------------------------------------------
# Constant-coefficient 2x2 linear system with relaxation source:
#   Q_t + [[0, lam], [lam, 0]] Q_x = beta Q
# ---------------------------------------------------------------------------

def linear_system(lam: float = 1.0, beta: float = -1.0) -> SystemDescriptor:
    lam = float(lam)
    beta = float(beta)
    amat = np.array([[0.0, lam], [lam, 0.0]])

    def matrix(q):
        q = np.asarray(q)
        return np.broadcast_to(amat, q.shape[:-1] + (2, 2)).copy()

    def source(q):
        return beta * np.asarray(q)

    def source_jacobian(q):
        q = np.asarray(q)
        return beta * _batch_eye(q, 2)

    def eigenvalues(q):
        q = np.asarray(q)
        out = np.empty(q.shape[:-1] + (2,))
        out[..., 0] = -lam
        out[..., 1] = lam
        return out

    def initial_condition(x):
        x = np.asarray(x)
        return np.stack([np.sin(TWO_PI * x), np.cos(TWO_PI * x)], axis=-1)

    def exact_solution(x, t):
        x = np.asarray(x)
        phi = np.sin(TWO_PI * (x - lam * t)) + np.cos(TWO_PI * (x - lam * t))
        psi = np.sin(TWO_PI * (x + lam * t)) - np.cos(TWO_PI * (x + lam * t))
        amp = 0.5 * math.exp(beta * t)
        return np.stack([amp * (phi + psi), amp * (phi - psi)], axis=-1)

    def matrix_rows(q):
        return [[0.0, lam], [lam, 0.0]]

    def source_terms(q):
        return [beta * q[0], beta * q[1]]

    def flux_terms(q):
        return [lam * q[1], lam * q[0]]

    def ck(order):
        return linear_ck_matrices(amat, beta * np.eye(2), order)

    return SystemDescriptor(
        name="linear-2x2",
        m=2,
        matrix=matrix,
        source=source,
        source_jacobian=source_jacobian,
        eigenvalues=eigenvalues,
        initial_condition=initial_condition,
        matrix_rows=matrix_rows,
        source_terms=source_terms,
        flux_terms=flux_terms,
        exact_solution=exact_solution,
        ck_matrices=ck,
    )


# ---------------------------------------------------------------------------
# Genuinely non-conservative 2x2 system:
#   Q = (u, v),  A(Q) = [[lam, u], [1, lam]],
#   S(Q) = (2 pi u (u - 1), -2 pi (v - 1)),
# with the travelling-wave exact solution
#   u = 1 + eps cos(2 pi (x - lam t)),  v = 1 + eps sin(2 pi (x - lam t)).
# Eigenvalues lam +- sqrt(u) require u > 0.
# ---------------------------------------------------------------------------

def noncons_system(lam: float = 1.0, eps: float = 0.02) -> SystemDescriptor:
    lam = float(lam)
    eps = float(eps)

    def matrix(q):
        q = np.asarray(q)
        out = np.empty(q.shape[:-1] + (2, 2))
        out[..., 0, 0] = lam
        out[..., 0, 1] = q[..., 0]
        out[..., 1, 0] = 1.0
        out[..., 1, 1] = lam
        return out

    def source(q):
        q = np.asarray(q)
        return np.stack(
            [TWO_PI * q[..., 0] * (q[..., 0] - 1.0), -TWO_PI * (q[..., 1] - 1.0)],
            axis=-1,
        )

    def source_jacobian(q):
        q = np.asarray(q)
        out = np.zeros(q.shape[:-1] + (2, 2))
        out[..., 0, 0] = TWO_PI * (2.0 * q[..., 0] - 1.0)
        out[..., 1, 1] = -TWO_PI
        return out

    def eigenvalues(q):
        q = np.asarray(q)
        root = np.sqrt(q[..., 0])
        return np.stack([lam - root, lam + root], axis=-1)

    def initial_condition(x):
        x = np.asarray(x)
        return np.stack(
            [1.0 + eps * np.cos(TWO_PI * x), 1.0 + eps * np.sin(TWO_PI * x)], axis=-1
        )

    def exact_solution(x, t):
        x = np.asarray(x)
        phase = TWO_PI * (x - lam * t)
        return np.stack([1.0 + eps * np.cos(phase), 1.0 + eps * np.sin(phase)], axis=-1)

    def matrix_rows(q):
        return [[lam, q[0]], [1.0, lam]]

    def source_terms(q):
        return [TWO_PI * q[0] * (q[0] - 1.0), -TWO_PI * (q[1] - 1.0)]

    def admissible(q):
        return np.asarray(q)[..., 0] > 0.0

    return SystemDescriptor(
        name="noncons-2x2",
        m=2,
        matrix=matrix,
        source=source,
        source_jacobian=source_jacobian,
        eigenvalues=eigenvalues,
        initial_condition=initial_condition,
        matrix_rows=matrix_rows,
        source_terms=source_terms,
        exact_solution=exact_solution,
        admissible=admissible,
    )


# ---------------------------------------------------------------------------
# 1-D compressible Euler equations, ideal gas, conserved variables
# Q = (rho, rho u, E) with p = (gamma - 1)(E - rho u^2 / 2).
# ---------------------------------------------------------------------------

def primitive_to_conserved(rho, u, p, gamma: float = 1.4) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    p = np.asarray(p, dtype=float)
    energy = p / (gamma - 1.0) + 0.5 * rho * u**2
    return np.stack(np.broadcast_arrays(rho, rho * u, energy), axis=-1)


def conserved_to_primitive(q: np.ndarray, gamma: float = 1.4) -> np.ndarray:
    q = np.asarray(q)
    rho = q[..., 0]
    u = q[..., 1] / rho
    p = (gamma - 1.0) * (q[..., 2] - 0.5 * rho * u**2)
    return np.stack([rho, u, p], axis=-1)


def euler_ideal_gas(gamma: float = 1.4) -> SystemDescriptor:
    gamma = float(gamma)
    gm1 = gamma - 1.0

    def matrix(q):
        q = np.asarray(q)
        u = q[..., 1] / q[..., 0]
        e_over_rho = q[..., 2] / q[..., 0]
        out = np.zeros(q.shape[:-1] + (3, 3))
        out[..., 0, 1] = 1.0
        out[..., 1, 0] = 0.5 * (gamma - 3.0) * u**2
        out[..., 1, 1] = (3.0 - gamma) * u
        out[..., 1, 2] = gm1
        out[..., 2, 0] = gm1 * u**3 - gamma * u * e_over_rho
        out[..., 2, 1] = gamma * e_over_rho - 1.5 * gm1 * u**2
        out[..., 2, 2] = gamma * u
        return out

    def source(q):
        q = np.asarray(q)
        return np.zeros_like(q)

    def source_jacobian(q):
        q = np.asarray(q)
        return np.zeros(q.shape[:-1] + (3, 3))

    def eigenvalues(q):
        prim = conserved_to_primitive(q, gamma)
        sound = np.sqrt(gamma * prim[..., 2] / prim[..., 0])
        u = prim[..., 1]
        return np.stack([u - sound, u, u + sound], axis=-1)

    def initial_condition(x):
        x = np.asarray(x)
        return primitive_to_conserved(1.0 + 0.2 * np.sin(TWO_PI * x), 1.0, 2.0, gamma)

    def exact_solution(x, t):
        # Advected density wave in a uniform (u, p) = (1, 2) background.
        x = np.asarray(x)
        return primitive_to_conserved(1.0 + 0.2 * np.sin(TWO_PI * (x - t)), 1.0, 2.0, gamma)

    def matrix_rows(q):
        u = q[1] / q[0]
        e_over_rho = q[2] / q[0]
        u2 = u * u
        return [
            [0.0, 1.0, 0.0],
            [0.5 * (gamma - 3.0) * u2, (3.0 - gamma) * u, gm1],
            [gm1 * u * u2 - gamma * u * e_over_rho,
             gamma * e_over_rho - 1.5 * gm1 * u2,
             gamma * u],
        ]

    def flux_terms(q):
        u = q[1] / q[0]
        momentum = q[1] * u
        p = gm1 * (q[2] - 0.5 * momentum)
        return [q[1], momentum + p, u * (q[2] + p)]

    def admissible(q):
        q = np.asarray(q)
        prim = conserved_to_primitive(q, gamma)
        return (prim[..., 0] > 0.0) & (prim[..., 2] > 0.0)

    return SystemDescriptor(
        name="euler-ideal-gas",
        m=3,
        matrix=matrix,
        source=source,
        source_jacobian=source_jacobian,
        eigenvalues=eigenvalues,
        initial_condition=initial_condition,
        matrix_rows=matrix_rows,
        source_terms=None,
        flux_terms=flux_terms,
        exact_solution=exact_solution,
        admissible=admissible,
        source_free=True,
    )
