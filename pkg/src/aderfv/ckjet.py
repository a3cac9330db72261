"""Cauchy-Kowalewskaya machinery: time derivatives from spatial jets.

Given the state and its spatial derivatives at one point, the balance law
dQ/dt = S(Q) - A(Q) dQ/dx determines all time (and mixed) derivatives. The
generic engine propagates a bivariate truncated power series in (x, t) layer
by layer: the t-degree-(k+1) coefficients are the t-degree-k coefficients of
S(Q) - A(Q) dQ/dx divided by k+1. Conservative systems may instead supply a
flux, in which case A(Q) dQ/dx is evaluated as the x-derivative of F(Q);
both forms agree to the truncation order.

Constant-coefficient linear systems register closed-form coefficient
matrices, used both as a fast path and as an independent cross-check.
"""
from __future__ import annotations

import math

import numpy as np

from .series import TruncatedSeries
from .systems import SystemDescriptor

__all__ = [
    "SpaceTimeJet",
    "ck_time_derivatives",
    "scalar_ck_closed_form",
    "predictor_residual",
    "residual_and_jacobian",
]

_FD_STEP = float(np.cbrt(np.finfo(float).eps))


def _lift(value, like: TruncatedSeries) -> TruncatedSeries:
    if isinstance(value, TruncatedSeries):
        return value
    return TruncatedSeries.constant(value, like)


def _rhs_terms(system: SystemDescriptor, comps: list[TruncatedSeries]) -> list[TruncatedSeries]:
    """S(Q) - A(Q) dQ/dx evaluated in truncated-series arithmetic."""
    like = comps[0]
    m = system.m
    if system.flux_terms is not None:
        flux = system.flux_terms(comps)
        rhs = [-_lift(f, like).x_derivative() for f in flux]
    else:
        rows = system.matrix_rows(comps)
        qx = [comp.x_derivative() for comp in comps]
        rhs = []
        for i in range(m):
            acc = -(rows[i][0] * qx[0])
            for j in range(1, m):
                acc = acc - rows[i][j] * qx[j]
            rhs.append(_lift(acc, like))
    if system.source_terms is not None:
        src = system.source_terms(comps)
        rhs = [rhs[i] + src[i] for i in range(m)]
    return rhs


class SpaceTimeJet:
    """Space-time Taylor coefficients c[j, k] of Q around one point.

    Seeded from the spatial derivative stack (c[j, 0] = D_j / j!) and filled
    upward in time degree using the balance law. ``coefficients`` has shape
    (..., m, order+1, order+1).
    """

    def __init__(self, system: SystemDescriptor, derivatives: np.ndarray, order: int):
        derivatives = np.asarray(derivatives, dtype=float)
        if derivatives.shape[-1] != system.m or derivatives.shape[-2] != order + 1:
            raise ValueError(
                f"derivative stack must be (..., {order + 1}, {system.m}), "
                f"got {derivatives.shape}"
            )
        self.system = system
        self.order = order
        n = order + 1
        batch = derivatives.shape[:-2]
        c = np.zeros(batch + (system.m, n, n))
        factorials = np.array([math.factorial(j) for j in range(n)])
        c[..., :, :, 0] = np.moveaxis(derivatives, -1, -2) / factorials
        self.coefficients = c
        self._fill()

    def _fill(self) -> None:
        c = self.coefficients
        m = self.system.m
        with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
            for k in range(self.order):
                comps = [TruncatedSeries(c[..., i, :, : k + 1]) for i in range(m)]
                rhs = _rhs_terms(self.system, comps)
                for i in range(m):
                    c[..., i, :, k + 1] = rhs[i].c[..., :, k] / (k + 1)
        if not np.all(np.isfinite(c)):
            raise FloatingPointError("non-finite space-time jet coefficients")

    def time_derivatives(self) -> np.ndarray:
        """Pure time derivatives d_t^k Q for k = 1..order, shape (..., order, m)."""
        out = np.empty(self.coefficients.shape[:-3] + (self.order, self.system.m))
        for k in range(1, self.order + 1):
            out[..., k - 1, :] = math.factorial(k) * self.coefficients[..., :, 0, k]
        return out


def ck_time_derivatives(
    system: SystemDescriptor, derivatives: np.ndarray, order: int, method: str = "auto"
) -> np.ndarray:
    """Time derivatives d_t^k Q, k = 1..order, from the spatial stack.

    ``derivatives`` holds (D_0, ..., D_order) along the second-to-last axis.
    ``method`` selects 'series' (generic engine), 'closed' (registered
    constant-coefficient matrices), or 'auto'.
    """
    derivatives = np.asarray(derivatives, dtype=float)
    if order == 0:
        return np.zeros(derivatives.shape[:-2] + (0, system.m))
    if method == "auto":
        method = "closed" if system.ck_matrices is not None else "series"
    if method == "closed":
        if system.ck_matrices is None:
            raise ValueError(f"system {system.name!r} has no closed-form CK matrices")
        mats = system.ck_matrices(order)  # (order, order+1, m, m)
        return np.einsum("kjab,...jb->...ka", mats, derivatives)
    if method == "series":
        return SpaceTimeJet(system, derivatives, order).time_derivatives()
    raise ValueError(f"unknown method {method!r}")


def scalar_ck_closed_form(lam: float, beta: float, derivatives, k: int):
    """d_t^k q for q_t + lam q_x = beta q: the binomial expansion of
    (beta - lam d_x)^k applied to the derivative stack."""
    derivatives = np.asarray(derivatives, dtype=float)
    total = 0.0
    for j in range(k + 1):
        total = total + math.comb(k, j) * (-lam) ** j * beta ** (k - j) * derivatives[..., j]
    return total


def _taylor_coefficients(tau: np.ndarray, order: int) -> np.ndarray:
    """Coefficients (-tau)^k / k! for k = 1..order, shape tau.shape + (order,)."""
    tau = np.asarray(tau, dtype=float)
    out = np.empty(tau.shape + (order,))
    term = np.ones_like(tau)
    for k in range(1, order + 1):
        term = term * (-tau) / k
        out[..., k - 1] = term
    return out


def predictor_residual(
    system: SystemDescriptor,
    d0: np.ndarray,
    d_rest: np.ndarray,
    tau: np.ndarray,
    w0: np.ndarray,
    method: str = "auto",
) -> np.ndarray:
    """Residual of the implicit Taylor state equation at elapsed time tau.

    H(D_0) = D_0 - w_0 + sum_{k=1}^{M} (-tau)^k / k! * G^(k)(D_0, D_1..D_k),
    where w_0 is the reconstructed state at tau = 0 and D_1..D_M are the
    current spatial derivatives (held frozen during the D_0 update).
    """
    d0 = np.asarray(d0, dtype=float)
    d_rest = np.asarray(d_rest, dtype=float)
    order = d_rest.shape[-2]
    stack = np.concatenate([d0[..., None, :], d_rest], axis=-2)
    g = ck_time_derivatives(system, stack, order, method=method)
    coef = _taylor_coefficients(tau, order)
    return d0 - w0 + np.einsum("...k,...km->...m", coef, g)


def residual_and_jacobian(
    system: SystemDescriptor,
    d0: np.ndarray,
    d_rest: np.ndarray,
    tau: np.ndarray,
    w0: np.ndarray,
    method: str = "auto",
) -> tuple[np.ndarray, np.ndarray]:
    """Residual H and its Jacobian with respect to D_0.

    With registered closed-form CK matrices the Jacobian is assembled exactly;
    otherwise it is formed by central finite differences with per-component
    step h_j = cbrt(machine eps) * (1 + |d0_j|). All perturbed evaluations are
    batched into a single engine call.
    """
    d0 = np.asarray(d0, dtype=float)
    d_rest = np.asarray(d_rest, dtype=float)
    tau = np.asarray(tau, dtype=float)
    w0 = np.asarray(w0, dtype=float)
    m = system.m
    order = d_rest.shape[-2]
    if order == 0:
        eye = np.broadcast_to(np.eye(m), d0.shape[:-1] + (m, m)).copy()
        return d0 - w0, eye

    if method == "auto":
        method = "closed" if system.ck_matrices is not None else "fd"

    if method == "closed":
        h = predictor_residual(system, d0, d_rest, tau, w0, method="closed")
        mats = system.ck_matrices(order)[:, 0]  # (order, m, m): D_0 blocks
        coef = _taylor_coefficients(tau, order)
        jac = np.eye(m) + np.einsum("...k,kab->...ab", coef, mats)
        return h, jac

    if method != "fd":
        raise ValueError(f"unknown method {method!r}")

    flat_batch = d0.shape[:-1]
    reps = 1 + 2 * m
    h = _FD_STEP * (1.0 + np.abs(d0))  # (..., m)
    d0_big = np.broadcast_to(d0, (reps,) + d0.shape).copy()
    for j in range(m):
        d0_big[1 + 2 * j, ..., j] += h[..., j]
        d0_big[2 + 2 * j, ..., j] -= h[..., j]
    rest_big = np.broadcast_to(d_rest, (reps,) + d_rest.shape)
    tau_big = np.broadcast_to(tau, (reps,) + tau.shape)
    w0_big = np.broadcast_to(w0, (reps,) + w0.shape)
    h_all = predictor_residual(system, d0_big, rest_big, tau_big, w0_big, method="series")
    residual = h_all[0]
    jac = np.empty(flat_batch + (m, m))
    for j in range(m):
        jac[..., :, j] = (h_all[1 + 2 * j] - h_all[2 + 2 * j]) / (2.0 * h[..., j])[..., None]
    return residual, jac
