"""Linear (von Neumann) stability analysis of the fully discrete scheme.

The model problem is scalar advection-reaction q_t + lam q_x = beta q on a
uniform grid, reduced to the two dimensionless parameters

  c = lam dt / dx   (Courant number),   r = beta dt   (stiffness number).

A single Fourier mode with phase angle theta is pushed through one full step
of the scheme: reconstruction (a fixed blend of the three candidate stencils),
space-time predictor (explicit Taylor or the implicit variant), trace-rule
time averaging of the centred alpha-split flux, and the tensor-rule source
average. The amplification factor is

  A(theta) = 1 - c (fhat_+ - fhat_-) + r shat,
  fhat = (qL + qR)/2 - (alpha c + 1/(alpha c))/4 (qR - qL),

with neighbour values obtained from the mode by phase shifts e^{+-i theta}.
Because the nonlinear stencil weights depend on the data, each map point is
judged over an ensemble of random weight scenarios; the reported number is
the fraction of scenarios whose amplification stays below one for every
sampled angle.

Two scenario models are available. The default ("weno-law") feeds randomized
order-one smoothness indicators through the reconstruction's own weight
formula, which is the weight spread the blended scheme actually produces on
resolvable data: the large central preference pins every draw within about
1e-4 of the central stencil. The alternative ("uniform") draws unconstrained
convex triples; it answers a different, far more pessimistic question - what
if every cell permanently used the same arbitrary blend - and for orders >= 3
it reports instability at all Courant numbers, because a frozen one-sided
high-degree extrapolation of an oscillatory mode amplifies more than the
centred flux dissipates. That regime never occurs globally in practice (the
weight law only leaves the central stencil at isolated fronts), so the
uniform model is kept for reference rather than as the default verdict.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .predictor import space_time_rules
from .weno import nonlinear_weights, window_candidate_matrix

__all__ = [
    "StabilityQuery",
    "DEFAULT_C_GRID",
    "DEFAULT_R_GRID",
    "theta_grid",
    "blend_matrix",
    "amplitude",
    "max_amplitude",
    "stability_fraction",
    "stability_map",
    "write_raster_csv",
]

DEFAULT_C_GRID = np.round(np.arange(1, 121) * 0.01, 10)        # 0.01 .. 1.20
DEFAULT_R_GRID = np.round(np.linspace(-10.0, 0.0, 101), 10)    # -10.0 .. 0.0


@dataclass(frozen=True)
class StabilityQuery:
    """Scheme variant and sampling resolution for the stability analysis."""

    order: int
    predictor: str = "implicit"  # "implicit" or "explicit"
    alpha: float = 1.0
    n_theta: int = 128
    n_scenarios: int = 100
    tol: float = 1e-12
    seed: int = 0
    weight_model: str = "weno-law"  # "weno-law" or "uniform"

    def __post_init__(self) -> None:
        if self.predictor not in ("implicit", "explicit"):
            raise ValueError(f"unknown predictor kind {self.predictor!r}")
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.weight_model not in ("weno-law", "uniform"):
            raise ValueError(f"unknown weight model {self.weight_model!r}")


def theta_grid(n: int) -> np.ndarray:
    """Equispaced phase angles covering [0, 2 pi), including pi for even n."""
    return np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)


def blend_matrix(degree: int, weights) -> np.ndarray:
    """Window-to-coefficients operator of a fixed (left, central, right) blend."""
    w = np.asarray(weights, dtype=float)
    stack = np.stack(
        [window_candidate_matrix(degree, kind) for kind in ("left", "central", "right")]
    )
    return np.einsum("s,slw->lw", w, stack)


def _predict(
    w_stack: np.ndarray, taus: np.ndarray, c: float, r: float, predictor: str
) -> np.ndarray:
    """Predictor values q(tau) from reconstruction derivatives at fixed positions.

    ``w_stack`` has shape (M+1, X, K): unit-cell derivative order, position,
    mode column. Returns (T, X, K) for the T requested times.
    """
    order = w_stack.shape[0] - 1
    taus = np.asarray(taus, dtype=float)
    t_shape = (taus.size, 1, 1)
    tcol = taus.reshape(t_shape)

    if predictor == "explicit":
        q = np.broadcast_to(w_stack[0], (taus.size,) + w_stack.shape[1:]).astype(complex).copy()
        for k in range(1, order + 1):
            fk = tcol**k / math.factorial(k)
            for j in range(0, min(k, order) + 1):
                q += fk * (math.comb(k, j) * (-c) ** j * r ** (k - j)) * w_stack[j]
        return q

    # Implicit: back-substituted derivative chain, then the scalar state solve.
    denom = 1.0 - tcol * r
    deriv = [None] * (order + 1)
    for j in range(order, 0, -1):
        upper = 0.0 if j == order else tcol * c * deriv[j + 1]
        deriv[j] = (w_stack[j] - upper) / denom
    t_poly = np.zeros(t_shape)
    rhs = np.broadcast_to(w_stack[0], (taus.size,) + w_stack.shape[1:]).astype(complex).copy()
    for k in range(0, order + 1):
        coef = (-tcol) ** k / math.factorial(k)
        t_poly = t_poly + coef * r**k
        for j in range(1, min(k, order) + 1):
            rhs -= coef * (math.comb(k, j) * (-c) ** j * r ** (k - j)) * deriv[j]
    return rhs / t_poly


def amplitude(
    theta: np.ndarray,
    c: float,
    r: float,
    query: StabilityQuery,
    blends: np.ndarray | None = None,
) -> np.ndarray:
    """Amplification factor of one step for each angle and weight scenario.

    ``blends`` holds reconstruction operators of shape (S, M+1, 2M+1); by
    default the single central-stencil operator is used. Returns a complex
    array of shape (S, n_theta) (squeezed to (n_theta,) when blends is None).
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    degree = query.order - 1
    squeeze = blends is None
    if blends is None:
        blends = window_candidate_matrix(degree, "central")[None]
    blends = np.asarray(blends, dtype=float)
    n_s = blends.shape[0]

    offsets = np.arange(-degree, degree + 1)
    phases = np.exp(1j * np.outer(offsets, theta))            # (2M+1, n_theta)
    beta = np.einsum("slw,wn->lsn", blends, phases)
    beta = beta.reshape(degree + 1, n_s * theta.size)         # (M+1, K)

    rules = space_time_rules(query.order)
    w_int = np.einsum("jxl,lk->jxk", rules.basis_interior, beta)
    w_tr = np.einsum("jxl,lk->jxk", rules.basis_trace, beta)

    with np.errstate(divide="ignore", invalid="ignore"):
        q_int = _predict(w_int, rules.tau_rule.nodes, c, r, query.predictor)
        q_tr = _predict(w_tr, rules.trace_rule.nodes, c, r, query.predictor)

    s_hat = np.einsum(
        "t,x,txk->k", rules.tau_rule.weights, rules.xi_rule.weights, q_int
    )
    q_left = np.einsum("t,tk->k", rules.trace_rule.weights, q_tr[:, 0])
    q_right = np.einsum("t,tk->k", rules.trace_rule.weights, q_tr[:, 1])

    ph = np.tile(np.exp(1j * theta), n_s)
    # c * (fhat_+ - fhat_-), written so the c -> 0 limit stays finite.
    centred = 0.5 * c * ((q_right + ph * q_left) - (q_left + q_right / ph))
    spread = (ph * q_left - q_right) - (q_left - q_right / ph)
    diss = 0.25 * (query.alpha * c * c + 1.0 / query.alpha) * spread
    amp = 1.0 - centred + diss + r * s_hat
    amp = amp.reshape(n_s, theta.size)
    return amp[0] if squeeze else amp


def max_amplitude(
    c: float, r: float, query: StabilityQuery, blends: np.ndarray | None = None
) -> np.ndarray:
    """Largest |A| over the angle grid; non-finite amplitudes count as inf."""
    amp = np.abs(amplitude(theta_grid(query.n_theta), c, r, query, blends))
    amp = np.where(np.isfinite(amp), amp, np.inf)
    return amp.max(axis=-1)


def _scenario_blends(query: StabilityQuery, rng: np.random.Generator) -> np.ndarray:
    """Window-to-coefficient operators for ``n_scenarios`` random weight draws.

    "weno-law" evaluates the production weight formula on smoothness
    indicators drawn from [1, 2) - mutually comparable, as they are for any
    mode the grid resolves - so the central preference of the weight law is
    retained. "uniform" normalizes unconstrained draws from [0, 1)^3 instead.
    """
    degree = query.order - 1
    draws = rng.random((query.n_scenarios, 3))
    if query.weight_model == "weno-law":
        oi = 1.0 + draws
        weights = nonlinear_weights(oi[:, 0], oi[:, 1], oi[:, 2])
    else:
        weights = draws / draws.sum(axis=1, keepdims=True)
    stack = np.stack(
        [window_candidate_matrix(degree, kind) for kind in ("left", "central", "right")]
    )
    return np.einsum("ns,slw->nlw", weights, stack)


def stability_fraction(
    c: float, r: float, query: StabilityQuery, rng: np.random.Generator | None = None
) -> float:
    """Fraction of random weight scenarios stable at this (c, r) point."""
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([query.seed]))
    blends = _scenario_blends(query, rng)
    amps = max_amplitude(c, r, query, blends)
    return float(np.mean(amps <= 1.0 + query.tol))


def stability_map(
    query: StabilityQuery,
    c_values: np.ndarray | None = None,
    r_values: np.ndarray | None = None,
) -> np.ndarray:
    """Stable-scenario fraction on a (c, r) raster, shape (len(c), len(r)).

    Every raster point draws its scenarios from its own seed substream, so the
    map is reproducible point by point regardless of evaluation order.
    """
    c_values = DEFAULT_C_GRID if c_values is None else np.asarray(c_values, dtype=float)
    r_values = DEFAULT_R_GRID if r_values is None else np.asarray(r_values, dtype=float)
    out = np.empty((c_values.size, r_values.size))
    for i, c in enumerate(c_values):
        for j, r in enumerate(r_values):
            rng = np.random.default_rng(np.random.SeedSequence([query.seed, i, j]))
            out[i, j] = stability_fraction(float(c), float(r), query, rng)
    return out


def write_raster_csv(
    path, c_values: np.ndarray, r_values: np.ndarray, fractions: np.ndarray
) -> None:
    """Write a stability raster as c,r,stable_fraction rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["c", "r", "stable_fraction"])
        for i, c in enumerate(c_values):
            for j, r in enumerate(r_values):
                writer.writerow([f"{c:.6g}", f"{r:.6g}", f"{fractions[i, j]:.6g}"])
