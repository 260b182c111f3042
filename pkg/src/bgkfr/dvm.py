"""Discrete velocity model: conservative (modified) Maxwellians on a phase grid.

The equilibrium is parameterized by ``alpha = [a1, a2, a3..a_{d+2}]`` with

    g(u, zeta) = a1 * exp(-a2 * |u - c|^2) * g_zeta(zeta; theta = 1 / (2 a2))

where ``c_i = alpha[2 + i]`` for the first ``d`` velocity components and the
grid offset for any remaining ones. ``g`` factors into a velocity part and
an internal-energy part, so every moment and Jacobian entry is assembled
from 1D sums and the cost per spatial point is ``O(N_v + N_zeta)``.

All functions accept a leading batch axis on ``Q`` / ``alpha``.
"""
from __future__ import annotations

import math

import numpy as np

from .phase_grid import InvalidArgument, InvalidState, MomentOperator

RESIDUAL_FLOOR = 1e-12


class DVMConvergenceError(RuntimeError):
    """Newton projection failed; ``alpha`` holds the last iterate."""

    def __init__(self, message, alpha=None, index=None):
        super().__init__(message)
        self.alpha = alpha
        self.index = index


def specific_heat_ratio(m: int, delta: float) -> float:
    return 1.0 + 2.0 / (m + delta)


def _pinned_means(op: MomentOperator) -> np.ndarray:
    return op.vgrid.offset[op.d:]


def macro_from_alpha(alpha, op: MomentOperator) -> np.ndarray:
    """Continuous moments ``[rho, rho U, E]`` of the Maxwellian ``g(alpha)``."""
    a = np.asarray(alpha, dtype=float)
    m, d, delta = op.vgrid.m, op.d, op.egrid.delta
    rho = a[..., 0] * (np.pi / a[..., 1]) ** (0.5 * m)
    theta = 0.5 / a[..., 1]
    vel = a[..., 2:2 + d]
    extra = _pinned_means(op)
    ke = 0.5 * (np.sum(vel * vel, axis=-1) + float(np.dot(extra, extra)))
    out = np.empty(a.shape[:-1] + (d + 2,))
    out[..., 0] = rho
    out[..., 1:1 + d] = rho[..., None] * vel
    out[..., -1] = rho * (ke + 0.5 * (m + delta) * theta)
    return out


def alpha_from_macro(Q, op: MomentOperator) -> np.ndarray:
    """Parameters of the continuous Maxwellian whose moments are exactly ``Q``."""
    Q = np.asarray(Q, dtype=float)
    m, d, delta = op.vgrid.m, op.d, op.egrid.delta
    if Q.shape[-1] != d + 2:
        raise InvalidArgument(f"expected {d + 2} conserved components, got {Q.shape[-1]}")
    rho = Q[..., 0]
    if np.any(~(rho > 0.0)):
        raise InvalidState("non-positive density")
    vel = Q[..., 1:1 + d] / rho[..., None]
    extra = _pinned_means(op)
    ke = 0.5 * rho * (np.sum(vel * vel, axis=-1) + float(np.dot(extra, extra)))
    theta = (Q[..., -1] - ke) / (0.5 * (m + delta) * rho)
    if np.any(~(theta > 0.0)):
        raise InvalidState("non-positive temperature")
    alpha = np.empty(Q.shape)
    alpha[..., 0] = rho / (2.0 * np.pi * theta) ** (0.5 * m)
    alpha[..., 1] = 0.5 / theta
    alpha[..., 2:] = vel
    return alpha


def _velocity_factor(alpha, op):
    """Return ``(g_u, s)``: velocity factor (B, N_v) and ``u - c`` (B, N_v, m)."""
    u = op.vgrid.nodes
    d = op.d
    c = np.empty(alpha.shape[:-1] + (op.vgrid.m,))
    c[..., :d] = alpha[..., 2:2 + d]
    c[..., d:] = _pinned_means(op)
    s = u[None, :, :] - c[:, None, :]
    s2 = np.sum(s * s, axis=-1)
    gu = alpha[:, 0:1] * np.exp(-alpha[:, 1:2] * s2)
    return gu, s, s2


def _energy_factor(alpha, op):
    delta = op.egrid.delta
    z = op.egrid.nodes
    if delta == 0:
        return np.ones((alpha.shape[0], 1))
    theta = 0.5 / alpha[:, 1:2]
    x = z[None, :] / theta
    log_norm = -math.lgamma(0.5 * delta)
    return np.exp(log_norm + (0.5 * delta - 1.0) * np.log(x) - x) / theta


def _separable_moments(hu, hz, op: MomentOperator) -> np.ndarray:
    """Moments of ``hu(u) * hz(zeta)`` for batched factors (B, N_v), (B, N_z)."""
    wu, wz = op.vgrid.weights, op.egrid.weights
    u = op.vgrid.nodes
    d = op.d
    whu = hu * wu
    a0 = whu.sum(axis=-1)
    a1 = whu @ u[:, :d]
    ak = whu @ (0.5 * np.sum(u * u, axis=1))
    whz = hz * wz
    b0 = whz.sum(axis=-1)
    b1 = whz @ op.egrid.nodes
    out = np.empty(hu.shape[:-1] + (d + 2,))
    out[..., 0] = a0 * b0
    out[..., 1:1 + d] = a1 * b0[..., None]
    out[..., -1] = ak * b0 + a0 * b1
    return out


def equilibrium_factors(alpha, op: MomentOperator):
    """Velocity and internal-energy factors of ``g(alpha)``: (B, N_v), (B, N_z)."""
    a = np.atleast_2d(np.asarray(alpha, dtype=float))
    gu, _, _ = _velocity_factor(a, op)
    return gu, _energy_factor(a, op)


def eval_equilibrium(alpha, op: MomentOperator) -> np.ndarray:
    """Nodal values of ``g(alpha)`` with shape ``batch + (N_v, N_zeta)``."""
    a = np.asarray(alpha, dtype=float)
    gu, gz = equilibrium_factors(a.reshape(-1, a.shape[-1]), op)
    g = gu[:, :, None] * gz[:, None, :]
    return g.reshape(a.shape[:-1] + g.shape[1:])


def discrete_moments_of_alpha(alpha, op: MomentOperator) -> np.ndarray:
    a = np.atleast_2d(np.asarray(alpha, dtype=float))
    gu, gz = equilibrium_factors(a, op)
    return _separable_moments(gu, gz, op)


def moment_jacobian(alpha, op: MomentOperator) -> np.ndarray:
    """``J[b, a] = d M_b(g(alpha)) / d alpha_a`` assembled analytically."""
    a = np.atleast_2d(np.asarray(alpha, dtype=float))
    d = op.d
    gu, s, s2 = _velocity_factor(a, op)
    gz = _energy_factor(a, op)
    n = d + 2
    J = np.empty(a.shape[:-1] + (n, n))
    J[..., :, 0] = _separable_moments(gu, gz, op) / a[:, 0:1]
    dz = (0.5 * op.egrid.delta / a[:, 1:2] - 2.0 * op.egrid.nodes[None, :]) * gz
    J[..., :, 1] = (_separable_moments(-s2 * gu, gz, op)
                    + _separable_moments(gu, dz, op))
    for i in range(d):
        J[..., :, 2 + i] = _separable_moments(2.0 * a[:, 1:2] * s[..., i] * gu, gz, op)
    return J


def _relative_residual(M, Q):
    scale = np.max(np.abs(Q), axis=-1)
    scale = np.where(scale > 0.0, scale, 1.0)
    return np.max(np.abs(M - Q), axis=-1) / scale


def newton_project(Q, op: MomentOperator, n_iters: int = 2):
    """Modified Maxwellian parameters matching the discrete moments ``Q``.

    Starts from ``alpha_from_macro(Q)`` and takes ``n_iters`` Newton steps on
    ``M(psi g(alpha)) - Q = 0``. Returns ``(alpha, residual)`` where the
    residual is ``max|M(psi g) - Q| / max|Q|`` after the last step (batched
    inputs give batched outputs).
    """
    Q = np.asarray(Q, dtype=float)
    single = Q.ndim == 1
    Qb = np.atleast_2d(Q)
    alpha = alpha_from_macro(Qb, op)
    M = discrete_moments_of_alpha(alpha, op)
    res = _relative_residual(M, Qb)
    for _ in range(int(n_iters)):
        J = moment_jacobian(alpha, op)
        try:
            step = np.linalg.solve(J, (M - Qb)[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise DVMConvergenceError("singular DVM Jacobian", alpha) from exc
        new = alpha - step
        bad = ~np.all(np.isfinite(new), axis=-1) | (new[:, 0] <= 0.0) | (new[:, 1] <= 0.0)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise DVMConvergenceError("DVM Newton step left the admissible set", alpha, i)
        M = discrete_moments_of_alpha(new, op)
        new_res = _relative_residual(M, Qb)
        grew = (new_res > res) & (new_res > RESIDUAL_FLOOR)
        if np.any(grew):
            i = int(np.flatnonzero(grew)[0])
            raise DVMConvergenceError(
                f"DVM residual grew from {res[i]:.3e} to {new_res[i]:.3e}", new, i)
        alpha, res = new, new_res
    if single:
        return alpha[0], float(res[0])
    return alpha, res


def discrete_entropy(z, op: MomentOperator) -> float:
    """``sum w z log z`` over the phase grid, with ``0 log 0 = 0``."""
    z = np.asarray(z, dtype=float).reshape(op.weights.shape)
    if np.any(z < 0.0):
        raise InvalidArgument("entropy needs non-negative values")
    zlogz = np.zeros_like(z)
    pos = z > 0.0
    zlogz[pos] = z[pos] * np.log(z[pos])
    return float(np.sum(op.weights * zlogz))
