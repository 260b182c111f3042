"""Macroscopic conversions, exact Euler references and flow diagnostics.

Primitive states are ``[rho, U, P]`` and conserved states ``[rho, rho U, E]``
along the last axis (one velocity component in 1D).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fr1d import corrected_gradient
from .phase_grid import InvalidArgument, InvalidState

MIN_MESH_KNUDSEN = 0.1


class ResolutionWarning(UserWarning):
    """Mesh Knudsen number below the resolvability limit."""


class InvalidProfile(ValueError):
    pass


def primitive_to_conserved(q, gamma: float) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if np.any(q[..., 0] <= 0.0) or np.any(q[..., -1] <= 0.0):
        raise InvalidState("primitive state needs rho > 0 and P > 0")
    rho, vel, p = q[..., :1], q[..., 1:-1], q[..., -1:]
    energy = p / (gamma - 1.0) + 0.5 * rho * np.sum(vel * vel, axis=-1, keepdims=True)
    return np.concatenate([rho, rho * vel, energy], axis=-1)


def conserved_to_primitive(Q, gamma: float, check: bool = True) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    rho = Q[..., :1]
    if check and np.any(rho <= 0.0):
        raise InvalidState("non-positive density")
    vel = Q[..., 1:-1] / rho
    p = (gamma - 1.0) * (Q[..., -1:] - 0.5 * rho * np.sum(vel * vel, axis=-1, keepdims=True))
    if check and np.any(p <= 0.0):
        raise InvalidState("non-positive pressure")
    return np.concatenate([rho, vel, p], axis=-1)


def temperature(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q[..., -1] / q[..., 0]


def sound_speed(q, gamma: float) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.sqrt(gamma * q[..., -1] / q[..., 0])


def specific_internal_energy(q, gamma: float) -> np.ndarray:
    return temperature(q) / (gamma - 1.0)


def rankine_hugoniot(M: float, gamma: float, q_left) -> np.ndarray:
    """Downstream primitive state of a stationary normal shock."""
    if M < 1.0:
        raise InvalidArgument(f"normal shock needs M >= 1, got {M}")
    rho, u, p = (float(v) for v in q_left)
    m2 = M * M
    r_rho = (gamma + 1.0) * m2 / ((gamma - 1.0) * m2 + 2.0)
    r_u = ((gamma - 1.0) * m2 + 2.0) / ((gamma + 1.0) * m2)
    r_p = (2.0 * gamma * m2 - (gamma - 1.0)) / (gamma + 1.0)
    return np.array([rho * r_rho, u * r_u, p * r_p])


# --- exact Riemann solver (ideal gas) -------------------------------------

def _pressure_function(p, rho_k, p_k, c_k, gamma):
    if p > p_k:
        a = 2.0 / ((gamma + 1.0) * rho_k)
        b = (gamma - 1.0) / (gamma + 1.0) * p_k
        s = math.sqrt(a / (p + b))
        return (p - p_k) * s, s * (1.0 - 0.5 * (p - p_k) / (b + p))
    ratio = p / p_k
    f = 2.0 * c_k / (gamma - 1.0) * (ratio ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
    df = ratio ** (-(gamma + 1.0) / (2.0 * gamma)) / (rho_k * c_k)
    return f, df


@dataclass(frozen=True)
class RiemannStar:
    p: float
    u: float
    rho_l: float
    rho_r: float
    vacuum: bool = False


def riemann_star_state(q_left, q_right, gamma: float, tol: float = 1e-12,
                       max_iter: int = 100) -> RiemannStar:
    rl, ul, pl = (float(v) for v in q_left)
    rr, ur, pr = (float(v) for v in q_right)
    cl, cr = math.sqrt(gamma * pl / rl), math.sqrt(gamma * pr / rr)
    if 2.0 * (cl + cr) / (gamma - 1.0) <= ur - ul:
        return RiemannStar(0.0, 0.5 * (ul + ur), 0.0, 0.0, vacuum=True)
    # two-rarefaction guess
    z = (gamma - 1.0) / (2.0 * gamma)
    p = ((cl + cr - 0.5 * (gamma - 1.0) * (ur - ul))
         / (cl / pl ** z + cr / pr ** z)) ** (1.0 / z)
    p = max(p, 1e-14)
    for _ in range(max_iter):
        fl, dfl = _pressure_function(p, rl, pl, cl, gamma)
        fr, dfr = _pressure_function(p, rr, pr, cr, gamma)
        p_new = p - (fl + fr + ur - ul) / (dfl + dfr)
        if p_new <= 0.0:
            p_new = 0.5 * p
        change = 2.0 * abs(p_new - p) / (p_new + p)
        p = p_new
        if change < tol:
            break
    else:
        raise ArithmeticError("exact Riemann pressure iteration did not converge")
    fl, _ = _pressure_function(p, rl, pl, cl, gamma)
    fr, _ = _pressure_function(p, rr, pr, cr, gamma)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    g1 = (gamma - 1.0) / (gamma + 1.0)

    def star_density(rho_k, p_k):
        if p > p_k:
            return rho_k * (p / p_k + g1) / (g1 * p / p_k + 1.0)
        return rho_k * (p / p_k) ** (1.0 / gamma)

    return RiemannStar(p, u, star_density(rl, pl), star_density(rr, pr))


def exact_riemann(q_left, q_right, gamma: float, x_over_t) -> np.ndarray:
    """Self-similar exact Euler solution sampled at ``x/t``; rows ``[rho, U, P]``."""
    rl, ul, pl = (float(v) for v in q_left)
    rr, ur, pr = (float(v) for v in q_right)
    if min(rl, pl, rr, pr) <= 0.0:
        raise InvalidState("Riemann data need positive density and pressure")
    cl, cr = math.sqrt(gamma * pl / rl), math.sqrt(gamma * pr / rr)
    star = riemann_star_state(q_left, q_right, gamma)
    g = gamma
    s_arr = np.atleast_1d(np.asarray(x_over_t, dtype=float))
    out = np.empty((len(s_arr), 3))

    def left_fan(s):
        u = 2.0 / (g + 1.0) * (cl + 0.5 * (g - 1.0) * ul + s)
        c = 2.0 / (g + 1.0) * (cl + 0.5 * (g - 1.0) * (ul - s))
        rho = rl * (c / cl) ** (2.0 / (g - 1.0))
        return rho, u, pl * (c / cl) ** (2.0 * g / (g - 1.0))

    def right_fan(s):
        u = 2.0 / (g + 1.0) * (-cr + 0.5 * (g - 1.0) * ur + s)
        c = 2.0 / (g + 1.0) * (cr - 0.5 * (g - 1.0) * (ur - s))
        rho = rr * (c / cr) ** (2.0 / (g - 1.0))
        return rho, u, pr * (c / cr) ** (2.0 * g / (g - 1.0))

    for n, s in enumerate(s_arr):
        if star.vacuum:
            s_l = ul + 2.0 * cl / (g - 1.0)
            s_r = ur - 2.0 * cr / (g - 1.0)
            if s <= ul - cl:
                out[n] = (rl, ul, pl)
            elif s < s_l:
                out[n] = left_fan(s)
            elif s <= s_r:
                out[n] = (0.0, 0.5 * (s_l + s_r), 0.0)
            elif s < ur + cr:
                out[n] = right_fan(s)
            else:
                out[n] = (rr, ur, pr)
            continue
        if s <= star.u:
            if star.p > pl:
                shock = ul - cl * math.sqrt((g + 1.0) / (2.0 * g) * star.p / pl
                                            + (g - 1.0) / (2.0 * g))
                out[n] = (rl, ul, pl) if s <= shock else (star.rho_l, star.u, star.p)
            else:
                head = ul - cl
                tail = star.u - cl * (star.p / pl) ** ((g - 1.0) / (2.0 * g))
                if s <= head:
                    out[n] = (rl, ul, pl)
                elif s >= tail:
                    out[n] = (star.rho_l, star.u, star.p)
                else:
                    out[n] = left_fan(s)
        else:
            if star.p > pr:
                shock = ur + cr * math.sqrt((g + 1.0) / (2.0 * g) * star.p / pr
                                            + (g - 1.0) / (2.0 * g))
                out[n] = (rr, ur, pr) if s >= shock else (star.rho_r, star.u, star.p)
            else:
                head = ur + cr
                tail = star.u + cr * (star.p / pr) ** ((g - 1.0) / (2.0 * g))
                if s >= head:
                    out[n] = (rr, ur, pr)
                elif s <= tail:
                    out[n] = (star.rho_r, star.u, star.p)
                else:
                    out[n] = right_fan(s)
    return out


# --- diagnostics ----------------------------------------------------------

def domain_integral(values, mesh, basis) -> float:
    """Integral of a nodal field (N_e, N_s) using element means times lengths."""
    means = np.asarray(values, dtype=float) @ basis.mean_weights
    return float(np.dot(mesh.h, means))


def error_metrics(rho, rho_ref, mesh, basis) -> dict:
    rho = np.asarray(rho, dtype=float)
    rho_ref = np.asarray(rho_ref, dtype=float)
    if rho.shape != rho_ref.shape:
        raise InvalidArgument(f"shape mismatch {rho.shape} vs {rho_ref.shape}")
    return {
        "linf_density": float(np.max(np.abs(rho - rho_ref))),
        "mass_error": abs(domain_integral(rho, mesh, basis)
                          - domain_integral(rho_ref, mesh, basis)),
    }


def shock_thickness(rho, mesh, basis, rho_left=None, rho_right=None,
                    lambda_left=None):
    """Maximum-slope thickness ``(rho_R - rho_L) / max d rho/dx``.

    Far densities default to means over the outer 10% of the domain on
    each side. Returns ``(thickness, lambda_left / thickness)``; the ratio
    is ``None`` without ``lambda_left``.
    """
    rho = np.asarray(rho, dtype=float)
    if rho_left is None or rho_right is None:
        n_out = max(1, int(round(0.1 * mesh.n_elements)))
        means = rho @ basis.mean_weights
        rho_left = float(np.mean(means[:n_out])) if rho_left is None else rho_left
        rho_right = float(np.mean(means[-n_out:])) if rho_right is None else rho_right
    grad = corrected_gradient(rho, mesh, basis)
    jump = rho_right - rho_left
    slope = float(np.max(grad)) if jump > 0 else float(-np.min(grad))
    if slope <= 0.0:
        raise InvalidProfile("density profile has no positive slope")
    thickness = abs(jump) / slope
    ratio = None if lambda_left is None else float(lambda_left) / thickness
    return thickness, ratio


def extract_fu(f, x_location: float, mesh, basis, vgrid):
    """Velocity distribution ``f_u(u) = max_zeta f(u, zeta)`` at the solution
    point nearest ``x_location``.

    ``f`` has shape (N_e, N_s, N_v, N_zeta).
    """
    x = mesh.nodes(basis)
    e, i = np.unravel_index(np.argmin(np.abs(x - x_location)), x.shape)
    fu = np.asarray(f)[e, i].max(axis=-1)
    return vgrid.nodes[:, 0].copy(), fu


def interpolate(values, mesh, basis, x) -> np.ndarray:
    """Evaluate the element-wise nodal polynomial ``values`` (N_e, N_s) at ``x``.

    Points on a shared vertex take the left element.
    """
    values = np.asarray(values, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    e = np.clip(np.searchsorted(mesh.vertices, x, side="left") - 1, 0, mesh.n_elements - 1)
    xi = 2.0 * (x - mesh.vertices[e]) / mesh.h[e] - 1.0
    nodes = basis.xi
    # Lagrange basis at xi for every point
    diff = xi[:, None] - nodes[None, :]
    out = np.zeros(len(x))
    for j in range(basis.n_s):
        lj = np.ones(len(x))
        for k in range(basis.n_s):
            if k != j:
                lj *= diff[:, k] / (nodes[j] - nodes[k])
        out += lj * values[e, j]
    return out


@dataclass(frozen=True)
class KnudsenContext:
    kn: float
    l_ref: float
    h_max: float

    @property
    def mean_free_path(self) -> float:
        return self.kn * self.l_ref

    @property
    def kn_h(self) -> float:
        return mesh_knudsen(self.kn, self.l_ref, self.h_max, warn=False)


def mesh_knudsen(kn: float, l_ref: float, h_max_node: float, warn: bool = True) -> float:
    """``lambda / h_max``; warns when below the 1/10 resolvability limit."""
    kn_h = kn * l_ref / h_max_node
    if warn and kn_h < MIN_MESH_KNUDSEN * (1.0 - 1e-12):
        warnings.warn(
            f"mesh Knudsen number {kn_h:.4g} < {MIN_MESH_KNUDSEN}: a shock of ~10 mean "
            f"free paths ({10 * kn * l_ref:.3g}) is thinner than the node spacing "
            f"({h_max_node:.3g})", ResolutionWarning, stacklevel=2)
    return kn_h
