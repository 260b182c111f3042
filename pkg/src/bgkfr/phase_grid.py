"""Truncated velocity and internal-energy grids and the discrete moment operator.

The velocity space is cut to a ball of radius ``r_max`` around the offset
``U_0`` and discretized with Gauss-Legendre radial nodes (two half-line
rules for ``m = 1``) and equispaced angles. The internal-energy axis is
``(0, zeta_max]`` with a Gauss-Legendre rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class InvalidArgument(ValueError):
    pass


class InvalidState(ValueError):
    pass


def _legendre_and_derivative(n: int, x: np.ndarray):
    p0 = np.ones_like(x)
    if n == 0:
        return p0, np.zeros_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [-1, 1].

    Nodes are Newton-refined roots of P_n starting from the Chebyshev-like
    guess ``cos(pi (i - 1/4) / (n + 1/2))``.
    """
    if int(n) != n or n < 1:
        raise InvalidArgument(f"gauss_legendre needs n >= 1, got {n!r}")
    n = int(n)
    if n == 1:
        return np.array([0.0]), np.array([2.0])
    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


def compute_k(eps_u: float, gamma: float) -> float:
    """Thermal multiple at which a Maxwellian drops to ``eps_u`` of its peak."""
    if not 0.0 < eps_u < 1.0:
        raise InvalidArgument(f"eps_u must lie in (0, 1), got {eps_u}")
    if gamma <= 1.0:
        raise InvalidArgument(f"gamma must exceed 1, got {gamma}")
    return math.sqrt(-(2.0 / gamma) * math.log(eps_u))


def _check_primitives(prims) -> np.ndarray:
    q = np.atleast_2d(np.asarray(prims, dtype=float))
    if q.size == 0:
        raise InvalidArgument("empty primitive field")
    if np.any(q[:, 0] <= 0.0) or np.any(q[:, -1] <= 0.0):
        raise InvalidState("non-positive density or pressure in initial field")
    return q


def compute_velocity_offset(initial_primitives) -> np.ndarray:
    """Midpoint of the min/max initial macroscopic velocity, per component.

    ``initial_primitives`` has rows ``[rho, U_1..U_d, P]``.
    """
    q = np.atleast_2d(np.asarray(initial_primitives, dtype=float))
    if q.size == 0:
        raise InvalidArgument("empty primitive field")
    vel = q[:, 1:-1]
    return 0.5 * (vel.max(axis=0) + vel.min(axis=0))


def compute_r_max(initial_primitives, eps_u: float, gamma: float) -> float:
    q = _check_primitives(initial_primitives)
    c_s = np.sqrt(gamma * q[:, -1] / q[:, 0])
    vel = q[:, 1:-1]
    du = vel.max(axis=0) - vel.min(axis=0)
    return compute_k(eps_u, gamma) * float(c_s.max()) + 0.5 * float(np.linalg.norm(du))


def compute_zeta_max(delta: float, eps_zeta: float, theta_max: float,
                     tol: float = 1e-10) -> float:
    """Internal-energy extent: ``theta_max`` times the largest root of
    ``x**(delta/2 - 1) * exp(-x) = eps_zeta``."""
    if delta <= 0:
        raise InvalidArgument("compute_zeta_max needs delta > 0")
    if not 0.0 < eps_zeta < 1.0:
        raise InvalidArgument(f"eps_zeta must lie in (0, 1), got {eps_zeta}")
    if theta_max <= 0:
        raise InvalidArgument("theta_max must be positive")
    a = 0.5 * delta - 1.0
    log_eps = math.log(eps_zeta)

    def h(x):
        return a * math.log(x) - x - log_eps

    lo, hi = max(1.0, 0.5 * delta), 200.0
    if h(lo) <= 0.0:
        raise InvalidArgument(f"eps_zeta={eps_zeta} too large: no tail root for delta={delta}")
    if h(hi) >= 0.0:
        raise InvalidArgument(f"eps_zeta={eps_zeta} too small: root beyond x=200")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return theta_max * 0.5 * (lo + hi)


@dataclass(frozen=True)
class VelocityGrid:
    m: int
    nodes: np.ndarray        # (N_v, m)
    weights: np.ndarray      # (N_v,)
    r_max: float
    offset: np.ndarray       # (m,)
    shape: tuple[int, int, int]

    @property
    def n_v(self) -> int:
        return len(self.weights)

    def mirror_index(self) -> np.ndarray:
        """Index permutation ``q -> q'`` with ``u_q' = -u_q`` (m = 1, zero offset)."""
        if self.m != 1 or np.any(self.offset != 0.0):
            raise InvalidArgument("velocity mirror needs m = 1 and zero offset")
        return np.arange(self.n_v)[::-1].copy()


@dataclass(frozen=True)
class InternalEnergyGrid:
    delta: float
    nodes: np.ndarray
    weights: np.ndarray
    zeta_max: float

    @property
    def n_zeta(self) -> int:
        return len(self.weights)


def build_velocity_grid(m: int, n_r: int, n_phi: int = 1, n_psi: int = 1,
                        r_max: float = 1.0, offset=None) -> VelocityGrid:
    """Nodal velocity grid.

    For ``m = 1`` the ``n_r`` argument is the total node count ``N_v`` (even),
    split into two Gauss-Legendre rules on ``[-r_max, 0]`` and ``[0, r_max]``.
    """
    if m not in (1, 2, 3):
        raise InvalidArgument(f"velocity dimension must be 1, 2 or 3, got {m}")
    if r_max <= 0:
        raise InvalidArgument("r_max must be positive")
    off = np.zeros(m) if offset is None else np.asarray(offset, dtype=float).reshape(m)

    if m == 1:
        n_v = int(n_r)
        if n_v < 2 or n_v % 2:
            raise InvalidArgument(f"m = 1 needs an even node count >= 2, got {n_r}")
        x, w = gauss_legendre(n_v // 2)
        half = 0.5 * r_max
        pos = half * (x + 1.0)
        nodes = np.concatenate([-pos[::-1], pos])[:, None] + off
        weights = np.concatenate([w[::-1], w]) * half
        return VelocityGrid(1, nodes, weights, float(r_max), off, (n_v // 2, 2, 1))

    if n_r < 1 or n_phi < 1 or (m == 3 and n_psi < 1):
        raise InvalidArgument("grid counts must be positive")
    x, w = gauss_legendre(n_r)
    r = 0.5 * r_max * (x + 1.0)
    w_r = 0.5 * r_max * w * r ** (m - 1)
    d_phi = 2.0 * np.pi / n_phi
    phi = np.arange(n_phi) * d_phi

    if m == 2:
        rr, pp = np.meshgrid(r, phi, indexing="ij")
        nodes = np.stack([rr * np.cos(pp), rr * np.sin(pp)], axis=-1).reshape(-1, 2)
        weights = np.outer(w_r, np.full(n_phi, d_phi)).ravel()
        return VelocityGrid(2, nodes + off, weights, float(r_max), off, (n_r, n_phi, 1))

    d_psi = np.pi / n_psi
    psi = (np.arange(n_psi) + 0.5) * d_psi
    rr, pp, ss = np.meshgrid(r, phi, psi, indexing="ij")
    nodes = np.stack([rr * np.sin(ss) * np.cos(pp),
                      rr * np.sin(ss) * np.sin(pp),
                      rr * np.cos(ss)], axis=-1).reshape(-1, 3)
    weights = (w_r[:, None, None] * d_phi * (d_psi * np.sin(psi))[None, None, :]
               * np.ones((1, n_phi, 1))).ravel()
    return VelocityGrid(3, nodes + off, weights, float(r_max), off, (n_r, n_phi, n_psi))


def build_internal_energy_grid(delta: float, n_zeta: int = 1,
                               zeta_max: float = 1.0) -> InternalEnergyGrid:
    if delta < 0:
        raise InvalidArgument("delta must be non-negative")
    if delta == 0:
        return InternalEnergyGrid(0.0, np.zeros(1), np.ones(1), 0.0)
    if zeta_max <= 0:
        raise InvalidArgument("zeta_max must be positive when delta > 0")
    x, w = gauss_legendre(n_zeta)
    return InternalEnergyGrid(float(delta), 0.5 * zeta_max * (x + 1.0),
                              0.5 * zeta_max * w, float(zeta_max))


@dataclass(frozen=True)
class MomentOperator:
    """Collision invariants ``[1, u_1..u_d, |u|^2/2 + zeta]`` on the phase grid.

    ``psi`` has shape ``(d + 2, N_v, N_zeta)``; ``weights`` is the product
    quadrature weight on the same grid.
    """
    vgrid: VelocityGrid
    egrid: InternalEnergyGrid
    d: int = 1
    psi: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 1 <= self.d <= self.vgrid.m:
            raise InvalidArgument("spatial dimension must satisfy 1 <= d <= m")
        u = self.vgrid.nodes
        z = self.egrid.nodes
        nv, nz = len(u), len(z)
        psi = np.empty((self.d + 2, nv, nz))
        psi[0] = 1.0
        for i in range(self.d):
            psi[1 + i] = u[:, i][:, None]
        psi[-1] = 0.5 * np.sum(u * u, axis=1)[:, None] + z[None, :]
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "weights",
                           np.outer(self.vgrid.weights, self.egrid.weights))


def moments(f_slice, op: MomentOperator) -> np.ndarray:
    """Discrete conserved variables ``[rho, rho U, E]`` of one phase slice.

    Leading axes of ``f_slice`` beyond the trailing ``(N_v, N_zeta)`` are
    treated as a batch.
    """
    f = np.asarray(f_slice, dtype=float)
    shape = op.weights.shape
    if f.ndim == 1 and f.size == op.weights.size:
        f = f.reshape(shape)
    if f.shape[-2:] != shape:
        raise InvalidArgument(f"phase slice shape {f.shape} does not match grid {shape}")
    wf = f * op.weights
    return np.tensordot(wf, op.psi, axes=([-2, -1], [1, 2]))
