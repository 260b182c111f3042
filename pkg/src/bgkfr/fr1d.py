"""One-dimensional flux reconstruction for linear advection of phase nodes.

Solution points are Gauss-Lobatto nodes, so face traces are nodal values.
Correction functions are the left/right Radau polynomials of degree p + 1,
which makes the scheme identical to nodal DG for a linear flux.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

from . import kernels
from .phase_grid import InvalidArgument


class ConfigurationError(ValueError):
    pass


def gauss_lobatto(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n``-point Gauss-Lobatto rule on [-1, 1] (n >= 2)."""
    if n < 2:
        raise InvalidArgument("Gauss-Lobatto needs at least two nodes")
    p = n - 1
    cp = np.zeros(p + 1)
    cp[p] = 1.0
    interior = np.sort(npleg.legroots(npleg.legder(cp))) if p > 1 else np.array([])
    x = np.concatenate([[-1.0], interior, [1.0]])
    # Newton polish of interior roots of P_p'
    for _ in range(10):
        if p < 2:
            break
        d1 = npleg.legval(x[1:-1], npleg.legder(cp))
        d2 = npleg.legval(x[1:-1], npleg.legder(cp, 2))
        x[1:-1] -= d1 / d2
    x = 0.5 * (x - x[::-1])
    w = 2.0 / (p * (p + 1) * npleg.legval(x, cp) ** 2)
    return x, w


def lagrange_derivative_matrix(x: np.ndarray) -> np.ndarray:
    """``D[i, j] = l_j'(x_i)`` from barycentric weights."""
    n = len(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    bw = 1.0 / np.prod(diff, axis=1)
    D = (bw[None, :] / bw[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@dataclass(frozen=True)
class FRBasis:
    p: int
    xi: np.ndarray
    D: np.ndarray
    gL_deriv: np.ndarray
    gR_deriv: np.ndarray
    mean_weights: np.ndarray

    @property
    def n_s(self) -> int:
        return self.p + 1


def build_basis(p: int) -> FRBasis:
    if p < 1:
        raise InvalidArgument("flux reconstruction on Gauss-Lobatto points needs p >= 1")
    xi, w = gauss_lobatto(p + 1)
    D = lagrange_derivative_matrix(xi)
    # g_L = (-1)^(p+1)/2 (P_{p+1} - P_p): 1 at xi=-1, 0 at xi=+1
    c = np.zeros(p + 2)
    c[p + 1], c[p] = 1.0, -1.0
    c *= 0.5 * (-1.0) ** (p + 1)
    gL = npleg.legval(xi, npleg.legder(c))
    gR = -gL[::-1]
    return FRBasis(p, xi, D, gL, gR.copy(), w / 2.0)


@dataclass(frozen=True)
class Mesh1D:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 1 or len(v) < 2 or np.any(np.diff(v) <= 0.0):
            raise InvalidArgument("mesh vertices must be strictly increasing")
        object.__setattr__(self, "vertices", v)

    @classmethod
    def uniform(cls, a: float, b: float, n_elements: int) -> "Mesh1D":
        return cls(np.linspace(a, b, n_elements + 1))

    @property
    def n_elements(self) -> int:
        return len(self.vertices) - 1

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.vertices)

    @property
    def h_min(self) -> float:
        return float(self.h.min())

    @property
    def length(self) -> float:
        return float(self.vertices[-1] - self.vertices[0])

    def h_max_node(self, basis: FRBasis) -> float:
        """Largest physical gap between neighbouring solution points in an element."""
        gap = float(np.max(np.diff(basis.xi)))
        return 0.5 * gap * float(self.h.max())

    def nodes(self, basis: FRBasis) -> np.ndarray:
        """Physical solution-point coordinates, shape (N_e, p + 1)."""
        left = self.vertices[:-1, None]
        return left + 0.5 * self.h[:, None] * (basis.xi[None, :] + 1.0)


PERIODIC, NEUMANN, DIRICHLET, SPECULAR = "periodic", "neumann", "dirichlet", "specular"
_KINDS = (PERIODIC, NEUMANN, DIRICHLET, SPECULAR)


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary kinds at the two mesh ends.

    ``left_state``/``right_state`` carry the fixed equilibrium slice (length
    ``N_v * N_zeta``) for Dirichlet ends; ``mirror`` is the velocity-index
    permutation for specular walls, expanded over zeta.
    """
    left: str = PERIODIC
    right: str = PERIODIC
    left_state: np.ndarray | None = None
    right_state: np.ndarray | None = None
    mirror: np.ndarray | None = None

    def __post_init__(self):
        for kind in (self.left, self.right):
            if kind not in _KINDS:
                raise ConfigurationError(f"unknown boundary kind {kind!r}")
        if (self.left == PERIODIC) != (self.right == PERIODIC):
            raise ConfigurationError("periodic boundaries must be set on both ends")
        for kind, state in ((self.left, self.left_state), (self.right, self.right_state)):
            if kind == DIRICHLET:
                if state is None:
                    raise ConfigurationError("Dirichlet boundary needs a boundary state")
                # far Maxwellian tails underflow to exactly 0 on wide grids
                s = np.asarray(state, dtype=float)
                if not (np.all(np.isfinite(s)) and np.all(s >= 0.0) and s.sum() > 0.0):
                    raise ConfigurationError(
                        "Dirichlet boundary state must be finite, nonnegative and not all zero")
        if SPECULAR in (self.left, self.right) and self.mirror is None:
            raise ConfigurationError("specular wall needs a velocity mirror (m = 1, zero offset)")

    def ghosts(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Exterior states at the left and right domain ends for ``f`` (N_e, N_s, N_q)."""
        inner_l, inner_r = f[0, 0], f[-1, -1]
        if self.left == PERIODIC:
            return inner_r, inner_l
        return (self._ghost(self.left, inner_l, self.left_state),
                self._ghost(self.right, inner_r, self.right_state))

    def _ghost(self, kind, inner, state):
        if kind == NEUMANN:
            return inner
        if kind == DIRICHLET:
            return np.broadcast_to(np.asarray(state, dtype=float), inner.shape)
        return inner[self.mirror]


def upwind_flux(f_minus: float, f_plus: float, u_n: float) -> float:
    """Normal upwind flux ``u_n f`` taking the state the flow comes from."""
    if u_n > 0.0:
        return u_n * f_minus
    if u_n < 0.0:
        return u_n * f_plus
    return 0.0


def advect_rhs(field, u0: float, mesh: Mesh1D, basis: FRBasis,
               bc: BoundarySpec | None = None) -> np.ndarray:
    """``-d/dx (u0 f)`` at the solution points for one phase node.

    ``field`` has shape (N_e, p + 1).
    """
    f = np.ascontiguousarray(np.asarray(field, dtype=float))
    if f.shape != (mesh.n_elements, basis.n_s):
        raise InvalidArgument(f"field shape {f.shape} != {(mesh.n_elements, basis.n_s)}")
    bc = bc or BoundarySpec()
    if SPECULAR in (bc.left, bc.right):
        raise ConfigurationError("specular walls couple mirrored velocity nodes; "
                                 "use the full-field solver")
    f3 = f[:, :, None].copy()
    gl, gr = bc.ghosts(f3)
    out = np.empty_like(f3)
    u = np.array([float(u0)])
    rdx = 2.0 / mesh.h
    kernels.transport_rhs(f3, basis.D, basis.gL_deriv, basis.gR_deriv, rdx, u,
                          np.ascontiguousarray(gl, dtype=float).reshape(1),
                          np.ascontiguousarray(gr, dtype=float).reshape(1), out)
    return out[:, :, 0]


def corrected_gradient(values, mesh: Mesh1D, basis: FRBasis) -> np.ndarray:
    """Nodal ``d/dx`` of a scalar field with averaged interface values.

    Interior interfaces use the mean of both traces; domain ends use the
    interior trace (no correction).
    """
    v = np.asarray(values, dtype=float)
    left_tr, right_tr = v[:, 0], v[:, -1]
    common = np.empty(mesh.n_elements + 1)
    common[1:-1] = 0.5 * (right_tr[:-1] + left_tr[1:])
    common[0], common[-1] = left_tr[0], right_tr[-1]
    grad = v @ basis.D.T
    grad += (common[:-1] - left_tr)[:, None] * basis.gL_deriv[None, :]
    grad += (common[1:] - right_tr)[:, None] * basis.gR_deriv[None, :]
    return grad * (2.0 / mesh.h)[:, None]
