"""BGK right-hand side, collision-time models and RK4 time stepping.

The distribution function is a C-contiguous array of shape
``(N_e, N_s, N_v, N_zeta)``. Kernels see it as ``(N_e, N_s, N_v * N_zeta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dvm, kernels
from .fr1d import BoundarySpec, FRBasis, Mesh1D
from .limiter import squeeze_field
from .phase_grid import InvalidArgument, InvalidState, MomentOperator


_DVM_STATUS = {1: "singular DVM Jacobian",
               2: "DVM Newton step left the admissible set",
               3: "DVM residual grew",
               4: "inadmissible macroscopic state"}


class BlowUpError(RuntimeError):
    pass


class SolverError(RuntimeError):
    """Failure inside the RHS, with the offending spatial location attached."""

    def __init__(self, message, x=None):
        super().__init__(message if x is None else f"{message} (x = {x:.6g})")
        self.x = x


@dataclass(frozen=True)
class ConstantTau:
    tau: float

    def __post_init__(self):
        if not self.tau > 0.0:
            raise InvalidArgument("collision time must be positive")


@dataclass(frozen=True)
class PowerLawTau:
    """``tau = tau_ref (rho_ref / rho) (theta_ref / theta)**(1 - omega)``."""
    tau_ref: float
    rho_ref: float
    theta_ref: float
    omega: float

    def __post_init__(self):
        if min(self.tau_ref, self.rho_ref, self.theta_ref) <= 0.0:
            raise InvalidArgument("power-law reference values must be positive")
        if not 0.0 < self.omega <= 1.0:
            raise InvalidArgument("viscosity exponent omega must lie in (0, 1]")


def collision_time_from_knudsen(kn: float, gamma: float, l_ref: float, c_s_ref: float) -> float:
    if min(kn, gamma, l_ref, c_s_ref) <= 0.0:
        raise InvalidArgument("Knudsen conversion needs positive inputs")
    return math.sqrt(2.0 * gamma / math.pi) * kn * l_ref / c_s_ref


def evaluate_collision_time(model, rho, theta):
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho <= 0.0) or np.any(theta <= 0.0):
        raise InvalidState("collision time needs positive density and temperature")
    if isinstance(model, ConstantTau):
        return np.full(np.broadcast(rho, theta).shape, model.tau)
    return (model.tau_ref * (model.rho_ref / rho)
            * (model.theta_ref / theta) ** (1.0 - model.omega))


def cfl_time_step(cfl: float, p: int, h_min: float, c_max: float) -> float:
    return cfl / (2 * p + 1) * h_min / c_max


@dataclass
class Discretization:
    """Everything that stays fixed during a run."""
    mesh: Mesh1D
    basis: FRBasis
    op: MomentOperator
    bc: BoundarySpec
    gamma: float
    u_v: np.ndarray = field(init=False, repr=False)
    u_q: np.ndarray = field(init=False, repr=False)
    rdx: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.op.vgrid.m != 1 or self.op.d != 1:
            raise InvalidArgument("the 1D solver needs a one-dimensional velocity grid")
        nz = self.op.egrid.n_zeta
        self.u_v = np.ascontiguousarray(self.op.vgrid.nodes[:, 0])
        self.u_q = np.ascontiguousarray(np.repeat(self.u_v, nz))
        self.rdx = np.ascontiguousarray(2.0 / self.mesh.h)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.mesh.n_elements, self.basis.n_s,
                self.op.vgrid.n_v, self.op.egrid.n_zeta)

    @property
    def c_max(self) -> float:
        return self.op.vgrid.r_max + float(np.linalg.norm(self.op.vgrid.offset))

    def nodes(self) -> np.ndarray:
        return self.mesh.nodes(self.basis)

    def moments(self, f) -> np.ndarray:
        """Conserved variables at every solution point, shape (N_e * N_s, 3)."""
        n_e, n_s, n_v, n_z = self.shape
        vg, eg = self.op.vgrid, self.op.egrid
        return kernels.phase_moments(f.reshape(n_e, n_s, n_v * n_z), vg.weights,
                                     self.u_v, eg.weights, eg.nodes, n_v, n_z)

    def equilibrium(self, Q, iters: int) -> np.ndarray:
        """Nodal (modified) Maxwellian for a batch of conserved states."""
        alpha, _ = dvm.newton_project(np.atleast_2d(Q), self.op, iters)
        return dvm.eval_equilibrium(alpha, self.op)


class BGKSolver:
    """Semi-discrete BGK operator and its RK4 integrator.

    ``dvm_enabled=False`` relaxes towards the plain Maxwellian of ``Q``
    instead of the discretely conservative one.
    """

    def __init__(self, disc: Discretization, model, dvm_enabled: bool = True,
                 dvm_iters: int = 2, cfl: float = 0.5):
        self.disc = disc
        self.model = model
        self.dvm_enabled = dvm_enabled
        self.dvm_iters = dvm_iters
        self.cfl = cfl
        self.limiter_calls = 0
        self.rhs_calls = 0
        self.steps = 0
        self._work = [np.empty(disc.shape) for _ in range(3)]

    # -- pieces --------------------------------------------------------
    def limit(self, f) -> None:
        n_e, n_s, n_v, n_z = self.disc.shape
        squeeze_field(f.reshape(n_e, n_s, n_v * n_z), self.disc.basis)
        self.limiter_calls += 1

    def _primitive_checks(self, Q):
        if not np.all(np.isfinite(Q)):
            raise BlowUpError(f"non-finite moments at step {self.steps}")
        rho = Q[:, 0]
        theta = (2.0 / (self.disc.op.vgrid.m + self.disc.op.egrid.delta)
                 * (Q[:, 2] - 0.5 * Q[:, 1] ** 2 / np.where(rho > 0, rho, 1.0))
                 / np.where(rho > 0, rho, 1.0))
        bad = (rho <= 0.0) | (theta <= 0.0)
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise SolverError("non-positive density or temperature",
                              float(self.disc.nodes().ravel()[k]))
        return rho, theta

    def collision_times(self, Q) -> np.ndarray:
        rho, theta = self._primitive_checks(Q)
        return evaluate_collision_time(self.model, rho, theta)

    def rhs(self, f, out=None, Q=None) -> np.ndarray:
        """``d f / d t`` for an already limited state ``f``."""
        disc = self.disc
        n_e, n_s, n_v, n_z = disc.shape
        if out is None:
            out = np.empty(disc.shape)
        self.rhs_calls += 1
        if Q is None:
            Q = disc.moments(f)
        rho, theta = self._primitive_checks(Q)
        gu, gz = self.equilibrium_factors(Q)
        inv_tau = 1.0 / evaluate_collision_time(self.model, rho, theta)
        f3 = f.reshape(n_e, n_s, n_v * n_z)
        o3 = out.reshape(f3.shape)
        ghost_l, ghost_r = disc.bc.ghosts(f3)
        kernels.transport_rhs(f3, disc.basis.D, disc.basis.gL_deriv, disc.basis.gR_deriv,
                              disc.rdx, disc.u_q, np.ascontiguousarray(ghost_l),
                              np.ascontiguousarray(ghost_r), o3)
        kernels.add_relaxation(f3, gu, gz, np.ascontiguousarray(inv_tau), o3)
        return out

    def equilibrium_factors(self, Q):
        """Factors of the relaxation target at every spatial node.

        With the DVM on this is the discretely conservative Maxwellian after
        ``dvm_iters`` Newton steps; otherwise the Maxwellian of ``Q`` itself.
        """
        disc = self.disc
        n = Q.shape[0]
        vg, eg = disc.op.vgrid, disc.op.egrid
        alpha = np.empty((n, 3))
        gu = np.empty((n, vg.n_v))
        gz = np.empty((n, eg.n_zeta))
        res = np.empty(n)
        status = np.zeros(n, dtype=np.intc)
        iters = self.dvm_iters if self.dvm_enabled else 0
        kernels.dvm_project(np.ascontiguousarray(Q), disc.u_v, vg.weights, eg.nodes,
                            eg.weights, eg.delta, iters, dvm.RESIDUAL_FLOOR,
                            alpha, gu, gz, res, status)
        if np.any(status):
            k = int(np.flatnonzero(status)[0])
            reason = _DVM_STATUS.get(int(status[k]), "unknown failure")
            exc = dvm.DVMConvergenceError(reason, alpha[k].copy(), k)
            raise SolverError(f"DVM failure: {reason}", float(disc.nodes().ravel()[k])) from exc
        self.last_residual = res
        return gu, gz

    def time_step(self, Q) -> float:
        """``min(tau, dt_CFL)`` with ``tau`` minimised over solution points."""
        tau = float(np.min(self.collision_times(Q)))
        dt_cfl = cfl_time_step(self.cfl, self.disc.basis.p, self.disc.mesh.h_min,
                               self.disc.c_max)
        return min(tau, dt_cfl)

    def rk4_step(self, f, dt: float, Q=None) -> np.ndarray:
        """One classic RK4 step; the limiter runs before every stage derivative
        and on the result. ``f`` is updated in place and returned."""
        if not dt > 0.0:
            raise InvalidArgument("time step must be positive")
        k, acc, stage = self._work
        flat = [a.reshape(-1) for a in (f, k, stage, acc)]
        ff, kf, sf, af = flat
        self.limit(f)
        self.rhs(f, k, Q=Q)
        kernels.rk_stage(ff, kf, sf, af, 0.5 * dt, dt / 6.0, True)
        for c, w in ((0.5, 1.0 / 3.0), (1.0, 1.0 / 3.0)):
            self.limit(stage)
            self.rhs(stage, k)
            kernels.rk_stage(ff, kf, sf, af, c * dt, w * dt, False)
        self.limit(stage)
        self.rhs(stage, k)
        kernels.rk_finish(ff, af, kf, dt / 6.0)
        self.limit(f)
        self.steps += 1
        return f


def initial_field(disc: Discretization, prims, iters: int = 5) -> np.ndarray:
    """Modified Maxwellian of the primitive field ``prims`` (N_e, N_s, 3)."""
    from .macro import primitive_to_conserved

    Q = primitive_to_conserved(np.asarray(prims).reshape(-1, 3), disc.gamma)
    g = disc.equilibrium(Q, iters)
    return np.ascontiguousarray(g.reshape(disc.shape))


# -- run driver --------------------------------------------------------------

@dataclass
class Problem:
    """A fully assembled run: discretization, solver, initial field."""
    config: object
    case: object
    disc: Discretization
    solver: BGKSolver
    f0: np.ndarray
    kn: float
    kn_h: float


@dataclass
class RunResult:
    problem: Problem
    f: np.ndarray
    t: float
    rows: list
    steps: int
    stopped_steady: bool = False


DIAG_COLUMNS = ("t", "mass", "momentum", "energy", "mass_err", "min_f", "residual_linf")


def sample_positions(mesh: Mesh1D, basis: FRBasis, discontinuous: bool) -> np.ndarray:
    """Solution points, nudged toward their element centre for piecewise ICs.

    Face nodes then take the state of their own element, so a jump placed on
    a mesh vertex stays element-aligned.
    """
    x = mesh.nodes(basis)
    if discontinuous:
        centre = 0.5 * (mesh.vertices[:-1] + mesh.vertices[1:])
        x = x + 1e-10 * mesh.h[:, None] * np.sign(centre[:, None] - x)
    return x


def setup(config) -> Problem:
    """Build grids, boundaries, collision model and the initial field."""
    import warnings

    from .cases import build_case
    from .fr1d import DIRICHLET, SPECULAR, ConfigurationError, build_basis
    from .macro import ResolutionWarning, mesh_knudsen, primitive_to_conserved, sound_speed
    from .phase_grid import (build_internal_energy_grid, build_velocity_grid,
                             compute_r_max, compute_velocity_offset, compute_zeta_max)

    basis = build_basis(config.p)
    probe = build_case(config.case, beta=config.beta, mach=config.mach,
                       smooth_ic=False, delta=config.delta, omega=config.omega)
    a, b = config.domain if config.domain is not None else probe.domain
    mesh = Mesh1D.uniform(a, b, config.n_elements)
    case = build_case(config.case, beta=config.beta, mach=config.mach,
                      smooth_ic=config.smooth_ic, smooth_h=float(mesh.h.max()),
                      delta=config.delta, omega=config.omega)
    gamma = case.gamma

    x = sample_positions(mesh, basis, case.discontinuous)
    prims = case.ic(x)
    flat = prims.reshape(-1, 3)
    r_max = compute_r_max(flat, config.eps_u, gamma)
    offset = compute_velocity_offset(flat)
    vgrid = build_velocity_grid(1, config.n_v, r_max=r_max, offset=offset)
    if case.delta > 0:
        theta_max = float(np.max(flat[:, 2] / flat[:, 0]))
        egrid = build_internal_energy_grid(
            case.delta, config.n_zeta, compute_zeta_max(case.delta, config.eps_zeta, theta_max))
    else:
        egrid = build_internal_energy_grid(0.0)
    op = MomentOperator(vgrid, egrid, d=1)
    nz = egrid.n_zeta

    left = config.bc_left or case.bc_left
    right = config.bc_right or case.bc_right
    mirror = None
    if SPECULAR in (left, right):
        try:
            mirror = (vgrid.mirror_index()[:, None] * nz + np.arange(nz)[None, :]).ravel()
        except InvalidArgument as exc:
            raise ConfigurationError(f"specular wall: {exc}") from exc
    states = {}
    for side, kind, xb in (("left", left, a), ("right", right, b)):
        if kind == DIRICHLET:
            Qb = primitive_to_conserved(case.ic(np.array([xb]) + (1e-10 if side == "left" else -1e-10)
                                                * (b - a)), gamma)
            alpha, _ = dvm.newton_project(Qb, op, config.init_iters)
            states[side] = dvm.eval_equilibrium(alpha, op).reshape(-1)
    bc = BoundarySpec(left, right, states.get("left"), states.get("right"), mirror)
    disc = Discretization(mesh, basis, op, bc, gamma)

    # collision time: tau directly, or from Kn on a unit reference length
    h_node = mesh.h_max_node(basis)
    kind = config.collision_model or case.collision_model
    if kind == "power_law":
        q_ref = case.q_left if case.q_left is not None else flat[0]
        c_ref = float(sound_speed(q_ref, gamma))
    else:
        q_ref = None
        c_ref = float(np.max(sound_speed(flat, gamma)))
    if config.tau is not None:
        tau = config.tau
        kn = tau * c_ref / math.sqrt(2.0 * gamma / math.pi)
    else:
        kn = config.kn if config.kn is not None else config.kn_h * h_node
        tau = collision_time_from_knudsen(kn, gamma, 1.0, c_ref)
    if kind == "power_law":
        omega = config.omega if config.omega is not None else case.omega
        model = PowerLawTau(tau, float(q_ref[0]), float(q_ref[2] / q_ref[0]), omega)
    else:
        model = ConstantTau(tau)
    with warnings.catch_warnings():
        warnings.simplefilter("always", ResolutionWarning)
        kn_h = mesh_knudsen(kn, 1.0, h_node, warn=True)

    solver = BGKSolver(disc, model, config.dvm, config.dvm_iters, config.cfl)
    f0 = initial_field(disc, prims, config.init_iters)
    return Problem(config, case, disc, solver, f0, kn, kn_h)


def diagnostics(disc: Discretization, f, Q, t, mass0, residual) -> tuple:
    from .macro import domain_integral

    shape = (disc.mesh.n_elements, disc.basis.n_s)
    ints = [domain_integral(Q[:, k].reshape(shape), disc.mesh, disc.basis) for k in range(3)]
    m0 = ints[0] if mass0 is None else mass0
    return (t, ints[0], ints[1], ints[2], abs(ints[0] - m0), float(f.min()), residual)


def run(config, problem: Problem | None = None, rows: list | None = None,
        progress_every: int = 0) -> RunResult:
    """Advance the configured case to ``t_final``.

    ``rows`` collects diagnostics as they are produced, so a caller keeps the
    partial log when the run fails.
    """
    import logging

    log = logging.getLogger(__name__)
    kernels.set_num_threads(config.threads)
    problem = problem or setup(config)
    disc, solver = problem.disc, problem.solver
    f = problem.f0.copy()
    rows = [] if rows is None else rows
    Q = disc.moments(f)
    rows.append(diagnostics(disc, f, Q, 0.0, None, 0.0))
    mass0 = rows[0][1]
    t, t_final = 0.0, float(config.t_final)
    next_out = config.output_interval if config.output_interval > 0 else math.inf
    steady = False
    while t < t_final * (1.0 - 1e-14):
        dt = solver.time_step(Q)
        if t + dt > t_final:
            dt = t_final - t
        rho_prev = Q[:, 0].copy()
        solver.rk4_step(f, dt, Q=Q)
        t = t_final if dt == t_final - t else t + dt
        Q = disc.moments(f)
        residual = float(np.max(np.abs(Q[:, 0] - rho_prev))) / dt
        steady = config.steady_tol > 0.0 and residual < config.steady_tol
        last = t >= t_final * (1.0 - 1e-14) or steady
        if last or t >= next_out * (1.0 - 1e-12):
            rows.append(diagnostics(disc, f, Q, t, mass0, residual))
            while next_out <= t * (1.0 + 1e-12):
                next_out += config.output_interval
        if progress_every and solver.steps % progress_every == 0:
            log.info("step %d t=%.6g dt=%.3e residual=%.3e", solver.steps, t, dt, residual)
        if steady:
            break
    return RunResult(problem, f, t, rows, solver.steps, steady)
