"""Initial conditions and default setups for the 1D benchmark problems."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fr1d import DIRICHLET, PERIODIC
from .macro import rankine_hugoniot
from .phase_grid import InvalidArgument


def delta_from_gamma(gamma: float, m: int = 1) -> float:
    return 2.0 / (gamma - 1.0) - m


def gamma_from_delta(delta: float, m: int = 1) -> float:
    return 1.0 + 2.0 / (m + delta)


@dataclass(frozen=True)
class CaseSetup:
    """A benchmark initial condition plus the settings that go with it.

    ``ic`` maps an array of positions to primitive rows ``[rho, U, P]``.
    ``split`` is the jump location of piecewise-constant states, or None.
    """
    name: str
    ic: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float]
    delta: float
    bc_left: str
    bc_right: str
    split: float | None = None
    q_left: np.ndarray | None = None
    q_right: np.ndarray | None = None
    collision_model: str = "constant"
    omega: float = 1.0
    lambda_left: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def gamma(self) -> float:
        return gamma_from_delta(self.delta)

    @property
    def discontinuous(self) -> bool:
        return self.split is not None


def _piecewise(q_l, q_r, split):
    q_l = np.asarray(q_l, dtype=float)
    q_r = np.asarray(q_r, dtype=float)

    def ic(x):
        x = np.asarray(x, dtype=float)
        return np.where((x <= split)[..., None], q_l, q_r)
    return ic


def smooth_pulse(beta: float = 100.0, delta: float = 0.0) -> CaseSetup:
    """Density pulse ``1 + exp(-beta (x - 0.5)^2)`` advected at U = 1, P = 1."""
    if not beta > 0.0:
        raise InvalidArgument("pulse width parameter beta must be positive")

    def ic(x):
        x = np.asarray(x, dtype=float)
        rho = 1.0 + np.exp(-beta * (x - 0.5) ** 2)
        return np.stack([rho, np.ones_like(x), np.ones_like(x)], axis=-1)
    return CaseSetup("pulse", ic, (0.0, 1.0), delta, PERIODIC, PERIODIC,
                     extras={"beta": beta})


def double_expansion(smooth: bool = False, h: float | None = None,
                     delta: float = 4.0) -> CaseSetup:
    """The 123 problem; ``smooth`` replaces the velocity jump by ``2 tanh((x - 0.5)/h)``."""
    q_l, q_r = np.array([1.0, -2.0, 0.4]), np.array([1.0, 2.0, 0.4])
    if not smooth:
        return CaseSetup("expansion", _piecewise(q_l, q_r, 0.5), (0.0, 1.0), delta,
                         DIRICHLET, DIRICHLET, 0.5, q_l, q_r)
    if h is None or not h > 0.0:
        raise InvalidArgument("smoothed expansion needs a positive width h")

    def ic(x):
        x = np.asarray(x, dtype=float)
        one = np.ones_like(x)
        return np.stack([one, 2.0 * np.tanh((x - 0.5) / h), 0.4 * one], axis=-1)
    return CaseSetup("expansion", ic, (0.0, 1.0), delta, DIRICHLET, DIRICHLET,
                     None, q_l, q_r, extras={"smooth_h": h})


def sod(delta: float = 4.0) -> CaseSetup:
    q_l, q_r = np.array([1.0, 0.0, 1.0]), np.array([0.125, 0.0, 0.1])
    return CaseSetup("sod", _piecewise(q_l, q_r, 0.5), (0.0, 1.0), delta,
                     DIRICHLET, DIRICHLET, 0.5, q_l, q_r)


def normal_shock(M: float, gamma: float = 5.0 / 3.0, omega: float = 0.81) -> CaseSetup:
    """Stationary shock on [-25, 25] with the Rankine-Hugoniot downstream state.

    The upstream mean free path is one unit (Kn = 1 on a unit length).
    """
    if not M > 1.0:
        raise InvalidArgument(f"normal shock needs M > 1, got {M}")
    q_l = np.array([1.0, M * math.sqrt(gamma), 1.0])
    q_r = rankine_hugoniot(M, gamma, q_l)
    return CaseSetup("normal_shock", _piecewise(q_l, q_r, 0.0), (-25.0, 25.0),
                     delta_from_gamma(gamma), DIRICHLET, DIRICHLET, 0.0, q_l, q_r,
                     collision_model="power_law", omega=omega, lambda_left=1.0,
                     extras={"mach": M})


def build_case(name: str, *, beta: float = 100.0, mach: float | None = None,
               smooth_ic: bool = False, smooth_h: float | None = None,
               delta: float | None = None, omega: float | None = None) -> CaseSetup:
    """Case lookup by name, used by the config front end."""
    if name == "pulse":
        return smooth_pulse(beta, 0.0 if delta is None else delta)
    if name == "expansion":
        return double_expansion(smooth_ic, smooth_h, 4.0 if delta is None else delta)
    if name == "sod":
        return sod(4.0 if delta is None else delta)
    if name == "normal_shock":
        if mach is None:
            raise InvalidArgument("normal_shock needs a Mach number")
        gamma = 5.0 / 3.0 if delta is None else gamma_from_delta(delta)
        return normal_shock(mach, gamma, 0.81 if omega is None else omega)
    raise InvalidArgument(f"unknown case {name!r}")
