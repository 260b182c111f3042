import math

import numpy as np
import pytest

from bgkfr import cases, macro
from bgkfr.phase_grid import InvalidArgument


def test_gamma_delta_conversion():
    assert cases.gamma_from_delta(0) == 3.0
    assert cases.gamma_from_delta(4) == pytest.approx(1.4)
    assert cases.delta_from_gamma(5 / 3) == pytest.approx(2.0)
    for d in (0.0, 1.0, 2.5, 4.0):
        assert cases.delta_from_gamma(cases.gamma_from_delta(d)) == pytest.approx(d)


def test_pulse():
    c = cases.smooth_pulse()
    q = c.ic(np.array([0.5, 0.0]))
    np.testing.assert_allclose(q[0], [2.0, 1.0, 1.0])
    assert q[1, 0] == pytest.approx(1 + math.exp(-25))
    assert c.bc_left == c.bc_right == "periodic" and not c.discontinuous
    with pytest.raises(InvalidArgument):
        cases.smooth_pulse(beta=0.0)


def test_sod():
    c = cases.sod()
    q = c.ic(np.array([0.2, 0.5, 0.7]))
    np.testing.assert_allclose(q[:2], [[1.0, 0.0, 1.0]] * 2)
    np.testing.assert_allclose(q[2], [0.125, 0.0, 0.1])
    assert c.gamma == pytest.approx(1.4)
    assert c.q_left[0] / c.q_right[0] == 8.0


def test_expansion_variants():
    c = cases.double_expansion()
    np.testing.assert_allclose(c.ic(np.array([0.1, 0.9])), [[1, -2, 0.4], [1, 2, 0.4]])
    s = cases.double_expansion(smooth=True, h=0.01)
    q = s.ic(np.array([0.5, 0.0, 1.0]))
    assert q[0, 1] == 0.0 and q[1, 1] == pytest.approx(-2.0) and q[2, 1] == pytest.approx(2.0)
    assert not s.discontinuous
    with pytest.raises(InvalidArgument):
        cases.double_expansion(smooth=True)


def test_normal_shock():
    c = cases.normal_shock(3.8)
    assert c.q_left[1] == pytest.approx(4.906, abs=1e-3)
    assert c.delta == pytest.approx(2.0)
    assert c.domain == (-25.0, 25.0)
    assert c.collision_model == "power_law" and c.omega == 0.81 and c.lambda_left == 1.0
    np.testing.assert_allclose(c.q_right, macro.rankine_hugoniot(3.8, 5 / 3, c.q_left))
    near = cases.normal_shock(1.0 + 1e-9)
    np.testing.assert_allclose(near.q_right, near.q_left, rtol=1e-8)
    assert cases.normal_shock(9.0).extras["mach"] == 9.0
    with pytest.raises(InvalidArgument):
        cases.normal_shock(1.0)


@pytest.mark.parametrize("name,kw", [("pulse", {}), ("sod", {}), ("expansion", {}),
                                     ("expansion", {"smooth_ic": True, "smooth_h": 0.01}),
                                     ("normal_shock", {"mach": 3.8})])
def test_builders_are_admissible(name, kw):
    c = cases.build_case(name, **kw)
    a, b = c.domain
    q = c.ic(np.linspace(a, b, 1001))
    assert np.all(q[:, 0] > 0) and np.all(q[:, 2] > 0)


def test_build_case_errors():
    with pytest.raises(InvalidArgument):
        cases.build_case("kelvin_helmholtz")
    with pytest.raises(InvalidArgument):
        cases.build_case("normal_shock")


def test_build_case_delta_override():
    assert cases.build_case("sod", delta=2.0).gamma == pytest.approx(5 / 3)
    assert cases.build_case("normal_shock", mach=2.0, delta=4.0).gamma == pytest.approx(1.4)
