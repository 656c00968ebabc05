import numpy as np
import pytest

from src.control.pid import PIDLoop, pid_step
from src.core.errors import DomainError
from src.core.models import LoopGains


def test_proportional_output():
    loop = PIDLoop("position", LoopGains(kp=(2.0, 3.0, 4.0)))
    np.testing.assert_allclose(loop.step([1.0, 1.0, -0.5], 0.01), [2.0, 3.0, -2.0])


def test_integrator_is_clipped():
    loop = PIDLoop("velocity", LoopGains(ki=(1.0, 1.0, 1.0), integrator_limit=(0.5, 0.5, 0.5)))
    for _ in range(100):
        loop.step([1.0, -1.0, 0.0], 0.01)
    np.testing.assert_allclose(loop.integral, [0.5, -0.5, 0.0])


def test_output_saturates():
    loop = PIDLoop("rate", LoopGains(kp=(10.0, 10.0, 10.0), output_limit=(1.0, 2.0, 3.0)))
    output = loop.step([1.0, -1.0, 0.1], 0.01)
    np.testing.assert_allclose(output, [1.0, -2.0, 1.0])
    assert list(loop.saturated) == [True, True, False]


def test_derivative_from_finite_difference():
    loop = PIDLoop("attitude", LoopGains(kd=(1.0, 1.0, 1.0)))
    np.testing.assert_allclose(loop.step([0.0, 0.0, 0.0], 0.1), [0.0, 0.0, 0.0])
    np.testing.assert_allclose(loop.step([0.1, 0.2, 0.0], 0.1), [1.0, 2.0, 0.0])
    np.testing.assert_allclose(pid_step(loop, [0.1, 0.2, 0.0], [5.0, 0.0, 0.0], 0.1), [5.0, 0.0, 0.0])


def test_back_calculation_unwinds_integral():
    gains = dict(kp=(1.0, 1.0, 1.0), ki=(1.0, 1.0, 1.0), integrator_limit=(10.0, 10.0, 10.0),
                 output_limit=(0.5, 0.5, 0.5))
    plain = PIDLoop("velocity", LoopGains(**gains))
    unwinding = PIDLoop("velocity", LoopGains(back_calculation=5.0, **gains))
    for _ in range(50):
        plain.step([1.0, 0.0, 0.0], 0.01)
        unwinding.step([1.0, 0.0, 0.0], 0.01)
    assert unwinding.integral[0] < plain.integral[0]


def test_reseed_reproduces_requested_output():
    loop = PIDLoop("velocity", LoopGains(kp=(1.0, 1.0, 1.0), ki=(10.0, 10.0, 0.0)))
    output = loop.reseed([1.0, 2.0, 3.0], [0.1, 0.1, 0.1])
    np.testing.assert_allclose(loop.integral, [0.09, 0.19, 0.0])
    np.testing.assert_allclose(output, [1.0, 2.0, 0.1])


def test_reset_clears_memory():
    loop = PIDLoop("velocity", LoopGains(kp=(1.0, 1.0, 1.0), ki=(1.0, 1.0, 1.0)))
    loop.step([1.0, 1.0, 1.0], 0.01)
    loop.reset()
    assert loop.previous_error is None
    np.testing.assert_allclose(loop.integral, np.zeros(3))
    np.testing.assert_allclose(loop.last_output, np.zeros(3))


def test_step_requires_positive_dt():
    loop = PIDLoop("position", LoopGains())
    with pytest.raises(DomainError):
        loop.step([0.0, 0.0, 0.0], 0.0)
