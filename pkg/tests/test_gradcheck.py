"""Backward of every differentiable op against central differences."""

import numpy as np
import pytest

from autodiff.gradcheck import grad_check, numeric_gradient, relative_error
from autodiff.tensor import Function, Tensor
from config.errors import ContractError
from phase5_interface.gradcheck_suite import (
    MODEL_TOLERANCE,
    OP_CASES,
    OP_TOLERANCE,
    check_case,
    check_model,
    run_gradcheck_suite,
)


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("op", sorted(OP_CASES))
def test_op_gradient_matches_central_differences(op, seed):
    assert check_case(op, seed) < OP_TOLERANCE


def test_desk_model_gradient_matches_central_differences():
    assert check_model("desk") < MODEL_TOLERANCE


def test_numeric_gradient_of_cubic():
    x = np.array([1.0, -2.0, 0.5])
    grad = numeric_gradient(lambda a: float(np.sum(a ** 3)), x)
    np.testing.assert_allclose(grad, 3 * x ** 2, rtol=1e-8)


def test_relative_error_floor_keeps_zero_gradients_finite():
    assert relative_error(np.array(0.0), np.array(0.0)) == 0.0
    assert relative_error(np.array(1.0), np.array(1.1)) == pytest.approx(0.1 / 1.1)


def test_float32_inputs_are_rejected():
    x = Tensor(np.ones(3, dtype=np.float32), requires_grad=True)
    with pytest.raises(ContractError):
        grad_check(lambda t: t.sum(), [x])


class _BadSquare(Function):
    op_name = "bad_square"

    def forward(self, a):
        self.a = a
        return a * a

    def backward(self, grad):
        return (grad * 4.0 * self.a,)


def test_wrong_backward_is_detected():
    x = Tensor(np.array([0.3, 0.7]), requires_grad=True, dtype=np.float64)
    assert grad_check(lambda t: t * t, [x]) < OP_TOLERANCE
    assert grad_check(lambda t: _BadSquare.apply(t), [x]) > 0.4


def test_suite_reports_every_op():
    errors, passed = run_gradcheck_suite(cases=1, include_model=False, verbose=False)
    assert set(errors) == set(OP_CASES)
    assert passed
