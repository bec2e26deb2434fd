import numpy as np
import pytest

from proxlm import CompositeProblem, QuadraticLoss, ZeroRegularizer


@pytest.fixture
def toy_quadratic():
    """1-D instance c(x) = x^2 - 2 with half-squared loss and no regularizer.

    Linearized at x_k = 2 with damping mu = 2 the model gradient is
    4*(2 + 4*(x - 2)) + 2*(x - 2), whose unique zero is x = 14/9.
    """

    def residual(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return x * x - 2.0

    def jvp_at(x):
        xb = float(np.atleast_1d(x)[0])
        return (lambda u: 2.0 * xb * np.atleast_1d(u),
                lambda v: 2.0 * xb * np.atleast_1d(v))

    return CompositeProblem(
        dim_x=1, dim_r=1, residual=residual, jvp_at=jvp_at,
        outer_loss=QuadraticLoss(0.5), regularizer=ZeroRegularizer(),
        lipschitz_jac=2.0, name="toy_quadratic")
