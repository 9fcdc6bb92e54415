import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinetic_spectral.errors import InvalidDomain, NonConvergence
from kinetic_spectral.quad import integrate


def test_polynomial() -> None:
    result = integrate(lambda x: x * x, 0.0, 1.0)

    assert result.value == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert result.error_estimate >= 0.0
    assert result.evaluations >= 1


def test_inverse_square_root_singularity() -> None:
    result = integrate(lambda x: 1.0 / math.sqrt(x), 0.0, 1.0, singular_at_a=True)

    assert result.value == pytest.approx(2.0, abs=1e-9)


def test_logarithmic_singularity() -> None:
    result = integrate(lambda x: -math.log(x), 0.0, 1.0, singular_at_a=True)

    assert result.value == pytest.approx(1.0, abs=1e-9)


def test_logarithmic_singularity_on_half_interval() -> None:
    result = integrate(lambda x: -math.log(x), 0.0, 0.5, singular_at_a=True)

    assert result.value == pytest.approx(0.5 + 0.5 * math.log(2.0), abs=1e-10)
    assert result.value == pytest.approx(0.8465736, abs=1e-7)


def test_exhausted_budget_does_not_converge() -> None:
    # one 21-point rule cannot resolve ~50 oscillations
    with pytest.raises(NonConvergence) as excinfo:
        integrate(lambda x: math.sin(300.0 * x), 0.0, 1.0, max_evaluations=21)

    assert excinfo.value.evaluations <= 21
    assert math.isfinite(excinfo.value.value)


def test_budget_large_enough_converges() -> None:
    result = integrate(lambda x: math.sin(300.0 * x), 0.0, 1.0, max_evaluations=20_000)

    assert result.value == pytest.approx((1.0 - math.cos(300.0)) / 300.0, abs=1e-9)
    assert result.evaluations <= 20_000


def test_log_power_singularity_of_kernel_type() -> None:
    # ∫_0^{1/2} (log 1/x)^2 dx = x (log^2 x - 2 log x + 2) at 1/2
    a = math.log(2.0)
    expected = 0.5 * (a * a + 2.0 * a + 2.0)

    result = integrate(lambda x: math.log(x) ** 2, 0.0, 0.5, singular_at_a=True)

    assert result.value == pytest.approx(expected, rel=1e-10)


def test_slowly_decaying_tail_does_not_converge() -> None:
    # after the substitution the integrand decays only like u^{-3}
    with pytest.raises(NonConvergence):
        integrate(lambda x: 1.0 / (x * (-math.log(x)) ** 3), 0.0, 0.5, singular_at_a=True)


@pytest.mark.parametrize("a, b", [(1.0, 1.0), (1.0, 0.0), (0.0, math.inf), (math.nan, 1.0)])
def test_invalid_interval(a: float, b: float) -> None:
    with pytest.raises(InvalidDomain):
        integrate(lambda x: x, a, b)


def test_invalid_tolerance() -> None:
    with pytest.raises(InvalidDomain):
        integrate(lambda x: x, 0.0, 1.0, tol=0.0)
    with pytest.raises(InvalidDomain):
        integrate(lambda x: x, 0.0, 1.0, abs_tol=-1.0)


@settings(max_examples=50, deadline=None)
@given(
    alpha=st.floats(min_value=-5.0, max_value=5.0),
    beta=st.floats(min_value=-5.0, max_value=5.0),
)
def test_linearity(alpha: float, beta: float) -> None:
    f = lambda x: math.sqrt(x) * math.cos(x)  # noqa: E731
    g = lambda x: -math.log(x)  # noqa: E731

    combined = integrate(lambda x: alpha * f(x) + beta * g(x), 0.0, 1.0, singular_at_a=True).value
    separate = (
        alpha * integrate(f, 0.0, 1.0, singular_at_a=True).value
        + beta * integrate(g, 0.0, 1.0, singular_at_a=True).value
    )

    assert combined == pytest.approx(separate, abs=1e-8)
