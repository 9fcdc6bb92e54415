import json
import math

import numpy as np
import pytest

from kinetic_spectral.errors import DomainError, InvariantViolation, TruncationMismatch
from kinetic_spectral.kernel import CollisionKernel, MomentRoute
from kinetic_spectral.spectrum import (
    SpectralTable,
    asymptote_ratio,
    build_table,
    check_table,
    convolution_sum_ratio,
    lambda_general,
    lambda_radial,
    mu,
    mu_prefactor,
    self_interaction_coefficients,
    superadditivity_integrand,
    superadditivity_margin,
)

LAMBDA_2_AT_S2 = 2.0 / 3.0 - math.sqrt(2.0) / 6.0
MU_11_AT_S2 = math.sqrt(10.0 / 3.0) * (1.0 - 2.0**-1.5) / 3.0


def test_collision_invariants_have_zero_eigenvalue() -> None:
    kernel = CollisionKernel(s=1.0)

    assert lambda_radial(kernel, 0) == 0.0
    assert lambda_radial(kernel, 1) == 0.0
    assert lambda_general(kernel, 0, 0) == 0.0
    assert lambda_general(kernel, 1, 0) == 0.0
    assert lambda_general(kernel, 0, 1) == 0.0


def test_radial_eigenvalues_at_s2() -> None:
    kernel = CollisionKernel(s=2.0)

    assert lambda_radial(kernel, 2) == pytest.approx(LAMBDA_2_AT_S2, abs=1e-9)
    # 1 - c^6 - s^6 = 3 s^2 c^2
    assert lambda_radial(kernel, 3) == pytest.approx(1.5 * LAMBDA_2_AT_S2, abs=1e-9)


def test_general_eigenvalue_reduces_to_radial() -> None:
    kernel = CollisionKernel(s=1.0)

    assert lambda_general(kernel, 3, 0) == pytest.approx(lambda_radial(kernel, 3), abs=1e-9)


@pytest.mark.parametrize("n, l", [(0, 2), (1, 1), (2, 3)])
def test_general_eigenvalues_off_the_invariants_are_positive(n: int, l: int) -> None:
    assert lambda_general(CollisionKernel(s=1.0), n, l) > 0.0


def test_coupling_at_s2() -> None:
    assert mu(CollisionKernel(s=2.0), 1, 1) == pytest.approx(MU_11_AT_S2, abs=1e-9)


def test_coupling_prefactor() -> None:
    assert mu_prefactor(1, 1) == pytest.approx(math.sqrt(10.0 / 3.0), rel=1e-14)
    assert mu_prefactor(2, 7) == pytest.approx(mu_prefactor(7, 2), rel=1e-13)


def test_coupling_is_not_symmetric() -> None:
    kernel = CollisionKernel(s=1.0)

    assert mu(kernel, 1, 3) != pytest.approx(mu(kernel, 3, 1), rel=1e-3)


def test_coupling_routes_agree() -> None:
    kernel = CollisionKernel(s=1.0)

    assert mu(kernel, 4, 4, route=MomentRoute.SUBSTITUTED) == pytest.approx(
        mu(kernel, 4, 4), rel=1e-9
    )


def test_coupling_rejects_zero_index() -> None:
    with pytest.raises(DomainError):
        mu(CollisionKernel(s=1.0), 0, 2)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_self_interaction_sums_to_minus_eigenvalue(s: float) -> None:
    kernel = CollisionKernel(s=s)
    for n in range(17):
        i1, i2 = self_interaction_coefficients(kernel, n)
        assert i1 + i2 == pytest.approx(-lambda_radial(kernel, n), abs=1e-9)


def test_superadditivity_integrand_is_positive() -> None:
    thetas = np.linspace(math.pi / 400, math.pi / 4, 100)
    for k in range(2, 11):
        for l in range(2, 11):
            assert all(superadditivity_integrand(float(t), k, l) > 0.0 for t in thetas)


def test_small_table(table_s2: SpectralTable) -> None:
    assert table_s2.lambdas.shape == (13,)
    assert table_s2.mu.shape == (13, 13)
    assert table_s2.lambda_n(2) == pytest.approx(LAMBDA_2_AT_S2, abs=1e-9)
    assert table_s2.mu_kl(1, 1) == pytest.approx(MU_11_AT_S2, abs=1e-9)
    assert np.all(np.diff(table_s2.lambdas[2:]) > 0.0)
    assert not table_s2.lambdas.flags.writeable


def test_minimal_table_holds_first_coupling() -> None:
    table = build_table(CollisionKernel(s=1.0), 2)

    assert table.lambdas[0] == table.lambdas[1] == 0.0
    assert table.lambdas[2] > 0.0
    assert table.mu_kl(1, 1) > 0.0
    assert superadditivity_margin(table).k is None


def test_table_index_errors(table_s1: SpectralTable) -> None:
    with pytest.raises(DomainError):
        table_s1.lambda_n(13)
    with pytest.raises(DomainError):
        table_s1.mu_kl(0, 3)
    with pytest.raises(DomainError):
        table_s1.mu_kl(6, 7)
    with pytest.raises(TruncationMismatch):
        table_s1.require_couplings(13)


def test_table_document_round_trip_is_exact(table_s1: SpectralTable) -> None:
    doc = json.loads(json.dumps(table_s1.to_document()))

    restored = SpectralTable.from_document(doc)

    assert doc["kernel"] == "debye-yukawa-representative"
    assert restored.s == table_s1.s and restored.N == table_s1.N
    assert np.array_equal(restored.lambdas, table_s1.lambdas)
    assert np.array_equal(restored.mu, table_s1.mu)


def test_table_document_rejects_other_kernels(table_s1: SpectralTable) -> None:
    doc = table_s1.to_document()
    doc["kernel"] = "hard-spheres"

    with pytest.raises(ValueError):
        SpectralTable.from_document(doc)


def test_check_table_names_failing_entry() -> None:
    table = SpectralTable(
        s=1.0, N=3, tol=1e-10, coupling_order=0, lambdas=[0.0, 0.0, 0.5, 0.4], mu=[[0.0]]
    )

    with pytest.raises(InvariantViolation, match="n=3"):
        check_table(table)


def test_check_table_rejects_nonzero_invariants() -> None:
    table = SpectralTable(
        s=1.0, N=2, tol=1e-10, coupling_order=0, lambdas=[0.0, 1e-12, 0.5], mu=[[0.0]]
    )

    with pytest.raises(InvariantViolation):
        check_table(table)


def test_parallel_build_matches_serial() -> None:
    kernel = CollisionKernel(s=1.5)

    serial = build_table(kernel, 6)
    parallel = build_table(kernel, 6, workers=2)

    assert np.array_equal(serial.lambdas, parallel.lambdas)
    assert np.array_equal(serial.mu, parallel.mu)


def test_superadditivity_margin_is_positive(table_s1: SpectralTable) -> None:
    margin = superadditivity_margin(table_s1)

    assert margin.margin > 0.0
    assert 2 <= margin.k <= margin.l


def test_asymptote_ratio(table_s2: SpectralTable) -> None:
    assert asymptote_ratio(table_s2, 2) == pytest.approx(
        table_s2.lambdas[2] / math.log(6.5), rel=1e-15
    )
    with pytest.raises(DomainError):
        asymptote_ratio(table_s2, 1)


def test_convolution_sum_ratio(table_s2: SpectralTable) -> None:
    def level(n: int) -> float:
        return math.log(2 * n + 2.5)

    expected = (
        table_s2.mu[3, 1] ** 2 / level(1)
        + table_s2.mu[2, 2] ** 2 / level(2)
        + table_s2.mu[1, 3] ** 2 / level(3)
    ) / level(4)

    assert convolution_sum_ratio(table_s2, 4) == pytest.approx(expected, rel=1e-14)
    assert convolution_sum_ratio(table_s2, 2) == pytest.approx(
        table_s2.mu[1, 1] ** 2 / level(1) / level(2), rel=1e-14
    )
    with pytest.raises(DomainError):
        convolution_sum_ratio(table_s2, 13)


@pytest.mark.slow
@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_superadditivity_up_to_64(s: float) -> None:
    table = build_table(CollisionKernel(s=s), 64, coupling_order=0)

    assert superadditivity_margin(table).margin > 0.0


@pytest.mark.slow
@pytest.mark.parametrize("s", [0.5, 1.0, 1.5, 2.0])
def test_asymptote_ratio_stays_in_a_window(s: float) -> None:
    table = build_table(CollisionKernel(s=s), 512, coupling_order=0)
    ratios = [asymptote_ratio(table, n) for n in range(2, 513)]

    assert max(ratios) / min(ratios) < 50.0


@pytest.mark.slow
@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_convolution_sum_ratio_stays_bounded(s: float) -> None:
    table = build_table(CollisionKernel(s=s), 256, workers=4)
    ratios = np.array([convolution_sum_ratio(table, n) for n in range(2, 257)])

    assert np.all(np.isfinite(ratios))
    assert ratios[128:].max() < 2.0 * ratios[64:128].max()


@pytest.mark.slow
def test_coupling_routes_agree_up_to_order_40() -> None:
    kernel = CollisionKernel(s=1.0)
    for k in range(1, 40):
        for l in range(1, 41 - k):
            assert mu(kernel, k, l, route=MomentRoute.SUBSTITUTED) == pytest.approx(
                mu(kernel, k, l), rel=1e-9
            )
