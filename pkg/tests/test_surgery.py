from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anosov_models.cocycle import CocycleWord, FlowSeg, GlueAt, sample_itineraries
from anosov_models.errors import ParameterDomainError
from anosov_models.geometry import ModelParams, Point3
from anosov_models.surgery import (
    GlueFactor,
    bump_profile,
    cu_coefficients,
    glue,
    jordan_offdiagonal,
    kappa,
    matrix_table,
    phi_matrix_cu,
    phi_matrix_frame_c,
    phi_matrix_full,
    phi_matrix_su,
    rho,
    rho_prime,
    shear,
    su_slope_image,
    volume_check,
)

PROFILES = ["quintic", "balanced"]
signed_params = st.builds(
    lambda lam, m, p, r1, frac, prof: ModelParams(lam, 1, m, p, r1, frac * r1, prof),
    st.floats(0.05, 0.95),
    st.sampled_from([-3, -2, -1, 1, 2, 3]),
    st.integers(1, 3),
    st.floats(0.05, 0.9),
    st.floats(0.05, 0.9),
    st.sampled_from(PROFILES),
)


def frame_c_basis(params: ModelParams, r: float) -> np.ndarray:
    """Columns: X, d/dy and d/dz written in {X, e_s, e_u} at the entry point."""
    a = params.log_lam
    y = r if params.m < 0 else -r
    npp = params.n * params.p
    # X = a x e_s - a y e_u + d/dz / (n p), solved for d/dz at x = r1
    dz = npp * np.array([1.0, -a * params.r1, a * y])
    return np.column_stack([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], dz])


@pytest.mark.parametrize("profile", PROFILES)
def test_profile_plateaus_and_monotone(profile):
    assert rho(0.2, profile) == 1.0
    assert rho(0.8, profile) == 0.0
    ts = np.linspace(1 / 3 + 1e-6, 2 / 3 - 1e-6, 500)
    assert all(rho_prime(float(t), profile) < 0 for t in ts)
    values = [rho(float(t), profile) for t in np.linspace(0, 1, 400)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_quintic_midpoint_and_peak():
    assert rho(0.5, "quintic") == pytest.approx(0.5, abs=1e-15)
    assert abs(rho_prime(0.5, "quintic")) == pytest.approx(45 / 8)


@pytest.mark.parametrize("profile", PROFILES)
def test_profile_derivative_matches_finite_difference(profile):
    h = 1e-6
    for t in np.linspace(0.01, 0.99, 97):
        fd = (rho(float(t) + h, profile) - rho(float(t) - h, profile)) / (2 * h)
        assert rho_prime(float(t), profile) == pytest.approx(fd, abs=1e-5)


def test_profile_domain():
    with pytest.raises(ParameterDomainError):
        rho(1.2)
    with pytest.raises(ParameterDomainError):
        rho_prime(-0.1)
    with pytest.raises(ParameterDomainError):
        bump_profile("cosine")


def test_glue_examples():
    params = ModelParams(0.5, 2, -1, 1, 0.4, 0.1)
    pt = Point3(0.4, 0.09, 0.3)
    assert glue(params, pt) == pt
    out = glue(params, Point3(0.4, 0.01, 0.3))
    assert out.z == pytest.approx(0.8, abs=1e-12)
    # the lower annulus is not twisted for m < 0
    assert glue(params, Point3(0.4, -0.01, 0.3)) == Point3(0.4, -0.01, 0.3)
    with pytest.raises(ParameterDomainError):
        glue(params, Point3(0.0, 0.0, 0.0))


def test_glue_positive_m_twists_lower_annulus():
    params = ModelParams(0.5, 2, 1, 1, 0.4, 0.1)
    assert glue(params, Point3(0.4, -0.01, 0.3)).z == pytest.approx(0.8, abs=1e-12)
    assert glue(params, Point3(0.4, 0.01, 0.3)).z == pytest.approx(0.3, abs=1e-12)


@pytest.mark.parametrize("m", [-3, -1, 1, 3])
def test_glue_well_defined_on_seam(m):
    params = ModelParams(0.5, 2, m, 1, 0.4, 0.1)
    shift = params.seam_shift
    for z in np.random.default_rng(0).uniform(0, 1, 1000):
        # one boundary point in the quadrant-4 and quadrant-1 charts; the twist
        # absorbs the m/n seam, so the two images coincide
        via4 = glue(params, Point3(params.r1, 0.0, float(z)), chart=4)
        via1 = glue(params, Point3(params.r1, 0.0, float(z) + shift), chart=1)
        d = abs(via4.z - via1.z)
        assert min(d, 1 - d) < 1e-12


def test_full_matrix_example(toy_params):
    full = phi_matrix_full(toy_params, 0.05)
    assert kappa(toy_params, 0.05) == pytest.approx(5.625)
    assert full[1, 2] == pytest.approx(5.625 * math.log(0.5) * 4.0, rel=1e-12)
    # rounded reference value
    assert full[1, 2] == pytest.approx(-15.596, abs=1e-3)
    assert np.linalg.det(full) == pytest.approx(1.0, abs=1e-12)


def test_su_matrix_example(toy_params):
    su = phi_matrix_su(toy_params, 0.05)
    big_k = -math.log(2) * 5.625 * 0.5
    oracle = np.array([[1 + big_k, big_k / 0.125], [-big_k * 0.125, 1 - big_k]])
    assert su == pytest.approx(oracle, rel=1e-12)
    # rounded reference figures; they agree to about 3e-3
    assert su == pytest.approx(np.array([[-0.9499, -15.599], [0.2437, 2.9499]]), abs=4e-3)
    assert np.linalg.det(su) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("u", [0.0, 0.1, 0.33, 0.7, 0.9, 1.0])
def test_off_support_is_identity(toy_params, u):
    r = u * toy_params.r2
    assert kappa(toy_params, r) == 0.0
    assert shear(toy_params, r) == 0.0
    assert np.array_equal(phi_matrix_full(toy_params, r), np.eye(3))
    assert np.array_equal(phi_matrix_su(toy_params, r), np.eye(2))
    assert np.array_equal(phi_matrix_cu(toy_params, r, -1.0), np.eye(2))


@given(signed_params, st.floats(0, 1))
def test_full_matrix_is_frame_c_conjugate(params, u):
    r = u * params.r2
    basis = frame_c_basis(params, r)
    conj = basis @ phi_matrix_frame_c(params, r) @ np.linalg.inv(basis)
    assert np.allclose(conj, phi_matrix_full(params, r), atol=1e-12 * max(1.0, np.abs(conj).max()))


@given(signed_params, st.floats(0, 1))
def test_unipotent_structure(params, u):
    r = u * params.r2
    su = phi_matrix_su(params, r)
    full = phi_matrix_full(params, r)
    assert np.trace(su) == pytest.approx(2.0, abs=1e-12)
    assert np.linalg.det(su) == pytest.approx(1.0, abs=1e-9)
    assert np.linalg.det(full) == pytest.approx(1.0, abs=1e-9)
    nil = su - np.eye(2)
    assert np.abs(nil @ nil).max() <= 1e-10 * max(1.0, np.abs(su).max() ** 2)
    # the su block is the action on the quotient by the flow direction
    assert np.allclose(full[1:, 1:], su, atol=1e-12 * max(1.0, np.abs(su).max()))
    assert np.array_equal(full[:, 0], [1.0, 0.0, 0.0])


@given(signed_params, st.floats(1 / 3 + 1e-3, 2 / 3 - 1e-3))
def test_eigenvector_and_jordan_form(params, u):
    r = u * params.r2
    su = phi_matrix_su(params, r)
    sigma = 1 if params.m < 0 else -1
    w = r / params.r1
    eig = np.array([-sigma, w])
    assert su @ eig == pytest.approx(eig, abs=1e-9 * max(1.0, np.abs(su).max()))
    other = np.array([w, sigma])
    nil_image = (su - np.eye(2)) @ other
    eta = jordan_offdiagonal(params, r)
    assert nil_image == pytest.approx(eta * params.r1 / params.r2 * eig, rel=1e-9, abs=1e-9)


@given(signed_params, st.floats(0, 1), st.floats(-3, 3))
def test_cu_matrix_is_restriction_of_full(params, u, alpha_scale):
    r = u * params.r2
    alpha = alpha_scale / params.ratio
    full = phi_matrix_full(params, r)
    image = full @ np.array([0.0, alpha, 1.0])
    big_a, big_b = cu_coefficients(params, r, alpha)
    assert big_a == pytest.approx(image[0], rel=1e-9, abs=1e-9)
    assert big_b == pytest.approx(image[2], rel=1e-9, abs=1e-9)
    if abs(big_b) > 1e-6:
        assert su_slope_image(params, r, alpha) == pytest.approx(image[1] / image[2], rel=1e-8, abs=1e-8)


def test_cu_example(toy_params):
    big_a, big_b = cu_coefficients(toy_params, 0.05, 0.0)
    big_k = shear(toy_params, 0.05)
    assert big_k == pytest.approx(-1.9495, abs=1e-4)
    assert big_b == pytest.approx(1 - big_k, rel=1e-12)
    assert big_b == pytest.approx(2.9495, abs=1e-4)


def test_b_positive_on_grid(toy_params):
    bs = [cu_coefficients(toy_params, float(r), 0.0)[1] for r in np.linspace(0, toy_params.r2, 10_000)]
    assert min(bs) >= 1.0


def test_glue_factor_record(toy_params):
    g = GlueFactor(toy_params, 0.05, 0.2)
    assert g.base_point == Point3(0.4, 0.05, 0.2)
    assert g.kappa == pytest.approx(5.625)
    assert np.array_equal(g.full, phi_matrix_full(toy_params, 0.05))
    assert np.array_equal(g.su, phi_matrix_su(toy_params, 0.05))
    assert np.array_equal(g.frame_c, phi_matrix_frame_c(toy_params, 0.05))
    assert GlueFactor(ModelParams(0.5, 1, 1, 1, 0.4, 0.1), 0.05).base_point.y == -0.05


def test_volume_examples(toy_params):
    assert volume_check(toy_params, CocycleWord()) == 0.0
    word = CocycleWord((FlowSeg(0.0), GlueAt(0.05), FlowSeg(0.0)))
    assert volume_check(toy_params, word) <= 1e-12
    for word in sample_itineraries(toy_params, 200, 20, 2.0, seed=4):
        assert volume_check(toy_params, word) <= 1e-9


def test_volume_check_agrees_with_direct_determinant_on_short_words(toy_params):
    """For short flow times the LU determinant of the product is accurate too."""
    from anosov_models.cocycle import dpsi_full

    words = sample_itineraries(toy_params, 200, 9, 0.2, seed=6, end_time_max=0.2, interior_spread=0.2)
    for word in words:
        direct = abs(np.linalg.det(dpsi_full(toy_params, word)) - 1.0)
        assert volume_check(toy_params, word) <= 1e-12
        assert direct <= 1e-9


def test_matrix_table(toy_params):
    rows = matrix_table(toy_params, 11)
    assert len(rows) == 11
    assert all(abs(row["det"] - 1) < 1e-12 and abs(row["trace"] - 2) < 1e-12 for row in rows)
