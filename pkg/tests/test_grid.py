import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otoclab.grid import (
    GridError,
    GridSpec,
    QuantumState,
    angle_distribution,
    apply_p,
    apply_theta,
    make_gaussian_state,
    mean_energy,
    momentum_distribution,
    norm,
    plane_wave,
    theta_second_moment,
    to_grid,
    to_momentum,
)
from otoclab.propagator import FloquetParams, step_forward

import oracles


def random_state(grid, seed):
    rng = np.random.default_rng(seed)
    return QuantumState(rng.normal(size=grid.N) + 1j * rng.normal(size=grid.N), grid)


def symmetric_random_state(grid, seed):
    rng = np.random.default_rng(seed)
    half = rng.normal(size=grid.N // 2) + 1j * rng.normal(size=grid.N // 2)
    a = np.zeros(grid.N, dtype=complex)
    a[: grid.N // 2] = half
    a[grid.N // 2 + 1 :] = half[1:][::-1]
    a[grid.N // 2] = 0  # n = -N/2 has no partner
    return QuantumState(a / np.sqrt(np.vdot(a, a).real), grid)


@pytest.mark.parametrize("N", [7, 6, 0, -4, 9.5])
def test_grid_rejects_bad_sizes(N):
    with pytest.raises(GridError, match="even"):
        GridSpec(N, 0.6)


def test_grid_rejects_bad_hbar():
    with pytest.raises(GridError):
        GridSpec(16, 0.0)


def test_signed_accessors():
    g = GridSpec(8, 0.5)
    s = plane_wave(-4, g)
    assert s.signed()[0] == 1
    assert s.amplitude(-4) == 1
    np.testing.assert_array_equal(np.sort(g.indices), g.signed_indices)
    with pytest.raises(IndexError):
        s.amplitude(4)


def test_state_is_immutable():
    s = plane_wave(0, GridSpec(8, 0.6))
    with pytest.raises(ValueError):
        s.amplitudes[0] = 2.0


@pytest.mark.parametrize("seed", range(5))
def test_round_trip_transform(seed):
    a = random_state(GridSpec(256, 0.6), seed).amplitudes
    back = to_momentum(to_grid(a))
    assert np.max(np.abs(back - a)) <= 1e-13 * np.max(np.abs(a))


@pytest.mark.parametrize("seed", range(5))
def test_parseval(seed):
    s = random_state(GridSpec(512, 0.6), seed)
    assert np.isclose(angle_distribution(s).total, norm(s), rtol=1e-12)


def test_gaussian_norm_parity_energy():
    g = GridSpec(1024, 0.6)
    s = make_gaussian_state(1.0, g)
    assert abs(norm(s) - 1) < 1e-13
    a = s.signed()
    # n = -N/2 has no mirror; compare n and -n for |n| < N/2
    np.testing.assert_allclose(a[1:], a[1:][::-1], atol=1e-15)
    # oracle: quadrature of hbar^2 |d psi / d theta|^2 for the periodized packet
    th = np.linspace(-np.pi, np.pi, 200001)
    shifted = th[None, :] + 2 * np.pi * np.arange(-3, 4)[:, None]
    psi = np.exp(-shifted ** 2 / 2).sum(axis=0)
    dpsi = (-shifted * np.exp(-shifted ** 2 / 2)).sum(axis=0)
    e_quad = 0.36 * np.trapezoid(dpsi ** 2, th) / np.trapezoid(psi ** 2, th)
    assert abs(mean_energy(s) - e_quad) / e_quad < 1e-6
    assert abs(mean_energy(s) - 0.18) / 0.18 < 0.01


def test_gaussian_matches_independent_construction():
    g = GridSpec(64, 0.6)
    s = make_gaussian_state(1.0, g)
    np.testing.assert_allclose(s.signed(), oracles.gaussian(64, 1.0), atol=1e-14)


def test_gaussian_rejects_tiny_sigma():
    with pytest.raises(GridError, match="periodization"):
        make_gaussian_state(1e-4, GridSpec(64, 0.6))
    with pytest.raises(GridError):
        make_gaussian_state(-1.0, GridSpec(64, 0.6))


def test_norm_examples():
    g = GridSpec(1024, 0.6)
    assert norm(QuantumState(np.zeros(1024), g)) == 0
    s = make_gaussian_state(1.0, g)
    assert np.isclose(norm(apply_p(s)), mean_energy(s), rtol=1e-14)


def test_mean_energy_examples():
    g = GridSpec(64, 0.6)
    assert np.isclose(mean_energy(plane_wave(3, g)), 3.24)
    s = make_gaussian_state(1.0, g)
    assert np.isclose(mean_energy(s.scaled(np.sqrt(2.5))), 2.5 * mean_energy(s))


def test_apply_p():
    g = GridSpec(32, 0.6)
    assert norm(apply_p(plane_wave(0, g))) == 0
    out = apply_p(plane_wave(2, g))
    assert np.isclose(out.amplitude(2), 1.2)
    even = symmetric_random_state(g, 3)
    odd = apply_p(even).signed()
    np.testing.assert_allclose(odd[1:], -odd[1:][::-1], atol=1e-15)


def test_theta_on_plane_wave():
    N, m = 32, 3
    out = apply_theta(plane_wave(m, GridSpec(N, 0.6))).signed()
    n = np.arange(-N // 2, N // 2)
    expect = np.where(n == m, np.pi, 0j)
    expect[n != m] = 1.0 / (1j * (m - n[n != m]))
    np.testing.assert_allclose(out, expect, atol=1e-13)


@pytest.mark.parametrize("N", [8, 16, 64, 128, 256])
def test_theta_toeplitz_equals_dense_matrix(N):
    g = GridSpec(N, 0.6)
    M = oracles.theta_matrix(N)
    for seed in range(20):
        s = random_state(g, seed)
        ref = M @ s.signed()
        out = apply_theta(s).signed()
        assert np.max(np.abs(out - ref)) <= 1e-10 * np.max(np.abs(ref))
        np.testing.assert_allclose(apply_theta(s, "matrix").signed(), ref, atol=1e-10 * np.max(np.abs(ref)))


def test_theta_grid_method_differs_at_order_one_over_n():
    N = 256
    g = GridSpec(N, 0.6)
    out = apply_theta(plane_wave(0, g), "grid")
    assert np.isclose(out.amplitude(0).real, np.pi * (N - 1) / N)


def test_theta_second_moment_examples():
    g = GridSpec(4096, 0.6)
    uniform = 4 * np.pi ** 2 / 3
    N = g.N
    # oracle for the truncated operator: pi^2 + sum over m != 0 of 1/m^2 within the basis
    m = np.arange(1, N // 2)
    exact = np.pi ** 2 + 2 * np.sum(1.0 / m ** 2) + (2.0 / N) ** 2
    assert np.isclose(theta_second_moment(plane_wave(0, g)), exact, rtol=1e-12)
    assert abs(theta_second_moment(plane_wave(0, g)) - uniform) < 1e-3
    q = theta_second_moment(plane_wave(0, g), "quadrature")
    th = g.angles
    assert np.isclose(q, np.sum(th ** 2) / N, rtol=1e-12)
    assert abs(q - uniform) / uniform < 2e-3
    # narrow packet centred at pi
    f = np.exp(-0.5 * 400 * (th - np.pi) ** 2)
    s = QuantumState.from_grid(f, g)
    s = s.scaled(1 / np.sqrt(norm(s)))
    assert abs(theta_second_moment(s, "quadrature") - np.pi ** 2) < 0.01
    assert abs(theta_second_moment(s) - np.pi ** 2) < 0.01


@pytest.mark.parametrize("seed", range(5))
def test_theta_moment_equals_norm_of_theta_state(seed):
    s = random_state(GridSpec(128, 0.6), seed)
    assert np.isclose(theta_second_moment(s), norm(apply_theta(s)), rtol=1e-10)


def test_distributions():
    g = GridSpec(1024, 0.6)
    d = momentum_distribution(plane_wave(5, g))
    assert np.count_nonzero(d.values) == 1
    s = make_gaussian_state(1.0, g)
    dm = momentum_distribution(s)
    assert np.isclose(dm.total, 1.0, atol=1e-12)
    assert np.isclose(angle_distribution(s).total, 1.0, atol=1e-12)
    # analytic envelope: |psi_n|^2 = (4 pi / sigma)^(1/2) / (2 pi) exp(-n^2 / sigma) for sigma = 1
    n = np.arange(-10, 11)
    env = np.sqrt(4 * np.pi) / (2 * np.pi) * np.exp(-(n ** 2) / 1.0)
    got = dm.values[g.N // 2 - 10 : g.N // 2 + 11]
    np.testing.assert_allclose(got[np.abs(n) <= 3], env[np.abs(n) <= 3], rtol=0.01)


def test_kinetic_phase_preserves_parity():
    g = GridSpec(64, 0.6)
    s = symmetric_random_state(g, 1)
    out = step_forward(s, FloquetParams(0.0, g)).signed()
    np.testing.assert_allclose(out[1:], out[1:][::-1], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=6), st.integers(min_value=0, max_value=2 ** 31))
def test_theta_operator_is_hermitian(k, seed):
    g = GridSpec(2 ** k * 4, 0.6)
    a, b = random_state(g, seed), random_state(g, seed + 1)
    lhs = np.vdot(a.amplitudes, apply_theta(b).amplitudes)
    rhs = np.vdot(apply_theta(a).amplitudes, b.amplitudes)
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)
