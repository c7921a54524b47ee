import json

import numpy as np
import pytest

from fracwalk import (
    LatticeDistribution,
    OrderMeasure,
    build_kernel,
    characteristic_function,
    convolve,
    evolve,
    kernel_distribution,
    step,
)
from fracwalk.evolution import _convolve_arrays

KERNEL = build_kernel(OrderMeasure.single(1.0), 1, 0.1, 0.01, trunc_radius=16)


def test_delta_is_convolution_identity():
    q = kernel_distribution(KERNEL)
    d = LatticeDistribution.delta(1, 0.1)
    out = convolve(d, q)
    sites, masses = out.nonzero_sites()
    for site, mass in zip(sites, masses):
        assert mass == pytest.approx(q.value(site), abs=1e-15)


def test_convolution_commutes():
    k2 = build_kernel(OrderMeasure.single(0.6), 1, 0.1, 0.005, trunc_radius=8)
    p, q = kernel_distribution(KERNEL), kernel_distribution(k2)
    ab = convolve(p, q)
    ba = convolve(q, p)
    np.testing.assert_allclose(ab.mass, ba.mass, atol=1e-15)


def test_two_step_cf_is_square_of_one_step():
    q = kernel_distribution(KERNEL)
    two = convolve(q, q)
    xi = np.linspace(-20.0, 20.0, 41)
    cf1 = characteristic_function(q, xi)
    cf2 = characteristic_function(two, xi)
    np.testing.assert_allclose(cf2, cf1**2, atol=1e-10)


def test_mismatched_mesh_rejected():
    p = LatticeDistribution.delta(1, 0.1)
    q = LatticeDistribution.delta(1, 0.2)
    with pytest.raises(ValueError):
        convolve(p, q)
    with pytest.raises(ValueError):
        step(q, KERNEL)


def test_step_from_delta_reproduces_kernel():
    out = step(LatticeDistribution.delta(1, 0.1), KERNEL)
    assert out.time_index == 1
    assert out.value([0]) == pytest.approx(KERNEL.p0, abs=1e-15)
    for k in (1, -1, 5):
        assert out.value([k]) == pytest.approx(KERNEL.prob([k]), abs=1e-15)


def test_step_with_frozen_kernel_is_identity():
    frozen = build_kernel(OrderMeasure.single(1.0), 1, 0.1, 0.0, trunc_radius=8)
    d = step(LatticeDistribution.delta(1, 0.1), KERNEL)
    out = step(d, frozen)
    np.testing.assert_array_equal(out.mass, d.mass)
    assert out.time_index == d.time_index + 1


def test_mass_conserved_over_many_steps():
    d = LatticeDistribution.delta(1, 0.1)
    d = evolve(d, KERNEL, 64)
    assert d.time_index == 64
    assert d.total_mass() == pytest.approx(1.0, abs=1e-10)
    assert np.all(d.mass >= 0.0)


def test_cf_factorization_over_64_steps():
    one = step(LatticeDistribution.delta(1, 0.1), KERNEL)
    xi = np.linspace(0.0, 10.0, 26)
    base = characteristic_function(one, xi)
    # the one-step law's CF is the kernel CF evaluated with the mesh factor
    np.testing.assert_allclose(base.real, KERNEL.cf(xi), atol=1e-14)
    np.testing.assert_allclose(base.imag, 0.0, atol=1e-14)
    d = LatticeDistribution.delta(1, 0.1)
    for n in (1, 7, 31, 64):
        dn = evolve(LatticeDistribution.delta(1, 0.1), KERNEL, n)
        np.testing.assert_allclose(
            characteristic_function(dn, xi), base**n, atol=1e-8
        )


def test_cf_trivial_values():
    d = LatticeDistribution.delta(1, 0.1)
    assert characteristic_function(d, [0.0])[0] == pytest.approx(1.0)
    assert np.allclose(characteristic_function(d, np.linspace(-5, 5, 7)), 1.0)
    one = step(d, KERNEL)
    vals = characteristic_function(one, np.linspace(0, 30, 16))
    assert np.allclose(vals.imag, 0.0, atol=1e-14)  # symmetric law
    assert np.all(np.abs(vals) <= 1.0 + 1e-14)
    assert characteristic_function(one, [0.0])[0].real == pytest.approx(1.0, abs=1e-12)


def test_evolved_law_symmetric():
    d = evolve(LatticeDistribution.delta(1, 0.1), KERNEL, 5)
    np.testing.assert_allclose(d.mass, d.mass[::-1], atol=1e-16)


def test_truncation_tracks_deficit():
    d = LatticeDistribution.delta(1, 0.1)
    out = evolve(d, KERNEL, 4, max_radius=24)
    assert out.support_radius == 24
    assert out.mass_deficit > 0.0
    assert out.total_mass() + out.mass_deficit == pytest.approx(1.0, abs=1e-12)


def test_direct_and_fft_convolution_agree():
    rng = np.random.default_rng(5)
    a = rng.random(301)
    a /= a.sum()
    b = rng.random(41)
    b /= b.sum()
    direct = _convolve_arrays(a, b)
    from scipy.signal import fftconvolve

    np.testing.assert_allclose(direct, fftconvolve(a, b), atol=1e-10)
    # 2-D as well
    a2 = rng.random((21, 21))
    a2 /= a2.sum()
    direct2 = _convolve_arrays(a2, a2)
    np.testing.assert_allclose(direct2, fftconvolve(a2, a2), atol=1e-10)


def test_two_dimensional_step():
    m = OrderMeasure.single(1.2)
    k = build_kernel(m, 2, 0.2, 1e-3, trunc_radius=6)
    d = evolve(LatticeDistribution.delta(2, 0.2), k, 3)
    assert d.total_mass() == pytest.approx(1.0, abs=1e-10)
    # invariance under k -> -k
    np.testing.assert_allclose(d.mass, d.mass[::-1, ::-1], atol=1e-16)


def test_csv_and_json_round_trip(tmp_path):
    d = step(LatticeDistribution.delta(1, 0.1), KERNEL)
    csv_path = tmp_path / "dist.csv"
    d.to_csv(csv_path)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "j1,mass"
    assert len(lines) == 1 + len(d.nonzero_sites()[0])

    json_path = tmp_path / "dist.json"
    d.to_json(json_path)
    doc = json.loads(json_path.read_text())
    assert doc["dim"] == 1 and doc["h"] == 0.1 and doc["time_index"] == 1
    assert sum(doc["mass"]) == pytest.approx(1.0, abs=1e-12)
