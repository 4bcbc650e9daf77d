import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orderkin.collisions import RULES, CollisionGeometry, random_states
from orderkin.dsmc import (
    Ensemble,
    KernelSpec,
    MaxwellianParams,
    auto_majorant,
    contact_velocity,
    dsmc_step,
    kernel_rate,
    moments,
    reciprocity_check,
    safe_dt,
    sample_maxwellian,
    substream,
    weak_form_test,
)
from orderkin.errors import ConfigurationError
from orderkin.mechanics import ParticleState, stack_states


def bimodal_rods(n, seed):
    rng = np.random.default_rng(seed)
    p = np.zeros((n, 2))
    p[:, 0] = rng.choice([-1.0, 1.0], n)
    p += 0.05 * rng.standard_normal((n, 2))
    st_ = ParticleState(
        "s1", np.zeros((n, 2)), rng.uniform(-np.pi, np.pi, n), p, 0.05 * rng.standard_normal(n), 1.0, 1 / 12
    )
    return Ensemble(st_, seed=seed)


# -- kernel ------------------------------------------------------------------------


def test_contact_velocity_examples():
    a = ParticleState.make("s1", p=[0.0, 0.0], sigma=1.0, inertia=1.0)
    b = ParticleState.make("s1", p=[0.0, 0.0], sigma=0.0, inertia=1.0)
    assert np.allclose(contact_velocity(a, b, [0.0, 1.0]), [1.0, 0.0], atol=1e-15)


def test_contact_velocity_3d_reduces_to_2d():
    rng = np.random.default_rng(0)
    for _ in range(200):
        th1, th2 = rng.uniform(-np.pi, np.pi, 2)
        w1, w2 = rng.standard_normal(2)
        p1, p2 = rng.standard_normal((2, 2))
        r1, r2 = rng.standard_normal((2, 2))
        a2 = ParticleState.make("s1", p=p1, nu=th1, sigma=w1 * 0.3, inertia=0.3)
        b2 = ParticleState.make("s1", p=p2, nu=th2, sigma=w2 * 0.3, inertia=0.3)
        # rods in the plane spinning about e_z: sigma = I nu_dot = I w e_z x nu
        n1 = np.array([np.cos(th1), np.sin(th1), 0.0])
        n2 = np.array([np.cos(th2), np.sin(th2), 0.0])
        ez = np.array([0.0, 0.0, 1.0])
        a3 = ParticleState.make("s2", p=np.append(p1, 0), nu=n1, sigma=0.3 * w1 * np.cross(ez, n1), inertia=0.3)
        b3 = ParticleState.make("s2", p=np.append(p2, 0), nu=n2, sigma=0.3 * w2 * np.cross(ez, n2), inertia=0.3)
        # offsets along the rods
        s1, s2 = rng.uniform(-0.5, 0.5, 2)
        g2 = contact_velocity(a2, b2, s1 * n1[:2], s2 * n2[:2])
        g3 = contact_velocity(a3, b3, s1 * n1, s2 * n2)
        assert np.allclose(g3, np.append(g2, 0.0), atol=1e-12)


def test_receding_contact_has_zero_rate():
    a = ParticleState.make("s1", p=[1.0, 0.0])
    b = ParticleState.make("s1", p=[-1.0, 0.0])
    n = np.array([-1.0, 0.0])
    geom = CollisionGeometry(n, np.zeros(2), np.zeros(2))
    assert kernel_rate(KernelSpec("calamitic2d"), a, b, geom) == 0.0
    assert kernel_rate(KernelSpec("calamitic2d"), a, b, CollisionGeometry(-n, np.zeros(2), np.zeros(2))) == 2.0


def test_empty_bubbles_have_zero_rate():
    a = ParticleState.make("interval", p=[1.0, 0.0, 0.0], nu=0.0)
    b = ParticleState.make("interval", p=[-1.0, 0.0, 0.0], nu=0.0)
    n = np.array([1.0, 0.0, 0.0])
    geom = CollisionGeometry(n, 0.5 * n, -0.5 * n)
    assert kernel_rate(KernelSpec("bubbles", "bubble_mean"), a, b, geom) == 0.0


def test_negative_prefactor_table_rejected():
    with pytest.raises(ConfigurationError):
        KernelSpec("calamitic2d", "custom-table", table=(1.0, -0.5))
    with pytest.raises(ConfigurationError):
        KernelSpec("calamitic2d", "bubble_mean")


@pytest.mark.parametrize("rule", sorted(RULES))
def test_auto_majorant_bounds_rates(rule):
    rng = np.random.default_rng(1)
    s = random_states(rule, 4000, rng)
    spec = KernelSpec(rule, "bubble_mean" if rule == "bubbles" else "unit")
    from orderkin.collisions import sample_geometry

    i, j = rng.integers(0, 4000, (2, 20000))
    geom = sample_geometry(rule, s[i], s[j], rng)
    assert np.max(kernel_rate(spec, s[i], s[j], geom)) <= auto_majorant(spec, s)


# -- stepping --------------------------------------------------------------------


def test_dt_zero_is_identity():
    ens = bimodal_rods(500, 0)
    before = ens.copy()
    dsmc_step(ens, KernelSpec("calamitic2d"), 0.0)
    assert np.array_equal(ens.states.p, before.states.p)
    assert np.array_equal(ens.states.sigma, before.states.sigma)
    assert ens.time == 0.0 and ens.n_collisions == 0


def test_zero_temperature_no_collisions():
    n = 400
    s = ParticleState("s1", np.zeros((n, 2)), np.linspace(0, 3, n), np.tile([0.3, -0.2], (n, 1)), np.zeros(n), 1.0, 1.0)
    ens = Ensemble(s, seed=0)
    spec = KernelSpec("calamitic2d", majorant=1.0)
    for _ in range(20):
        dsmc_step(ens, spec, 0.1)
    assert ens.n_candidates > 0
    assert ens.n_collisions == 0
    assert np.array_equal(ens.states.p, s.p)


def test_majorant_dt_bound_checked():
    ens = bimodal_rods(200, 0)
    with pytest.raises(ConfigurationError):
        dsmc_step(ens, KernelSpec("calamitic2d", majorant=10.0), 0.06)
    spec = KernelSpec("calamitic2d")
    assert auto_majorant(spec, ens.states) * safe_dt(spec, ens, 1.0) <= 0.5 + 1e-15


def test_rule_manifold_mismatch():
    with pytest.raises(ConfigurationError):
        dsmc_step(bimodal_rods(100, 0), KernelSpec("calamitic3d"), 0.01)


def test_hard_sphere_collision_count():
    # unit Maxwellian: <|g|> = 4/sqrt(pi), n uniform on the sphere gives <max(g.n,0)> = <|g|>/4
    n, T = 4000, 1.0
    ens = sample_maxwellian({}, "none", n, seed=3)
    spec = KernelSpec("hard_sphere", majorant=12.0)
    dt = 0.02
    for _ in range(int(round(T / dt))):
        dsmc_step(ens, spec, dt)
    expected = 0.5 * (n - 1) * T / math.sqrt(math.pi)
    assert ens.majorant_violations == 0
    assert abs(ens.n_collisions - expected) < 3 * math.sqrt(expected)


def test_per_event_conservation_recorded():
    ens = bimodal_rods(2000, 5)
    spec = KernelSpec("calamitic2d")
    inv0 = ens.invariants()
    for _ in range(30):
        dsmc_step(ens, spec, 0.05)
    inv1 = ens.invariants()
    assert ens.n_collisions > 100
    assert max(ens.max_event_drift.values()) < 1e-12
    assert np.allclose(inv1.P, inv0.P, atol=1e-10)
    assert inv1.E == pytest.approx(inv0.E, rel=1e-12)
    assert np.allclose(inv1.L, inv0.L, atol=1e-9)


def test_thread_count_does_not_change_results():
    outs = []
    for threads in (1, 4):
        ens = bimodal_rods(20_000, 9)
        ens.threads = threads
        for _ in range(5):
            dsmc_step(ens, KernelSpec("calamitic2d"), 0.05)
        outs.append(ens)
    assert outs[0].n_collisions > 0
    assert np.array_equal(outs[0].states.p, outs[1].states.p)
    assert np.array_equal(outs[0].states.sigma, outs[1].states.sigma)
    assert np.array_equal(outs[0].orbital_L, outs[1].orbital_L)


def test_substreams_are_independent_and_reproducible():
    a = substream(5, 1, 2).random(4)
    assert np.array_equal(a, substream(5, 1, 2).random(4))
    assert not np.array_equal(a, substream(5, 1, 3).random(4))
    assert not np.array_equal(a, substream(6, 1, 2).random(4))


def test_bimodal_relaxes_toward_gaussian():
    ens = bimodal_rods(4000, 11)
    k0 = moments(ens)["kurt_px"]
    spec = KernelSpec("calamitic2d")
    while ens.time < 30.0:
        dsmc_step(ens, spec, safe_dt(spec, ens, 0.05))
    m = moments(ens)
    assert k0 < 1.1
    assert abs(m["kurt_px"] - 3) < 0.3
    assert abs(m["m2_px"] / m["m2_py"] - 1) < 0.1


# -- Maxwellian ----------------------------------------------------------------------


def test_maxwellian_variance_and_mean():
    ens = sample_maxwellian(MaxwellianParams(d=-2.0), "s1", 200_000, seed=0, mass=3.0)
    p = ens.states.p
    # variance -m / 2d = 0.75
    assert np.allclose(p.var(axis=0), 0.75, rtol=0.01)
    assert np.allclose(p.mean(axis=0), 0.0, atol=0.01)
    ens = sample_maxwellian(MaxwellianParams(b=(1.0, -0.5), d=-0.5), "s1", 200_000, seed=1)
    assert np.allclose(ens.states.p.mean(axis=0), [1.0, -0.5], atol=0.01)


def test_maxwellian_s2_rotation_bias():
    ens = sample_maxwellian(MaxwellianParams(c=0.8, d=-0.5), "s2", 100_000, seed=2)
    from orderkin.mechanics import spin_momentum

    Lz = spin_momentum(ens.states)[:, 2]
    assert Lz.mean() > 0.3
    assert np.allclose(np.sum(ens.states.sigma * ens.states.nu, axis=1), 0.0, atol=1e-12)


def test_maxwellian_requires_negative_d():
    with pytest.raises(ConfigurationError):
        sample_maxwellian(MaxwellianParams(d=0.0), "s1", 10, seed=0)
    with pytest.raises(ConfigurationError):
        sample_maxwellian(MaxwellianParams(d=1.0), "s1", 10, seed=0)
    with pytest.raises(ConfigurationError):
        sample_maxwellian({}, "s1", 0, seed=0)


def test_maxwellian_deterministic():
    a = sample_maxwellian({}, "s2", 1000, seed=4)
    b = sample_maxwellian({}, "s2", 1000, seed=4)
    assert np.array_equal(a.states.p, b.states.p) and np.array_equal(a.states.sigma, b.states.sigma)


# -- weak form and reciprocity ------------------------------------------------------------


def test_weak_form_one_is_exactly_zero():
    ens = bimodal_rods(2000, 1)
    res = weak_form_test(ens, KernelSpec("calamitic2d"), "one", samples=20_000)
    assert res.estimate == 0.0 and res.std_error == 0.0


@pytest.mark.parametrize("psi", ["px", "py", "L", "E"])
def test_weak_form_invariants(psi):
    ens = bimodal_rods(2000, 2)
    res = weak_form_test(ens, KernelSpec("calamitic2d"), psi, samples=100_000)
    assert res.passed_zero


def test_weak_form_detects_anisotropy():
    ens = bimodal_rods(2000, 3)
    res = weak_form_test(ens, KernelSpec("calamitic2d"), "px2", samples=100_000)
    assert res.estimate < -3 * res.std_error


def test_weak_form_bubble_volume():
    rng = np.random.default_rng(0)
    s = random_states("bubbles", 2000, rng)
    res = weak_form_test(Ensemble(s, seed=0), KernelSpec("bubbles", "bubble_mean"), "volume", samples=50_000)
    assert res.passed_zero


@pytest.mark.parametrize("rule", sorted(RULES))
def test_reciprocity(rule):
    res = reciprocity_check(rule, trials=100, seed=1)
    assert res.det_deviation < 1e-8
    assert res.involution_error < 1e-10


@given(st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_step_preserves_count_and_exact_invariants(seed):
    rng = np.random.default_rng(seed)
    s = random_states("calamitic3d", 300, rng, inertia=1 / 12)
    ens = Ensemble(s, seed=seed)
    inv0 = ens.invariants()
    spec = KernelSpec("calamitic3d")
    dsmc_step(ens, spec, safe_dt(spec, ens, 0.1))
    inv1 = ens.invariants()
    assert ens.n == 300
    assert np.allclose(inv1.P, inv0.P, atol=1e-11)
    assert inv1.E == pytest.approx(inv0.E, rel=1e-12)
    assert np.allclose(inv1.L, inv0.L, atol=1e-10)
