import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seedcodec import diffusion as D
from seedcodec.degradation import DegradationConfig, degrade_adjoint, degrade_linear
from seedcodec.errors import ConfigError, DimensionError, StateError


# -- schedule ---------------------------------------------------------------

def test_single_step_schedule():
    s = D.build_schedule(1, 0.5, 0.5)
    assert s.betas.tolist() == [0.5]
    assert s.alpha_bars.tolist() == [0.5]


def test_two_step_schedule():
    s = D.build_schedule(2, 0.1, 0.3)
    np.testing.assert_allclose(s.alpha_bars, [0.9, 0.63], rtol=1e-15)


def test_default_schedule_against_running_product():
    s = D.build_schedule(20, 1e-4, 0.02)
    prod = 1.0
    for k in range(20):
        beta = 1e-4 + (0.02 - 1e-4) * k / 19
        assert s.betas[k] == pytest.approx(beta, rel=1e-12)
        prod *= 1.0 - beta
        assert s.alpha_bars[k] == pytest.approx(prod, rel=1e-12)
    assert np.all(np.diff(s.alpha_bars) < 0)
    assert s.total_steps == 20


@pytest.mark.parametrize("args,field", [
    ((0, 0.1, 0.2), "T"), ((2.5, 0.1, 0.2), "T"), ((5, 0.0, 0.2), "beta_start"),
    ((5, 0.1, 1.0), "beta_end"), ((5, 0.3, 0.2), "beta_start"),
])
def test_schedule_rejects(args, field):
    with pytest.raises(ConfigError) as err:
        D.build_schedule(*args)
    assert err.value.field == field


def test_non_monotone_schedule_rejected():
    b = np.array([0.1, 0.2])
    with pytest.raises(ConfigError):
        D.NoiseSchedule(b, 1 - b, np.array([0.9, 0.95]))


# -- forward / inverse ---------------------------------------------------------

SCHED = D.build_schedule(20, 1e-4, 0.3)


def test_forward_zero_noise(rng):
    x0 = rng.uniform(size=(4, 4, 3))
    out = D.forward_sample(x0, 7, np.zeros_like(x0), SCHED)
    np.testing.assert_array_equal(out, np.sqrt(SCHED.alpha_bars[6]) * x0)


def test_forward_zero_image(rng):
    eps = rng.standard_normal((4, 4, 3))
    out = D.forward_sample(np.zeros_like(eps), 3, eps, SCHED)
    np.testing.assert_array_equal(out, np.sqrt(1 - SCHED.alpha_bars[2]) * eps)


def test_forward_elementwise_oracle(rng):
    x0 = rng.uniform(size=(3, 5, 3))
    eps = rng.standard_normal(x0.shape)
    ab = SCHED.alpha_bars[11]
    out = D.forward_sample(x0, 12, eps, SCHED)
    for idx in np.ndindex(x0.shape):
        assert out[idx] == pytest.approx(ab ** 0.5 * x0[idx] + (1 - ab) ** 0.5 * eps[idx], rel=1e-13)


def test_forward_geometry_and_range(rng):
    with pytest.raises(DimensionError):
        D.forward_sample(np.zeros((2, 2, 3)), 1, np.zeros((2, 3, 3)), SCHED)
    with pytest.raises(ConfigError):
        D.forward_sample(np.zeros((2, 2, 3)), 0, np.zeros((2, 2, 3)), SCHED)
    with pytest.raises(ConfigError):
        D.forward_sample(np.zeros((2, 2, 3)), 21, np.zeros((2, 2, 3)), SCHED)


@pytest.mark.parametrize("k", [1, 10, 20])
def test_predict_x0_inverts_forward(rng, k):
    x0 = rng.uniform(size=(4, 4, 3))
    eps = rng.standard_normal(x0.shape)
    xk = D.forward_sample(x0, k, eps, SCHED)
    np.testing.assert_allclose(D.predict_x0(xk, eps, k, SCHED), x0, atol=1e-9)


def test_predict_x0_zero_noise(rng):
    xk = rng.standard_normal((4, 4, 3))
    np.testing.assert_allclose(D.predict_x0(xk, np.zeros_like(xk), 5, SCHED),
                               xk / np.sqrt(SCHED.alpha_bars[4]), rtol=1e-15)


def test_predict_x0_elementwise(rng):
    xk, eps = rng.standard_normal((2, 3, 3, 3))
    ab = SCHED.alpha_bars[8]
    out = D.predict_x0(xk, eps, 9, SCHED)
    for idx in np.ndindex(xk.shape):
        assert out[idx] == pytest.approx((xk[idx] - (1 - ab) ** 0.5 * eps[idx]) / ab ** 0.5, rel=1e-12)


# -- denoisers ---------------------------------------------------------------------

def test_standard_gaussian_collapses(rng):
    spec = D.DenoiserSpec.gaussian_mixture([1.0], np.zeros((1, 3, 3, 3)), [1.0])
    xk = rng.standard_normal((3, 3, 3))
    for k in (1, 9, 20):
        ab = SCHED.alpha_bars[k - 1]
        np.testing.assert_allclose(D.denoiser_eps(xk, k, spec, SCHED), np.sqrt(1 - ab) * xk, rtol=1e-12)


def test_empirical_single_image(rng):
    img = rng.uniform(size=(4, 4, 3))
    spec = D.DenoiserSpec.empirical(img[None])
    for k in (1, 10, 20):
        xk = 5 * rng.standard_normal(img.shape)
        eps = D.denoiser_eps(xk, k, spec, SCHED)
        np.testing.assert_allclose(D.predict_x0(xk, eps, k, SCHED), img, atol=1e-10)


def naive_mixture_eps(x, k, weights, means, sigmas, sched):
    """Densities multiplied out directly, no log-domain tricks."""
    ab = sched.alpha_bars[k - 1]
    d = x.size
    dens, grads = [], []
    for w, mu, s in zip(weights, means, sigmas):
        v = ab * s * s + 1 - ab
        diff = x - np.sqrt(ab) * mu
        p = w * (2 * np.pi * v) ** (-d / 2) * np.exp(-np.sum(diff ** 2) / (2 * v))
        dens.append(p)
        grads.append(-p * diff / v)
    score = sum(grads) / sum(dens)
    return -np.sqrt(1 - ab) * score


def test_mixture_matches_naive_oracle(rng):
    weights = np.array([0.2, 0.5, 0.3])
    means = rng.uniform(size=(3, 2, 2, 3))
    sigmas = np.array([0.1, 0.3, 0.05])
    spec = D.DenoiserSpec.gaussian_mixture(weights, means, sigmas)
    for k in (2, 8, 15, 20):
        x = rng.uniform(-0.5, 1.5, (2, 2, 3))
        np.testing.assert_allclose(D.denoiser_eps(x, k, spec, SCHED),
                                   naive_mixture_eps(x, k, weights, means, sigmas, SCHED), rtol=1e-8)


def test_empirical_equals_zero_width_mixture(rng):
    refs = rng.uniform(size=(4, 3, 3, 3))
    emp = D.DenoiserSpec.empirical(refs)
    mix = D.DenoiserSpec.gaussian_mixture(np.full(4, 0.25), refs, np.zeros(4))
    x = rng.standard_normal((3, 3, 3))
    for k in (3, 12, 20):
        np.testing.assert_allclose(D.denoiser_eps(x, k, emp, SCHED), D.denoiser_eps(x, k, mix, SCHED),
                                   rtol=1e-9, atol=1e-12)


def test_denoiser_spec_validation():
    with pytest.raises(ConfigError):
        D.DenoiserSpec.empirical(np.zeros((0, 2, 2, 3)))
    with pytest.raises(ConfigError):
        D.DenoiserSpec.gaussian_mixture([], np.zeros((0, 2, 2, 3)), [])
    with pytest.raises(ConfigError):
        D.DenoiserSpec.gaussian_mixture([0.5, 0.6], np.zeros((2, 2, 2, 3)), [1, 1])
    with pytest.raises(ConfigError):
        D.DenoiserSpec("flow")


def test_denoiser_geometry():
    spec = D.DenoiserSpec.empirical(np.zeros((2, 4, 4, 3)))
    with pytest.raises(DimensionError):
        D.denoiser_eps(np.zeros((4, 5, 3)), 3, spec, SCHED)


# -- guidance -------------------------------------------------------------------------

def _guide(rng, w=0.7, shape=(8, 8, 3)):
    op = DegradationConfig(rng.uniform(0.3, 2.0), rng.uniform(0, 1), 0)
    return D.GuidanceConfig(w, rng.uniform(size=shape), op)


def test_zero_weight_is_noop(rng):
    g = _guide(rng, w=0.0)
    eps = rng.standard_normal((8, 8, 3))
    assert D.apply_guidance(eps, rng.standard_normal((8, 8, 3)), 5, g, SCHED) is eps


def test_consistent_estimate_gives_no_correction(rng):
    k = 6
    ab = SCHED.alpha_bars[k - 1]
    c = rng.uniform(size=(4, 4, 3))
    g = D.GuidanceConfig(2.0, c, DegradationConfig.identity())
    eps = rng.standard_normal(c.shape)
    xk = np.sqrt(ab) * c + np.sqrt(1 - ab) * eps
    np.testing.assert_allclose(D.apply_guidance(eps, xk, k, g, SCHED), eps, atol=1e-12)


def finite_difference_grad(xk, eps, k, g, h=1e-4):
    ab = SCHED.alpha_bars[k - 1]

    def loss(x):
        x0 = (x - np.sqrt(1 - ab) * eps) / np.sqrt(ab)
        r = degrade_linear(x0, g.operator) - g.condition
        return 0.5 * np.sum(r * r)

    grad = np.zeros_like(xk)
    for idx in np.ndindex(xk.shape):
        e = np.zeros_like(xk)
        e[idx] = h
        grad[idx] = (loss(xk + e) - loss(xk - e)) / (2 * h)
    return grad


def guidance_fd_error(rng):
    k = int(rng.integers(1, 21))
    g = _guide(rng)
    xk = rng.standard_normal((8, 8, 3))
    eps = rng.standard_normal((8, 8, 3))
    out = D.apply_guidance(eps, xk, k, g, SCHED)
    ab = SCHED.alpha_bars[k - 1]
    analytic = (out - eps) / (g.weight * np.sqrt(1 - ab))
    fd = finite_difference_grad(xk, eps, k, g)
    return np.linalg.norm(analytic - fd) / np.linalg.norm(fd)


def test_guidance_matches_finite_differences(rng):
    for _ in range(3):
        assert guidance_fd_error(rng) < 1e-4


def test_guidance_geometry(rng):
    g = _guide(rng, shape=(4, 4, 3))
    with pytest.raises(DimensionError):
        D.apply_guidance(np.zeros((8, 8, 3)), np.zeros((8, 8, 3)), 3, g, SCHED)


# -- reverse steps / trajectories -----------------------------------------------------

def test_step_with_true_eps_lands_on_forward_marginal(rng):
    x0 = rng.uniform(size=(4, 4, 3))
    eps = rng.standard_normal(x0.shape)
    spec = D.DenoiserSpec.empirical(x0[None])
    steps_done = 6
    k = 20 - steps_done
    xk = D.forward_sample(x0, k, eps, SCHED)
    ck = D.TrajectoryCheckpoint(xk, steps_done, {}, 0, np.zeros_like(x0))
    out = D.reverse_step(ck, spec, None, 0.0, SCHED)
    ab_prev = SCHED.alpha_bars[k - 2]
    np.testing.assert_allclose(out.latent, np.sqrt(ab_prev) * x0 + np.sqrt(1 - ab_prev) * eps, atol=1e-9)
    np.testing.assert_allclose(out.x0_estimate, x0, atol=1e-10)
    assert out.steps_done == steps_done + 1
    assert out.rng_state == {}


def test_final_step_returns_clean_estimate(rng, small_problem):
    _, _, spec, guide, sched = small_problem
    ck = D.run_trajectory(11, 19, spec, guide, 0.0, sched)
    last = D.reverse_step(ck, spec, guide, 0.0, sched)
    assert last.steps_done == 20
    np.testing.assert_array_equal(last.latent, last.x0_estimate)


def test_step_past_end_is_state_error(small_problem):
    _, _, spec, guide, sched = small_problem
    ck = D.run_trajectory(3, 20, spec, guide, 0.0, sched)
    with pytest.raises(StateError):
        D.reverse_step(ck, spec, guide, 0.0, sched)


def test_rng_advances_only_when_stochastic(small_problem):
    _, _, spec, guide, sched = small_problem
    ck = D.run_trajectory(5, 0, spec, guide, 0.0, sched)
    assert D.reverse_step(ck, spec, guide, 0.0, sched).rng_state == ck.rng_state
    after = D.reverse_step(ck, spec, guide, 0.5, sched)
    assert after.rng_state != ck.rng_state
    # exactly one normal tensor was drawn
    g = np.random.Generator(np.random.PCG64(5))
    g.standard_normal((8, 8, 3))
    g.standard_normal((8, 8, 3))
    assert after.rng_state == g.bit_generator.state


def test_identical_checkpoints_step_identically(small_problem):
    _, _, spec, guide, sched = small_problem
    ck = D.run_trajectory(8, 4, spec, guide, 0.7, sched)
    a = D.reverse_step(ck, spec, guide, 0.7, sched)
    b = D.reverse_step(ck, spec, guide, 0.7, sched)
    assert np.array_equal(a.latent, b.latent) and a.rng_state == b.rng_state


def test_stop_after_zero_is_pure_noise(small_problem):
    _, _, spec, guide, sched = small_problem
    ck = D.run_trajectory(99, 0, spec, guide, 0.0, sched)
    assert ck.steps_done == 0 and ck.seed_id == 99
    np.testing.assert_array_equal(ck.latent, np.random.Generator(np.random.PCG64(99)).standard_normal((8, 8, 3)))


def test_stop_after_out_of_range(small_problem):
    _, _, spec, guide, sched = small_problem
    for bad in (-1, 21):
        with pytest.raises(ConfigError):
            D.run_trajectory(1, bad, spec, guide, 0.0, sched)


def test_same_seed_same_checkpoint(small_problem):
    _, _, spec, guide, sched = small_problem
    a = D.run_trajectory(2 ** 64 - 1, 13, spec, guide, 0.3, sched)
    b = D.run_trajectory(2 ** 64 - 1, 13, spec, guide, 0.3, sched)
    assert np.array_equal(a.latent, b.latent) and np.array_equal(a.x0_estimate, b.x0_estimate)
    assert a.rng_state == b.rng_state


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 20), st.sampled_from([0.0, 1.0]))
def test_suffix_determinism(seed, t, eta):
    r = np.random.default_rng(1)
    refs = r.uniform(size=(3, 4, 4, 3))
    op = DegradationConfig(0.7, 0.5, 0)
    g = D.GuidanceConfig(0.3, r.uniform(size=(4, 4, 3)), op)
    spec = D.DenoiserSpec.empirical(refs)
    full = D.run_trajectory(seed, 20, spec, g, eta, SCHED)
    part = D.run_trajectory(seed, t, spec, g, eta, SCHED)
    resumed = D.resume(part, 20, spec, g, eta, SCHED)
    assert np.array_equal(full.latent, resumed.latent)
    assert full.rng_state == resumed.rng_state


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 64 - 1), st.integers(20, 40), st.floats(0.005, 0.05))
def test_perfect_denoiser_recovery(seed, T, beta_end):
    target = np.random.default_rng(3).uniform(size=(5, 5, 3))
    spec = D.DenoiserSpec.empirical(target[None])
    sched = D.build_schedule(T, 1e-4, beta_end)
    out = D.run_trajectory(seed, T, spec, None, 0.0, sched)
    assert np.max(np.abs(out.latent - target)) <= 1e-3


def test_seed_must_be_u64():
    with pytest.raises(ConfigError):
        D.init_checkpoint(-1, (2, 2, 3))
    with pytest.raises(ConfigError):
        D.init_checkpoint(2 ** 64, (2, 2, 3))
