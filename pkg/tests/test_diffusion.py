import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgp.codec import CodecConfig, train_codec
from cgp.diffusion import (
    ConditionEncoder,
    CoupledTrajectory,
    DiffusionConfig,
    NoiseSchedule,
    TemporalUNet,
    TrajectoryDiffusion,
    TrajectoryNormalizer,
    coupled_windows,
    ddim_core,
    ddim_steps,
    denoise_train_step,
    eps_loss,
    load_diffusion,
    make_schedule,
    q_sample,
    save_diffusion,
    split_trajectory,
    train_diffusion,
)
from cgp.codec.store import save_codec
from cgp.mapping import make_grasp_dataset
from cgp.nn import Adam, Tensor, check_gradients

TOY_WIDTHS = (32, 64, 128)


# ---- fixtures -----------------------------------------------------------------


@pytest.fixture(scope="module")
def grasp_eps():
    return make_grasp_dataset(6, seed=0)


@pytest.fixture(scope="module")
def small_codec(grasp_eps):
    config = CodecConfig(latent_dim=8, encoder_arch="mlp", widths=(64,), seed=0)
    codec, _ = train_codec(grasp_eps, config, epochs=10, batch_size=128)
    return codec


@pytest.fixture(scope="module")
def diff_model(grasp_eps, small_codec):
    config = DiffusionConfig(latent_dim=8, steps=50, widths=TOY_WIDTHS, seed=0)
    return train_diffusion(grasp_eps, small_codec, config,
                           epochs=3, batch_size=16, lr=3e-4)


@pytest.fixture(scope="module")
def toy_run():
    """Bimodal 1-D toy: two constant trajectories at +/-0.5, then 200 samples."""
    horizon, dim = 16, 1
    schedule = make_schedule(100)
    rng = np.random.default_rng(0)
    net = TemporalUNet(dim, 1, rng, widths=TOY_WIDTHS)
    opt = Adam(net.parameters(), lr=2e-3)
    cond = Tensor(np.zeros((32, 1), np.float32))
    losses = []
    for _ in range(1000):
        signs = rng.choice([-0.5, 0.5], size=32)
        y0 = np.broadcast_to(signs[:, None, None], (32, horizon, dim)).copy()
        loss = eps_loss(net, schedule, y0, cond, rng)
        net.zero_grad()
        loss.backward()
        opt.step()
        losses.append(float(loss.data))
    samples = np.array([ddim_core(net, schedule, np.zeros(1), horizon, dim,
                                  n_steps=8, seed=s) for s in range(200)])
    return net, schedule, np.array(losses), samples


# ---- noise schedule -------------------------------------------------------------


class TestNoiseSchedule:
    def test_variance_preserving(self):
        for kind in ("squared_cosine", "linear"):
            s = make_schedule(100, kind)
            assert np.abs(s.alpha**2 + s.sigma**2 - 1.0).max() <= 1e-6

    def test_alpha_strictly_decreasing(self):
        for kind in ("squared_cosine", "linear"):
            s = make_schedule(100, kind)
            assert np.all(np.diff(s.alpha) < 0)

    def test_low_noise_end(self):
        s = make_schedule(100, "squared_cosine")
        assert s.alpha[0] > 0.99
        assert s.sigma[0] < 0.05

    def test_high_noise_end(self):
        for kind in ("squared_cosine", "linear"):
            s = make_schedule(100, kind)
            assert s.sigma[-1] > 0.99

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError, match="J >= 2"):
            make_schedule(1)
        with pytest.raises(ValueError, match="unknown schedule kind"):
            make_schedule(100, "cosine")

    def test_coeffs_validation(self):
        s = make_schedule(10)
        with pytest.raises(ValueError, match="out of range"):
            s.coeffs(0)
        with pytest.raises(ValueError, match="out of range"):
            s.coeffs(11)
        with pytest.raises(ValueError, match="must be integer"):
            s.coeffs(2.5)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 400), st.sampled_from(["squared_cosine", "linear"]))
    def test_vp_and_monotone_property(self, J, kind):
        s = make_schedule(J, kind)
        assert np.abs(s.alpha**2 + s.sigma**2 - 1.0).max() <= 1e-9
        assert np.all(np.diff(s.alpha) < 0)
        assert np.all(s.alpha > 0) and np.all(s.sigma > 0)


class TestQSample:
    def test_noiseless_limit(self):
        s = NoiseSchedule(J=2, kind="linear",
                          alpha=np.array([1.0, 0.5]),
                          sigma=np.array([0.0, np.sqrt(0.75)]))
        y0 = np.arange(6.0).reshape(2, 3)
        out = q_sample(s, y0, 1, np.ones_like(y0))
        assert np.array_equal(out, y0)

    def test_zero_signal(self):
        s = make_schedule(100)
        eps = np.random.default_rng(1).standard_normal((4, 5))
        out = q_sample(s, np.zeros((4, 5)), 70, eps)
        assert np.array_equal(out, s.sigma[69] * eps)

    def test_exact_formula(self):
        s = make_schedule(100)
        rng = np.random.default_rng(2)
        y0 = rng.standard_normal((3, 16, 4))
        eps = rng.standard_normal(y0.shape)
        out = q_sample(s, y0, 37, eps)
        assert np.array_equal(out, s.alpha[36] * y0 + s.sigma[36] * eps)

    def test_per_item_steps(self):
        s = make_schedule(100)
        rng = np.random.default_rng(3)
        y0 = rng.standard_normal((8, 16, 5))
        eps = rng.standard_normal(y0.shape)
        j = rng.integers(1, 101, size=8)
        out = q_sample(s, y0, j, eps)
        ref = np.stack([s.alpha[jj - 1] * y0[i] + s.sigma[jj - 1] * eps[i]
                        for i, jj in enumerate(j)])
        assert np.array_equal(out, ref)

    def test_monte_carlo_mean(self):
        s = make_schedule(100)
        y0 = np.array([0.3, -0.7, 1.0, 0.0])
        n = 10_000
        eps = np.random.default_rng(0).standard_normal((n, 4))
        yj = q_sample(s, np.broadcast_to(y0, (n, 4)).copy(), 60, eps)
        dev = np.abs(yj.mean(axis=0) - s.alpha[59] * y0)
        assert dev.max() < 3.0 * s.sigma[59] / np.sqrt(n)

    def test_shape_mismatch_rejected(self):
        s = make_schedule(10)
        with pytest.raises(ValueError, match="epsilon shape"):
            q_sample(s, np.zeros((2, 3)), 1, np.zeros((2, 4)))
        with pytest.raises(ValueError, match="one j per leading row"):
            q_sample(s, np.zeros((2, 3)), np.array([1, 2, 3]), np.zeros((2, 3)))


# ---- denoiser -------------------------------------------------------------------


class TestTemporalUNet:
    def test_zero_init_head(self):
        rng = np.random.default_rng(0)
        net = TemporalUNet(5, 7, rng, widths=TOY_WIDTHS)
        y = Tensor(rng.standard_normal((2, 5, 16)).astype(np.float32))
        cond = Tensor(rng.standard_normal((2, 7)).astype(np.float32))
        out = net(y, np.array([3, 9]), cond)
        assert out.shape == (2, 5, 16)
        assert np.all(out.data == 0.0)

    def test_conditioning_changes_output(self):
        rng = np.random.default_rng(1)
        net = TemporalUNet(3, 4, rng, widths=TOY_WIDTHS)
        net.out_conv.w.data[:] = 0.01 * rng.standard_normal(
            net.out_conv.w.data.shape).astype(np.float32)
        y = Tensor(rng.standard_normal((1, 3, 16)).astype(np.float32))
        a = net(y, 5, Tensor(np.zeros((1, 4), np.float32)))
        b = net(y, 5, Tensor(np.ones((1, 4), np.float32)))
        c = net(y, 40, Tensor(np.zeros((1, 4), np.float32)))
        assert np.abs(a.data - b.data).max() > 0  # observation conditioning
        assert np.abs(a.data - c.data).max() > 0  # step conditioning

    def test_input_validation(self):
        rng = np.random.default_rng(2)
        net = TemporalUNet(3, 4, rng, widths=TOY_WIDTHS)
        good = Tensor(np.zeros((2, 3, 16), np.float32))
        cond = Tensor(np.zeros((2, 4), np.float32))
        with pytest.raises(ValueError, match="data dims"):
            net(Tensor(np.zeros((2, 5, 16), np.float32)), 1, cond)
        with pytest.raises(ValueError, match="divisible by 4"):
            net(Tensor(np.zeros((2, 3, 15), np.float32)), 1, cond)
        with pytest.raises(ValueError, match="cond shape"):
            net(good, 1, Tensor(np.zeros((2, 9), np.float32)))
        with pytest.raises(ValueError, match="one diffusion step per"):
            net(good, np.array([1, 2, 3]), cond)
        with pytest.raises(ValueError, match="3 resolution levels"):
            TemporalUNet(3, 4, rng, widths=(32, 64))

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(3)
        net = TemporalUNet(2, 3, rng, widths=(8, 16, 24))
        for p in net.parameters():
            p.data = p.data.astype(np.float64)
        net.out_conv.w.data += 0.05 * rng.standard_normal(net.out_conv.w.data.shape)
        schedule = make_schedule(20)
        y0 = rng.standard_normal((2, 8, 2))
        eps = rng.standard_normal(y0.shape)
        j = np.array([3, 17])
        y_j = q_sample(schedule, y0, j, eps)
        cond = rng.standard_normal((2, 3))

        def build_loss():
            pred = net(Tensor(np.swapaxes(y_j, 1, 2)), j, Tensor(cond))
            diff = pred - Tensor(np.swapaxes(eps, 1, 2))
            return (diff * diff).sum() * 0.5

        worst = check_gradients(build_loss, net.parameters(),
                                np.random.default_rng(11), n_probes=120)
        assert worst < 1e-4


class TestConditionEncoderNet:
    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(4)
        enc = ConditionEncoder(5, 16, 2, (16, 16), rng,
                               vision_dim=6, tactile_dim=6, obs_horizon=2)
        for p in enc.parameters():
            p.data = p.data.astype(np.float64)
        imgs = rng.uniform(0, 1, (2, 2, 16, 16))
        tac = rng.standard_normal((2, 2, 2, 16))
        states = rng.standard_normal((2, 2, 5))
        target = rng.standard_normal((2, enc.feature_dim))

        def build_loss():
            out = enc(Tensor(imgs), Tensor(tac), Tensor(states))
            diff = out - Tensor(target)
            return (diff * diff).sum()

        worst = check_gradients(build_loss, enc.parameters(),
                                np.random.default_rng(12), n_probes=120)
        assert worst < 1e-4

    def test_feature_dim(self):
        rng = np.random.default_rng(5)
        enc = ConditionEncoder(13, 80, 2, (32, 32), rng, obs_horizon=2)
        assert enc.feature_dim == 2 * (32 + 32 + 13)
        with pytest.raises(ValueError, match="divisible by 8"):
            ConditionEncoder(13, 80, 2, (30, 32), rng)


# ---- trajectory layout and normalization ---------------------------------------


class TestCoupledTrajectory:
    def test_views(self):
        data = np.arange(2 * 7, dtype=float).reshape(2, 7)
        tr = CoupledTrajectory(data, state_dim=4, latent_dim=3)
        assert tr.horizon == 2
        assert np.array_equal(tr.states, data[:, :4])
        assert np.array_equal(tr.latents, data[:, 4:])

    def test_layout_validation(self):
        with pytest.raises(ValueError, match="incompatible"):
            CoupledTrajectory(np.zeros((2, 6)), state_dim=4, latent_dim=3)
        with pytest.raises(ValueError, match="at least one step"):
            CoupledTrajectory(np.zeros((0, 7)), state_dim=4, latent_dim=3)


class TestTrajectoryNormalizer:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        rows = rng.uniform(-40, 90, (200, 9))
        norm = TrajectoryNormalizer.fit(rows)
        z = norm.normalize(rows)
        assert z.min() >= -1.0 - 1e-12 and z.max() <= 1.0 + 1e-12
        assert np.allclose(norm.denormalize(z), rows, atol=1e-6)

    def test_degenerate_dim(self):
        rows = np.column_stack([np.full(5, 3.25), np.linspace(-1, 1, 5)])
        norm = TrajectoryNormalizer.fit(rows)
        z = norm.normalize(rows)
        assert np.all(np.isfinite(z))
        assert np.allclose(norm.denormalize(z)[:, 0], 3.25)

    def test_fit_validation(self):
        with pytest.raises(ValueError, match="rows, dims"):
            TrajectoryNormalizer.fit(np.zeros(4))

    def test_dict_round_trip(self):
        norm = TrajectoryNormalizer.fit(np.random.default_rng(1).normal(size=(6, 3)))
        back = TrajectoryNormalizer.from_dict(norm.to_dict())
        assert np.array_equal(back.center, norm.center)
        assert np.array_equal(back.half, norm.half)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(2, 60), st.integers(1, 8))
    def test_round_trip_property(self, seed, n, d):
        rows = np.random.default_rng(seed).uniform(-1e3, 1e3, (n, d))
        norm = TrajectoryNormalizer.fit(rows)
        assert np.allclose(norm.denormalize(norm.normalize(rows)), rows,
                           atol=1e-6)


class TestSplitTrajectory:
    def _normalizer(self, dim):
        return TrajectoryNormalizer(center=np.zeros(dim), half=np.ones(dim))

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((16, 13))
        ang = rng.uniform(-np.pi, np.pi, 16)
        x[:, 2], x[:, 3] = np.cos(ang), np.sin(ang)
        h = rng.standard_normal((16, 8))
        y = np.concatenate([x, h], axis=1)
        norm = TrajectoryNormalizer.fit(np.vstack([y, -y]))
        xs, hs = split_trajectory(norm.normalize(y), norm, 13, 8)
        assert np.allclose(xs, x, atol=1e-9)
        assert np.allclose(hs, h, atol=1e-9)

    def test_angle_renormalized(self):
        y = np.zeros((3, 7))
        y[:, 2], y[:, 3] = 3.0, 4.0
        xs, _ = split_trajectory(y, self._normalizer(7), 5, 2)
        assert np.allclose(xs[:, 2:4], [[0.6, 0.8]] * 3)

    def test_degenerate_encoding_snaps(self):
        xs, _ = split_trajectory(np.zeros((2, 7)), self._normalizer(7), 5, 2)
        assert np.allclose(xs[:, 2:4], [[1.0, 0.0]] * 2)

    def test_validation(self):
        with pytest.raises(ValueError, match="incompatible"):
            split_trajectory(np.zeros((4, 6)), self._normalizer(6), 5, 2)
        with pytest.raises(ValueError, match="different layout"):
            split_trajectory(np.zeros((4, 7)), self._normalizer(6), 5, 2)


# ---- window assembly ------------------------------------------------------------


class TestCoupledWindows:
    def test_counts_and_layout(self, grasp_eps, small_codec):
        ws = coupled_windows(grasp_eps[:2], small_codec, horizon=16, obs_horizon=2)
        per_ep = grasp_eps[0].n_frames - 16 - 1
        assert len(ws) == 2 * per_ep
        assert ws.images.shape[1:] == (2, 32, 32)
        assert ws.tactile.shape[1:] == (2, 80, 2)
        assert ws.states.shape[1:] == (2, 13)
        assert ws.targets.shape[1:] == (16, 13 + 8)

    def test_targets_are_future_states_and_means(self, grasp_eps, small_codec):
        ep = grasp_eps[0]
        ws = coupled_windows([ep], small_codec, horizon=16, obs_horizon=2)
        means = small_codec.encode(ep.tactile.astype(np.float64))[0]
        k = 5  # anchor t0 = obs_horizon - 1 + k
        t0 = 1 + k
        assert np.array_equal(ws.states[k][-1], ep.states[t0].astype(np.float64))
        assert np.array_equal(ws.images[k][0], ep.images[t0 - 1])
        want = np.concatenate(
            [ep.states[t0 + 1:t0 + 17].astype(np.float64),
             means[t0 + 1:t0 + 17]], axis=1)
        assert np.array_equal(ws.targets[k], want)

    def test_deterministic_latents(self, grasp_eps, small_codec):
        a = coupled_windows(grasp_eps[:1], small_codec)
        b = coupled_windows(grasp_eps[:1], small_codec)
        assert np.array_equal(a.targets, b.targets)

    def test_short_episodes_rejected(self, grasp_eps, small_codec):
        short = grasp_eps[0]
        cut = type(short)(
            task_id=short.task_id, seed=short.seed,
            config_hash=short.config_hash, frame_hz=short.frame_hz,
            success=short.success, cause=short.cause,
            images=short.images[:10], tactile=short.tactile[:10],
            states=short.states[:10], targets=short.targets[:10],
            t=short.t[:10])
        with pytest.raises(ValueError, match="frames a window needs"):
            coupled_windows([cut], small_codec, horizon=16, obs_horizon=2)
        with pytest.raises(ValueError, match=">= 1"):
            coupled_windows(grasp_eps[:1], small_codec, horizon=0)


# ---- training objective ----------------------------------------------------------


class TestEpsLoss:
    def test_initial_loss_in_dim_band(self):
        rng = np.random.default_rng(6)
        net = TemporalUNet(3, 4, rng, widths=TOY_WIDTHS)
        schedule = make_schedule(100)
        y0 = rng.standard_normal((64, 16, 3))
        cond = Tensor(np.zeros((64, 4), np.float32))
        loss = float(eps_loss(net, schedule, y0, cond,
                              np.random.default_rng(7)).data)
        d = 16 * 3
        assert 0.5 * d <= loss <= 2.0 * d

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(8)
        net = TemporalUNet(2, 3, rng, widths=TOY_WIDTHS)
        net.out_conv.w.data[:] = 0.01
        schedule = make_schedule(50)
        y0 = rng.standard_normal((8, 16, 2))
        cond = Tensor(np.zeros((8, 3), np.float32))
        a = float(eps_loss(net, schedule, y0, cond, np.random.default_rng(42)).data)
        b = float(eps_loss(net, schedule, y0, cond, np.random.default_rng(42)).data)
        c = float(eps_loss(net, schedule, y0, cond, np.random.default_rng(43)).data)
        assert a == b
        assert a != c

    def test_non_finite_step_rejected(self, grasp_eps, small_codec):
        config = DiffusionConfig(latent_dim=8, steps=50, widths=TOY_WIDTHS, seed=0)
        model, log = train_diffusion(grasp_eps[:2], small_codec, config,
                                     epochs=1, batch_size=16, lr=3e-4)
        model.unet.enc1.conv1.w.data[0, 0, 0] = np.nan
        probe = model.unet.mid.conv1.w.data.copy()
        opt = Adam(model.parameters(), lr=1e-3)
        batch = coupled_windows(grasp_eps[:1], small_codec).take(slice(0, 4))
        before = log.rejected_steps
        value = denoise_train_step(model, opt, batch,
                                   np.random.default_rng(0), log)
        assert not np.isfinite(value)
        assert log.rejected_steps == before + 1
        assert np.array_equal(model.unet.mid.conv1.w.data, probe)


# ---- bimodal toy oracle ----------------------------------------------------------


class TestBimodalToy:
    def test_loss_drops_within_500_steps(self, toy_run):
        _, _, losses, _ = toy_run
        early = losses[:500]
        assert np.mean(early[-50:]) <= 0.5 * np.mean(early[:50])

    def test_both_modes_sampled(self, toy_run):
        _, _, _, samples = toy_run
        means = samples.mean(axis=(1, 2))
        pos = int((means > 0).sum())
        assert min(pos, 200 - pos) >= 40  # minority mode share >= 20%

    def test_samples_in_soft_range(self, toy_run):
        _, _, _, samples = toy_run
        assert samples.min() >= -1.05 and samples.max() <= 1.05

    def test_samples_near_modes(self, toy_run):
        _, _, _, samples = toy_run
        means = samples.mean(axis=(1, 2))
        assert np.abs(np.abs(means) - 0.5).mean() < 0.1

    def test_ddim_deterministic(self, toy_run):
        net, schedule, _, _ = toy_run
        a = ddim_core(net, schedule, np.zeros(1), 16, 1, n_steps=8, seed=9)
        b = ddim_core(net, schedule, np.zeros(1), 16, 1, n_steps=8, seed=9)
        c = ddim_core(net, schedule, np.zeros(1), 16, 1, n_steps=8, seed=10)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestDdimSteps:
    def test_even_span(self):
        idx = ddim_steps(100, 8)
        assert list(idx) == [100, 86, 72, 58, 43, 29, 15, 1]

    def test_full_and_single(self):
        assert list(ddim_steps(10, 10)) == list(range(10, 0, -1))
        assert list(ddim_steps(100, 1)) == [100]

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="exceeds"):
            ddim_steps(10, 11)
        with pytest.raises(ValueError, match=">= 1"):
            ddim_steps(10, 0)


# ---- trained bundle on recorded episodes ------------------------------------------


class TestTrajectoryDiffusion:
    def test_training_log(self, diff_model):
        _, log = diff_model
        assert len(log.train_loss) == 3 and len(log.val_loss) == 3
        assert log.best_epoch >= 0
        assert log.val_loss[log.best_epoch] == min(log.val_loss)
        assert log.n_train_windows > 0 and log.n_val_windows > 0
        assert log.rejected_steps == 0
        assert log.n_train_episodes + log.n_val_episodes == 6

    def test_condition_feature_contract(self, diff_model, grasp_eps):
        model, _ = diff_model
        ep = grasp_eps[0]
        hist = slice(30, 32)
        cond = model.encode_condition(ep.images[hist], ep.tactile[hist],
                                      ep.states[hist])
        assert cond.shape == (model.cond_encoder.feature_dim,)
        again = model.encode_condition(ep.images[hist], ep.tactile[hist],
                                       ep.states[hist])
        assert np.array_equal(cond, again)
        permuted = model.encode_condition(ep.images[hist][::-1].copy(),
                                          ep.tactile[hist][::-1].copy(),
                                          ep.states[hist][::-1].copy())
        assert np.linalg.norm(cond - permuted) > 0

    def test_contact_tactile_changes_feature(self, diff_model, grasp_eps):
        model, _ = diff_model
        ep = grasp_eps[0]
        hist = slice(30, 32)
        assert np.abs(ep.tactile[hist]).sum() > 1.0  # hold phase, in contact
        cond = model.encode_condition(ep.images[hist], ep.tactile[hist],
                                      ep.states[hist])
        zeroed = model.encode_condition(ep.images[hist],
                                        np.zeros_like(ep.tactile[hist]),
                                        ep.states[hist])
        assert np.linalg.norm(cond - zeroed) > 0

    def test_batched_condition_matches_single(self, diff_model, grasp_eps):
        model, _ = diff_model
        ep = grasp_eps[0]
        batch = model.encode_condition(
            np.stack([ep.images[30:32], ep.images[20:22]]),
            np.stack([ep.tactile[30:32], ep.tactile[20:22]]),
            np.stack([ep.states[30:32], ep.states[20:22]]))
        one = model.encode_condition(ep.images[20:22], ep.tactile[20:22],
                                     ep.states[20:22])
        assert np.allclose(batch[1], one, atol=1e-6)

    def test_history_length_enforced(self, diff_model, grasp_eps):
        model, _ = diff_model
        ep = grasp_eps[0]
        with pytest.raises(ValueError, match="history images"):
            model.encode_condition(ep.images[0:3], ep.tactile[0:2],
                                   ep.states[0:2])
        with pytest.raises(ValueError, match="history states"):
            model.encode_condition(ep.images[0:2], ep.tactile[0:2],
                                   ep.states[0:2, :5])

    def test_sampling_contract(self, diff_model, grasp_eps):
        model, _ = diff_model
        ep = grasp_eps[0]
        cond = model.encode_condition(ep.images[30:32], ep.tactile[30:32],
                                      ep.states[30:32])
        a = model.ddim_sample(cond, n_steps=8, seed=3)
        b = model.ddim_sample(cond, n_steps=8, seed=3)
        c = model.ddim_sample(cond, n_steps=8, seed=4)
        assert a.shape == (16, 13 + 8)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        with pytest.raises(ValueError, match="exceeds"):
            model.ddim_sample(cond, n_steps=51)
        with pytest.raises(ValueError, match="cond shape"):
            model.ddim_sample(cond[:-1])

    def test_split_shapes_and_unit_encodings(self, diff_model, grasp_eps):
        model, _ = diff_model
        ep = grasp_eps[0]
        cond = model.encode_condition(ep.images[30:32], ep.tactile[30:32],
                                      ep.states[30:32])
        x_hat, h_hat = model.split_trajectory(model.ddim_sample(cond, seed=0))
        assert x_hat.shape == (16, 13)
        assert h_hat.shape == (16, 8)
        assert np.allclose(np.linalg.norm(x_hat[:, 2:4], axis=1), 1.0)

    def test_untrained_paths_rejected(self):
        model = TrajectoryDiffusion(
            DiffusionConfig(latent_dim=8, widths=TOY_WIDTHS, seed=0))
        with pytest.raises(RuntimeError, match="untrained"):
            model.encode_condition(np.zeros((2, 32, 32)), np.zeros((2, 80, 2)),
                                   np.zeros((2, 13)))
        with pytest.raises(RuntimeError, match="untrained"):
            model.ddim_sample(np.zeros(154))
        with pytest.raises(RuntimeError, match="untrained"):
            model.split_trajectory(np.zeros((16, 21)))

    def test_attach_stats_validation(self):
        model = TrajectoryDiffusion(
            DiffusionConfig(latent_dim=8, widths=TOY_WIDTHS, seed=0))
        good = TrajectoryNormalizer(center=np.zeros(21), half=np.ones(21))
        with pytest.raises(ValueError, match="normalizer covers"):
            model.attach_stats(
                TrajectoryNormalizer(center=np.zeros(9), half=np.ones(9)),
                np.ones(2))
        with pytest.raises(ValueError, match="tactile_scale"):
            model.attach_stats(good, np.ones(3))

    def test_train_rejects_bad_inputs(self, grasp_eps, small_codec):
        config = DiffusionConfig(latent_dim=8, widths=TOY_WIDTHS, seed=0)
        with pytest.raises(ValueError, match="2 episodes"):
            train_diffusion(grasp_eps[:1], small_codec, config)
        with pytest.raises(ValueError, match="latent dim"):
            train_diffusion(grasp_eps, small_codec,
                            DiffusionConfig(latent_dim=16, widths=TOY_WIDTHS))

    def test_training_is_deterministic(self, grasp_eps, small_codec):
        config = DiffusionConfig(latent_dim=8, steps=50, widths=TOY_WIDTHS, seed=0)
        kw = dict(epochs=1, batch_size=16, lr=3e-4)
        m1, _ = train_diffusion(grasp_eps[:3], small_codec, config, **kw)
        m2, _ = train_diffusion(grasp_eps[:3], small_codec, config, **kw)
        for (n1, p1), (n2, p2) in zip(m1.named_parameters(),
                                      m2.named_parameters()):
            assert n1 == n2
            assert np.array_equal(p1.data, p2.data)


class TestDiffusionConfig:
    def test_defaults_match_deployment_dims(self):
        config = DiffusionConfig()
        assert config.horizon == 16
        assert config.obs_horizon == 2
        assert config.latent_dim == 32
        assert config.steps == 100
        assert config.widths == (64, 128, 256)

    def test_dict_round_trip(self):
        config = DiffusionConfig(latent_dim=8, steps=42, widths=TOY_WIDTHS,
                                 schedule_kind="linear", seed=7)
        assert DiffusionConfig.from_dict(config.to_dict()) == config

    def test_validation(self):
        with pytest.raises(ValueError, match="multiple of 4"):
            DiffusionConfig(horizon=15)
        with pytest.raises(ValueError, match="steps"):
            DiffusionConfig(steps=1)
        with pytest.raises(ValueError, match="schedule kind"):
            DiffusionConfig(schedule_kind="exp")
        with pytest.raises(ValueError, match="multiples of 8"):
            DiffusionConfig(widths=(30, 64, 128))
        with pytest.raises(ValueError, match="obs_horizon"):
            DiffusionConfig(obs_horizon=0)

    def test_default_split_dims(self):
        model = TrajectoryDiffusion(DiffusionConfig())
        model.attach_stats(
            TrajectoryNormalizer(center=np.zeros(45), half=np.ones(45)),
            np.ones(2))
        x_hat, h_hat = model.split_trajectory(np.zeros((16, 45)))
        assert x_hat.shape == (16, 4 + 9)
        assert h_hat.shape == (16, 32)


class TestStoreRoundTrip:
    def test_round_trip(self, diff_model, grasp_eps, tmp_path):
        model, _ = diff_model
        ep = grasp_eps[0]
        path = tmp_path / "diffusion.cgpw"
        save_diffusion(model, path)
        back = load_diffusion(path)
        cond = model.encode_condition(ep.images[30:32], ep.tactile[30:32],
                                      ep.states[30:32])
        assert np.array_equal(back.encode_condition(
            ep.images[30:32], ep.tactile[30:32], ep.states[30:32]), cond)
        assert np.array_equal(back.ddim_sample(cond, seed=5),
                              model.ddim_sample(cond, seed=5))
        assert back.config == model.config
        assert np.array_equal(back.normalizer.center, model.normalizer.center)

    def test_untrained_save_rejected(self, tmp_path):
        model = TrajectoryDiffusion(
            DiffusionConfig(latent_dim=8, widths=TOY_WIDTHS))
        with pytest.raises(RuntimeError, match="untrained"):
            save_diffusion(model, tmp_path / "nope.cgpw")

    def test_wrong_kind_rejected(self, small_codec, tmp_path):
        path = tmp_path / "codec.cgpw"
        save_codec(small_codec, path)
        with pytest.raises(ValueError, match="trajectory"):
            load_diffusion(path)
