"""Autodiff, network, optimizer, and checkpoint tests."""

import math

import numpy as np
import pytest

from dogfight.nn import (
    ParamStore,
    PolicyNetwork,
    Tensor,
    adam_step,
    commander_config,
    ctce_config,
    escape_config,
    fight_config,
    load_checkpoint,
    sample_action,
    save_checkpoint,
)
from dogfight.nn.autodiff import (
    clip,
    concat,
    log_softmax,
    matmul,
    minimum,
    softmax,
    stack,
    tanh,
    tmean,
    tsum,
    transpose_last2,
)
from dogfight.nn.gradcheck import check_network, run_standard_suite


def numeric_grad(fn, x, h=1e-6):
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        up = fn()
        x[idx] = orig - h
        down = fn()
        x[idx] = orig
        grad[idx] = (up - down) / (2 * h)
        it.iternext()
    return grad


class TestAutodiffOps:
    def _check(self, build, *arrays):
        tensors = [Tensor(a, requires_grad=True) for a in arrays]
        out = build(*tensors)
        out.backward()
        for t, a in zip(tensors, arrays):
            numeric = numeric_grad(lambda: build(
                *[Tensor(arr) for arr in arrays]).item(), a)
            assert np.allclose(t.grad, numeric, atol=1e-5), build.__name__

    def test_linear_layer_gradient(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(3, 4))
        w = rng.normal(size=(4, 5))
        b = rng.normal(size=5)
        self._check(lambda X, W, B: tsum(tanh(matmul(X, W) + B)), x, w, b)

    def test_outer_product_identity(self):
        # single-sample linear layer: dL/dW = outer(input, grad_out)
        x = np.array([[1.0, 2.0, 3.0]])
        w = Tensor(np.zeros((3, 2)), requires_grad=True)
        out = matmul(Tensor(x), w)
        out.backward(np.array([[0.5, -1.0]]))
        assert np.allclose(w.grad, np.outer(x[0], [0.5, -1.0]))

    def test_batched_matmul_gradient(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(2, 3, 4))
        b = rng.normal(size=(4, 4))
        self._check(lambda A, B: tsum(matmul(A, transpose_last2(matmul(A, B)))), a, b)

    def test_softmax_rows_sum_to_one(self):
        rng = np.random.default_rng(2)
        out = softmax(Tensor(rng.normal(size=(6, 9))))
        assert np.allclose(out.data.sum(axis=-1), 1.0, atol=1e-12)

    def test_softmax_gradient(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 5))
        self._check(lambda X: tsum(softmax(X) * np.arange(5.0)), x)

    def test_log_softmax_gradient(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(2, 5))
        self._check(lambda X: tsum(log_softmax(X) * np.arange(5.0)), x)

    def test_minimum_and_clip_gradient(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(8,))
        b = rng.normal(size=(8,))
        self._check(lambda A, B: tsum(minimum(A * 2.0, clip(B, -0.5, 0.5))), a, b)

    def test_stack_concat_mean(self):
        rng = np.random.default_rng(6)
        a = rng.normal(size=(2, 3))
        b = rng.normal(size=(2, 3))
        weights = np.arange(6.0)
        self._check(lambda A, B: tsum(tmean(stack([A, B], axis=1), axis=1))
                    + tsum(concat([A, B], axis=-1) * weights), a, b)

    def test_broadcast_add_bias(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(4, 3))
        b = rng.normal(size=(3,))
        self._check(lambda X, B: tsum(X + B), x, b)

    def test_backward_requires_scalar(self):
        t = Tensor(np.ones((2, 2)), requires_grad=True)
        with pytest.raises(ValueError):
            (t * 2.0).backward()


class TestNetworks:
    def test_fight_head_shapes(self):
        net = PolicyNetwork(fight_config(critic_width=124), seed=0)
        out = net.forward_actor("ac1", np.zeros(27))
        assert [l.shape[-1] for l in out.logits] == [13, 9, 2, 2]
        out2 = net.forward_actor("ac2", np.zeros(25))
        assert [l.shape[-1] for l in out2.logits] == [13, 9, 2, 2]

    def test_commander_variants(self):
        n2 = PolicyNetwork(commander_config(2, critic_width=105), seed=0)
        assert n2.forward_actor("cmd", np.zeros(34)).logits[0].shape[-1] == 3
        n3 = PolicyNetwork(commander_config(3, critic_width=135), seed=0)
        assert n3.forward_actor("cmd", np.zeros(44)).logits[0].shape[-1] == 4

    def test_zero_params_uniform_distribution(self):
        net = PolicyNetwork(fight_config(critic_width=124), seed=0)
        for t in net.store.params.values():
            t.data = np.zeros_like(t.data)
        out = net.forward_actor("ac1", np.zeros(27))
        for logits in out.logits:
            assert np.allclose(logits.data, 0.0)
        samples, log_prob, entropy = sample_action(
            [l.data[0] for l in out.logits], np.random.default_rng(0))
        assert log_prob == pytest.approx(
            math.log(1 / 13) + math.log(1 / 9) + 2 * math.log(1 / 2))

    def test_zero_params_zero_value(self):
        net = PolicyNetwork(fight_config(critic_width=124), seed=0)
        for t in net.store.params.values():
            t.data = np.zeros_like(t.data)
        assert net.forward_critic("ac1", np.zeros(124)).item() == 0.0

    def test_shape_mismatch_rejected(self):
        net = PolicyNetwork(fight_config(critic_width=124), seed=0)
        with pytest.raises(ValueError):
            net.forward_actor("ac1", np.zeros(25))
        with pytest.raises(ValueError):
            net.forward_critic("ac1", np.zeros(100))

    def test_shared_core_is_one_tensor(self):
        # the green layer: same parameter object on the actor and critic
        # paths of both type instances
        net = PolicyNetwork(fight_config(critic_width=124), seed=0)
        assert "shared.core.W" in net.store
        before = net.forward_critic("ac1", np.ones(124)).item()
        net.store["shared.core.W"].data += 0.05
        after = net.forward_critic("ac1", np.ones(124)).item()
        assert before != after  # actor-path parameter moved the critic too

    def test_actor_update_reaches_critic_through_shared_core(self):
        net = PolicyNetwork(fight_config(critic_width=124), seed=0)
        critic_before = net.forward_critic("ac2", np.ones(124)).item()
        net.store.zero_grad()
        out = net.forward_actor("ac1", np.ones(27))
        tmean(out.logits[0]).backward()
        assert net.store["shared.core.W"].grad is not None
        adam_step(net.store, lr=0.05)
        critic_after = net.forward_critic("ac2", np.ones(124)).item()
        assert critic_before != critic_after

    def test_policy_symmetry_identical_obs(self):
        net = PolicyNetwork(fight_config(critic_width=124), seed=3)
        obs = np.random.default_rng(5).uniform(0, 1, 27)
        a = net.forward_actor("ac1", obs)
        b = net.forward_actor("ac1", obs)
        for la, lb in zip(a.logits, b.logits):
            assert np.array_equal(la.data, lb.data)

    def test_forward_deterministic(self):
        cfg = commander_config(2, critic_width=105)
        net = PolicyNetwork(cfg, seed=9)
        obs = np.random.default_rng(1).uniform(0, 1, 34)
        h = net.initial_hidden()
        o1 = net.forward_actor("cmd", obs, h)
        o2 = net.forward_actor("cmd", obs, h)
        assert np.array_equal(o1.logits[0].data, o2.logits[0].data)
        assert np.array_equal(o1.hidden.data, o2.hidden.data)

    def test_gru_hidden_evolves(self):
        net = PolicyNetwork(commander_config(2, critic_width=105), seed=2)
        obs = np.random.default_rng(3).uniform(0, 1, 34)
        h0 = net.initial_hidden()
        out1 = net.forward_actor("cmd", obs, h0)
        out2 = net.forward_actor("cmd", obs, out1.hidden.data)
        assert not np.array_equal(out1.hidden.data, out2.hidden.data)
        assert not np.array_equal(out1.logits[0].data, out2.logits[0].data)

    def test_fc_baseline_dimensions(self):
        net = PolicyNetwork(fight_config(critic_width=124, fc_baseline=True), seed=0)
        assert net.store["ac1.embed.W"].shape == (27, 500)
        assert net.store["shared.core.W"].shape == (500, 500)
        out = net.forward_actor("ac1", np.zeros(27))
        assert out.logits[0].shape[-1] == 13

    def test_ctce_joint_heads(self):
        cfg = ctce_config("fight", obs_width=27 * 3,
                          head_arities=(13, 9, 2, 2) * 3, critic_width=31 * 6)
        net = PolicyNetwork(cfg, seed=0)
        out = net.forward_actor("joint", np.zeros(81))
        assert len(out.logits) == 12

    def test_nan_logits_rejected(self):
        with pytest.raises(FloatingPointError):
            sample_action([np.array([np.nan, 0.0])], np.random.default_rng(0))


class TestSampling:
    def test_two_way_uniform(self):
        samples, log_prob, entropy = sample_action(
            [np.zeros(2)], np.random.default_rng(0))
        assert log_prob == pytest.approx(math.log(0.5))
        assert entropy == pytest.approx(math.log(2))

    def test_peaked_logits_prefer_argmax(self):
        rng = np.random.default_rng(1)
        hits = sum(sample_action([np.array([10.0, 0.0, 0.0])], rng)[0][0] == 0
                   for _ in range(1000))
        assert hits > 990

    def test_greedy_deterministic(self):
        logits = [np.array([0.3, 1.2, -0.5])]
        for seed in range(5):
            samples, _, _ = sample_action(logits, np.random.default_rng(seed),
                                          greedy=True)
            assert samples == (1,)

    def test_log_prob_matches_probability(self):
        rng = np.random.default_rng(2)
        logits = rng.normal(size=7)
        probs = np.exp(logits - logits.max())
        probs /= probs.sum()
        samples, log_prob, _ = sample_action([logits], rng)
        assert log_prob == pytest.approx(math.log(probs[samples[0]]))


class TestAdam:
    def test_zero_gradient_no_change(self):
        store = ParamStore(dtype="float64")
        t = store.add("w", np.ones(4))
        t.grad = np.zeros(4)
        adam_step(store, lr=0.1)
        assert np.array_equal(t.data, np.ones(4))

    def test_constant_gradient_reaches_lr_magnitude(self):
        store = ParamStore(dtype="float64")
        t = store.add("w", np.zeros(1))
        lr = 0.01
        for _ in range(500):
            t.grad = np.array([2.5])
            adam_step(store, lr=lr)
        # scale invariance: steady-state step approaches lr for constant grad
        before = t.data.copy()
        t.grad = np.array([2.5])
        adam_step(store, lr=lr)
        assert abs(before[0] - t.data[0]) == pytest.approx(lr, rel=1e-3)

    def test_first_step_bias_correction(self):
        store = ParamStore(dtype="float64")
        t = store.add("w", np.zeros(1))
        g = 0.3
        t.grad = np.array([g])
        adam_step(store, lr=0.001)
        # m_hat = g, v_hat = g^2 -> step = lr * g / (|g| + eps)
        expected = -0.001 * g / (abs(g) + 1e-8)
        assert t.data[0] == pytest.approx(expected, rel=1e-9)

    def test_grad_norm_clipping(self):
        store = ParamStore(dtype="float64")
        t = store.add("w", np.zeros(3))
        t.grad = np.array([3.0, 4.0, 0.0])
        norm = store.clip_grad_norm(1.0)
        assert norm == pytest.approx(5.0)
        assert np.linalg.norm(t.grad) == pytest.approx(1.0)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        net = PolicyNetwork(fight_config(critic_width=124), seed=4)
        path = tmp_path / "fight.ckpt"
        save_checkpoint(path, net.store, net.config.to_dict())
        arrays, config = load_checkpoint(path)
        assert config == net.config.to_dict()
        for name, data in net.store.state_arrays().items():
            assert np.array_equal(arrays[name], data)

    def test_load_into_network(self, tmp_path):
        net = PolicyNetwork(commander_config(2, critic_width=105), seed=5)
        path = tmp_path / "cmd.ckpt"
        save_checkpoint(path, net.store, net.config.to_dict())
        other = PolicyNetwork(commander_config(2, critic_width=105), seed=99)
        arrays, _ = load_checkpoint(path)
        other.store.load_arrays(arrays)
        obs = np.random.default_rng(0).uniform(0, 1, 34)
        a = net.forward_actor("cmd", obs, net.initial_hidden())
        b = other.forward_actor("cmd", obs, other.initial_hidden())
        assert np.array_equal(a.logits[0].data, b.logits[0].data)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.ckpt"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError):
            load_checkpoint(path)

    def test_checksum_tracks_content(self):
        net = PolicyNetwork(escape_config(critic_width=128), seed=6)
        c1 = net.store.checksum()
        net.store["shared.core.W"].data += 1.0
        assert net.store.checksum() != c1


class TestGradCheckSuite:
    # reduced-draw versions; the acceptance suite runs the full 100 draws
    def test_fight_architecture(self):
        report = check_network(fight_config(critic_width=40, dtype="float64"),
                               "ac1", draws=10, seed=0)
        assert report.passed, report

    def test_escape_architecture(self):
        report = check_network(escape_config(critic_width=40, dtype="float64"),
                               "ac2", draws=10, seed=1)
        assert report.passed, report

    def test_commander_gru_through_time(self):
        report = check_network(commander_config(2, critic_width=40, dtype="float64"),
                               "cmd", draws=10, seq_len=5, seed=2)
        assert report.passed, report

    def test_suite_runner(self):
        reports = run_standard_suite(draws=3, seed=7)
        assert len(reports) == 3
        assert all(r.passed for r in reports)
