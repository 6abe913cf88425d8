"""Tests for the layers, the generator and the sequence critics."""

import numpy as np
import pytest
from scipy.special import expit

from smooth_action_gan.data import ActionSequence, LabelDistribution
from smooth_action_gan.errors import ShapeError
from smooth_action_gan.models import (
    ClassifierParams,
    DiscriminatorParams,
    GeneratorParams,
    NoiseSequence,
    bilstm_encode,
    classify,
    classify_sequence,
    decode_frame,
    decode_sequence,
    discriminate,
    frames_to_steps,
    generate_batch,
    generate_sequence,
    init_classifier,
    init_discriminator,
    init_generator,
    label_matrix,
    latent_rollout,
    mix_labels,
    predict_probabilities,
    rollout_and_decode,
    smoothness_penalty,
)
from smooth_action_gan.models.layers import dense, init_lstm, lstm_unroll, zeros_like
from smooth_action_gan.numerics import Tensor, finite_difference_gradient, forward, ops


def _lstm_oracle(W, b, inputs):
    """Plain-numpy LSTM rollout with gates ordered i, f, g, o."""
    hidden = W.shape[1] // 4
    h = np.zeros((inputs[0].shape[0], hidden))
    c = np.zeros_like(h)
    states = []
    for x in inputs:
        z = np.concatenate([x, h], axis=1) @ W + b
        i, f = expit(z[:, :hidden]), expit(z[:, hidden : 2 * hidden])
        g, o = np.tanh(z[:, 2 * hidden : 3 * hidden]), expit(z[:, 3 * hidden :])
        c = f * c + i * g
        h = o * np.tanh(c)
        states.append(h)
    return states


def _mlp_oracle(decoder, x):
    depth = len({k.split(".")[0] for k in decoder})
    for i in range(depth):
        x = x @ decoder[f"{i}.W"].value + decoder[f"{i}.b"].value
        if i < depth - 1:
            x = np.maximum(x, 0.0)
    return x


def _zero_latent(params: GeneratorParams) -> GeneratorParams:
    return params.with_parameters(zeros_like(params.latent_parameters()))


class TestLayers:
    """Tests for dense and LSTM layers."""

    def test_lstm_layout(self):
        """Packed weights are (in + H, 4H) with forget bias 1."""
        params = init_lstm(np.random.default_rng(0), 3, 5)
        assert params["W"].shape == (8, 20)
        np.testing.assert_array_equal(params["b"].value[5:10], 1.0)
        np.testing.assert_array_equal(params["b"].value[:5], 0.0)

    def test_lstm_matches_oracle(self):
        """The tape LSTM equals a numpy hand rollout."""
        rng = np.random.default_rng(1)
        params = init_lstm(rng, 3, 4)
        inputs = [rng.normal(size=(2, 3)) for _ in range(5)]
        states = lstm_unroll(params, [Tensor(x) for x in inputs])
        expected = _lstm_oracle(params["W"].value, params["b"].value, inputs)
        for got, want in zip(states, expected):
            np.testing.assert_allclose(got.value, want, atol=1e-10)

    def test_lstm_gradient(self):
        """LSTM weight gradients match finite differences."""
        rng = np.random.default_rng(2)
        params = init_lstm(rng, 2, 3)
        inputs = [Tensor(rng.normal(size=(2, 2))) for _ in range(3)]
        W, b = params["W"], params["b"]

        def loss(w):
            return ops.sq_norm(lstm_unroll({"W": w, "b": b}, inputs)[-1])

        out, tape = forward(loss, W)
        (analytic,) = tape.gradient(out, [W])
        numeric = finite_difference_gradient(lambda w: loss(Tensor(w)).item(), W.value)
        np.testing.assert_allclose(analytic, numeric, atol=1e-7)

    def test_dense_width_checked(self):
        """Wrong input width is a ShapeError."""
        params = {"W": Tensor(np.ones((3, 2))), "b": Tensor(np.zeros(2))}
        with pytest.raises(ShapeError):
            dense(params, Tensor(np.ones((1, 4))))

    def test_lstm_input_width_checked(self):
        """LSTM steps of the wrong width are rejected."""
        params = init_lstm(np.random.default_rng(0), 3, 2)
        with pytest.raises(ShapeError):
            lstm_unroll(params, [Tensor(np.ones((1, 4)))])


class TestGeneratorParams:
    """Tests for generator weights."""

    def test_dimensions(self, tiny_generator):
        """Derived widths follow the tensors."""
        assert tiny_generator.noise_dim == 3
        assert tiny_generator.latent_dim == 2
        assert tiny_generator.pose_dim == 4
        assert tiny_generator.num_classes == 3
        assert tiny_generator.dtype == np.float64

    def test_decoder_split(self, tiny_generator):
        """decoder() strips the prefix and with_decoder puts it back."""
        decoder = tiny_generator.decoder()
        assert set(decoder) == {"0.W", "0.b", "1.W", "1.b", "2.W", "2.b"}
        assert decoder["0.W"].shape == (2 + 3, 6)
        swapped = tiny_generator.with_decoder(zeros_like(decoder))
        assert np.all(swapped.tensors["decoder.2.W"].value == 0)
        assert swapped.tensors["lstm.W"] is tiny_generator.tensors["lstm.W"]

    def test_latent_parameters_exclude_decoder(self, tiny_generator):
        """theta_1 holds only LSTM and head weights."""
        assert set(tiny_generator.latent_parameters()) == {"lstm.W", "lstm.b", "head.W", "head.b"}

    def test_with_parameters_shape_checked(self, tiny_generator):
        """Replacing a tensor by one of another shape fails."""
        with pytest.raises(ShapeError):
            tiny_generator.with_parameters({"head.W": Tensor(np.zeros((2, 2)))})

    def test_unknown_parameter(self, tiny_generator):
        """Unknown names are refused."""
        with pytest.raises(ShapeError):
            tiny_generator.with_parameters({"extra": Tensor(np.zeros(1))})


class TestLatentRollout:
    """Tests for the latent trajectory."""

    def _noise(self, T=5, m=2, seed=0):
        return NoiseSequence.sample(T, m, 3, seed, dtype=np.float64)

    def test_residual_accumulation_exact(self, tiny_generator):
        """h_t equals h_{t-1} + v_t exactly, with h_1 = v_1."""
        labels = label_matrix(np.eye(3)[[0, 2]], dtype=np.float64)
        trajectory = latent_rollout(tiny_generator, self._noise(), labels)
        latents, residuals = trajectory.latent_array(), trajectory.residual_array()
        np.testing.assert_array_equal(latents[:, 0], residuals[:, 0])
        for t in range(1, 5):
            np.testing.assert_array_equal(latents[:, t], latents[:, t - 1] + residuals[:, t])

    def test_endpoint_difference(self, tiny_generator):
        """h_T - h_1 is the sum of residuals 2..T."""
        labels = label_matrix(np.eye(3)[[1, 1]], dtype=np.float64)
        trajectory = latent_rollout(tiny_generator, self._noise(), labels)
        latents, residuals = trajectory.latent_array(), trajectory.residual_array()
        np.testing.assert_allclose(latents[:, -1] - latents[:, 0], residuals[:, 1:].sum(axis=1), atol=1e-12)

    def test_transitions(self, tiny_generator):
        """h_{t+1} - h_t are the T - 1 transitions, and they sum to h_T - h_1."""
        labels = label_matrix(np.eye(3)[[0, 1]], dtype=np.float64)
        trajectory = latent_rollout(tiny_generator, self._noise(T=6), labels)
        latents, steps = trajectory.latent_array(), trajectory.transitions()
        assert steps.shape == (2, 5, 2)
        np.testing.assert_allclose(steps, trajectory.residual_array()[:, 1:], atol=1e-12)
        np.testing.assert_allclose(steps.sum(axis=1), latents[:, -1] - latents[:, 0], atol=1e-12)

    def test_zero_parameters_give_zero_latents(self, tiny_generator):
        """All-zero theta_1 gives v_t = h_t = 0."""
        params = _zero_latent(tiny_generator)
        trajectory = latent_rollout(params, self._noise(), label_matrix(np.eye(3)[[0, 1]], dtype=np.float64))
        np.testing.assert_array_equal(trajectory.latent_array(), 0.0)

    def test_matches_hand_rollout(self, tiny_generator):
        """Residuals equal head(LSTM(concat(noise, label))) computed in numpy."""
        noise = self._noise(T=5, m=2, seed=4)
        y = np.eye(3)[[0, 2]]
        trajectory = latent_rollout(tiny_generator, noise, label_matrix(y, dtype=np.float64))
        t = tiny_generator.tensors
        hidden = _lstm_oracle(t["lstm.W"].value, t["lstm.b"].value, [np.concatenate([s.value, y], 1) for s in noise.steps])
        expected = np.cumsum([h @ t["head.W"].value + t["head.b"].value for h in hidden], axis=0)
        np.testing.assert_allclose(trajectory.latent_array(), np.transpose(expected, (1, 0, 2)), atol=1e-10)

    def test_direct_mode(self, tiny_generator):
        """Without residual accumulation the latents are the head outputs."""
        params = GeneratorParams(tensors=tiny_generator.tensors, num_classes=3, residual=False)
        trajectory = latent_rollout(params, self._noise(), label_matrix(np.eye(3)[[0, 1]], dtype=np.float64))
        np.testing.assert_array_equal(trajectory.latent_array(), trajectory.residual_array())

    def test_label_width_checked(self, tiny_generator):
        """Labels must have C columns."""
        with pytest.raises(ShapeError):
            latent_rollout(tiny_generator, self._noise(), Tensor(np.ones((2, 2))))

    def test_single_frame_rejected(self):
        """Sequences need at least two frames."""
        with pytest.raises(ShapeError):
            NoiseSequence.sample(1, 2, 3, 0)


class TestDecoder:
    """Tests for the shared frame decoder."""

    def test_matches_matrix_oracle(self, tiny_generator):
        """decode_frame equals the hand-evaluated MLP."""
        rng = np.random.default_rng(5)
        h, y = rng.normal(size=(3, 2)), np.eye(3)
        pose = decode_frame(tiny_generator.decoder(), Tensor(h), Tensor(y))
        expected = _mlp_oracle(tiny_generator.decoder(), np.concatenate([h, y], axis=1))
        np.testing.assert_allclose(pose.value, expected, atol=1e-10)

    def test_zero_decoder_gives_zero_pose(self, tiny_generator):
        """Zero theta_2 decodes every latent to the zero pose."""
        pose = decode_frame(zeros_like(tiny_generator.decoder()), Tensor(np.ones((2, 2))), Tensor(np.eye(3)[:2]))
        np.testing.assert_array_equal(pose.value, 0.0)

    def test_stateless(self, tiny_generator):
        """Decoding the same pair twice gives the same pose."""
        args = (tiny_generator.decoder(), Tensor(np.ones((1, 2))), Tensor(np.eye(3)[:1]))
        np.testing.assert_array_equal(decode_frame(*args).value, decode_frame(*args).value)

    def test_sequence_equals_framewise(self, tiny_generator):
        """Batched sequence decoding equals decoding frame by frame."""
        rng = np.random.default_rng(6)
        latents = [Tensor(rng.normal(size=(2, 2))) for _ in range(4)]
        labels = Tensor(np.eye(3)[[0, 1]])
        batched = decode_sequence(tiny_generator.decoder(), latents, labels)
        for h, pose in zip(latents, batched):
            np.testing.assert_allclose(pose.value, decode_frame(tiny_generator.decoder(), h, labels).value, atol=1e-12)


class TestGenerate:
    """Tests for sampling sequences."""

    def test_shapes(self, tiny_generator):
        """generate_batch returns (m, T, d) poses and (m, T, L) latents."""
        poses, latents = generate_batch(tiny_generator, np.eye(3)[[0, 1, 2, 2]], 7, 0)
        assert poses.shape == (4, 7, 4)
        assert latents.shape == (4, 7, 2)

    def test_deterministic_given_seed(self, tiny_generator):
        """Same seed gives the same sequence; another seed differs."""
        label = LabelDistribution.one_hot(1, 3)
        a, _ = generate_sequence(tiny_generator, label, 6, 3)
        b, _ = generate_sequence(tiny_generator, label, 6, 3)
        c, _ = generate_sequence(tiny_generator, label, 6, 4)
        assert a == b
        assert a != c

    def test_zero_latent_network_gives_constant_frames(self, tiny_generator):
        """A constant latent decodes to identical frames."""
        sequence, _ = generate_sequence(_zero_latent(tiny_generator), LabelDistribution.one_hot(0, 3), 5, 0)
        np.testing.assert_allclose(sequence.frames, np.repeat(sequence.frames[:1], 5, axis=0), atol=1e-6)

    def test_label_class_count_checked(self, tiny_generator):
        """Labels for the wrong class count are refused."""
        with pytest.raises(ShapeError):
            generate_sequence(tiny_generator, LabelDistribution.one_hot(0, 2), 5, 0)

    def test_one_hot_mix_equivalent(self, tiny_generator):
        """A one-hot mix generates exactly what the plain label does."""
        mixed, _ = generate_batch(tiny_generator, mix_labels([1, 0, 0]).as_array()[None], 5, 9)
        plain, _ = generate_batch(tiny_generator, np.eye(3)[[0]], 5, 9)
        np.testing.assert_array_equal(mixed, plain)

    def test_float32_default(self):
        """Generators default to 32-bit weights and outputs."""
        params = init_generator(0, 2, 4, noise_dim=2, latent_dim=2, lstm_hidden=3, decoder_hidden=4)
        poses, _ = generate_batch(params, np.eye(2), 3, 0)
        assert poses.dtype == np.float32


class TestSmoothness:
    """Tests for the smoothness penalty."""

    def test_constant_is_zero(self):
        """Constant latents and poses cost nothing."""
        frames = [Tensor(np.ones(2))] * 4
        assert smoothness_penalty(frames, frames, 1.0, 1.0).item() == 0.0

    def test_hand_value(self):
        """h = (0, 1), x = (0, 0), sigma1 = sigma2 = 1 gives 1."""
        latents = [Tensor([0.0]), Tensor([1.0])]
        poses = [Tensor([0.0]), Tensor([0.0])]
        assert smoothness_penalty(latents, poses, 1.0, 1.0).item() == pytest.approx(1.0)

    def test_matches_direct_sum(self):
        """Random T = 6 trajectories match direct summation."""
        rng = np.random.default_rng(7)
        h, x = rng.normal(size=(6, 3)), rng.normal(size=(6, 4))
        value = smoothness_penalty([Tensor(v) for v in h], [Tensor(v) for v in x], 0.05, 5e-5).item()
        expected = 0.05 * np.sum(np.diff(h, axis=0) ** 2) + 5e-5 * np.sum(np.diff(x, axis=0) ** 2)
        assert value == pytest.approx(expected, abs=1e-10)

    def test_batch_mean(self):
        """For (m, .) frames the penalty is averaged over the batch."""
        rng = np.random.default_rng(8)
        h, x = rng.normal(size=(3, 2, 2)), rng.normal(size=(3, 2, 2))
        batched = smoothness_penalty([Tensor(v) for v in h], [Tensor(v) for v in x], 1.0, 1.0).item()
        singles = [
            smoothness_penalty([Tensor(v) for v in h[:, i]], [Tensor(v) for v in x[:, i]], 1.0, 1.0).item()
            for i in range(2)
        ]
        assert batched == pytest.approx(np.mean(singles))

    def test_length_mismatch(self):
        """Latent and pose sequences must have equal length."""
        with pytest.raises(ShapeError):
            smoothness_penalty([Tensor([0.0])] * 3, [Tensor([0.0])] * 2, 1.0, 1.0)

    def test_negative_weight(self):
        """Negative weights are refused."""
        with pytest.raises(ValueError):
            smoothness_penalty([Tensor([0.0])] * 2, [Tensor([0.0])] * 2, -1.0, 1.0)


class TestMixLabels:
    """Tests for soft conditioning labels."""

    def test_normalizes(self):
        """Weights are scaled to sum to one."""
        assert mix_labels([2, 6, 2]).weights == pytest.approx((0.2, 0.6, 0.2))
        assert mix_labels([1, 1, 0, 0]).weights == (0.5, 0.5, 0.0, 0.0)

    def test_one_hot(self):
        """A single non-zero weight gives a one-hot label."""
        assert mix_labels([1, 0, 0]) == LabelDistribution.one_hot(0, 3)

    def test_negative(self):
        """Negative weights are refused."""
        with pytest.raises(ValueError):
            mix_labels([1.0, -0.5])

    def test_all_zero(self):
        """All-zero weights are refused."""
        with pytest.raises(ValueError):
            mix_labels([0.0, 0.0])


@pytest.fixture
def tiny_classifier():
    return init_classifier(np.random.default_rng(1), 4, 3, hidden_dim=3, dense_width=5, dtype=np.float64)


@pytest.fixture
def tiny_discriminator():
    return init_discriminator(np.random.default_rng(2), 4, 3, hidden_dim=3, dense_width=5, dtype=np.float64)


class TestEncoder:
    """Tests for the bidirectional encoder."""

    def test_matches_two_rollouts(self, tiny_classifier):
        """The code is relu(dense([fwd final, bwd final on reversed input]))."""
        rng = np.random.default_rng(3)
        seq = [rng.normal(size=(2, 4)) for _ in range(4)]
        t = tiny_classifier.tensors
        fwd = _lstm_oracle(t["fwd.W"].value, t["fwd.b"].value, seq)[-1]
        bwd = _lstm_oracle(t["bwd.W"].value, t["bwd.b"].value, seq[::-1])[-1]
        expected = np.maximum(np.concatenate([fwd, bwd], 1) @ t["dense.W"].value + t["dense.b"].value, 0.0)
        code = bilstm_encode(tiny_classifier, [Tensor(x) for x in seq])
        np.testing.assert_allclose(code.value, expected, atol=1e-10)

    def test_zero_params_zero_code(self, tiny_classifier):
        """Zero weights give a zero code."""
        params = tiny_classifier.with_parameters(zeros_like(tiny_classifier.tensors))
        code = bilstm_encode(params, frames_to_steps(np.ones((2, 3, 4)), dtype=np.float64))
        np.testing.assert_array_equal(code.value, 0.0)

    def test_palindrome_with_tied_weights(self, tiny_classifier):
        """With tied directions a palindromic sequence gives equal halves."""
        t = dict(tiny_classifier.tensors)
        t["bwd.W"], t["bwd.b"] = t["fwd.W"], t["fwd.b"]
        tied = ClassifierParams(tensors=t)
        frames = np.random.default_rng(4).normal(size=(1, 3, 4))
        frames[:, 2] = frames[:, 0]
        steps = frames_to_steps(frames, dtype=np.float64)
        fwd = lstm_unroll({"W": t["fwd.W"], "b": t["fwd.b"]}, steps)[-1]
        bwd = lstm_unroll({"W": t["bwd.W"], "b": t["bwd.b"]}, steps[::-1])[-1]
        np.testing.assert_allclose(fwd.value, bwd.value, atol=1e-14)
        assert bilstm_encode(tied, steps).shape == (1, 5)

    def test_input_width_checked(self, tiny_classifier):
        """Frames of the wrong width are refused."""
        with pytest.raises(ShapeError):
            bilstm_encode(tiny_classifier, frames_to_steps(np.ones((1, 3, 5))))

    def test_frames_to_steps_needs_3d(self):
        """frames_to_steps takes an (m, T, d) array."""
        with pytest.raises(ShapeError):
            frames_to_steps(np.ones((3, 4)))


class TestClassifier:
    """Tests for the sequence classifier."""

    def test_probabilities(self, tiny_classifier):
        """Outputs are (m, C) probability rows."""
        probs = classify(tiny_classifier, frames_to_steps(np.random.default_rng(0).normal(size=(3, 5, 4)), np.float64))
        assert probs.shape == (3, 3)
        np.testing.assert_allclose(probs.value.sum(axis=1), 1.0)

    def test_zero_params_uniform(self, tiny_classifier):
        """Zero weights predict the uniform distribution."""
        params = tiny_classifier.with_parameters(zeros_like(tiny_classifier.tensors))
        label = classify_sequence(params, ActionSequence(np.ones((4, 4))))
        assert label.weights == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_predict_probabilities_chunks(self, tiny_classifier):
        """Chunked prediction equals one batch."""
        sequences = np.random.default_rng(1).normal(size=(5, 3, 4))
        np.testing.assert_allclose(
            predict_probabilities(tiny_classifier, sequences, batch_size=2),
            predict_probabilities(tiny_classifier, sequences),
            atol=1e-14,
        )

    def test_num_classes(self, tiny_classifier):
        """num_classes follows the output layer."""
        assert tiny_classifier.num_classes == 3
        assert tiny_classifier.input_dim == 4


class TestDiscriminator:
    """Tests for the sequence-label discriminator."""

    def test_zero_params_half(self, tiny_discriminator):
        """Zero weights give probability one half."""
        params = tiny_discriminator.with_parameters(zeros_like(tiny_discriminator.tensors))
        out = discriminate(params, frames_to_steps(np.ones((2, 3, 4)), np.float64), Tensor(np.eye(3)[:2]))
        np.testing.assert_array_equal(out.value, 0.5)

    def test_matches_composition(self, tiny_discriminator):
        """Output equals sigmoid(out(encode(frames with label appended)))."""
        rng = np.random.default_rng(2)
        x, y = rng.normal(size=(2, 3, 4)), np.eye(3)[[1, 2]]
        augmented = [Tensor(np.concatenate([x[:, t], y], axis=1)) for t in range(3)]
        code = bilstm_encode(tiny_discriminator, augmented).value
        t = tiny_discriminator.tensors
        expected = expit(code @ t["out.W"].value + t["out.b"].value)[:, 0]
        got = discriminate(tiny_discriminator, frames_to_steps(x, np.float64), Tensor(y)).value
        np.testing.assert_allclose(got, expected, atol=1e-10)

    def test_layout(self, tiny_discriminator):
        """The encoder reads d + C inputs and emits one logit."""
        assert isinstance(tiny_discriminator, DiscriminatorParams)
        assert tiny_discriminator.input_dim == 7
        assert tiny_discriminator.pose_dim == 4
        assert tiny_discriminator.output_dim == 1

    def test_label_width_checked(self, tiny_discriminator):
        """Labels must have C columns."""
        with pytest.raises(ShapeError):
            discriminate(tiny_discriminator, frames_to_steps(np.ones((1, 3, 4)), np.float64), Tensor(np.ones((1, 2))))


class TestGeneratorGradients:
    """End-to-end gradient check through generator and discriminator."""

    def test_adversarial_loss_gradient(self, tiny_generator, tiny_discriminator):
        """d log D(G(noise, y), y) / d head.W matches finite differences."""
        noise = NoiseSequence.sample(3, 2, 3, 5, dtype=np.float64)
        labels = label_matrix(np.eye(3)[[0, 2]], dtype=np.float64)
        head = tiny_generator.tensors["head.W"]

        def loss(w):
            params = tiny_generator.with_parameters({"head.W": w})
            poses, _ = rollout_and_decode(params, noise, labels)
            return ops.mean(ops.log(discriminate(tiny_discriminator, poses, labels)))

        out, tape = forward(loss, head)
        (analytic,) = tape.gradient(out, [head])
        numeric = finite_difference_gradient(lambda w: loss(Tensor(w)).item(), head.value)
        np.testing.assert_allclose(analytic, numeric, atol=1e-7)
