"""VAE forward passes, losses and checkpointing.

Forward passes are checked against the same arithmetic written out in plain
numpy; losses against closed-form expressions and (for the KL term) a
Monte-Carlo estimate; full-loss gradients against finite differences.
"""

import numpy as np
import pytest

from attrvae.autodiff import Tensor, backward, gradients
from attrvae.errors import FormatError, ShapeError
from attrvae.rng import SeededRng
from attrvae.vae import (
    MlpVae,
    beta_vae_loss,
    kld_loss,
    load_model,
    recon_loss,
    reconstruction_accuracy,
    save_model,
)


def tiny_model():
    model = MlpVae(input_width=2, latent_dim=1, hidden=(2,), activation="tanh")
    model.params["enc0.w"].data[...] = [[0.1, -0.2], [0.3, 0.4]]
    model.params["enc0.b"].data[...] = [0.05, -0.05]
    model.params["enc_head.w"].data[...] = [[0.5, -0.1], [0.2, 0.6]]
    model.params["enc_head.b"].data[...] = [0.0, 0.1]
    model.params["dec0.w"].data[...] = [[0.7, -0.3]]
    model.params["dec0.b"].data[...] = [0.1, 0.2]
    model.params["dec_out.w"].data[...] = [[0.4, 0.5], [-0.6, 0.2]]
    model.params["dec_out.b"].data[...] = [-0.1, 0.3]
    return model


def test_encode_matches_hand_arithmetic():
    model = tiny_model()
    x = np.array([[1.0, 2.0], [-0.5, 0.25]])
    h = np.tanh(x @ np.array([[0.1, -0.2], [0.3, 0.4]]) + np.array([0.05, -0.05]))
    out = h @ np.array([[0.5, -0.1], [0.2, 0.6]]) + np.array([0.0, 0.1])
    mu, logvar = model.encode(x)
    assert np.allclose(mu.data, out[:, :1], rtol=0, atol=1e-15)
    assert np.allclose(logvar.data, out[:, 1:], rtol=0, atol=1e-15)


def test_decode_matches_hand_arithmetic():
    model = tiny_model()
    z = np.array([[0.3], [-1.2]])
    h = np.tanh(z @ np.array([[0.7, -0.3]]) + np.array([0.1, 0.2]))
    logits = h @ np.array([[0.4, 0.5], [-0.6, 0.2]]) + np.array([-0.1, 0.3])
    want = 1.0 / (1.0 + np.exp(-logits))
    assert np.allclose(model.decode(z).data, want, rtol=0, atol=1e-15)


def test_forward_uses_reparameterized_sample():
    model = tiny_model()
    x = np.array([[0.2, 0.8]])
    fwd = model.forward(x, SeededRng(5))
    eps = SeededRng(5).normal((1, 1))
    want_z = fwd.mu.data + np.exp(0.5 * fwd.logvar.data) * eps
    assert np.allclose(fwd.z.data, want_z, rtol=1e-15, atol=0)
    assert np.allclose(fwd.recon.data, model.decode(want_z).data, rtol=0, atol=1e-15)
    again = model.forward(x, SeededRng(5))
    assert np.array_equal(fwd.z.data, again.z.data)


def test_encode_mean_and_reconstruct_mean():
    model = tiny_model()
    x = np.array([[0.2, 0.8], [0.5, 0.5]])
    assert np.array_equal(model.encode_mean(x), model.encode(x)[0].data)
    a = model.reconstruct_mean(x)
    assert np.array_equal(a, model.reconstruct_mean(x))
    assert a.shape == x.shape


def test_input_shape_validation():
    model = tiny_model()
    with pytest.raises(ShapeError):
        model.encode(np.zeros((3,)))
    with pytest.raises(ShapeError):
        model.encode(np.zeros((3, 5)))
    with pytest.raises(ShapeError):
        model.decode(np.zeros((3, 2)))


def test_constructor_validation():
    with pytest.raises(ValueError):
        MlpVae(4, 2, activation="gelu")
    with pytest.raises(ValueError):
        MlpVae(4, 2, head="gaussian")
    with pytest.raises(ValueError):
        MlpVae(4, 2, head="categorical")  # missing seq_len/vocab_size
    with pytest.raises(ShapeError):
        MlpVae(10, 2, head="categorical", seq_len=3, vocab_size=4)
    with pytest.raises(ValueError):
        MlpVae(4, 0)


def test_init_weights_deterministic_and_scaled():
    model = MlpVae(input_width=64, latent_dim=4, hidden=(32,), activation="relu")
    model.init_weights(SeededRng(0))
    first = {k: t.data.copy() for k, t in model.params.items()}
    model.init_weights(SeededRng(0))
    for k, t in model.params.items():
        assert np.array_equal(first[k], t.data)
    assert np.all(model.params["enc0.b"].data == 0.0)
    # He scaling: std close to sqrt(2/fan_in)
    std = model.params["enc0.w"].data.std()
    assert abs(std - np.sqrt(2.0 / 64.0)) < 0.03


def test_recon_loss_real_closed_form():
    r = SeededRng(10)
    recon = r.uniform((4, 6))
    x = r.uniform((4, 6))
    got = recon_loss(Tensor(recon), x, "real").item()
    want = np.mean(np.sum((recon - x) ** 2, axis=1))
    assert got == pytest.approx(want, rel=1e-14)
    assert recon_loss(Tensor(x), x, "real").item() == 0.0


def test_recon_loss_categorical_closed_form():
    m, seq, vocab = 2, 3, 4
    r = SeededRng(11)
    logits = r.normal((m, seq * vocab)) * 2.0
    ids = SeededRng(12).integers(0, vocab, (m, seq))
    onehot = np.zeros((m, seq, vocab))
    np.put_along_axis(onehot, ids[:, :, None], 1.0, axis=2)
    x = onehot.reshape(m, seq * vocab)

    lg = logits.reshape(m * seq, vocab)
    lse = np.log(np.exp(lg - lg.max(axis=1, keepdims=True)).sum(axis=1)) + lg.max(axis=1)
    logp = lg - lse[:, None]
    want = -logp[np.arange(m * seq), ids.reshape(-1)].reshape(m, seq).sum(axis=1).mean()

    got = recon_loss(Tensor(logits), x, "categorical", seq_len=seq, vocab_size=vocab).item()
    assert got == pytest.approx(want, rel=1e-12)


def test_recon_loss_categorical_shift_invariance():
    # adding a constant to every logit of a position changes nothing
    m, seq, vocab = 2, 2, 3
    logits = SeededRng(13).normal((m, seq * vocab))
    x = np.zeros((m, seq * vocab))
    x[:, 0] = 1.0
    x[:, vocab + 1] = 1.0
    base = recon_loss(Tensor(logits), x, "categorical", seq_len=seq, vocab_size=vocab).item()
    shifted = recon_loss(Tensor(logits + 100.0), x, "categorical", seq_len=seq, vocab_size=vocab).item()
    assert shifted == pytest.approx(base, rel=1e-9)


def test_recon_loss_validation():
    with pytest.raises(ShapeError):
        recon_loss(Tensor(np.zeros((2, 3))), np.zeros((2, 4)), "real")
    with pytest.raises(ValueError):
        recon_loss(Tensor(np.zeros((2, 4))), np.zeros((2, 4)), "categorical")
    with pytest.raises(ValueError):
        recon_loss(Tensor(np.zeros((2, 4))), np.zeros((2, 4)), "bernoulli")


def test_kld_closed_form_and_zero_point():
    mu = np.array([[0.5, -1.0], [0.0, 2.0]])
    lv = np.array([[0.3, -0.2], [0.0, 0.1]])
    got = kld_loss(Tensor(mu), Tensor(lv)).item()
    want = np.mean(-0.5 * np.sum(1.0 + lv - mu**2 - np.exp(lv), axis=1))
    assert got == pytest.approx(want, rel=1e-14)
    assert kld_loss(Tensor(np.zeros((3, 4))), Tensor(np.zeros((3, 4)))).item() == 0.0
    assert kld_loss(Tensor(mu), Tensor(lv)).item() > 0.0


def test_kld_matches_monte_carlo():
    mu = np.array([[0.8, -0.3]])
    lv = np.array([[0.4, -0.6]])
    closed = kld_loss(Tensor(mu), Tensor(lv)).item()
    eps = SeededRng(99).normal((100000, 2))
    sigma = np.exp(0.5 * lv)
    z = mu + sigma * eps
    logq = -0.5 * np.sum((z - mu) ** 2 / sigma**2 + lv + np.log(2 * np.pi), axis=1)
    logp = -0.5 * np.sum(z**2 + np.log(2 * np.pi), axis=1)
    assert closed == pytest.approx(np.mean(logq - logp), abs=0.02)


def test_beta_vae_loss_composition():
    model = tiny_model()
    x = np.array([[0.2, 0.8], [0.6, 0.1], [0.9, 0.9]])
    for beta in (0.0, 1.0, 4.0):
        loss, fwd, parts = beta_vae_loss(model, x, beta, SeededRng(21))
        assert loss.item() == pytest.approx(parts["recon"] + beta * parts["kld"], rel=1e-14)
        rec = recon_loss(fwd.recon, x, "real").item()
        assert parts["recon"] == pytest.approx(rec, rel=1e-14)


def test_beta_vae_gradient_matches_finite_differences():
    model = MlpVae(input_width=6, latent_dim=2, hidden=(4,), activation="tanh")
    model.init_weights(SeededRng(31))
    x = SeededRng(32).uniform((5, 6))
    base = {k: t.data.copy() for k, t in model.params.items()}

    def value():
        loss, _, _ = beta_vae_loss(model, x, 1.0, SeededRng(33))
        return loss.item()

    loss, _, _ = beta_vae_loss(model, x, 1.0, SeededRng(33))
    grads = backward(loss, model.params)
    h = 1e-5
    for name in ("enc0.w", "enc_head.b", "dec_out.w"):
        t = model.params[name]
        flat = t.data.reshape(-1)
        for i in range(0, flat.size, max(1, flat.size // 5)):
            keep = flat[i]
            flat[i] = keep + h
            fp = value()
            flat[i] = keep - h
            fm = value()
            flat[i] = keep
            num = (fp - fm) / (2 * h)
            ana = grads[name].reshape(-1)[i]
            assert ana == pytest.approx(num, rel=1e-4, abs=1e-7)
    for name, t in model.params.items():
        assert np.array_equal(t.data, base[name])


def test_categorical_gradient_matches_finite_differences():
    seq, vocab = 3, 4
    model = MlpVae(input_width=seq * vocab, latent_dim=2, hidden=(5,),
                   activation="tanh", head="categorical", seq_len=seq, vocab_size=vocab)
    model.init_weights(SeededRng(41))
    ids = SeededRng(42).integers(0, vocab, (4, seq))
    x = np.zeros((4, seq, vocab))
    np.put_along_axis(x, ids[:, :, None], 1.0, axis=2)
    x = x.reshape(4, seq * vocab)

    def value():
        loss, _, _ = beta_vae_loss(model, x, 0.5, SeededRng(43))
        return loss.item()

    loss, _, _ = beta_vae_loss(model, x, 0.5, SeededRng(43))
    grads = backward(loss, model.params)
    h = 1e-5
    for name in ("enc0.w", "dec_out.b"):
        t = model.params[name]
        flat = t.data.reshape(-1)
        for i in range(0, flat.size, max(1, flat.size // 4)):
            keep = flat[i]
            flat[i] = keep + h
            fp = value()
            flat[i] = keep - h
            fm = value()
            flat[i] = keep
            num = (fp - fm) / (2 * h)
            assert grads[name].reshape(-1)[i] == pytest.approx(num, rel=1e-4, abs=1e-7)


def test_reconstruction_accuracy_real():
    x = np.array([[0.0, 1.0, 0.5, 0.2]])
    recon = np.array([[0.4, 0.6, 0.99, 0.95]])
    # errors 0.4, 0.4, 0.49, 0.75 -> three within half a unit
    assert reconstruction_accuracy(recon, x, "real") == pytest.approx(0.75)
    assert reconstruction_accuracy(x, x, "real") == 1.0


def test_reconstruction_accuracy_categorical():
    vocab, seq = 3, 2
    x = np.zeros((2, seq, vocab))
    x[0, 0, 1] = x[0, 1, 2] = 1.0
    x[1, 0, 0] = x[1, 1, 0] = 1.0
    logits = np.zeros((2, seq, vocab))
    logits[0, 0, 1] = 5.0   # right
    logits[0, 1, 0] = 5.0   # wrong
    logits[1, 0, 0] = 5.0   # right
    logits[1, 1, 0] = 5.0   # right
    acc = reconstruction_accuracy(logits.reshape(2, -1), x.reshape(2, -1),
                                  "categorical", seq_len=seq, vocab_size=vocab)
    assert acc == pytest.approx(0.75)


def test_save_load_round_trip(tmp_path):
    model = MlpVae(input_width=8, latent_dim=3, hidden=(6, 4), activation="selu")
    model.init_weights(SeededRng(51))
    path = tmp_path / "model.params"
    save_model(model, path, extra={"note": "fixture", "gamma": 10.0})
    back, extra = load_model(path)
    assert extra == {"note": "fixture", "gamma": 10.0}
    assert back.hidden == (6, 4) and back.activation == "selu" and back.head == "real"
    x = SeededRng(52).uniform((3, 8))
    assert np.array_equal(back.reconstruct_mean(x), model.reconstruct_mean(x))


def test_save_load_categorical_architecture(tmp_path):
    model = MlpVae(input_width=12, latent_dim=2, hidden=(5,), activation="tanh",
                   head="categorical", seq_len=3, vocab_size=4)
    model.init_weights(SeededRng(53))
    path = tmp_path / "model.params"
    save_model(model, path)
    back, extra = load_model(path)
    assert extra == {}
    assert back.head == "categorical" and back.seq_len == 3 and back.vocab_size == 4


def test_load_model_failure_modes(tmp_path):
    model = MlpVae(input_width=4, latent_dim=2, hidden=(3,))
    model.init_weights(SeededRng(54))
    path = tmp_path / "model.params"
    save_model(model, path)
    with pytest.raises(FormatError):
        load_model(tmp_path / "absent.params")
    sidecar = path.with_name("model.params.json")
    good = sidecar.read_text()
    sidecar.write_text(good.replace('"hidden":[3]', '"hidden":[5]'))
    with pytest.raises(FormatError):
        load_model(path)
    sidecar.write_text("{broken")
    with pytest.raises(FormatError):
        load_model(path)
    sidecar.write_text(good)
    load_model(path)
