"""Dense variational autoencoder on the autodiff engine.

Encoder and decoder are mirrored MLPs.  The encoder ends in a single head of
width 2*latent_dim split into (mu, logvar); the decoder's output head is
either "real" (sigmoid pixel values, squared-error reconstruction) or
"categorical" (per-position token logits over a vocabulary, summed
cross-entropy reconstruction).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .autodiff import ParameterSet, Tensor, gaussian_sample, load_parameters, save_parameters
from .errors import FormatError, ShapeError
from .rng import SeededRng

_ACTIVATIONS = ("relu", "tanh", "selu")
_HEADS = ("real", "categorical")


@dataclass
class VaeForward:
    """One forward pass: posterior parameters, sampled code, reconstruction."""

    mu: Tensor
    logvar: Tensor
    z: Tensor
    recon: Tensor  # sigmoid output for the real head, raw logits for categorical


class MlpVae:
    """Mirrored dense VAE.

    For the categorical head the input is the flattened one-hot token matrix,
    so input_width must equal seq_len * vocab_size and the decoder emits one
    logit per (position, token) pair.
    """

    def __init__(self, input_width: int, latent_dim: int, hidden=(128, 64),
                 activation: str = "relu", head: str = "real",
                 seq_len: int | None = None, vocab_size: int | None = None):
        if activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}, got {activation!r}")
        if head not in _HEADS:
            raise ValueError(f"head must be one of {_HEADS}, got {head!r}")
        if latent_dim < 1 or input_width < 1 or not hidden:
            raise ValueError("input_width, latent_dim and hidden sizes must be positive")
        if head == "categorical":
            if seq_len is None or vocab_size is None:
                raise ValueError("categorical head needs seq_len and vocab_size")
            if seq_len * vocab_size != input_width:
                raise ShapeError(
                    f"input_width {input_width} != seq_len*vocab_size {seq_len * vocab_size}")
        self.input_width = int(input_width)
        self.latent_dim = int(latent_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.activation = activation
        self.head = head
        self.seq_len = int(seq_len) if seq_len is not None else None
        self.vocab_size = int(vocab_size) if vocab_size is not None else None

        self.params = ParameterSet()
        enc_sizes = (self.input_width, *self.hidden)
        for i, (fan_in, fan_out) in enumerate(zip(enc_sizes[:-1], enc_sizes[1:])):
            self.params.add(f"enc{i}.w", np.zeros((fan_in, fan_out)))
            self.params.add(f"enc{i}.b", np.zeros((fan_out,)))
        self.params.add("enc_head.w", np.zeros((self.hidden[-1], 2 * self.latent_dim)))
        self.params.add("enc_head.b", np.zeros((2 * self.latent_dim,)))
        dec_sizes = (self.latent_dim, *reversed(self.hidden))
        for i, (fan_in, fan_out) in enumerate(zip(dec_sizes[:-1], dec_sizes[1:])):
            self.params.add(f"dec{i}.w", np.zeros((fan_in, fan_out)))
            self.params.add(f"dec{i}.b", np.zeros((fan_out,)))
        self.params.add("dec_out.w", np.zeros((dec_sizes[-1], self.input_width)))
        self.params.add("dec_out.b", np.zeros((self.input_width,)))

    # -- initialization ----------------------------------------------------

    def init_weights(self, rng: SeededRng) -> None:
        """He-scaled for relu, Xavier-scaled otherwise; biases zero."""
        gain = 2.0 if self.activation == "relu" else 1.0
        for name, t in self.params.items():
            if name.endswith(".b"):
                t.data[...] = 0.0
                continue
            fan_in = t.data.shape[0]
            scale = np.sqrt(gain / fan_in)
            if name in ("enc_head.w", "dec_out.w"):
                scale = np.sqrt(1.0 / fan_in)
            t.data[...] = rng.normal(t.data.shape) * scale

    # -- forward pieces ----------------------------------------------------

    def _act(self, t: Tensor) -> Tensor:
        if self.activation == "relu":
            return t.relu()
        if self.activation == "tanh":
            return t.tanh()
        return t.selu()

    def _as_input(self, x) -> Tensor:
        t = x if isinstance(x, Tensor) else Tensor(x)
        if t.data.ndim != 2 or t.data.shape[1] != self.input_width:
            raise ShapeError(f"expected input (batch, {self.input_width}), got {t.shape}")
        return t

    def encode(self, x) -> tuple[Tensor, Tensor]:
        h = self._as_input(x)
        for i in range(len(self.hidden)):
            h = self._act(h @ self.params[f"enc{i}.w"] + self.params[f"enc{i}.b"])
        out = h @ self.params["enc_head.w"] + self.params["enc_head.b"]
        d = self.latent_dim
        return out[:, :d], out[:, d : 2 * d]

    def decode(self, z) -> Tensor:
        h = z if isinstance(z, Tensor) else Tensor(z)
        if h.data.ndim != 2 or h.data.shape[1] != self.latent_dim:
            raise ShapeError(f"expected code (batch, {self.latent_dim}), got {h.shape}")
        for i in range(len(self.hidden)):
            h = self._act(h @ self.params[f"dec{i}.w"] + self.params[f"dec{i}.b"])
        logits = h @ self.params["dec_out.w"] + self.params["dec_out.b"]
        if self.head == "real":
            return logits.sigmoid()
        return logits

    def forward(self, x, rng: SeededRng) -> VaeForward:
        mu, logvar = self.encode(x)
        z = gaussian_sample(mu, logvar, rng)
        return VaeForward(mu=mu, logvar=logvar, z=z, recon=self.decode(z))

    # -- numpy conveniences for evaluation ---------------------------------

    def encode_mean(self, x: np.ndarray) -> np.ndarray:
        """Posterior means as a plain array (the evaluation latents)."""
        return self.encode(x)[0].data

    def reconstruct_mean(self, x: np.ndarray) -> np.ndarray:
        """Decode the posterior mean; deterministic reconstruction."""
        return self.decode(self.encode(x)[0]).data


def recon_loss(recon: Tensor, x, head: str, batch: int | None = None,
               seq_len: int | None = None, vocab_size: int | None = None) -> Tensor:
    """Reconstruction term, averaged over the batch.

    real: per-example squared L2 distance.  categorical: per-position
    cross-entropy between one-hot targets and softmaxed logits, summed over
    positions.
    """
    xt = x if isinstance(x, Tensor) else Tensor(x)
    if recon.shape != xt.shape:
        raise ShapeError(f"reconstruction {recon.shape} vs target {xt.shape}")
    m = xt.data.shape[0] if batch is None else batch
    if head == "real":
        d = recon - xt
        return (d * d).sum(axis=1).mean()
    if head == "categorical":
        if seq_len is None or vocab_size is None:
            raise ValueError("categorical recon_loss needs seq_len and vocab_size")
        logits = recon.reshape(m * seq_len, vocab_size)
        targets = xt.reshape(m * seq_len, vocab_size)
        # subtracting the row max is a constant shift; softmax is invariant to it
        shift = Tensor(logits.data.max(axis=1, keepdims=True))
        shifted = logits - shift
        lse = shifted.exp().sum(axis=1, keepdims=True).log()
        logp = shifted - lse
        return (targets * logp).sum().scale(-1.0 / m)
    raise ValueError(f"unknown head {head!r}")


def kld_loss(mu: Tensor, logvar: Tensor) -> Tensor:
    """Closed-form KL(q || N(0, I)), summed over dims, averaged over the batch."""
    if mu.shape != logvar.shape:
        raise ShapeError(f"mu/logvar shapes differ: {mu.shape} vs {logvar.shape}")
    term = 1.0 + logvar - mu * mu - logvar.exp()
    return term.sum(axis=1).mean().scale(-0.5)


def beta_vae_loss(model: MlpVae, x, beta: float, rng: SeededRng):
    """recon + beta * KL. Returns (loss, forward, component floats)."""
    fwd = model.forward(x, rng)
    rec = recon_loss(fwd.recon, x, model.head, seq_len=model.seq_len,
                     vocab_size=model.vocab_size)
    kld = kld_loss(fwd.mu, fwd.logvar)
    loss = rec + kld.scale(beta)
    return loss, fwd, {"recon": rec.item(), "kld": kld.item()}


def reconstruction_accuracy(recon: np.ndarray, x: np.ndarray, head: str,
                            seq_len: int | None = None, vocab_size: int | None = None) -> float:
    """Fraction reconstructed correctly.

    real: pixels with absolute error < 0.5.  categorical: positions whose
    argmax token matches the target's.
    """
    recon = np.asarray(recon, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if recon.shape != x.shape:
        raise ShapeError(f"reconstruction {recon.shape} vs target {x.shape}")
    if head == "real":
        return float(np.mean(np.abs(recon - x) < 0.5))
    if head == "categorical":
        if seq_len is None or vocab_size is None:
            raise ValueError("categorical accuracy needs seq_len and vocab_size")
        m = x.shape[0]
        pred = recon.reshape(m, seq_len, vocab_size).argmax(axis=2)
        want = x.reshape(m, seq_len, vocab_size).argmax(axis=2)
        return float(np.mean(pred == want))
    raise ValueError(f"unknown head {head!r}")


# -- checkpointing ---------------------------------------------------------
#
# A model checkpoint is the parameter file plus a JSON sidecar at
# <path>.json holding the architecture and any caller metadata (training
# config, regularization spec, dataset digest, ...).

_SIDECAR_FORMAT = 1


def save_model(model: MlpVae, path, extra: dict | None = None) -> None:
    save_parameters(model.params, path)
    sidecar = {
        "format": _SIDECAR_FORMAT,
        "kind": "mlp_vae",
        "input_width": model.input_width,
        "latent_dim": model.latent_dim,
        "hidden": list(model.hidden),
        "activation": model.activation,
        "head": model.head,
        "seq_len": model.seq_len,
        "vocab_size": model.vocab_size,
        "extra": extra or {},
    }
    with open(str(path) + ".json", "w", encoding="ascii") as fh:
        json.dump(sidecar, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> tuple[MlpVae, dict]:
    """Rebuild a model from its checkpoint; returns (model, sidecar extra)."""
    try:
        with open(str(path) + ".json", encoding="ascii") as fh:
            sidecar = json.load(fh)
    except FileNotFoundError:
        raise FormatError(f"{path}.json: sidecar header missing") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}.json: {exc}") from None
    if sidecar.get("format") != _SIDECAR_FORMAT or sidecar.get("kind") != "mlp_vae":
        raise FormatError(f"{path}.json: unsupported checkpoint header")
    model = MlpVae(
        input_width=sidecar["input_width"],
        latent_dim=sidecar["latent_dim"],
        hidden=tuple(sidecar["hidden"]),
        activation=sidecar["activation"],
        head=sidecar["head"],
        seq_len=sidecar["seq_len"],
        vocab_size=sidecar["vocab_size"],
    )
    loaded = load_parameters(path)
    if list(loaded) != list(model.params):
        raise FormatError(f"{path}: parameter names do not match the sidecar architecture")
    for name, t in model.params.items():
        src = loaded[name]
        if src.data.shape != t.data.shape:
            raise FormatError(f"{path}: shape mismatch for {name}: "
                              f"{src.data.shape} vs {t.data.shape}")
        t.data[...] = src.data
    return model, sidecar.get("extra", {})
