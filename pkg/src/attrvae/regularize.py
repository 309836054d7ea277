"""Monotonic attribute regularization of VAE latent dimensions, and training.

The regularizer ties one latent dimension to one data attribute: for a batch
it forms all pairwise latent differences along that dimension and all pairwise
attribute differences, and penalizes the mean absolute gap between
tanh(delta * latent difference) and the sign of the attribute difference.
Driving that gap down forces the latent dimension to order examples the same
way the attribute does.  The full training objective adds the weighted
regularizers to the usual reconstruction + beta * KL loss.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, backward
from .errors import TrainingDiverged
from .optim import Adam
from .rng import SeededRng
from .vae import MlpVae, beta_vae_loss, reconstruction_accuracy


def attribute_distance_matrix(a: np.ndarray) -> np.ndarray:
    """All pairwise differences a_i - a_j as an (m, m) matrix."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    return a[:, None] - a[None, :]


def latent_distance_matrix(z_r: Tensor) -> Tensor:
    """All pairwise differences z_i - z_j along one latent dimension.

    Accepts an (m,) or (m, 1) tensor; gradients flow back to z_r.  The matrix
    is antisymmetric with a zero diagonal, so the gradient of its plain sum
    is exactly zero.
    """
    m = z_r.size
    col = z_r.reshape(m, 1)
    row = z_r.reshape(1, m)
    return col - row


def attr_reg_loss(z_r: Tensor, a: np.ndarray, delta: float) -> Tensor:
    """Mean absolute gap between tanh(delta * D_z) and sign(D_a).

    Averaged over all m^2 ordered pairs including the (identically zero)
    diagonal; the value lives in [0, 2].  Ties in a contribute sign 0.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if z_r.size != a.size:
        raise ValueError(f"latent column has {z_r.size} entries, attributes {a.size}")
    d_lat = latent_distance_matrix(z_r)
    sgn = np.sign(attribute_distance_matrix(a))
    return (d_lat.scale(float(delta)).tanh() - Tensor(sgn)).abs().mean()


@dataclass(frozen=True)
class RegularizationSpec:
    """Which attribute ties to which latent dimension: ((name, dim), ...)."""

    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((str(n), int(d)) for n, d in self.pairs))
        names = [n for n, _ in self.pairs]
        dims = [d for _, d in self.pairs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate attribute names in spec: {names}")
        if len(set(dims)) != len(dims):
            raise ValueError(f"duplicate latent dimensions in spec: {dims}")

    @classmethod
    def sequential(cls, names) -> "RegularizationSpec":
        """Attribute l regularizes dimension l, in listed order."""
        return cls(tuple((name, i) for i, name in enumerate(names)))

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.pairs)

    def dim_of(self, name: str) -> int:
        for n, d in self.pairs:
            if n == name:
                return d
        raise KeyError(name)

    def validate(self, latent_dim: int, available: set) -> None:
        for name, dim in self.pairs:
            if not 0 <= dim < latent_dim:
                raise ValueError(f"dimension {dim} for {name!r} outside [0, {latent_dim})")
            if name not in available:
                raise ValueError(
                    f"attribute {name!r} not in dataset; available: {sorted(available)}")


@dataclass
class TrainConfig:
    """Training hyperparameters.

    beta weighs the KL term, gamma the summed attribute regularizers, delta
    sharpens the tanh inside the regularizer.  gamma=0 reduces the objective
    to the plain beta-VAE loss bit for bit (regularizer values are still
    computed for the log, but never enter the loss graph).
    """

    beta: float = 1.0
    gamma: float = 10.0
    delta: float = 1.0
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    reg_on_mean: bool = False  # regularize posterior means instead of samples
    val_fraction: float = 0.1

    def as_dict(self) -> dict:
        return {
            "beta": self.beta, "gamma": self.gamma, "delta": self.delta,
            "epochs": self.epochs, "batch_size": self.batch_size,
            "learning_rate": self.learning_rate, "seed": self.seed,
            "reg_on_mean": self.reg_on_mean, "val_fraction": self.val_fraction,
        }


def ar_vae_loss(model: MlpVae, x, attrs: dict, spec: RegularizationSpec,
                config: TrainConfig, rng: SeededRng):
    """Full objective: recon + beta*KL + gamma * sum of attribute regularizers.

    attrs maps attribute name -> (batch,) values for this batch.  Returns
    (loss tensor, forward pass, component floats); component keys are
    "recon", "kld" and one "reg_<name>" per regularized attribute.
    """
    loss, fwd, parts = beta_vae_loss(model, x, config.beta, rng)
    target = fwd.mu if config.reg_on_mean else fwd.z
    for name, dim in spec.pairs:
        reg = attr_reg_loss(target[:, dim : dim + 1], attrs[name], config.delta)
        parts[f"reg_{name}"] = reg.item()
        if config.gamma != 0.0:
            loss = loss + reg.scale(config.gamma)
    return loss, fwd, parts


@dataclass
class TrainLog:
    """Per-epoch training trace: loss components and validation accuracy."""

    columns: list
    rows: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_fmt(row[c]) for c in self.columns])


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else v


def train(model: MlpVae, x: np.ndarray, attrs: dict, spec: RegularizationSpec,
          config: TrainConfig) -> TrainLog:
    """Minibatch training with Adam; returns the per-epoch log.

    Deterministic given (initial weights, data, config): the seed drives one
    validation split, then per epoch one shuffle and one noise draw per batch,
    in that order.  Batches partition a fresh permutation each epoch; a final
    partial batch is kept if it has at least 2 examples (pairwise differences
    need 2) and silently dropped if it has 1.  A non-finite loss aborts with
    TrainingDiverged naming the epoch and batch.
    """
    spec.validate(model.latent_dim, set(attrs))
    n = x.shape[0]
    for name, vals in attrs.items():
        if len(vals) != n:
            raise ValueError(f"attribute {name!r} has {len(vals)} values for {n} examples")

    val_idx, train_idx = SeededRng(config.seed).child(7).split_indices(n, config.val_fraction)
    if len(val_idx) == 0:
        val_idx = np.arange(n)  # fall back to measuring accuracy on the training data
    x_train = x[train_idx]
    attrs_train = {name: np.asarray(vals, dtype=np.float64)[train_idx] for name, vals in attrs.items()}
    x_val = x[val_idx]
    n_train = x_train.shape[0]

    rng = SeededRng(config.seed)
    opt = Adam(model.params, lr=config.learning_rate)
    columns = ["epoch", "recon", "kld", *(f"reg_{name}" for name in spec.names), "val_accuracy"]
    log = TrainLog(columns=columns)

    for epoch in range(config.epochs):
        perm = rng.permutation(n_train)
        sums = {c: 0.0 for c in columns if c not in ("epoch", "val_accuracy")}
        seen = 0
        for start in range(0, n_train, config.batch_size):
            idx = perm[start : start + config.batch_size]
            if len(idx) < 2:
                continue
            xb = x_train[idx]
            ab = {name: vals[idx] for name, vals in attrs_train.items()}
            loss, _, parts = ar_vae_loss(model, xb, ab, spec, config, rng)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(
                    f"non-finite loss {value} at epoch {epoch}, batch {start // config.batch_size}")
            opt.step(backward(loss, model.params))
            for key in sums:
                sums[key] += parts[key] * len(idx)
            seen += len(idx)
        recon_val = model.reconstruct_mean(x_val)
        acc = reconstruction_accuracy(recon_val, x_val, model.head,
                                      seq_len=model.seq_len, vocab_size=model.vocab_size)
        row = {"epoch": epoch, "val_accuracy": acc}
        for key, total in sums.items():
            row[key] = total / seen if seen else float("nan")
        log.rows.append(row)
    return log
