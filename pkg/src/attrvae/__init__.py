"""Dense VAEs with attribute-structured latent dimensions."""

__version__ = "0.1.0"

from .autodiff import ParameterSet, Tensor, backward, gaussian_sample, gradients
from .metrics import LatentAttributeTable, metric_report
from .optim import Adam
from .regularize import (RegularizationSpec, TrainConfig, ar_vae_loss, attr_reg_loss,
                         train)
from .rng import SeededRng
from .vae import MlpVae, beta_vae_loss, kld_loss, recon_loss, reconstruction_accuracy

__all__ = [
    "Adam", "LatentAttributeTable", "MlpVae", "ParameterSet", "RegularizationSpec",
    "SeededRng", "Tensor", "TrainConfig", "ar_vae_loss", "attr_reg_loss", "backward",
    "beta_vae_loss", "gaussian_sample", "gradients", "kld_loss", "metric_report",
    "recon_loss", "reconstruction_accuracy", "train",
]
