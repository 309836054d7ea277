"""Disentanglement metrics over a latent/attribute table.

All estimators are self-contained: average-rank Spearman correlation,
plug-in mutual information on a quantile-binned joint histogram (natural
log, so everything is in nats), and held-out univariate linear regression.
The five scores:

- interpretability: held-out R^2 of each attribute at the dimension chosen
  on a training half.
- modularity: per dimension, deviation of its MI profile from the ideal
  one-attribute template.
- mig: normalized gap between the two highest MIs per attribute.
- sap: gap between the two best held-out regression R^2 per attribute.
- scc: strongest Spearman correlation per attribute (signed by default).
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .rng import SeededRng


class DegenerateRanksWarning(UserWarning):
    """Spearman input had zero rank variance; correlation reported as 0."""


class ZeroEntropyWarning(UserWarning):
    """Attribute entropy is zero; the normalized gap is reported as 0."""


# -- rank and regression estimators ----------------------------------------


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts).astype(np.float64)
    group_mean = ends - (counts - 1) / 2.0
    return group_mean[inverse]


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation of average ranks; 0 (with a warning) if degenerate."""
    rx = average_ranks(x)
    ry = average_ranks(y)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    vx = (sx * sx).sum()
    vy = (sy * sy).sum()
    if vx == 0.0 or vy == 0.0:
        warnings.warn("zero rank variance, Spearman undefined; reporting 0",
                      DegenerateRanksWarning, stacklevel=2)
        return 0.0
    return float((sx * sy).sum() / np.sqrt(vx * vy))


def quantile_bin(x: np.ndarray, bins: int) -> np.ndarray:
    """Labels in [0, bins) with bin edges at equally spaced quantiles."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    edges = np.quantile(x, np.linspace(0.0, 1.0, bins + 1))
    return np.searchsorted(edges[1:-1], x, side="right")


def mutual_information(x: np.ndarray, y: np.ndarray, bins: int = 20) -> float:
    """Plug-in MI (nats) on the bins x bins quantile-binned joint histogram."""
    lx = quantile_bin(x, bins)
    ly = quantile_bin(y, bins)
    joint = np.bincount(lx * bins + ly, minlength=bins * bins).reshape(bins, bins)
    p = joint / joint.sum()
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    nz = p > 0.0
    outer = px[:, None] * py[None, :]
    return float((p[nz] * (np.log(p[nz]) - np.log(outer[nz]))).sum())


def entropy(x: np.ndarray, bins: int = 20) -> float:
    """Plug-in entropy (nats) of the quantile-binned variable."""
    labels = quantile_bin(x, bins)
    counts = np.bincount(labels, minlength=bins)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def _half_split(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic 50/50 split of range(n)."""
    return SeededRng(seed).split_indices(n, 0.5)


def _fit_r2(z_d: np.ndarray, a: np.ndarray, fit_idx: np.ndarray,
            eval_idx: np.ndarray) -> tuple[float, float]:
    """Univariate least squares a ~ z_d on fit_idx; R^2 on both index sets."""
    xf = z_d[fit_idx]
    yf = a[fit_idx]
    vx = ((xf - xf.mean()) ** 2).sum()
    slope = 0.0 if vx == 0.0 else float(((xf - xf.mean()) * (yf - yf.mean())).sum() / vx)
    intercept = float(yf.mean() - slope * xf.mean())
    pred = slope * z_d + intercept

    def r2(idx):
        resid = a[idx] - pred[idx]
        total = a[idx] - a[idx].mean()
        sst = (total * total).sum()
        return 0.0 if sst == 0.0 else float(1.0 - (resid * resid).sum() / sst)

    return r2(fit_idx), r2(eval_idx)


# -- the latent/attribute table and the five metrics -----------------------


@dataclass
class LatentAttributeTable:
    """Latent codes (N, D) paired with attribute rows (L, N)."""

    latents: np.ndarray
    attributes: np.ndarray
    attribute_names: tuple

    def __post_init__(self):
        self.latents = np.asarray(self.latents, dtype=np.float64)
        self.attributes = np.asarray(self.attributes, dtype=np.float64)
        self.attribute_names = tuple(str(n) for n in self.attribute_names)
        if self.latents.ndim != 2 or self.attributes.ndim != 2:
            raise ValueError("latents and attributes must be 2-d")
        if self.attributes.shape[0] != len(self.attribute_names):
            raise ValueError(f"{self.attributes.shape[0]} attribute rows for "
                             f"{len(self.attribute_names)} names")
        if self.attributes.shape[1] != self.latents.shape[0]:
            raise ValueError(f"attribute columns {self.attributes.shape[1]} != "
                             f"latent rows {self.latents.shape[0]}")
        if self.latents.shape[0] < 4:
            raise ValueError("need at least 4 rows to evaluate metrics")

    @property
    def n(self) -> int:
        return self.latents.shape[0]

    @property
    def n_dims(self) -> int:
        return self.latents.shape[1]

    @property
    def n_attributes(self) -> int:
        return self.attributes.shape[0]


def mi_matrix(table: LatentAttributeTable, bins: int = 20) -> np.ndarray:
    """(D, L) mutual informations between every dimension and attribute."""
    out = np.empty((table.n_dims, table.n_attributes), dtype=np.float64)
    for d in range(table.n_dims):
        for a in range(table.n_attributes):
            out[d, a] = mutual_information(table.latents[:, d], table.attributes[a], bins)
    return out


def interpretability(table: LatentAttributeTable, split_seed: int = 0) -> np.ndarray:
    """Held-out R^2 per attribute at the dimension argmax'd on the fit half."""
    fit_idx, eval_idx = _half_split(table.n, split_seed)
    scores = np.empty(table.n_attributes, dtype=np.float64)
    for a in range(table.n_attributes):
        attr = table.attributes[a]
        fit_scores = np.empty(table.n_dims)
        eval_scores = np.empty(table.n_dims)
        for d in range(table.n_dims):
            fit_scores[d], eval_scores[d] = _fit_r2(table.latents[:, d], attr, fit_idx, eval_idx)
        best = int(np.argmax(fit_scores))
        scores[a] = np.clip(eval_scores[best], 0.0, 1.0)
    return scores


def modularity(table: LatentAttributeTable, bins: int = 20,
               theta_floor: float = 0.1) -> tuple[np.ndarray, float]:
    """Per-dimension template scores and their mean.

    Ideal: each dimension carries information about exactly one attribute.
    Deviation is the squared off-template MI mass normalized by the
    dimension's peak; dimensions with no information score 1 (they pollute
    nothing), as does everything when there is a single attribute.  The
    plug-in MI of a genuinely independent pair is biased up by roughly
    (bins-1)^2 / 2N nats, so theta_floor defaults to 0.1 to keep that bias
    from being read as information at N around 10000.
    """
    m = mi_matrix(table, bins)
    d_count, l_count = m.shape
    scores = np.ones(d_count, dtype=np.float64)
    if l_count > 1:
        for d in range(d_count):
            theta = m[d].max()
            if theta < theta_floor:
                continue
            off = (m[d] ** 2).sum() - theta**2
            scores[d] = 1.0 - off / (theta**2 * (l_count - 1))
    scores = np.clip(scores, 0.0, 1.0)
    return scores, float(scores.mean())


def mig(table: LatentAttributeTable, bins: int = 20) -> np.ndarray:
    """Per attribute: (top MI - second MI) / entropy, clipped to [0, 1]."""
    m = mi_matrix(table, bins)
    scores = np.empty(table.n_attributes, dtype=np.float64)
    for a in range(table.n_attributes):
        h = entropy(table.attributes[a], bins)
        if h <= 0.0:
            warnings.warn(f"attribute {table.attribute_names[a]!r} has zero entropy; "
                          "gap reported as 0", ZeroEntropyWarning, stacklevel=2)
            scores[a] = 0.0
            continue
        col = np.sort(m[:, a])[::-1]
        top2 = col[1] if len(col) > 1 else 0.0
        scores[a] = np.clip((col[0] - top2) / h, 0.0, 1.0)
    return scores


def sap(table: LatentAttributeTable, split_seed: int = 0) -> np.ndarray:
    """Per attribute: gap between the two best held-out regression R^2."""
    fit_idx, eval_idx = _half_split(table.n, split_seed)
    scores = np.empty(table.n_attributes, dtype=np.float64)
    for a in range(table.n_attributes):
        attr = table.attributes[a]
        held = np.empty(table.n_dims)
        for d in range(table.n_dims):
            _, r2 = _fit_r2(table.latents[:, d], attr, fit_idx, eval_idx)
            held[d] = np.clip(r2, 0.0, 1.0)
        top = np.sort(held)[::-1]
        scores[a] = top[0] - (top[1] if len(top) > 1 else 0.0)
    return scores


def scc(table: LatentAttributeTable, absolute: bool = False) -> np.ndarray:
    """Per attribute: the strongest Spearman correlation across dimensions.

    Signed by default (max of the signed values); the absolute variant takes
    max |rho|, so anti-aligned dimensions count as aligned.
    """
    scores = np.empty(table.n_attributes, dtype=np.float64)
    for a in range(table.n_attributes):
        rhos = np.array([spearman(table.latents[:, d], table.attributes[a])
                         for d in range(table.n_dims)])
        scores[a] = np.abs(rhos).max() if absolute else rhos.max()
    return scores


# -- aggregate report ------------------------------------------------------


@dataclass
class MetricReport:
    """All five metrics for one table, plus estimator settings."""

    attribute_names: tuple
    interpretability: np.ndarray
    modularity_per_dim: np.ndarray
    modularity_mean: float
    modularity_per_attribute: np.ndarray  # score of each attribute's peak-MI dim
    mig: np.ndarray
    sap: np.ndarray
    scc: np.ndarray
    settings: dict = field(default_factory=dict)
    reconstruction_accuracy: float | None = None

    def means(self) -> dict:
        return {
            "interpretability": float(self.interpretability.mean()),
            "modularity": self.modularity_mean,
            "mig": float(self.mig.mean()),
            "sap": float(self.sap.mean()),
            "scc": float(self.scc.mean()),
        }

    def rows(self) -> list:
        """(metric, attribute, value) rows: 5 x L cells, then means, then accuracy."""
        per_attr = {
            "interpretability": self.interpretability,
            "modularity": self.modularity_per_attribute,
            "mig": self.mig,
            "sap": self.sap,
            "scc": self.scc,
        }
        out = []
        for metric, values in per_attr.items():
            for name, value in zip(self.attribute_names, values):
                out.append((metric, name, float(value)))
        for metric, value in self.means().items():
            out.append((metric, "mean", float(value)))
        if self.reconstruction_accuracy is not None:
            out.append(("reconstruction_accuracy", "all", float(self.reconstruction_accuracy)))
        return out

    def to_csv(self, path) -> None:
        """Comment row with estimator settings, then (metric, attribute, score)
        rows, then a one-line mean summary as a trailing comment."""
        with open(path, "w", newline="", encoding="ascii") as fh:
            settings = " ".join(f"{k}={v}" for k, v in sorted(self.settings.items()))
            fh.write(f"# {settings}\r\n")
            writer = csv.writer(fh, lineterminator="\r\n")
            writer.writerow(["metric", "attribute", "score"])
            for metric, name, value in self.rows():
                writer.writerow([metric, name, repr(value)])
            means = " ".join(f"{k}={v:.6f}" for k, v in self.means().items())
            fh.write(f"# mean {means}\r\n")


def metric_report(table: LatentAttributeTable, bins: int = 20, split_seed: int = 0,
                  absolute_scc: bool = False,
                  reconstruction_accuracy: float | None = None) -> MetricReport:
    m = mi_matrix(table, bins)
    per_dim, mean_mod = modularity(table, bins)
    # each attribute reports the template score of its peak-MI dimension
    per_attr_mod = per_dim[np.argmax(m, axis=0)]
    return MetricReport(
        attribute_names=table.attribute_names,
        interpretability=interpretability(table, split_seed),
        modularity_per_dim=per_dim,
        modularity_mean=mean_mod,
        modularity_per_attribute=per_attr_mod,
        mig=mig(table, bins),
        sap=sap(table, split_seed),
        scc=scc(table, absolute_scc),
        settings={"bins": bins, "split_seed": split_seed, "absolute_scc": absolute_scc},
        reconstruction_accuracy=reconstruction_accuracy,
    )
