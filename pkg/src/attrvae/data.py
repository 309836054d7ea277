"""Synthetic datasets: sampling, container, and the on-disk format.

Generation is order-independent: example i is produced from a counter-derived
substream of the seed, so the i-th example is bit-identical no matter how
many examples surround it.

File format: a single ASCII header line of space-separated key=value fields
(version, domain, n, width, attribute names, seed, payload digest, config
JSON), a newline, then the binary payload: the example matrix followed by the
attribute matrix, row-major little-endian f64.  The digest is 64-bit FNV-1a
over the payload.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .digest import fnv1a64_hex
from .errors import FormatError
from .music import (MEASURE_TICKS, Measure, MusicAttributeConfig, TokenVocabulary,
                    music_attributes, MUSIC_ATTRIBUTE_NAMES)
from .rng import SeededRng
from .shapes import SHAPE_KINDS, ShapeSpec, image_attributes, render_shape

DOMAINS = ("shapes", "measures")

SHAPE_ATTRIBUTE_NAMES = ("scale", "x", "y", "orientation", "area")
# orientation is ambiguous for disks (any value renders identically), so it is
# not regularized unless explicitly requested
DEFAULT_SHAPE_REG_ATTRS = ("scale", "x", "y", "area")


@dataclass
class Dataset:
    """Examples (N, width) with per-attribute rows (L, N) and a manifest."""

    domain: str
    examples: np.ndarray
    attributes: np.ndarray
    attribute_names: tuple
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"domain must be one of {DOMAINS}, got {self.domain!r}")
        self.examples = np.asarray(self.examples, dtype=np.float64)
        self.attributes = np.asarray(self.attributes, dtype=np.float64)
        self.attribute_names = tuple(str(n) for n in self.attribute_names)
        if self.examples.ndim != 2 or self.attributes.ndim != 2:
            raise ValueError("examples and attributes must be 2-d")
        if self.attributes.shape != (len(self.attribute_names), self.examples.shape[0]):
            raise ValueError(
                f"attribute matrix {self.attributes.shape} does not match "
                f"{len(self.attribute_names)} names x {self.examples.shape[0]} examples")
        for name in self.attribute_names:
            if not name or " " in name or "," in name or "=" in name:
                raise ValueError(f"attribute name {name!r} contains reserved characters")

    @property
    def n(self) -> int:
        return self.examples.shape[0]

    @property
    def width(self) -> int:
        return self.examples.shape[1]

    def attribute(self, name: str) -> np.ndarray:
        try:
            i = self.attribute_names.index(name)
        except ValueError:
            raise KeyError(
                f"attribute {name!r} not in dataset; available: {list(self.attribute_names)}"
            ) from None
        return self.attributes[i]

    def attribute_dict(self, names=None) -> dict:
        return {name: self.attribute(name) for name in (names or self.attribute_names)}

    # -- adapters for the model --------------------------------------------

    def vocab(self) -> TokenVocabulary:
        if self.domain != "measures":
            raise ValueError("only the measures domain has a token vocabulary")
        v = self.manifest["vocab"]
        return TokenVocabulary(midi_low=v["midi_low"], midi_high=v["midi_high"])

    def model_inputs(self) -> np.ndarray:
        """Rows the VAE consumes: pixels as-is, token ids one-hot encoded."""
        if self.domain == "shapes":
            return self.examples
        return one_hot_tokens(self.examples.astype(np.int64), self.vocab().size)

    def model_head(self) -> dict:
        """Keyword arguments describing the decoder head for this domain."""
        if self.domain == "shapes":
            return {"head": "real", "seq_len": None, "vocab_size": None}
        return {"head": "categorical", "seq_len": self.width, "vocab_size": self.vocab().size}

    def measure(self, index: int) -> Measure:
        return Measure.from_tokens(self.examples[index].astype(np.int64), self.vocab())


def one_hot_tokens(ids: np.ndarray, vocab_size: int) -> np.ndarray:
    """(N, T) int ids -> (N, T*vocab_size) flat one-hot f64."""
    ids = np.asarray(ids, dtype=np.int64)
    n, t = ids.shape
    if ids.min() < 0 or ids.max() >= vocab_size:
        raise ValueError(f"token ids outside [0, {vocab_size})")
    out = np.zeros((n, t, vocab_size), dtype=np.float64)
    np.put_along_axis(out, ids[:, :, None], 1.0, axis=2)
    return out.reshape(n, t * vocab_size)


# -- shape dataset ---------------------------------------------------------


@dataclass(frozen=True)
class ShapeSamplerConfig:
    side: int = 16
    scale_low: float = 0.2
    scale_high: float = 0.9
    kinds: tuple = SHAPE_KINDS

    def as_dict(self) -> dict:
        return {"side": self.side, "scale_low": self.scale_low,
                "scale_high": self.scale_high, "kinds": list(self.kinds)}


def sample_shape_spec(rng: SeededRng, config: ShapeSamplerConfig) -> ShapeSpec:
    """Factors drawn uniformly; center clamped so the shape stays on canvas."""
    kind = config.kinds[int(rng.integers(0, len(config.kinds))[()])]
    scale = config.scale_low + (config.scale_high - config.scale_low) * float(rng.uniform()[()])
    x = float(rng.uniform()[()])
    y = float(rng.uniform()[()])
    orientation = float(rng.uniform()[()]) * (math.pi / 2.0)
    if orientation >= math.pi / 2.0:  # guard the half-open range against rounding
        orientation = math.nextafter(math.pi / 2.0, 0.0)
    return ShapeSpec(kind=kind, scale=scale, x=x, y=y, orientation=orientation).clamped()


def sample_shape_dataset(n: int, seed: int,
                         config: ShapeSamplerConfig = ShapeSamplerConfig()) -> Dataset:
    """n rendered shapes; stored attributes are min-max normalized to [0, 1].

    Raw per-attribute ranges are recorded in the manifest.  Example i depends
    only on (seed, i).
    """
    if n < 1:
        raise ValueError("need at least one example")
    root = SeededRng(seed)
    side = config.side
    examples = np.empty((n, side * side), dtype=np.float64)
    raw = np.empty((len(SHAPE_ATTRIBUTE_NAMES), n), dtype=np.float64)
    for i in range(n):
        spec = sample_shape_spec(root.child(i), config)
        img = render_shape(spec, side=side)
        examples[i] = img.reshape(-1)
        attrs = image_attributes(spec, img)
        for j, name in enumerate(SHAPE_ATTRIBUTE_NAMES):
            raw[j, i] = attrs[name]
    lo = raw.min(axis=1)
    hi = raw.max(axis=1)
    span = np.where(hi > lo, hi - lo, 1.0)
    normalized = (raw - lo[:, None]) / span[:, None]
    manifest = {
        "domain": "shapes",
        "seed": int(seed),
        "n": int(n),
        "config": config.as_dict(),
        "attribute_low": [float(v) for v in lo],
        "attribute_high": [float(v) for v in hi],
    }
    return Dataset("shapes", examples, normalized, SHAPE_ATTRIBUTE_NAMES, manifest)


# -- measure dataset -------------------------------------------------------


@dataclass(frozen=True)
class MeasureSamplerConfig:
    """Onset-mask-then-random-walk sampler.

    Per tick: onset with probability onset_prob; otherwise a sounding note is
    held with probability sustain_prob or released to rest.  Onset pitches
    random-walk with integer steps uniform in [-step_span, step_span],
    clipped to the vocabulary.
    """

    onset_prob: float = 0.35
    sustain_prob: float = 0.7
    step_span: int = 5
    midi_low: int = 48
    midi_high: int = 84

    def vocab(self) -> TokenVocabulary:
        return TokenVocabulary(midi_low=self.midi_low, midi_high=self.midi_high)

    def as_dict(self) -> dict:
        return {"onset_prob": self.onset_prob, "sustain_prob": self.sustain_prob,
                "step_span": self.step_span, "midi_low": self.midi_low,
                "midi_high": self.midi_high}


def sample_measure(rng: SeededRng, config: MeasureSamplerConfig = MeasureSamplerConfig()) -> Measure:
    vocab = config.vocab()
    u = rng.uniform((3 * MEASURE_TICKS,))  # onset / sustain / step draws per tick
    pitch = int(rng.integers(config.midi_low, config.midi_high + 1)[()])
    tokens = []
    sounding = False
    had_onset = False
    for t in range(MEASURE_TICKS):
        if u[3 * t] < config.onset_prob:
            step = int(math.floor(u[3 * t + 2] * (2 * config.step_span + 1))) - config.step_span
            if had_onset:
                pitch = int(np.clip(pitch + step, config.midi_low, config.midi_high))
            tokens.append(vocab.pitch_to_id(pitch))
            sounding = True
            had_onset = True
        elif sounding and u[3 * t + 1] < config.sustain_prob:
            tokens.append(vocab.hold_id)
        else:
            tokens.append(vocab.rest_id)
            sounding = False
    return Measure(tuple(tokens), vocab)


def sample_measure_dataset(n: int, seed: int,
                           config: MeasureSamplerConfig = MeasureSamplerConfig(),
                           attr_config: MusicAttributeConfig = MusicAttributeConfig()) -> Dataset:
    """n sampled measures; attributes stored raw (their natural scales)."""
    if n < 1:
        raise ValueError("need at least one example")
    root = SeededRng(seed)
    examples = np.empty((n, MEASURE_TICKS), dtype=np.float64)
    attrs = np.empty((len(MUSIC_ATTRIBUTE_NAMES), n), dtype=np.float64)
    for i in range(n):
        measure = sample_measure(root.child(i), config)
        examples[i] = measure.tokens
        values = music_attributes(measure, attr_config)
        for j, name in enumerate(MUSIC_ATTRIBUTE_NAMES):
            attrs[j, i] = values[name]
    manifest = {
        "domain": "measures",
        "seed": int(seed),
        "n": int(n),
        "config": config.as_dict(),
        "vocab": config.vocab().as_dict(),
    }
    return Dataset("measures", examples, attrs, MUSIC_ATTRIBUTE_NAMES, manifest)


# -- file format -----------------------------------------------------------

_FORMAT_VERSION = 1
_HEADER_TAG = "attrvae-dataset"


def save_dataset(ds: Dataset, path) -> str:
    """Write header line + binary payload; returns the payload digest hex."""
    payload = (np.ascontiguousarray(ds.examples, dtype="<f8").tobytes()
               + np.ascontiguousarray(ds.attributes, dtype="<f8").tobytes())
    digest = fnv1a64_hex(payload)
    config_json = json.dumps(ds.manifest, sort_keys=True, separators=(",", ":"))
    header = (f"{_HEADER_TAG} v={_FORMAT_VERSION} domain={ds.domain} n={ds.n} "
              f"width={ds.width} attrs={','.join(ds.attribute_names)} "
              f"seed={ds.manifest.get('seed', 0)} digest={digest} config={config_json}\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload)
    return digest


def read_dataset_header(path) -> dict:
    """Parse just the header line: cheap access to digest/shape metadata."""
    with open(path, "rb") as fh:
        line = fh.readline()
    try:
        text = line.decode("ascii").rstrip("\n")
    except UnicodeDecodeError:
        raise FormatError(f"{path}: header is not ASCII") from None
    parts = text.split(" ")
    if not parts or parts[0] != _HEADER_TAG:
        raise FormatError(f"{path}: missing {_HEADER_TAG} header")
    fields = {}
    for part in parts[1:]:
        key, _, value = part.partition("=")
        if key == "config":
            # config JSON is the final field and may itself contain spaces: rejoin
            idx = text.index(" config=") + len(" config=")
            fields["config"] = text[idx:]
            break
        fields[key] = value
    required = {"v", "domain", "n", "width", "attrs", "seed", "digest", "config"}
    missing = required - set(fields)
    if missing:
        raise FormatError(f"{path}: header missing fields {sorted(missing)}")
    if int(fields["v"]) != _FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {fields['v']}")
    return fields


def load_dataset(path) -> Dataset:
    """Read, verify the payload digest, and rebuild the Dataset."""
    fields = read_dataset_header(path)
    with open(path, "rb") as fh:
        fh.readline()
        payload = fh.read()
    digest = fnv1a64_hex(payload)
    if digest != fields["digest"]:
        raise FormatError(f"{path}: payload digest {digest} != header {fields['digest']}")
    n, width = int(fields["n"]), int(fields["width"])
    names = tuple(fields["attrs"].split(","))
    want = (n * width + len(names) * n) * 8
    if len(payload) != want:
        raise FormatError(f"{path}: payload has {len(payload)} bytes, expected {want}")
    flat = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    examples = flat[: n * width].reshape(n, width)
    attributes = flat[n * width :].reshape(len(names), n)
    try:
        manifest = json.loads(fields["config"])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: bad config JSON: {exc}") from None
    return Dataset(fields["domain"], examples, attributes, names, manifest)
