"""Monophonic measures as token sequences, and their musical attributes.

A measure is 24 ticks (6 ticks per beat, 4 beats).  Each tick holds one
token: a pitch (an onset of that MIDI note), "__" (hold the sounding note),
or "R" (rest).  Attributes are simple deterministic functions of the token
sequence: metrical complexity of the onset pattern, pitch range, note
density, and melodic contour.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import FormatError

MEASURE_TICKS = 24

HOLD_TOKEN = "__"
REST_TOKEN = "R"

_NOTE_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")
_FLAT_OFFSETS = {"Db": 1, "Eb": 3, "Gb": 6, "Ab": 8, "Bb": 10}
_NAME_RE = re.compile(r"^([A-G][#b]?)(-?\d+)$")


def parse_note_name(text: str) -> int:
    """MIDI number from a name like C4 (=60), F#3, Bb5, or a bare integer."""
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    m = _NAME_RE.match(text)
    if not m:
        raise FormatError(f"unparseable note token {text!r}")
    name, octave = m.group(1), int(m.group(2))
    if name in _FLAT_OFFSETS:
        semitone = _FLAT_OFFSETS[name]
    else:
        try:
            semitone = _NOTE_NAMES.index(name)
        except ValueError:
            raise FormatError(f"unparseable note token {text!r}") from None
    return 12 * (octave + 1) + semitone


@dataclass(frozen=True)
class TokenVocabulary:
    """Dense token ids: pitches midi_low..midi_high, then hold, then rest."""

    midi_low: int = 48
    midi_high: int = 84

    def __post_init__(self):
        if self.midi_high <= self.midi_low:
            raise ValueError("midi_high must exceed midi_low")

    @property
    def n_pitches(self) -> int:
        return self.midi_high - self.midi_low + 1

    @property
    def hold_id(self) -> int:
        return self.n_pitches

    @property
    def rest_id(self) -> int:
        return self.n_pitches + 1

    @property
    def size(self) -> int:
        return self.n_pitches + 2

    @property
    def span(self) -> int:
        """Normalization constant R: the vocabulary's pitch span in semitones."""
        return self.midi_high - self.midi_low

    def pitch_to_id(self, midi: int) -> int:
        if not self.midi_low <= midi <= self.midi_high:
            raise ValueError(f"MIDI {midi} outside [{self.midi_low}, {self.midi_high}]")
        return midi - self.midi_low

    def is_onset(self, token_id: int) -> bool:
        return 0 <= token_id < self.n_pitches

    def midi_of(self, token_id: int) -> int:
        """MIDI of an onset token; 0 for hold and rest (their literal encoding)."""
        return self.midi_low + token_id if self.is_onset(token_id) else 0

    def token_text(self, token_id: int) -> str:
        if self.is_onset(token_id):
            return str(self.midi_low + token_id)
        if token_id == self.hold_id:
            return HOLD_TOKEN
        if token_id == self.rest_id:
            return REST_TOKEN
        raise ValueError(f"token id {token_id} outside vocabulary of size {self.size}")

    def parse(self, text: str) -> int:
        if text == HOLD_TOKEN:
            return self.hold_id
        if text == REST_TOKEN:
            return self.rest_id
        return self.pitch_to_id(parse_note_name(text))

    def as_dict(self) -> dict:
        return {"midi_low": self.midi_low, "midi_high": self.midi_high}


@dataclass(frozen=True)
class Measure:
    """One 24-tick monophonic measure.

    Invariant: a hold token only ever continues a sounding note, i.e. it is
    preceded (transitively) by an onset, never by a rest or the measure start.
    """

    tokens: tuple
    vocab: TokenVocabulary = TokenVocabulary()

    def __post_init__(self):
        toks = tuple(int(t) for t in self.tokens)
        object.__setattr__(self, "tokens", toks)
        if len(toks) != MEASURE_TICKS:
            raise ValueError(f"a measure has {MEASURE_TICKS} ticks, got {len(toks)}")
        for t in toks:
            if not 0 <= t < self.vocab.size:
                raise ValueError(f"token id {t} outside vocabulary of size {self.vocab.size}")
        sounding = False
        for i, t in enumerate(toks):
            if self.vocab.is_onset(t):
                sounding = True
            elif t == self.vocab.hold_id:
                if not sounding:
                    raise ValueError(f"hold at tick {i} does not continue a note")
            else:
                sounding = False

    @classmethod
    def from_tokens(cls, ids, vocab: TokenVocabulary = TokenVocabulary(),
                    strict: bool = True) -> "Measure":
        """Build from token ids; lenient mode coerces dangling holds to rests.

        Lenient construction is for decoder output, where argmax over logits
        can emit any token anywhere.
        """
        ids = [int(t) for t in ids]
        if not strict:
            sounding = False
            for i, t in enumerate(ids):
                if vocab.is_onset(t):
                    sounding = True
                elif t == vocab.hold_id:
                    if not sounding:
                        ids[i] = vocab.rest_id
                else:
                    sounding = False
        return cls(tuple(ids), vocab)

    @classmethod
    def from_text(cls, line: str, vocab: TokenVocabulary = TokenVocabulary()) -> "Measure":
        return cls(tuple(vocab.parse(tok) for tok in line.split()), vocab)

    def to_text(self) -> str:
        return " ".join(self.vocab.token_text(t) for t in self.tokens)

    @property
    def length(self) -> int:
        return len(self.tokens)

    def onset_mask(self) -> np.ndarray:
        return np.array([self.vocab.is_onset(t) for t in self.tokens], dtype=bool)

    def onset_pitches(self) -> np.ndarray:
        return np.array([self.vocab.midi_of(t) for t in self.tokens if self.vocab.is_onset(t)],
                        dtype=np.int64)

    def literal_midi(self) -> np.ndarray:
        """Per-tick MIDI with hold and rest encoded as 0."""
        return np.array([self.vocab.midi_of(t) for t in self.tokens], dtype=np.int64)


@dataclass(frozen=True)
class ComplexityWeights:
    """Nonnegative per-tick metrical complexity coefficients f_t.

    The default marks every metrically aligned tick (divisible by 2 or by 3,
    i.e. on any duple or triplet subdivision of the 6-tick beat) with weight 1
    and the 8 unaligned ticks with weight 5, so on-beat rhythms score low and
    off-grid rhythms high.  The weights sum to 56.  On-beat weights are kept
    nonzero so all-on-beat rhythms still register.
    """

    weights: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        if any(v < 0 for v in w):
            raise ValueError("complexity weights must be nonnegative")
        if sum(w) <= 0:
            raise ValueError("complexity weights must not all be zero")

    @classmethod
    def default(cls, length: int = MEASURE_TICKS) -> "ComplexityWeights":
        return cls(tuple(1.0 if (t % 2 == 0 or t % 3 == 0) else 5.0 for t in range(length)))

    def as_array(self) -> np.ndarray:
        return np.array(self.weights, dtype=np.float64)


@dataclass(frozen=True)
class MusicAttributeConfig:
    """Switches between the default and the literal-encoding attribute variants.

    pitch_range_literal_zeros: include hold/rest ticks as MIDI 0 in the range
    (default uses onset pitches only).  contour_token_diffs: sum adjacent
    per-tick MIDI differences with hold/rest as 0 (default sums differences
    between consecutive onsets only).
    """

    weights: ComplexityWeights | None = None
    pitch_range_literal_zeros: bool = False
    contour_token_diffs: bool = False


def rhythmic_complexity(measure: Measure, weights: ComplexityWeights | None = None) -> float:
    """Weighted fraction of metrical complexity hit by the onsets.

    sum over onset ticks of f_t, divided by sum over all ticks of f_t; 0 with
    no onsets, 1 with onsets everywhere.
    """
    w = (weights or ComplexityWeights.default(measure.length)).as_array()
    if len(w) != measure.length:
        raise ValueError(f"{len(w)} weights for a {measure.length}-tick measure")
    return float((w * measure.onset_mask()).sum() / w.sum())


def pitch_range(measure: Measure, literal_zeros: bool = False) -> float:
    """Spread of pitches used, normalized by the vocabulary span, clipped to [0, 1].

    Default looks at onset pitches only (0 with fewer than one onset); the
    literal variant spans all ticks with hold/rest encoded as MIDI 0.
    """
    values = measure.literal_midi() if literal_zeros else measure.onset_pitches()
    if len(values) == 0:
        return 0.0
    spread = (values.max() - values.min()) / measure.vocab.span
    return float(np.clip(spread, 0.0, 1.0))


def note_density(measure: Measure) -> float:
    """Fraction of ticks that are onsets."""
    return float(measure.onset_mask().sum() / measure.length)


def contour(measure: Measure, token_diffs: bool = False) -> float:
    """Net melodic direction: summed consecutive pitch differences / span.

    The default sums differences between consecutive onsets, which telescopes
    to (last onset - first onset) / span; fewer than two onsets give 0.  The
    literal variant diffs adjacent ticks with hold/rest as MIDI 0, which
    telescopes to (last tick - first tick) / span in that encoding.
    """
    if token_diffs:
        values = measure.literal_midi()
    else:
        values = measure.onset_pitches()
        if len(values) < 2:
            return 0.0
    return float(np.diff(values).sum() / measure.vocab.span)


# exported column names; complexity is abbreviated in files and reports
MUSIC_ATTRIBUTE_NAMES = ("rhy_complexity", "pitch_range", "note_density", "contour")


def music_attributes(measure: Measure,
                     config: MusicAttributeConfig = MusicAttributeConfig()) -> dict:
    return {
        "rhy_complexity": rhythmic_complexity(measure, config.weights),
        "pitch_range": pitch_range(measure, config.pitch_range_literal_zeros),
        "note_density": note_density(measure),
        "contour": contour(measure, config.contour_token_diffs),
    }


def piano_roll(measure: Measure) -> np.ndarray:
    """Binary (n_pitches, ticks) roll: 1 where the pitch sounds (onset or hold)."""
    roll = np.zeros((measure.vocab.n_pitches, measure.length), dtype=np.float64)
    current = None
    for t, tok in enumerate(measure.tokens):
        if measure.vocab.is_onset(tok):
            current = tok
        elif tok == measure.vocab.rest_id:
            current = None
        if current is not None:
            roll[current, t] = 1.0
    return roll


def piano_roll_lines(measure: Measure) -> list:
    """ASCII piano roll, one line per pitch in use: onsets 'O', holds '=', rests '.'."""
    vocab = measure.vocab
    lines = []
    used = sorted({tok for tok in measure.tokens if vocab.is_onset(tok)}, reverse=True)
    roll = piano_roll(measure)
    for pitch_id in used:
        cells = []
        for t, tok in enumerate(measure.tokens):
            if tok == pitch_id:
                cells.append("O")
            elif roll[pitch_id, t]:
                cells.append("=")
            else:
                cells.append(".")
        lines.append(f"{vocab.midi_low + pitch_id:>3} |{''.join(cells)}|")
    if not lines:
        lines.append(f"  - |{'.' * measure.length}|")
    return lines
