"""Token measures and musical attribute extraction.

The worked fixtures pin exact values: 4 onsets in 24 ticks -> density 4/24,
notes at MIDI 60 and 72 -> pitch range 12/36, ascending onsets 60,64,67 ->
contour 7/36, a single off-grid onset -> complexity 5/56.
"""

import numpy as np
import pytest

from attrvae.errors import FormatError
from attrvae.music import (
    MEASURE_TICKS,
    MUSIC_ATTRIBUTE_NAMES,
    ComplexityWeights,
    Measure,
    MusicAttributeConfig,
    TokenVocabulary,
    contour,
    music_attributes,
    note_density,
    parse_note_name,
    piano_roll,
    piano_roll_lines,
    pitch_range,
    rhythmic_complexity,
)
from attrvae.rng import SeededRng

V = TokenVocabulary()


def measure_from(text):
    return Measure.from_text(text, V)


# onsets at ticks 0, 3, 6, 9 with pitches 60, 64, 67, 72; rest of the bar silent
FOUR_NOTES = measure_from(
    "60 __ R 64 __ __ 67 R R 72 __ __ R R R R R R R R R R R R")

# onsets 60, 64, 67 then silence
ASCENT = measure_from(
    "60 __ 64 __ 67 __ R R R R R R R R R R R R R R R R R R")

ALL_REST = measure_from(" ".join(["R"] * 24))
ALL_ONSET = measure_from(" ".join(["60"] * 24))


def test_parse_note_name():
    assert parse_note_name("C4") == 60
    assert parse_note_name("A0") == 21
    assert parse_note_name("F#3") == 54
    assert parse_note_name("Bb5") == 82
    assert parse_note_name("Db4") == 61
    assert parse_note_name("C-1") == 0
    assert parse_note_name("72") == 72
    assert parse_note_name("-3") == -3
    for bad in ("H4", "C##4", "4C", "C", "sharp"):
        with pytest.raises(FormatError):
            parse_note_name(bad)


def test_vocabulary_layout():
    assert V.n_pitches == 37
    assert V.hold_id == 37
    assert V.rest_id == 38
    assert V.size == 39
    assert V.span == 36
    assert V.pitch_to_id(48) == 0
    assert V.pitch_to_id(84) == 36
    with pytest.raises(ValueError):
        V.pitch_to_id(47)
    with pytest.raises(ValueError):
        V.pitch_to_id(85)
    assert V.is_onset(0) and V.is_onset(36)
    assert not V.is_onset(37) and not V.is_onset(38)
    assert V.midi_of(12) == 60
    assert V.midi_of(V.hold_id) == 0 and V.midi_of(V.rest_id) == 0
    assert V.parse("__") == V.hold_id
    assert V.parse("R") == V.rest_id
    assert V.parse("C4") == 12
    assert V.token_text(12) == "60"
    assert V.token_text(V.hold_id) == "__"
    assert V.token_text(V.rest_id) == "R"
    with pytest.raises(ValueError):
        V.token_text(39)
    assert V.as_dict() == {"midi_low": 48, "midi_high": 84}
    with pytest.raises(ValueError):
        TokenVocabulary(midi_low=60, midi_high=60)


def test_measure_validation():
    with pytest.raises(ValueError):
        Measure(tuple([V.rest_id] * 23), V)
    with pytest.raises(ValueError):
        Measure(tuple([99] + [V.rest_id] * 23), V)
    # hold before any onset
    with pytest.raises(ValueError):
        Measure(tuple([V.hold_id] + [V.rest_id] * 23), V)
    # hold after a rest breaks the sounding chain
    with pytest.raises(ValueError):
        measure_from("60 R __ R R R R R R R R R R R R R R R R R R R R R")
    # hold chains through holds are fine
    measure_from("60 __ __ __ R R R R R R R R R R R R R R R R R R R R")


def test_from_tokens_lenient_coerces_dangling_holds():
    ids = [V.hold_id, 12, V.hold_id, V.rest_id, V.hold_id] + [V.rest_id] * 19
    with pytest.raises(ValueError):
        Measure.from_tokens(ids, V)
    fixed = Measure.from_tokens(ids, V, strict=False)
    assert fixed.tokens[0] == V.rest_id   # dangling hold at start
    assert fixed.tokens[2] == V.hold_id   # legitimate hold kept
    assert fixed.tokens[4] == V.rest_id   # hold after rest
    # lenient mode leaves already-valid sequences alone
    same = Measure.from_tokens(FOUR_NOTES.tokens, V, strict=False)
    assert same.tokens == FOUR_NOTES.tokens


def test_text_round_trip():
    text = FOUR_NOTES.to_text()
    assert text.split()[0] == "60"
    assert Measure.from_text(text, V).tokens == FOUR_NOTES.tokens
    named = measure_from("C4 __ R E4 __ __ G4 R R C5 __ __ R R R R R R R R R R R R")
    assert named.tokens == FOUR_NOTES.tokens


def test_measure_views():
    mask = FOUR_NOTES.onset_mask()
    assert mask.sum() == 4
    assert list(np.flatnonzero(mask)) == [0, 3, 6, 9]
    assert list(FOUR_NOTES.onset_pitches()) == [60, 64, 67, 72]
    lit = FOUR_NOTES.literal_midi()
    assert lit[0] == 60 and lit[1] == 0 and lit[2] == 0
    assert FOUR_NOTES.length == MEASURE_TICKS


def test_default_weight_table():
    w = ComplexityWeights.default()
    arr = w.as_array()
    assert arr.sum() == 56.0
    for t in range(24):
        assert arr[t] == (1.0 if (t % 2 == 0 or t % 3 == 0) else 5.0)
    assert (arr == 5.0).sum() == 8
    with pytest.raises(ValueError):
        ComplexityWeights((-1.0,) * 24)
    with pytest.raises(ValueError):
        ComplexityWeights((0.0,) * 24)


def test_rhythmic_complexity_fixtures():
    assert rhythmic_complexity(ALL_REST) == 0.0
    assert rhythmic_complexity(ALL_ONSET) == 1.0
    # single onset on an off-grid tick (weight 5), table total 56
    single = measure_from("R 60 R R R R R R R R R R R R R R R R R R R R R R")
    assert rhythmic_complexity(single) == 5.0 / 56.0
    # four on-grid onsets, weight 1 each
    assert rhythmic_complexity(FOUR_NOTES) == 4.0 / 56.0
    with pytest.raises(ValueError):
        rhythmic_complexity(FOUR_NOTES, ComplexityWeights((1.0,) * 12))
    flat = ComplexityWeights((2.0,) * 24)
    assert rhythmic_complexity(FOUR_NOTES, flat) == pytest.approx(4.0 / 24.0)


def test_pitch_range_fixtures():
    assert pitch_range(FOUR_NOTES) == 12.0 / 36.0
    assert pitch_range(ALL_REST) == 0.0
    single = measure_from("60 R R R R R R R R R R R R R R R R R R R R R R R")
    assert pitch_range(single) == 0.0
    # literal variant counts hold/rest ticks as MIDI 0, collapsing the minimum
    assert pitch_range(FOUR_NOTES, literal_zeros=True) == 1.0  # 72/36 clipped
    assert pitch_range(ALL_ONSET, literal_zeros=True) == 0.0


def test_note_density_fixtures():
    assert note_density(FOUR_NOTES) == 4.0 / 24.0
    assert note_density(ALL_REST) == 0.0
    assert note_density(ALL_ONSET) == 1.0


def test_contour_fixtures():
    assert contour(ASCENT) == 7.0 / 36.0
    assert contour(ALL_REST) == 0.0
    single = measure_from("60 __ __ R R R R R R R R R R R R R R R R R R R R R")
    assert contour(single) == 0.0
    palindrome = measure_from("60 64 67 64 60 R R R R R R R R R R R R R R R R R R R")
    assert contour(palindrome) == 0.0
    descent = measure_from("72 __ 60 __ R R R R R R R R R R R R R R R R R R R R")
    assert contour(descent) == -12.0 / 36.0
    # literal variant telescopes over the per-tick encoding with rests as 0
    assert contour(ASCENT, token_diffs=True) == (0 - 60) / 36.0
    assert contour(ALL_ONSET, token_diffs=True) == 0.0


def test_contour_telescopes_to_endpoints():
    for trial in range(20):
        r = SeededRng(4000 + trial)
        pitches = 48 + r.integers(0, 37, (6,))
        tokens = [V.pitch_to_id(int(p)) for p in pitches] + [V.rest_id] * 18
        m = Measure(tuple(tokens), V)
        assert contour(m) == pytest.approx((pitches[-1] - pitches[0]) / 36.0, abs=1e-15)


def test_transposition_invariance():
    for trial in range(20):
        r = SeededRng(5000 + trial)
        # random valid measure built from onset/hold/rest choices
        tokens = []
        sounding = False
        for _ in range(24):
            roll = float(r.uniform(()))
            if roll < 0.4:
                tokens.append(int(r.integers(5, 25, ())))  # mid-range onset
                sounding = True
            elif roll < 0.7 and sounding:
                tokens.append(V.hold_id)
            else:
                tokens.append(V.rest_id)
                sounding = False
        m = Measure(tuple(tokens), V)
        shift = int(r.integers(1, 12, ()))
        shifted = Measure(
            tuple(t + shift if V.is_onset(t) else t for t in m.tokens), V)
        assert rhythmic_complexity(shifted) == rhythmic_complexity(m)
        assert note_density(shifted) == note_density(m)
        assert pitch_range(shifted) == pitch_range(m)
        assert contour(shifted) == pytest.approx(contour(m), abs=1e-15)


def test_music_attributes_bundle():
    values = music_attributes(FOUR_NOTES)
    assert tuple(values) == MUSIC_ATTRIBUTE_NAMES
    assert values["rhy_complexity"] == rhythmic_complexity(FOUR_NOTES)
    assert values["pitch_range"] == 12.0 / 36.0
    assert values["note_density"] == 4.0 / 24.0
    assert values["contour"] == 12.0 / 36.0  # telescoped 60 -> 72
    literal = music_attributes(FOUR_NOTES, MusicAttributeConfig(
        pitch_range_literal_zeros=True, contour_token_diffs=True))
    assert literal["pitch_range"] == 1.0
    assert literal["contour"] == (0 - 60) / 36.0
    flat = music_attributes(FOUR_NOTES, MusicAttributeConfig(
        weights=ComplexityWeights((1.0,) * 24)))
    assert flat["rhy_complexity"] == pytest.approx(4.0 / 24.0)


def test_attribute_ranges_on_random_measures():
    for trial in range(50):
        r = SeededRng(6000 + trial)
        tokens = []
        sounding = False
        for _ in range(24):
            roll = float(r.uniform(()))
            if roll < 0.3:
                tokens.append(int(r.integers(0, 37, ())))
                sounding = True
            elif roll < 0.6 and sounding:
                tokens.append(V.hold_id)
            else:
                tokens.append(V.rest_id)
                sounding = False
        m = Measure(tuple(tokens), V)
        assert 0.0 <= rhythmic_complexity(m) <= 1.0
        assert 0.0 <= pitch_range(m) <= 1.0
        assert 0.0 <= note_density(m) <= 1.0
        assert -1.0 <= contour(m) <= 1.0  # onsets live inside one span


def test_piano_roll():
    roll = piano_roll(FOUR_NOTES)
    assert roll.shape == (37, 24)
    assert set(np.unique(roll)) <= {0.0, 1.0}
    # onset at tick 0 pitch 60 held through tick 1
    assert roll[V.pitch_to_id(60), 0] == 1.0
    assert roll[V.pitch_to_id(60), 1] == 1.0
    assert roll[V.pitch_to_id(60), 2] == 0.0  # rest silences
    assert roll[:, 12:].sum() == 0.0
    assert piano_roll(ALL_REST).sum() == 0.0


def test_piano_roll_lines():
    lines = piano_roll_lines(FOUR_NOTES)
    assert len(lines) == 4  # one row per distinct pitch
    assert lines[0].startswith(" 72")  # highest first
    body = lines[-1].split("|")[1]
    assert body[0] == "O" and body[1] == "=" and body[2] == "."
    empty = piano_roll_lines(ALL_REST)
    assert len(empty) == 1 and set(empty[0].split("|")[1]) == {"."}
