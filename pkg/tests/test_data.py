"""Domain types, BIO handling, serialization round trips, vocabularies."""

import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slukit.data import (KgEntity, ProfileItem, ProfileSchema, Sample, Span,
                         bio_spans, build_vocabularies, flatten_profile,
                         parse_dataset, parse_sample, serialize_sample,
                         spans_to_bio, validate_bio)
from slukit.errors import DomainError, ParseError, ValidationError

# ---------------------------------------------------------------------------
# flatten_profile


def test_flatten_profile_concatenates_in_order():
    assert flatten_profile([[0.5, 0.3, 0.2], [0.4, 0.1, 0.5]]) == [0.5, 0.3, 0.2, 0.4, 0.1, 0.5]


def test_flatten_profile_single_item():
    assert flatten_profile([[1.0]]) == [1.0]


def test_flatten_profile_one_hot_movement_state():
    # one-hot "running" among {walking, running, stationary}
    assert flatten_profile([[0.0, 1.0, 0.0]]) == [0.0, 1.0, 0.0]


def test_flatten_profile_rejects_bad_sum_and_names_item():
    with pytest.raises(ValidationError) as err:
        flatten_profile([[0.5, 0.5], [0.5, 0.6]], names=["first", "second"])
    assert "second" in str(err.value)


def test_flatten_profile_rejects_negative():
    with pytest.raises(ValidationError):
        flatten_profile([[1.2, -0.2]])


# ---------------------------------------------------------------------------
# BIO


def test_bio_spans_all_outside():
    assert bio_spans(["O", "O", "O"]) == set()


def test_bio_spans_single():
    assert bio_spans(["O", "B-X", "I-X"]) == {Span(1, 2, "X")}


def test_bio_spans_adjacent_and_mixed():
    labels = ["B-X", "B-X", "I-X", "O", "B-Y"]

    # brute-force oracle: scan runs directly
    def brute(ls):
        out = set()
        i = 0
        while i < len(ls):
            if ls[i].startswith("B-"):
                j = i
                while j + 1 < len(ls) and ls[j + 1] == "I-" + ls[i][2:]:
                    j += 1
                out.add(Span(i, j, ls[i][2:]))
                i = j + 1
            else:
                i += 1
        return out

    expected = {Span(0, 0, "X"), Span(1, 2, "X"), Span(4, 4, "Y")}
    assert brute(labels) == expected
    assert bio_spans(labels) == expected


def test_invalid_bio_reports_position():
    with pytest.raises(ValidationError) as err:
        validate_bio(["O", "I-X"])
    assert "position 1" in str(err.value)
    with pytest.raises(ValidationError):
        validate_bio(["B-X", "I-Y"])
    with pytest.raises(ValidationError):
        validate_bio(["B"])


@given(st.lists(st.sampled_from(["O", "B-A", "I-A", "B-B", "I-B"]), min_size=1, max_size=12))
def test_bio_span_round_trip_on_valid_sequences(labels):
    try:
        validate_bio(labels)
    except ValidationError:
        return
    assert spans_to_bio(bio_spans(labels), len(labels)) == labels


# ---------------------------------------------------------------------------
# serialization


def _sample():
    entity = KgEntity(
        pairs=(("subject", ("golden", "dawn")), ("type", ("music",)),
               ("artist", ("mira",)), ("description", ("a", "b", "c"))),
        entity_type="music",
    )
    return Sample(
        tokens=("play", "golden", "dawn"),
        slot_labels=("O", "B-PlayMusic.songName", "I-PlayMusic.songName"),
        intent="PlayMusic",
        kg=(entity,),
        up=(0.5, 0.25, 0.25, 1 / 3, 1 / 3, 1 / 3, 0.2, 0.3, 0.5, 0.7, 0.3),
        ca=(0.2,) * 5,
        case_kind="mention",
    )


def test_serialize_parse_round_trip():
    sample = _sample()
    line = serialize_sample(sample)
    assert parse_sample(line) == sample
    assert serialize_sample(parse_sample(line)) == line


def test_parse_empty_file_is_empty_dataset():
    assert parse_dataset(io.StringIO("")) == []


def test_parse_rejects_length_mismatch_with_line_number():
    good = serialize_sample(_sample())
    bad = good.replace('"slots":["O","B-PlayMusic.songName","I-PlayMusic.songName"]',
                       '"slots":["O","B-PlayMusic.songName"]')
    assert bad != good
    with pytest.raises(ParseError) as err:
        parse_dataset(io.StringIO(good + "\n" + bad + "\n"))
    assert "line 2" in str(err.value)


def test_parse_rejects_garbage_and_unknown_fields():
    with pytest.raises(ParseError):
        parse_sample("not json at all", 3)
    with pytest.raises(ParseError):
        parse_sample('{"tokens": ["a"]}', 1)


def test_sample_validation_rejects_foreign_intent_prefix():
    sample = _sample()
    bad = Sample(sample.tokens, ("O", "B-PlayVideo.videoName", "I-PlayVideo.videoName"),
                 "PlayMusic", sample.kg, sample.up, sample.ca, sample.case_kind)
    with pytest.raises(ValidationError):
        bad.validate()


def test_entity_requires_subject_and_type():
    with pytest.raises(ValidationError):
        KgEntity(pairs=(("subject", ("a",)),), entity_type="music")
    with pytest.raises(ValidationError):
        KgEntity(pairs=(("subject", ("a",)), ("type", ("music",))), entity_type="song")


def test_schema_lengths_and_block_validation():
    schema = ProfileSchema(
        up_items=(ProfileItem("a", ("x", "y")), ProfileItem("b", ("x",)),
                  ProfileItem("c", ("x", "y", "z")), ProfileItem("d", ("x",))),
        ca_items=(ProfileItem("e", ("x",)), ProfileItem("f", ("x",)),
                  ProfileItem("g", ("x",)), ProfileItem("h", ("x", "y"))),
    )
    assert schema.up_length == 7
    assert schema.ca_length == 5
    sample = Sample(("hi",), ("O",), "A", (), (0.5, 0.5, 1.0, 0.2, 0.3, 0.5, 1.0),
                    (1.0, 1.0, 1.0, 0.9, 0.1), "description")
    sample.validate(schema)
    broken = Sample(("hi",), ("O",), "A", (), (0.5, 0.6, 1.0, 0.2, 0.3, 0.5, 1.0),
                    (1.0, 1.0, 1.0, 0.9, 0.1), "description")
    with pytest.raises(ValidationError) as err:
        broken.validate(schema)
    assert "a" in str(err.value)


def test_schema_requires_four_plus_four():
    with pytest.raises(ValidationError):
        ProfileSchema(up_items=(ProfileItem("a", ("x",)),), ca_items=(ProfileItem("b", ("x",)),) * 4)


# ---------------------------------------------------------------------------
# vocabularies


def test_vocab_sizes_include_token_padding():
    sample = Sample(("hi", "there"), ("O", "O"), "A", (), (), (), "description")
    vocabs = build_vocabularies([sample])
    assert len(vocabs.tokens) == 3  # <unk> + 2 tokens
    assert vocabs.tokens.encode("never-seen") == 0


def test_intent_vocab_size_matches_distinct_intents():
    samples = [
        Sample(("x",), ("O",), "A", (), (), (), "description"),
        Sample(("y",), ("O",), "B", (), (), (), "description"),
        Sample(("z",), ("O",), "A", (), (), (), "description"),
    ]
    first = build_vocabularies(samples)
    second = build_vocabularies(samples)
    assert len(first.intents) == 2
    assert first.intents.items() == second.intents.items() == ["A", "B"]


def test_build_vocabularies_rejects_empty():
    with pytest.raises(DomainError):
        build_vocabularies([])


def test_round_trip_on_generated_samples(small_splits):
    for sample in small_splits.all_samples():
        line = serialize_sample(sample)
        assert parse_sample(line) == sample
        assert serialize_sample(parse_sample(line)) == line
