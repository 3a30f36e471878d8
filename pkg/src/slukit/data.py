"""Domain types and dataset serialization.

Samples are one JSON object per line, UTF-8, with a fixed key order so that
serialize -> parse -> serialize is byte-identical (floats rely on Python's
shortest round-trip repr). A dataset directory holds train/valid/test files,
a schema description and a statistics report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError, ParseError, ValidationError

ENTITY_TYPES = ("music", "video", "audiobook", "location", "other")
CASE_KINDS = ("description", "mention")
BLOCK_SUM_TOL = 1e-9
UNKNOWN_TOKEN = "<unk>"


@dataclass(frozen=True)
class ProfileItem:
    name: str
    categories: tuple[str, ...]

    def __post_init__(self):
        if not self.categories:
            raise ValidationError(f"profile item {self.name!r} has no categories")


@dataclass(frozen=True)
class ProfileSchema:
    """Fixed 4+4 item layout of the user-profile and context vectors."""

    up_items: tuple[ProfileItem, ...]
    ca_items: tuple[ProfileItem, ...]

    def __post_init__(self):
        if len(self.up_items) != 4 or len(self.ca_items) != 4:
            raise ValidationError(
                f"schema needs exactly 4 UP and 4 CA items, got {len(self.up_items)}/{len(self.ca_items)}"
            )

    @property
    def up_length(self) -> int:
        return sum(len(i.categories) for i in self.up_items)

    @property
    def ca_length(self) -> int:
        return sum(len(i.categories) for i in self.ca_items)

    @staticmethod
    def _blocks(items: tuple[ProfileItem, ...]):
        offset = 0
        for item in items:
            yield item, slice(offset, offset + len(item.categories))
            offset += len(item.categories)

    def up_blocks(self):
        return list(self._blocks(self.up_items))

    def ca_blocks(self):
        return list(self._blocks(self.ca_items))

    def item(self, items: str, name: str) -> tuple[ProfileItem, slice]:
        blocks = self.up_blocks() if items == "up" else self.ca_blocks()
        for item, sl in blocks:
            if item.name == name:
                return item, sl
        raise KeyError(f"no {items} item named {name!r}")


@dataclass(frozen=True)
class KgEntity:
    """One knowledge-graph entity as an ordered key/value-pair record."""

    pairs: tuple[tuple[str, tuple[str, ...]], ...]
    entity_type: str

    def __post_init__(self):
        if self.entity_type not in ENTITY_TYPES:
            raise ValidationError(f"unknown entity type {self.entity_type!r}")
        keys = [k for k, _ in self.pairs]
        for required in ("subject", "type"):
            if required not in keys:
                raise ValidationError(f"entity is missing required key {required!r}")

    def token_sequence(self, cap: int | None = None) -> list[str]:
        """Linearize to tokens: per pair, the key token then the value tokens."""
        tokens: list[str] = []
        for key, values in self.pairs:
            tokens.append(key)
            tokens.extend(values)
        return tokens[:cap] if cap is not None else tokens

    @property
    def subject(self) -> tuple[str, ...]:
        for key, values in self.pairs:
            if key == "subject":
                return values
        raise ValidationError("entity is missing required key 'subject'")


def validate_bio(labels) -> None:
    """Strict BIO check: raises ValidationError naming the first bad position."""
    prev_body = None
    for pos, label in enumerate(labels):
        if label == "O":
            prev_body = None
            continue
        if len(label) < 3 or label[1] != "-" or label[0] not in "BI":
            raise ValidationError(f"invalid BIO label {label!r} at position {pos}")
        prefix, body = label[0], label[2:]
        if prefix == "I" and body != prev_body:
            raise ValidationError(
                f"I-{body} at position {pos} does not continue a {body} span"
            )
        prev_body = body
    return None


@dataclass(frozen=True)
class Span:
    start: int
    end: int  # inclusive
    label: str

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValidationError(f"bad span bounds ({self.start}, {self.end})")


def bio_spans(labels) -> set[Span]:
    """Extract maximal B/I runs from a valid BIO sequence."""
    validate_bio(labels)
    spans: set[Span] = set()
    start = None
    body = None
    for pos, label in enumerate(labels):
        if label == "O":
            if start is not None:
                spans.add(Span(start, pos - 1, body))
                start = None
            continue
        prefix, lab = label[0], label[2:]
        if prefix == "B":
            if start is not None:
                spans.add(Span(start, pos - 1, body))
            start, body = pos, lab
    if start is not None:
        spans.add(Span(start, len(labels) - 1, body))
    return spans


def spans_to_bio(spans, length: int) -> list[str]:
    labels = ["O"] * length
    for span in spans:
        if span.end >= length:
            raise ValidationError(f"span {span} exceeds sequence length {length}")
        labels[span.start] = f"B-{span.label}"
        for pos in range(span.start + 1, span.end + 1):
            labels[pos] = f"I-{span.label}"
    return labels


@dataclass(frozen=True)
class Sample:
    """One utterance with its gold frame and supporting profile information."""

    tokens: tuple[str, ...]
    slot_labels: tuple[str, ...]
    intent: str
    kg: tuple[KgEntity, ...]
    up: tuple[float, ...]
    ca: tuple[float, ...]
    case_kind: str

    def validate(self, schema: ProfileSchema | None = None) -> None:
        if len(self.tokens) < 1:
            raise ValidationError("sample has no tokens")
        if len(self.slot_labels) != len(self.tokens):
            raise ValidationError(
                f"{len(self.slot_labels)} slot labels for {len(self.tokens)} tokens"
            )
        validate_bio(self.slot_labels)
        for pos, label in enumerate(self.slot_labels):
            if label != "O" and not label[2:].startswith(self.intent + "."):
                raise ValidationError(
                    f"slot label {label!r} at position {pos} is not qualified by intent {self.intent!r}"
                )
        if self.case_kind not in CASE_KINDS:
            raise ValidationError(f"unknown case kind {self.case_kind!r}")
        if schema is not None:
            self._validate_profile(schema)

    def _validate_profile(self, schema: ProfileSchema) -> None:
        for vec, items, kind in ((self.up, schema.up_blocks(), "UP"), (self.ca, schema.ca_blocks(), "CA")):
            expected = items[-1][1].stop
            if len(vec) != expected:
                raise ValidationError(f"{kind} vector has length {len(vec)}, schema says {expected}")
            for item, sl in items:
                block = vec[sl]
                if any(v < 0 for v in block):
                    raise ValidationError(f"{kind} item {item.name!r} has a negative entry")
                total = sum(block)
                if abs(total - 1.0) > BLOCK_SUM_TOL:
                    raise ValidationError(
                        f"{kind} item {item.name!r} sums to {total!r}, expected 1"
                    )


def flatten_profile(items, names=None) -> list[float]:
    """Concatenate per-item simplex vectors into one flat feature vector."""
    flat: list[float] = []
    for i, vec in enumerate(items):
        name = names[i] if names is not None else f"item {i}"
        if any(v < 0 for v in vec):
            raise ValidationError(f"profile item {name} has a negative entry")
        total = sum(vec)
        if abs(total - 1.0) > BLOCK_SUM_TOL:
            raise ValidationError(f"profile item {name} sums to {total!r}, expected 1")
        flat.extend(float(v) for v in vec)
    return flat


# ---------------------------------------------------------------------------
# Serialization

_SAMPLE_KEYS = ("tokens", "slots", "intent", "kg", "up", "ca", "case")


def serialize_sample(sample: Sample) -> str:
    record = {
        "tokens": list(sample.tokens),
        "slots": list(sample.slot_labels),
        "intent": sample.intent,
        "kg": [
            {"type": e.entity_type, "pairs": [[k, list(v)] for k, v in e.pairs]}
            for e in sample.kg
        ],
        "up": list(sample.up),
        "ca": list(sample.ca),
        "case": sample.case_kind,
    }
    return json.dumps(record, separators=(",", ":"))


def parse_sample(line: str, line_number: int | None = None) -> Sample:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}", line_number) from exc
    if not isinstance(record, dict):
        raise ParseError("record is not an object", line_number)
    missing = [k for k in _SAMPLE_KEYS if k not in record]
    if missing:
        raise ParseError(f"missing fields {missing}", line_number)
    extra = [k for k in record if k not in _SAMPLE_KEYS]
    if extra:
        raise ParseError(f"unknown fields {extra}", line_number)
    try:
        sample = Sample(
            tokens=tuple(str(t) for t in record["tokens"]),
            slot_labels=tuple(str(t) for t in record["slots"]),
            intent=str(record["intent"]),
            kg=tuple(
                KgEntity(
                    pairs=tuple((str(k), tuple(str(v) for v in vals)) for k, vals in e["pairs"]),
                    entity_type=str(e["type"]),
                )
                for e in record["kg"]
            ),
            up=tuple(float(v) for v in record["up"]),
            ca=tuple(float(v) for v in record["ca"]),
            case_kind=str(record["case"]),
        )
        sample.validate()
    except (ValidationError, KeyError, TypeError) as exc:
        raise ParseError(str(exc), line_number) from exc
    return sample


def parse_dataset(stream) -> list[Sample]:
    """Parse samples from an iterable of lines (or an open text file)."""
    samples = []
    for line_number, line in enumerate(stream, 1):
        line = line.strip()
        if not line:
            continue
        samples.append(parse_sample(line, line_number))
    return samples


# ---------------------------------------------------------------------------
# Vocabularies


class Vocab:
    """Bijective label<->index map; order is first occurrence in training data."""

    def __init__(self, items, unknown_entry: bool = False):
        self._items: list[str] = []
        self._to_id: dict[str, int] = {}
        if unknown_entry:
            self._append(UNKNOWN_TOKEN)
        for item in items:
            if item not in self._to_id:
                self._append(item)

    def _append(self, item: str) -> None:
        self._to_id[item] = len(self._items)
        self._items.append(item)

    def __len__(self) -> int:
        return len(self._items)

    def encode(self, label: str) -> int:
        return self._to_id.get(label, 0)

    def encode_strict(self, label: str) -> int:
        if label not in self._to_id:
            raise KeyError(f"label {label!r} not in vocabulary")
        return self._to_id[label]

    def decode(self, index: int) -> str:
        if not 0 <= index < len(self._items):
            raise IndexError(f"index {index} out of range for vocabulary of size {len(self._items)}")
        return self._items[index]

    def items(self) -> list[str]:
        return list(self._items)

    def __contains__(self, label: str) -> bool:
        return label in self._to_id

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self._items == other._items


@dataclass(frozen=True)
class Vocabularies:
    tokens: Vocab
    intents: Vocab
    slots: Vocab
    kg_tokens: Vocab


def build_vocabularies(train: list[Sample]) -> Vocabularies:
    """Build all four vocabularies from the training split (first-occurrence order).

    Token vocabularies reserve index 0 for padding/unknown; intent and slot
    vocabularies contain exactly the labels seen in training, with unseen
    labels mapping to index 0 at evaluation time.
    """
    if not train:
        raise DomainError("cannot build vocabularies from an empty training set")
    tokens, intents, slots, kg_tokens = [], [], [], []
    for sample in train:
        tokens.extend(sample.tokens)
        intents.append(sample.intent)
        slots.extend(sample.slot_labels)
        for entity in sample.kg:
            kg_tokens.extend(entity.token_sequence())
    return Vocabularies(
        tokens=Vocab(tokens, unknown_entry=True),
        intents=Vocab(intents),
        slots=Vocab(slots),
        kg_tokens=Vocab(kg_tokens, unknown_entry=True),
    )


# ---------------------------------------------------------------------------
# Dataset directories

SPLIT_NAMES = ("train", "valid", "test")


def schema_description(schema: ProfileSchema, intents, slot_labels) -> dict:
    return {
        "up_items": [{"name": i.name, "categories": list(i.categories)} for i in schema.up_items],
        "ca_items": [{"name": i.name, "categories": list(i.categories)} for i in schema.ca_items],
        "up_length": schema.up_length,
        "ca_length": schema.ca_length,
        "intents": list(intents),
        "slot_labels": list(slot_labels),
    }


def schema_from_description(desc: dict) -> ProfileSchema:
    return ProfileSchema(
        up_items=tuple(ProfileItem(i["name"], tuple(i["categories"])) for i in desc["up_items"]),
        ca_items=tuple(ProfileItem(i["name"], tuple(i["categories"])) for i in desc["ca_items"]),
    )


def write_dataset(out_dir, splits: dict, schema: ProfileSchema, intents, slot_labels) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in SPLIT_NAMES:
        with open(out / f"{name}.jsonl", "w", encoding="utf-8") as fh:
            for sample in splits[name]:
                fh.write(serialize_sample(sample) + "\n")
    with open(out / "schema.json", "w", encoding="utf-8") as fh:
        json.dump(schema_description(schema, intents, slot_labels), fh, indent=2)
        fh.write("\n")


def load_dataset(data_dir) -> tuple[dict, ProfileSchema, dict]:
    """Load a dataset directory -> (splits, schema, schema description)."""
    root = Path(data_dir)
    schema_path = root / "schema.json"
    if not schema_path.exists():
        raise ParseError(f"missing schema file {schema_path}")
    with open(schema_path, encoding="utf-8") as fh:
        desc = json.load(fh)
    schema = schema_from_description(desc)
    splits = {}
    for name in SPLIT_NAMES:
        path = root / f"{name}.jsonl"
        if not path.exists():
            raise ParseError(f"missing split file {path}")
        with open(path, encoding="utf-8") as fh:
            samples = parse_dataset(fh)
        for sample in samples:
            sample.validate(schema)
        splits[name] = samples
    return splits, schema, desc
