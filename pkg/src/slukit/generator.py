"""Deterministic generator of semantically ambiguous utterances.

Every utterance is realized from a template whose non-slot tokens are shared
by all intents of an ambiguity group, so text alone identifies only the
group; the gold intent is recoverable from the supporting profile
information, and a scoring oracle guarantees it wins by a margin before a
sample is emitted. Two construction procedures exist: description cases
(plain slot values, heuristically biased UP/CA) and mention cases (a
lexically ambiguous name whose knowledge-graph entities are all attached).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache

from .data import KgEntity, ProfileItem, ProfileSchema, Sample
from .errors import ConfigError, GenerationError, ValidationError

ROLE_MARKER = "{"


@dataclass(frozen=True)
class GeneratorConfig:
    n_samples: int
    seed: int = 11
    mention_ratio: float = 2.0 / 3.0
    resolvability_margin: float = 0.1
    max_rejections: int = 100
    train_fraction: float = 0.8
    valid_fraction: float = 0.1
    test_fraction: float = 0.1

    def __post_init__(self):
        if self.n_samples <= 0:
            raise ConfigError(f"n_samples must be positive, got {self.n_samples}")
        if not 0.0 < self.mention_ratio < 1.0:
            raise ConfigError(f"mention_ratio must be in (0, 1), got {self.mention_ratio}")
        if self.resolvability_margin < 0:
            raise ConfigError("resolvability_margin must be non-negative")
        if self.max_rejections < 1:
            raise ConfigError("max_rejections must be at least 1")
        total = self.train_fraction + self.valid_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"split fractions sum to {total!r}, expected 1")


@dataclass(frozen=True)
class TemplateSpec:
    group: str
    tokens: tuple[str, ...]

    @property
    def roles(self) -> tuple[str, ...]:
        return tuple(t[1:-1] for t in self.tokens if t.startswith(ROLE_MARKER))


@dataclass(frozen=True)
class IntentSpec:
    name: str
    group: str
    slot_names: dict  # role -> slot name suffix


@dataclass(frozen=True)
class Mention:
    name: tuple[str, ...]
    entities: tuple[KgEntity, ...]

    @property
    def types(self) -> frozenset:
        return frozenset(e.entity_type for e in self.entities)


@dataclass
class IntentCatalog:
    """Intent groups, templates, value pools and the toy knowledge graph."""

    groups: dict  # group name -> tuple of intent names
    intents: dict  # intent name -> IntentSpec
    templates: dict  # group name -> tuple[TemplateSpec]
    pools: dict  # role -> tuple of value token-tuples (description pools)
    mentions: tuple  # tuple[Mention]: names owning >= 2 entities
    entity_index: dict  # value token-tuple -> tuple[KgEntity]
    entity_role: dict  # group name -> role receiving the ambiguous mention
    schema: ProfileSchema

    def intent_order(self) -> tuple[str, ...]:
        return tuple(self.intents)

    def group_members(self, group: str) -> tuple[str, ...]:
        return self.groups[group]

    def mention_candidates(self, required_type: str) -> tuple[Mention, ...]:
        return tuple(
            m for m in self.mentions if len(m.types) >= 2 and required_type in m.types
        )

    def validate(self) -> None:
        listed = [i for members in self.groups.values() for i in members]
        if sorted(listed) != sorted(self.intents):
            raise ValidationError("groups do not partition the intent set")
        if len(set(listed)) != len(listed):
            raise ValidationError("an intent appears in more than one group")
        for group, members in self.groups.items():
            if group not in self.templates or not self.templates[group]:
                raise ValidationError(f"group {group!r} has no templates")
            entity_role = self.entity_role.get(group)
            for template in self.templates[group]:
                if entity_role not in template.roles:
                    raise ValidationError(
                        f"template {template.tokens} lacks the entity role {entity_role!r}"
                    )
                for role in template.roles:
                    if role != entity_role and role not in self.pools:
                        raise ValidationError(f"role {role!r} has no value pool")
            for intent in members:
                spec = self.intents[intent]
                for template in self.templates[group]:
                    for role in template.roles:
                        if role not in spec.slot_names:
                            raise ValidationError(f"intent {intent} lacks a slot for role {role!r}")


@dataclass(frozen=True)
class HeuristicTables:
    """Per-intent profile biasing rules and the KG feasibility map."""

    schema: ProfileSchema
    up_rules: dict  # intent -> (up item name, category)
    up_factors: dict  # intent -> tuple of (up item name, {category: multiplier})
    ca_mults: dict  # (intent, ca item name, category) -> multiplier < 1
    kg_required: dict  # intent -> required entity type

    def up_weight(self, intent: str, up) -> float:
        w = 1.0
        rule = self.up_rules.get(intent)
        if rule is not None:
            item_name, category = rule
            item, sl = self.schema.item("up", item_name)
            w *= up[sl][item.categories.index(category)]
        for item_name, mults in self.up_factors.get(intent, ()):
            item, sl = self.schema.item("up", item_name)
            block = up[sl]
            w *= sum(block[j] * mults.get(cat, 1.0) for j, cat in enumerate(item.categories))
        return w

    def ca_mult(self, intent: str, ca) -> float:
        m = 1.0
        for item, sl in self.schema.ca_blocks():
            if not any((intent, item.name, cat) in self.ca_mults for cat in item.categories):
                continue
            block = ca[sl]
            m *= sum(
                block[j] * self.ca_mults.get((intent, item.name, cat), 1.0)
                for j, cat in enumerate(item.categories)
            )
        return m

    def kg_feasible(self, intent: str, kg) -> bool:
        if not kg:
            return True
        required = self.kg_required[intent]
        return any(e.entity_type == required for e in kg)

    def ca_compatible_categories(self, intent: str, item: ProfileItem) -> list[int]:
        return [
            j for j, cat in enumerate(item.categories)
            if (intent, item.name, cat) not in self.ca_mults
        ]

    def validate(self, catalog: IntentCatalog) -> None:
        for intent in catalog.intents:
            if intent not in self.kg_required:
                raise ValidationError(f"intent {intent} has no required entity type")
        for group, members in catalog.groups.items():
            for a, b in itertools.combinations(members, 2):
                if self._distinguishable(a, b):
                    continue
                raise ValidationError(f"no heuristic rule distinguishes {a} from {b}")

    def _distinguishable(self, a: str, b: str) -> bool:
        if self.up_rules.get(a) != self.up_rules.get(b):
            return True
        if self.up_factors.get(a) != self.up_factors.get(b):
            return True
        if self.kg_required.get(a) != self.kg_required.get(b):
            return True
        rows_a = {k[1:]: v for k, v in self.ca_mults.items() if k[0] == a}
        rows_b = {k[1:]: v for k, v in self.ca_mults.items() if k[0] == b}
        return rows_a != rows_b


# ---------------------------------------------------------------------------
# Default catalog

_UP_ITEMS = (
    ProfileItem("media_preference", ("music", "video", "audiobook")),
    ProfileItem("route_preference", ("subway", "bus", "drive")),
    ProfileItem("ticket_preference", ("train", "flight", "coach")),
    ProfileItem("has_car", ("true", "false")),
)
_CA_ITEMS = (
    ProfileItem("movement_state", ("stationary", "walking", "running", "driving", "on_aircraft")),
    ProfileItem("posture", ("standing", "sitting", "lying")),
    ProfileItem("location_kind", ("home", "office", "outdoors", "station")),
    ProfileItem("connectivity", ("wifi", "cellular", "offline")),
)

_GROUPS = {
    "play": ("PlayMusic", "PlayVideo", "PlayAudioBook"),
    "search_media": ("SearchMusic", "SearchVideo", "SearchAudioBook"),
    "location": ("SearchLocation", "SearchLocationOntheway"),
    "route": ("SearchMetroRoute", "SearchBusRoute", "SearchDriveRoute"),
    "ticket": ("SearchTrainTicket", "SearchFlightTicket", "SearchCoachTicket"),
}

_MEDIA_TYPE = {
    "PlayMusic": "music", "SearchMusic": "music",
    "PlayVideo": "video", "SearchVideo": "video",
    "PlayAudioBook": "audiobook", "SearchAudioBook": "audiobook",
}

_ITEM_SLOT = {"music": "songName", "video": "videoName", "audiobook": "audiobookName"}
_CREATOR_SLOT = {"music": "artistName", "video": "directorName", "audiobook": "authorName"}

_TEMPLATES = {
    "play": (
        ("play", "{item}"),
        ("please", "play", "{item}"),
        ("open", "{item}", "on", "my", "{device}"),
        ("put", "{item}", "on"),
    ),
    "search_media": (
        ("search", "for", "{item}"),
        ("find", "{item}", "by", "{creator}"),
        ("look", "up", "{item}"),
        ("show", "me", "{item}"),
    ),
    "location": (
        ("find", "a", "{place}", "nearby"),
        ("where", "is", "the", "closest", "{place}"),
        ("look", "for", "a", "{place}", "around", "here"),
    ),
    "route": (
        ("how", "do", "i", "get", "to", "{dest}"),
        ("route", "from", "{origin}", "to", "{dest}"),
        ("navigate", "to", "{dest}"),
        ("best", "way", "to", "{dest}"),
    ),
    "ticket": (
        ("book", "a", "ticket", "to", "{dest}"),
        ("buy", "a", "ticket", "from", "{origin}", "to", "{dest}"),
        ("i", "need", "a", "ticket", "to", "{dest}", "for", "{date}"),
        ("get", "me", "a", "ticket", "to", "{dest}"),
    ),
}

_ENTITY_ROLE = {
    "play": "item", "search_media": "item", "location": "place",
    "route": "dest", "ticket": "dest",
}


def _lexicon() -> list[str]:
    syllables = [c + v for c in "bdfglmnprstvz" for v in "aeiou"]
    pairs = ["".join(p) for p in itertools.product(syllables, syllables)]
    return pairs[::21][:200]


def _name_pool(words, start, count, partners, two_token_stride=2):
    names = []
    for k in range(count):
        if k % two_token_stride == 1:
            names.append((words[start + k], partners[k % len(partners)]))
        else:
            names.append((words[start + k],))
    return tuple(names)


_KG_ATTRIBUTES = {
    "music": ("artist", "album", "year"),
    "video": ("director", "studio", "year"),
    "audiobook": ("author", "narrator", "year"),
    "location": ("region", "category"),
    "other": ("category", "maker"),
}


def _make_entity(rng, subject, entity_type, value_words) -> KgEntity:
    pairs = [("subject", subject), ("type", (entity_type,))]
    for key in _KG_ATTRIBUTES[entity_type]:
        n = rng.randint(1, 2)
        pairs.append((key, tuple(rng.choice(value_words) for _ in range(n))))
    pairs.append(("description", tuple(rng.choice(value_words) for _ in range(rng.randint(2, 4)))))
    return KgEntity(pairs=tuple(pairs), entity_type=entity_type)


@lru_cache(maxsize=None)
def default_catalog() -> IntentCatalog:
    """The standard 5-group / 14-intent catalog with its toy knowledge graph."""
    words = _lexicon()
    rng = random.Random(0x5EED)
    kg_values = words[66:]

    media_names = _name_pool(words, 0, 24, partners=words[150:174])
    media_mentions = _name_pool(words, 24, 12, partners=words[174:186])
    cities = _name_pool(words, 36, 12, partners=words[186:198])
    place_mentions = _name_pool(words, 48, 8, partners=words[140:148])
    creators = _name_pool(words, 56, 10, partners=words[130:140], two_token_stride=3)

    pools = {
        "item": media_names,
        "device": (("phone",), ("tablet",), ("speaker",), ("smart", "tv"), ("headset",)),
        "creator": creators,
        "place": (("cafe",), ("gas", "station"), ("pharmacy",), ("bank",), ("park",), ("bookstore",)),
        "dest": cities,
        "origin": cities,
        "date": (("today",), ("tomorrow",), ("next", "monday"), ("next", "friday"), ("this", "weekend")),
    }

    entity_index: dict = {}
    mentions = []
    for name in media_mentions:
        # all three media types so text alone never narrows the intent group
        ents = tuple(_make_entity(rng, name, t, kg_values) for t in ("music", "video", "audiobook"))
        entity_index[name] = ents
        mentions.append(Mention(name, ents))
    for name in place_mentions:
        ents = (
            _make_entity(rng, name, "location", kg_values),
            _make_entity(rng, name, "other", kg_values),
        )
        entity_index[name] = ents
        mentions.append(Mention(name, ents))
    for name in cities:
        entity_index[name] = (_make_entity(rng, name, "location", kg_values),)

    intents = {}
    for group, members in _GROUPS.items():
        for intent in members:
            if group in ("play", "search_media"):
                media = _MEDIA_TYPE[intent]
                slots = {"item": _ITEM_SLOT[media], "device": "deviceType",
                         "creator": _CREATOR_SLOT[media]}
            elif group == "location":
                slots = {"place": "keyword"}
            elif group == "route":
                slots = {"dest": "destination", "origin": "origin"}
            else:
                slots = {"dest": "destination", "origin": "origin", "date": "travelDate"}
            intents[intent] = IntentSpec(intent, group, slots)

    catalog = IntentCatalog(
        groups=dict(_GROUPS),
        intents=intents,
        templates={g: tuple(TemplateSpec(g, t) for t in ts) for g, ts in _TEMPLATES.items()},
        pools=pools,
        mentions=tuple(mentions),
        entity_index=entity_index,
        entity_role=dict(_ENTITY_ROLE),
        schema=ProfileSchema(_UP_ITEMS, _CA_ITEMS),
    )
    catalog.validate()
    return catalog


@lru_cache(maxsize=None)
def default_tables() -> HeuristicTables:
    catalog = default_catalog()
    up_rules = {
        "PlayMusic": ("media_preference", "music"),
        "PlayVideo": ("media_preference", "video"),
        "PlayAudioBook": ("media_preference", "audiobook"),
        "SearchMusic": ("media_preference", "music"),
        "SearchVideo": ("media_preference", "video"),
        "SearchAudioBook": ("media_preference", "audiobook"),
        "SearchMetroRoute": ("route_preference", "subway"),
        "SearchBusRoute": ("route_preference", "bus"),
        "SearchDriveRoute": ("route_preference", "drive"),
        "SearchTrainTicket": ("ticket_preference", "train"),
        "SearchFlightTicket": ("ticket_preference", "flight"),
        "SearchCoachTicket": ("ticket_preference", "coach"),
    }
    up_factors = {
        "SearchDriveRoute": (("has_car", {"true": 1.0, "false": 0.2}),),
    }
    ca_mults = {
        ("PlayVideo", "movement_state", "running"): 0.2,
        ("SearchVideo", "movement_state", "running"): 0.2,
        ("SearchMetroRoute", "movement_state", "on_aircraft"): 0.1,
        ("SearchBusRoute", "movement_state", "on_aircraft"): 0.1,
        ("SearchDriveRoute", "movement_state", "on_aircraft"): 0.1,
        ("SearchLocation", "movement_state", "driving"): 0.5,
        ("SearchLocationOntheway", "movement_state", "stationary"): 0.2,
        ("SearchLocationOntheway", "movement_state", "walking"): 0.7,
        ("SearchLocationOntheway", "movement_state", "running"): 0.5,
        ("SearchLocationOntheway", "movement_state", "on_aircraft"): 0.1,
        ("SearchLocationOntheway", "posture", "lying"): 0.4,
    }
    kg_required = dict(_MEDIA_TYPE)
    for intent in ("SearchLocation", "SearchLocationOntheway", "SearchMetroRoute",
                   "SearchBusRoute", "SearchDriveRoute", "SearchTrainTicket",
                   "SearchFlightTicket", "SearchCoachTicket"):
        kg_required[intent] = "location"
    tables = HeuristicTables(
        schema=catalog.schema,
        up_rules=up_rules,
        up_factors=up_factors,
        ca_mults=ca_mults,
        kg_required=kg_required,
    )
    tables.validate(catalog)
    return tables


# ---------------------------------------------------------------------------
# Scoring oracle


def oracle_scores(group_members, kg, up, ca, tables: HeuristicTables) -> dict:
    return {
        intent: (
            tables.up_weight(intent, up) * tables.ca_mult(intent, ca)
            if tables.kg_feasible(intent, kg) else 0.0
        )
        for intent in group_members
    }


def gold_intent_oracle(group_members, kg, up, ca, tables: HeuristicTables) -> str:
    """Argmax of the resolvability score over the group (first member on ties)."""
    scores = oracle_scores(group_members, kg, up, ca, tables)
    best = None
    for intent in group_members:
        if best is None or scores[intent] > scores[best]:
            best = intent
    return best


def passes_margin(scores: dict, gold: str, margin: float) -> bool:
    """True when the gold score beats every other score by factor (1 + margin)."""
    others = [v for k, v in scores.items() if k != gold]
    runner = max(others) if others else 0.0
    return scores[gold] > 0.0 and scores[gold] > (1.0 + margin) * runner


def text_only_ceiling(catalog: IntentCatalog) -> float:
    """Bayes-optimal intent accuracy of any text-only classifier.

    Intents are sampled uniformly and the token distribution is identical
    across a group's members, so the optimum is one correct guess per group:
    (number of groups) / (number of intents).
    """
    return len(catalog.groups) / len(catalog.intents)


def is_text_ambiguous(sample: Sample, catalog: IntentCatalog, tables: HeuristicTables) -> bool:
    """At least two group members must remain KG-feasible for the sample."""
    members = catalog.group_members(catalog.intents[sample.intent].group)
    feasible = [m for m in members if tables.kg_feasible(m, sample.kg)]
    return len(feasible) >= 2


# ---------------------------------------------------------------------------
# Profile drawing

_GOLD_LO, _GOLD_HI = 0.45, 0.8
_SUPPRESS = 0.05


def _biased_simplex(rng, size, gold, suppressed=(), lo=_GOLD_LO, hi=_GOLD_HI):
    if size == 1:
        return [1.0]
    g = rng.uniform(lo, hi)
    raw = [0.0] * size
    for j in range(size):
        if j == gold:
            continue
        u = rng.random() + 1e-9
        raw[j] = u * _SUPPRESS if j in suppressed else u
    total = sum(raw)
    rest = 1.0 - g
    return [g if j == gold else raw[j] * rest / total for j in range(size)]


def _biased_argmax_block(rng, size, gold, suppressed=(), lo=_GOLD_LO, hi=_GOLD_HI):
    while True:
        block = _biased_simplex(rng, size, gold, suppressed, lo, hi)
        if max(range(size), key=block.__getitem__) == gold:
            return block


def _neutral_simplex(rng, size):
    raw = [rng.random() + 1e-9 for _ in range(size)]
    total = sum(raw)
    return [u / total for u in raw]


def _draw_up(rng, intent, tables: HeuristicTables) -> list[float]:
    rule = tables.up_rules.get(intent)
    factors = {name: mults for name, mults in tables.up_factors.get(intent, ())}
    blocks = []
    for item, _ in tables.schema.up_blocks():
        if rule is not None and item.name == rule[0]:
            gold = item.categories.index(rule[1])
            blocks.append(_biased_argmax_block(rng, len(item.categories), gold))
        elif item.name in factors:
            mults = factors[item.name]
            gold = item.categories.index(max(mults, key=mults.get))
            blocks.append(_biased_argmax_block(rng, len(item.categories), gold, lo=0.55, hi=0.95))
        else:
            blocks.append(_neutral_simplex(rng, len(item.categories)))
    return [v for block in blocks for v in block]


def _draw_ca(rng, intent, tables: HeuristicTables) -> list[float]:
    blocks = []
    for item, _ in tables.schema.ca_blocks():
        compatible = tables.ca_compatible_categories(intent, item)
        if len(compatible) == len(item.categories):
            blocks.append(_neutral_simplex(rng, len(item.categories)))
            continue
        favored = rng.choice(compatible) if compatible else rng.randrange(len(item.categories))
        suppressed = tuple(j for j in range(len(item.categories)) if j not in compatible)
        blocks.append(_biased_simplex(rng, len(item.categories), favored, suppressed))
    return [v for block in blocks for v in block]


def _draw_resolvable_profile(rng, intent, kg, catalog, tables, margin, max_rejections):
    members = catalog.group_members(catalog.intents[intent].group)
    for _ in range(max_rejections):
        up = _draw_up(rng, intent, tables)
        ca = _draw_ca(rng, intent, tables)
        scores = oracle_scores(members, kg, up, ca, tables)
        if gold_intent_oracle(members, kg, up, ca, tables) == intent and passes_margin(scores, intent, margin):
            return up, ca
    raise GenerationError(
        f"could not draw a resolvable profile for intent {intent} "
        f"within {max_rejections} attempts"
    )


# ---------------------------------------------------------------------------
# Sample construction


def realize(template: TemplateSpec, values: dict, intent: str, spec: IntentSpec):
    """Expand a template into (tokens, BIO labels); realization ignores the
    intent except for label prefixes, so group members share token sequences."""
    tokens: list[str] = []
    labels: list[str] = []
    for tok in template.tokens:
        if not tok.startswith(ROLE_MARKER):
            tokens.append(tok)
            labels.append("O")
            continue
        role = tok[1:-1]
        body = f"{intent}.{spec.slot_names[role]}"
        for j, value_token in enumerate(values[role]):
            tokens.append(value_token)
            labels.append(("B-" if j == 0 else "I-") + body)
    return tokens, labels


def _pick(rng, pool, role):
    if not pool:
        raise ConfigError(f"empty value pool for role {role!r}")
    return pool[rng.randrange(len(pool))]


def _attach_entities(catalog, values, template, skip_role=None):
    kg = []
    for role in template.roles:
        if role == skip_role:
            continue
        kg.extend(catalog.entity_index.get(values[role], ()))
    return kg


def _build_sample(rng, intent, catalog, tables, margin, max_rejections, case_kind,
                  mention: Mention | None = None) -> Sample:
    spec = catalog.intents[intent]
    group = spec.group
    template = catalog.templates[group][rng.randrange(len(catalog.templates[group]))]
    entity_role = catalog.entity_role[group]
    values = {}
    for role in template.roles:
        if mention is not None and role == entity_role:
            values[role] = mention.name
        else:
            values[role] = _pick(rng, catalog.pools[role], role)
    if mention is not None:
        kg = list(mention.entities) + _attach_entities(catalog, values, template, skip_role=entity_role)
    else:
        kg = _attach_entities(catalog, values, template)
    up, ca = _draw_resolvable_profile(rng, intent, kg, catalog, tables, margin, max_rejections)
    tokens, labels = realize(template, values, intent, spec)
    sample = Sample(
        tokens=tuple(tokens),
        slot_labels=tuple(labels),
        intent=intent,
        kg=tuple(kg),
        up=tuple(up),
        ca=tuple(ca),
        case_kind=case_kind,
    )
    sample.validate(catalog.schema)
    return sample


def description_sample(rng, intent, catalog, tables, margin=0.1, max_rejections=100) -> Sample:
    return _build_sample(rng, intent, catalog, tables, margin, max_rejections, "description")


def mention_sample(rng, intent, catalog, tables, margin=0.1, max_rejections=100) -> Sample:
    required = tables.kg_required[intent]
    candidates = catalog.mention_candidates(required)
    if not candidates:
        raise GenerationError(f"no ambiguous mention satisfies intent {intent}")
    mention = candidates[rng.randrange(len(candidates))]
    return _build_sample(rng, intent, catalog, tables, margin, max_rejections, "mention",
                         mention=mention)


def sample_description_case(rng, catalog, tables, margin=0.1, max_rejections=100) -> Sample:
    order = catalog.intent_order()
    return description_sample(rng, order[rng.randrange(len(order))], catalog, tables,
                              margin, max_rejections)


def sample_mention_case(rng, catalog, tables, margin=0.1, max_rejections=100) -> Sample:
    order = catalog.intent_order()
    return mention_sample(rng, order[rng.randrange(len(order))], catalog, tables,
                          margin, max_rejections)


# ---------------------------------------------------------------------------
# Dataset assembly


@dataclass
class DatasetSplits:
    train: list = field(default_factory=list)
    valid: list = field(default_factory=list)
    test: list = field(default_factory=list)

    def all_samples(self) -> list:
        return self.train + self.valid + self.test

    def as_dict(self) -> dict:
        return {"train": self.train, "valid": self.valid, "test": self.test}


def case_schedule(n: int, mention_ratio: float) -> list[bool]:
    """Deterministic mention/description interleaving with exact counts."""
    return [
        math.floor((i + 1) * mention_ratio) - math.floor(i * mention_ratio) == 1
        for i in range(n)
    ]


def generate_dataset(cfg: GeneratorConfig, catalog: IntentCatalog | None = None,
                     tables: HeuristicTables | None = None) -> DatasetSplits:
    """Generate cfg.n_samples samples; a pure function of (cfg, catalog, tables)."""
    catalog = catalog if catalog is not None else default_catalog()
    tables = tables if tables is not None else default_tables()
    order = catalog.intent_order()
    samples = []
    for index, is_mention in enumerate(case_schedule(cfg.n_samples, cfg.mention_ratio)):
        rng = random.Random(cfg.seed ^ index)
        intent = order[rng.randrange(len(order))]
        build = mention_sample if is_mention else description_sample
        samples.append(build(rng, intent, catalog, tables,
                             cfg.resolvability_margin, cfg.max_rejections))
    n_train = int(round(cfg.train_fraction * cfg.n_samples))
    n_valid = int(round(cfg.valid_fraction * cfg.n_samples))
    return DatasetSplits(
        train=samples[:n_train],
        valid=samples[n_train:n_train + n_valid],
        test=samples[n_train + n_valid:],
    )


def slot_label_inventory(catalog: IntentCatalog) -> list[str]:
    """Every slot label the generator can emit, including 'O'."""
    labels = {"O"}
    for intent, spec in catalog.intents.items():
        entity_role = catalog.entity_role[spec.group]
        mention_names = [m.name for m in catalog.mentions]
        for template in catalog.templates[spec.group]:
            for role in template.roles:
                body = f"{intent}.{spec.slot_names[role]}"
                labels.add(f"B-{body}")
                candidates = list(catalog.pools.get(role, ()))
                if role == entity_role:
                    candidates.extend(mention_names)
                if any(len(v) > 1 for v in candidates):
                    labels.add(f"I-{body}")
    return sorted(labels)


def dataset_statistics(splits: DatasetSplits, catalog: IntentCatalog) -> dict:
    samples = splits.all_samples()
    n = len(samples)
    total_words = sum(len(s.tokens) for s in samples)
    total_entities = sum(len(s.kg) for s in samples)
    entity_words = [len(e.token_sequence()) for s in samples for e in s.kg]
    per_intent = {intent: 0 for intent in catalog.intent_order()}
    per_case = {"description": 0, "mention": 0}
    for s in samples:
        per_intent[s.intent] += 1
        per_case[s.case_kind] += 1
    return {
        "n_utterances": n,
        "n_train": len(splits.train),
        "n_valid": len(splits.valid),
        "n_test": len(splits.test),
        "avg_words_per_utterance": total_words / n if n else 0.0,
        "n_intents": len(catalog.intents),
        "n_slot_labels": len(slot_label_inventory(catalog)),
        "n_up_items": len(catalog.schema.up_items),
        "n_ca_items": len(catalog.schema.ca_items),
        "n_kg_entities": total_entities,
        "avg_kg_entities_per_sample": total_entities / n if n else 0.0,
        "avg_words_per_entity": sum(entity_words) / len(entity_words) if entity_words else 0.0,
        "per_intent": per_intent,
        "per_case": per_case,
    }


def format_statistics(stats: dict) -> str:
    rows = [
        ("#Utterances", stats["n_utterances"]),
        ("#Utterances in Train Set", stats["n_train"]),
        ("#Utterances in Valid Set", stats["n_valid"]),
        ("#Utterances in Test Set", stats["n_test"]),
        ("#Avg. Words per Utterance", f"{stats['avg_words_per_utterance']:.2f}"),
        ("#Intents", stats["n_intents"]),
        ("#Slots", stats["n_slot_labels"]),
        ("#UP", stats["n_up_items"]),
        ("#CA", stats["n_ca_items"]),
        ("#KG entities", stats["n_kg_entities"]),
        ("#Avg. KG Entity", f"{stats['avg_kg_entities_per_sample']:.2f}"),
        ("#Avg. Words per Entity", f"{stats['avg_words_per_entity']:.2f}"),
    ]
    width = max(len(name) for name, _ in rows)
    lines = [f"{name:<{width}}  {value}" for name, value in rows]
    lines.append("")
    lines.append("Per intent:")
    for intent, count in stats["per_intent"].items():
        lines.append(f"  {intent:<24} {count}")
    lines.append("Per case:")
    for case, count in stats["per_case"].items():
        lines.append(f"  {case:<24} {count}")
    return "\n".join(lines) + "\n"
