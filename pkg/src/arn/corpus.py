"""Sentences with nested mentions, JSONL I/O, vocabularies and innermost-mention bags."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

NIL = "NIL"
UNK = "<unk>"


class CorpusError(ValueError):
    """Malformed or inconsistent corpus input."""


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str

    def __post_init__(self):
        if not self.surface:
            raise CorpusError("token surface must be nonempty")

    @property
    def chars(self) -> list[str]:
        return list(self.surface)


@dataclass(frozen=True, order=True)
class Mention:
    start: int
    end: int  # inclusive
    label: str

    def __len__(self):
        return self.end - self.start + 1

    def covers(self, t: int) -> bool:
        return self.start <= t <= self.end

    def contains(self, other: "Mention") -> bool:
        """True if ``other`` lies inside this span and is a different span."""
        return (self.start <= other.start and other.end <= self.end
                and (self.start, self.end) != (other.start, other.end))


@dataclass
class Sentence:
    tokens: list[Token]
    mentions: list[Mention] = field(default_factory=list)

    def __len__(self):
        return len(self.tokens)

    @property
    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def validate(self, where: str = "sentence") -> "Sentence":
        n = len(self.tokens)
        if n == 0:
            raise CorpusError(f"{where}: empty sentence")
        seen = set()
        for m in self.mentions:
            if not (0 <= m.start <= m.end < n):
                raise CorpusError(f"{where}: mention {m.start}..{m.end} out of range for {n} tokens")
            if m.label == NIL:
                raise CorpusError(f"{where}: mention label may not be {NIL}")
            if m in seen:
                raise CorpusError(f"{where}: duplicate mention {m}")
            seen.add(m)
        return self

    def to_json(self) -> dict:
        return {
            "tokens": [t.surface for t in self.tokens],
            "pos": [t.pos for t in self.tokens],
            "mentions": [{"start": m.start, "end": m.end, "type": m.label} for m in self.mentions],
        }

    @classmethod
    def from_json(cls, obj: dict, where: str = "sentence") -> "Sentence":
        try:
            tokens, pos = obj["tokens"], obj["pos"]
            raw_mentions = obj.get("mentions", [])
        except (KeyError, TypeError) as e:
            raise CorpusError(f"{where}: missing field {e}") from None
        if len(tokens) != len(pos):
            raise CorpusError(f"{where}: {len(tokens)} tokens but {len(pos)} POS tags")
        try:
            mentions = [Mention(int(m["start"]), int(m["end"]), str(m["type"])) for m in raw_mentions]
            toks = [Token(str(w), str(p)) for w, p in zip(tokens, pos)]
        except (KeyError, TypeError, ValueError) as e:
            raise CorpusError(f"{where}: bad mention or token ({e})") from None
        return cls(toks, mentions).validate(where)


def load_corpus(path) -> list[Sentence]:
    """Read a JSONL corpus, one sentence per line; blank lines are skipped."""
    sentences = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({e.msg})") from None
            sentences.append(Sentence.from_json(obj, where=f"{path}:{lineno}"))
    return sentences


def dumps_sentence(s: Sentence) -> str:
    return json.dumps(s.to_json(), ensure_ascii=False)


def save_corpus(sentences: Iterable[Sentence], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(dumps_sentence(s) + "\n")


# -- bags -------------------------------------------------------------------


@dataclass(frozen=True)
class Bag:
    """Tokens sharing one innermost mention (or a single uncovered token)."""

    members: tuple[int, ...]
    label: str
    source: Optional[Mention] = None

    @property
    def is_nil(self) -> bool:
        return self.label == NIL


def innermost_key(m: Mention):
    """Ordering used to pick a token's innermost mention: shortest, leftmost, smallest label."""
    return (len(m), m.start, m.label)


def innermost_mention(s: Sentence, t: int) -> Optional[Mention]:
    covering = [m for m in s.mentions if m.covers(t)]
    return min(covering, key=innermost_key) if covering else None


def build_bags(s: Sentence) -> list[Bag]:
    """Partition token indices into innermost-mention bags plus singleton NIL bags.

    Bags are returned ordered by their first member.
    """
    groups: dict[Mention, list[int]] = {}
    bags = []
    for t in range(len(s)):
        m = innermost_mention(s, t)
        if m is None:
            bags.append(Bag((t,), NIL))
        else:
            groups.setdefault(m, []).append(t)
    bags.extend(Bag(tuple(ts), m.label, m) for m, ts in groups.items())
    bags.sort(key=lambda b: b.members[0])
    return bags


# -- vocabulary ---------------------------------------------------------------


class Vocab:
    """Dense id maps for words, POS tags, characters and labels.

    Id 0 of every symbol map is UNK. Label id 0 is NIL, entity types follow
    in sorted order.
    """

    def __init__(self, words: Sequence[str], pos: Sequence[str], chars: Sequence[str], types: Sequence[str]):
        self.words = [UNK] + sorted(set(words) - {UNK})
        self.pos = [UNK] + sorted(set(pos) - {UNK})
        self.chars = [UNK] + sorted(set(chars) - {UNK})
        self.labels = [NIL] + sorted(set(types) - {NIL})
        self.word_id = {w: i for i, w in enumerate(self.words)}
        self.pos_id = {p: i for i, p in enumerate(self.pos)}
        self.char_id = {c: i for i, c in enumerate(self.chars)}
        self.label_id = {c: i for i, c in enumerate(self.labels)}

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def nil_id(self) -> int:
        return 0

    @property
    def entity_types(self) -> list[str]:
        return self.labels[1:]

    def word(self, w: str) -> int:
        return self.word_id.get(w, 0)

    def tag(self, p: str) -> int:
        return self.pos_id.get(p, 0)

    def char(self, c: str) -> int:
        return self.char_id.get(c, 0)

    def to_json(self) -> dict:
        return {"words": self.words, "pos": self.pos, "chars": self.chars, "labels": self.labels}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocab":
        return cls(obj["words"], obj["pos"], obj["chars"], obj["labels"])

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.to_json() == other.to_json()


def build_vocab(corpus: Iterable[Sentence]) -> Vocab:
    words, pos, chars, types = set(), set(), set(), set()
    for s in corpus:
        for t in s.tokens:
            words.add(t.surface)
            pos.add(t.pos)
            chars.update(t.chars)
        types.update(m.label for m in s.mentions)
    return Vocab(words, pos, chars, types)


def load_embeddings(path, vocab: Vocab, table: np.ndarray) -> int:
    """Overwrite rows of ``table`` from a ``word v1 ... vD`` text file; returns rows hit.

    Lines with the wrong width are skipped; words missing from the file keep
    their random initialisation.
    """
    dim = table.shape[1]
    hits = 0
    with open(Path(path), encoding="utf-8", errors="replace") as f:
        for line in f:
            parts = line.rstrip().split(" ")
            if len(parts) != dim + 1:
                continue
            idx = vocab.word_id.get(parts[0])
            if idx is None or idx == 0:
                continue
            try:
                table[idx] = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                continue
            hits += 1
    log.info("loaded %d/%d pretrained word vectors", hits, len(vocab.words) - 1)
    return hits


def nested_fraction(corpus: Iterable[Sentence]) -> float:
    """Fraction of mentions lying inside another mention of the same sentence."""
    total = nested = 0
    for s in corpus:
        for m in s.mentions:
            total += 1
            if any(o.contains(m) for o in s.mentions):
                nested += 1
    return nested / total if total else 0.0
