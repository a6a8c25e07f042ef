"""Core data types and tokenization.

Every text metric in this package runs on the same token stream so that
surface-level differences (case, punctuation) never masquerade as semantic
ones.  The tokenizer is deliberately blunt: lowercase, strip everything that
is not a letter, digit, or an apostrophe wedged between two word characters,
split on whitespace.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field


def tokenize(text: str) -> list[str]:
    """Lowercase and split ``text`` into word tokens.

    Characters other than Unicode letters, digits, and apostrophes become
    spaces.  An apostrophe survives only between two alphanumeric characters,
    so contractions hold together ("don't") while quoting does not
    ("'n'" loses both marks).

    Args:
        text: Raw input string.

    Returns:
        List of tokens; empty when the input has no word characters.
    """
    lowered = text.lower()
    out = []
    last = len(lowered) - 1
    for i, ch in enumerate(lowered):
        if ch.isalpha() or ch.isdigit():
            out.append(ch)
        elif (
            ch == "'"
            and 0 < i <= last - 1
            and (lowered[i - 1].isalpha() or lowered[i - 1].isdigit())
            and (lowered[i + 1].isalpha() or lowered[i + 1].isdigit())
        ):
            out.append(ch)
        else:
            out.append(" ")
    return "".join(out).split()


@dataclass(frozen=True)
class Utterance:
    """One text plus its cached token stream."""

    raw: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, text: str) -> "Utterance":
        return cls(raw=text, tokens=tuple(tokenize(text)))

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class NgramMultiset:
    """Multiset of order-``k`` n-grams with integer multiplicities."""

    order: int
    counts: dict[tuple[str, ...], int]

    def total(self) -> int:
        return sum(self.counts.values())


def ngrams(tokens: tuple[str, ...] | list[str], k: int) -> NgramMultiset:
    """Count the contiguous ``k``-grams of a token sequence.

    Args:
        tokens: Token sequence.
        k: N-gram order, at least 1.

    Returns:
        An :class:`NgramMultiset`; empty when ``len(tokens) < k``.
    """
    if k < 1:
        raise ValueError(f"n-gram order must be >= 1, got {k}")
    counts = Counter(tuple(tokens[i : i + k]) for i in range(len(tokens) - k + 1))
    return NgramMultiset(order=k, counts=dict(counts))


@dataclass(frozen=True)
class EvalInstance:
    """One evaluation unit: a candidate set scored against a reference set.

    Candidates are the n system outputs for a single input; references are
    the m ground-truth texts for the same input.  Both sets keep their file
    order.  Metrics impose their own minimum-size requirements at call time;
    construction only requires one of each.
    """

    instance_id: str
    candidates: tuple[Utterance, ...]
    references: tuple[Utterance, ...]

    def __post_init__(self):
        if not self.instance_id:
            raise ValueError("instance id must be a non-empty string")
        if len(self.candidates) < 1:
            raise ValueError(f"instance {self.instance_id!r}: needs >= 1 candidate")
        if len(self.references) < 1:
            raise ValueError(f"instance {self.instance_id!r}: needs >= 1 reference")

    @classmethod
    def from_texts(
        cls, instance_id: str, candidates: list[str], references: list[str]
    ) -> "EvalInstance":
        return cls(
            instance_id=instance_id,
            candidates=tuple(Utterance.from_text(t) for t in candidates),
            references=tuple(Utterance.from_text(t) for t in references),
        )

    @property
    def n(self) -> int:
        return len(self.candidates)

    @property
    def m(self) -> int:
        return len(self.references)

    def joint(self) -> tuple[Utterance, ...]:
        """Candidates followed by references, the canonical joint order."""
        return self.candidates + self.references


@dataclass
class Corpus:
    """Ordered collection of instances with unique ids."""

    instances: list[EvalInstance] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for inst in self.instances:
            if inst.instance_id in seen:
                raise ValueError(f"duplicate instance id {inst.instance_id!r}")
            seen.add(inst.instance_id)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def all_texts(self) -> list[str]:
        """Every candidate and reference text once, in corpus order."""
        out = []
        seen = set()
        for inst in self.instances:
            for utt in inst.joint():
                if utt.raw not in seen:
                    seen.add(utt.raw)
                    out.append(utt.raw)
        return out
