"""Corpus and query loading, text normalization, and synthetic corpus generation.

Supported input layouts:

* ``hotpot_json`` / ``wiki2_json``: a JSON array of records, each carrying a
  question, a ``context`` list of ``[title, [sentence, ...]]`` pairs, and
  ``supporting_facts`` as ``[title, sentence_index]`` pairs.  Every
  (record, context title) pair becomes one passage.
* ``generic_jsonl``: one JSON object per line; passage lines carry
  ``{"id", "title", "text"}`` and query lines carry
  ``{"id", "question", "gold_ids"}``.
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

_WS_RUN = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    """Collapse whitespace runs to single spaces and strip the ends.

    Case is preserved: the capitalization heuristic downstream depends on it.
    Idempotent by construction.
    """
    return _WS_RUN.sub(" ", text).strip()


@dataclass(frozen=True)
class Passage:
    id: str
    title: str
    text: str


@dataclass(frozen=True)
class Query:
    id: str
    question: str
    gold_ids: frozenset[str]


@dataclass
class Corpus:
    passages: list[Passage]
    index_of: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index_of = {p.id: i for i, p in enumerate(self.passages)}
        if len(self.index_of) != len(self.passages):
            raise ValueError("duplicate passage ids in corpus")

    def __len__(self) -> int:
        return len(self.passages)

    @property
    def passage_ids(self) -> list[str]:
        return [p.id for p in self.passages]


class CorpusFormatError(ValueError):
    """Raised when an input file does not match its declared format."""


def _validate_queries(corpus: Corpus, queries: list[Query]) -> None:
    for q in queries:
        missing = [g for g in q.gold_ids if g not in corpus.index_of]
        if missing:
            raise CorpusFormatError(
                f"query {q.id!r}: gold ids not in corpus: {missing[:5]}"
            )


def _load_hotpot_style(path: str) -> tuple[Corpus, list[Query]]:
    with open(path, encoding="utf-8") as f:
        records = json.load(f)
    if not isinstance(records, list):
        raise CorpusFormatError(f"{path}: expected a top-level JSON array")

    passages: list[Passage] = []
    seen: dict[tuple[str, str], str] = {}  # (title, text) -> first passage id
    queries: list[Query] = []
    missing_support = 0

    for idx, rec in enumerate(records):
        try:
            rec_id = str(rec["_id"] if "_id" in rec else rec["id"])
            question = normalize_text(str(rec["question"]))
            context = rec["context"]
            support = rec.get("supporting_facts", [])
        except (KeyError, TypeError) as exc:
            raise CorpusFormatError(f"{path}: malformed record #{idx}: {exc}") from exc

        local: dict[str, str] = {}  # context title -> deduped passage id
        for pair in context:
            try:
                title, sentences = pair[0], pair[1]
                text = normalize_text(" ".join(str(s) for s in sentences))
            except (IndexError, TypeError) as exc:
                raise CorpusFormatError(
                    f"{path}: malformed context in record #{idx} ({rec_id}): {exc}"
                ) from exc
            if not text:
                continue
            key = (title, text)
            if key not in seen:
                pid = f"{rec_id}::{title}"
                seen[key] = pid
                passages.append(Passage(id=pid, title=title, text=text))
            # first-wins dedup; later records with identical (title, text)
            # resolve their gold ids to the original passage
            local.setdefault(title, seen[key])

        gold: set[str] = set()
        for sf in support:
            title = sf[0]
            if title in local:
                gold.add(local[title])
            else:
                missing_support += 1
        queries.append(Query(id=rec_id, question=question, gold_ids=frozenset(gold)))

    if missing_support:
        logger.warning(
            "%s: %d supporting-fact titles absent from their record context (skipped)",
            path,
            missing_support,
        )
    corpus = Corpus(passages=passages)
    _validate_queries(corpus, queries)
    return corpus, queries


def _load_generic_jsonl(path: str) -> tuple[Corpus, list[Query]]:
    passages: list[Passage] = []
    queries: list[Query] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if "text" in obj:
                try:
                    passages.append(
                        Passage(
                            id=str(obj["id"]),
                            title=str(obj.get("title", "")),
                            text=normalize_text(str(obj["text"])),
                        )
                    )
                except KeyError as exc:
                    raise CorpusFormatError(
                        f"{path}:{lineno}: passage line missing {exc}"
                    ) from exc
            elif "question" in obj:
                try:
                    queries.append(
                        Query(
                            id=str(obj["id"]),
                            question=normalize_text(str(obj["question"])),
                            gold_ids=frozenset(str(g) for g in obj.get("gold_ids", [])),
                        )
                    )
                except KeyError as exc:
                    raise CorpusFormatError(
                        f"{path}:{lineno}: query line missing {exc}"
                    ) from exc
            else:
                raise CorpusFormatError(
                    f"{path}:{lineno}: object is neither a passage nor a query"
                )
    corpus = Corpus(passages=passages)
    _validate_queries(corpus, queries)
    return corpus, queries


def load_corpus(path: str, format: str) -> tuple[Corpus, list[Query]]:
    """Load a corpus and its query set from ``path`` in the declared format."""
    if format in ("hotpot_json", "wiki2_json"):
        return _load_hotpot_style(path)
    if format == "generic_jsonl":
        return _load_generic_jsonl(path)
    raise ValueError(f"unknown corpus format: {format!r}")


def save_generic_jsonl(path: str, corpus: Corpus, queries: list[Query]) -> None:
    """Write a corpus and queries back out in the generic_jsonl layout."""
    with open(path, "w", encoding="utf-8") as f:
        for p in corpus.passages:
            f.write(json.dumps({"id": p.id, "title": p.title, "text": p.text}) + "\n")
        for q in queries:
            f.write(
                json.dumps(
                    {"id": q.id, "question": q.question, "gold_ids": sorted(q.gold_ids)}
                )
                + "\n"
            )


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------

_CONSONANTS = "bcdfghklmnprstvz"
_VOWELS = "aeiou"


def _make_name(rng: random.Random) -> str:
    """One capitalized pseudo-word, e.g. 'Badupo'."""
    n_syll = rng.randint(2, 3)
    word = "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(n_syll))
    return word.capitalize()


def _entity_names(rng: random.Random, count: int) -> list[str]:
    """Distinct capitalized two-token names the regex extractor will find."""
    names: list[str] = []
    used: set[str] = set()
    while len(names) < count:
        name = f"{_make_name(rng)} {_make_name(rng)}"
        if name not in used:
            used.add(name)
            names.append(name)
    return names


# filler vocabulary is disjoint from the question template words so lexical
# search cannot reach chain documents through shared function words
_FILLER_WORDS = (
    "valley river stone bridge market harbor tower garden meadow forest "
    "castle village lantern archive chapel quarry mill granary cellar attic"
).split()

_QUESTION_TEMPLATE = "what lies two steps beyond {anchor} in its sequence"


def generate_synthetic(
    n_docs: int, n_entities: int, hops: int, rng_seed: int
) -> tuple[Corpus, list[Query]]:
    """Deterministic corpus with planted multi-hop entity chains.

    Each query plants a chain e0 -> d1 -> e1 -> d2 -> ... of ``hops``
    documents; consecutive chain documents share a bridging entity, the
    question mentions only the anchor entity e0, and gold_ids are the chain
    documents.  Entities left over after the chains are consumed become
    background mentions with a skewed (hub-heavy) frequency profile.
    """
    if n_docs < 2 * hops:
        raise ValueError(f"n_docs={n_docs} must be >= 2*hops={2 * hops}")
    if n_entities < hops + 1:
        raise ValueError(f"n_entities={n_entities} must be >= hops+1={hops + 1}")

    rng = random.Random(rng_seed)
    names = _entity_names(rng, n_entities)

    n_queries = min(n_docs // (2 * hops), n_entities // (hops + 1))
    chain_names = names[: n_queries * (hops + 1)]
    filler_names = names[n_queries * (hops + 1):]

    def filler_entity() -> str:
        # Zipf-ish draw: low indices get picked far more often, creating hubs
        u = rng.random()
        idx = int(len(filler_names) ** u) - 1
        return filler_names[max(0, min(idx, len(filler_names) - 1))]

    def filler_sentence() -> str:
        return " ".join(rng.choice(_FILLER_WORDS) for _ in range(rng.randint(4, 8)))

    doc_texts: list[list[str]] = [[] for _ in range(n_docs)]
    queries: list[Query] = []

    for qi in range(n_queries):
        chain = chain_names[qi * (hops + 1): (qi + 1) * (hops + 1)]
        docs = list(range(qi * hops, (qi + 1) * hops))
        for step, d in enumerate(docs):
            # document d carries chain entities [step] and [step+1]
            doc_texts[d].append(
                f"{filler_sentence()} {chain[step]} met {chain[step + 1]} {filler_sentence()}"
            )
        queries.append(
            Query(
                id=f"q{qi:05d}",
                question=_QUESTION_TEMPLATE.format(anchor=chain[0]),
                gold_ids=frozenset(f"d{d:05d}" for d in docs),
            )
        )

    passages: list[Passage] = []
    for d in range(n_docs):
        parts = doc_texts[d] or [filler_sentence()]
        if filler_names:
            for _ in range(rng.randint(1, 3)):
                parts.append(f"{filler_sentence()} {filler_entity()}")
        text = normalize_text(" ".join(parts))
        passages.append(Passage(id=f"d{d:05d}", title=f"Doc {d}", text=text))

    return Corpus(passages=passages), queries
