"""Entity mention extraction, surface normalization, and title-alias resolution.

Extraction is a capitalization heuristic: maximal non-overlapping spans of
1-4 capitalized tokens.  The alias map resolves normalized mentions to
unambiguous corpus-title aliases built by stripping trailing parenthetical
disambiguators, e.g. "Paris (mythology)" contributes the alias
"paris" -> "paris mythology" as long as no other title claims "paris".
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass

from .corpus import Corpus

# 1-4 capitalized tokens: capital letter followed by lowercase letters,
# separated by whitespace
_MENTION = re.compile(r"\b[A-Z][a-z]+(?:\s+[A-Z][a-z]+){0,3}\b")

_TRAILING_PAREN = re.compile(r"\s*\([^)]*\)\s*$")

NORMALIZATION_MODES = ("simple", "lower", "none")


@dataclass(frozen=True)
class EntityMention:
    surface: str
    normalized: str
    passage_ordinal: int
    count: int


def extract_regex(text: str) -> list[str]:
    """Raw capitalized spans in document order (non-overlapping, max 4 tokens)."""
    return [m.group(0) for m in _MENTION.finditer(text)]


def normalize_entity(surface: str, mode: str) -> str:
    """Normalize a mention surface form.

    ``simple`` lowercases and deletes every character that is not a letter,
    digit, or space (separators are removed, not replaced), then collapses
    spaces; ``lower`` lowercases only; ``none`` is the identity.  The result
    may be empty, in which case the caller discards the mention.
    """
    if mode == "none":
        return surface
    lowered = surface.lower()
    if mode == "lower":
        return lowered
    if mode == "simple":
        kept = "".join(c for c in lowered if c.isalnum() or c == " ")
        return " ".join(kept.split())
    raise ValueError(f"unknown normalization mode: {mode!r}")


def mentions_for_passage(
    text: str,
    passage_ordinal: int,
    mode: str = "simple",
    min_entity_len: int = 2,
    alias_map: dict[str, str] | None = None,
) -> list[EntityMention]:
    """Extract, normalize, alias-resolve, and aggregate mentions for one passage.

    Mentions whose normalized form is empty or shorter than
    ``min_entity_len`` characters are dropped.  Output is ordered by first
    occurrence, with per-passage occurrence counts.
    """
    counts: Counter[str] = Counter()
    surfaces: dict[str, str] = {}
    for surface in extract_regex(text):
        norm = normalize_entity(surface, mode)
        if len(norm) < min_entity_len:
            continue
        if alias_map is not None:
            norm = resolve(norm, alias_map)
        counts[norm] += 1
        surfaces.setdefault(norm, surface)
    return [
        EntityMention(surface=surfaces[n], normalized=n, passage_ordinal=passage_ordinal, count=c)
        for n, c in counts.items()
    ]


def strip_parenthetical(title: str) -> str:
    return _TRAILING_PAREN.sub("", title)


def build_alias_map(corpus: Corpus, mode: str = "simple") -> dict[str, str]:
    """Map normalized mentions to unambiguous normalized-title aliases.

    Each title contributes one candidate: normalize(title minus trailing
    parenthetical) -> normalize(title).  An alias survives only when exactly
    one distinct source title produced it; colliding aliases are dropped
    entirely.  Identity entries (alias == canonical) are kept out of the map
    since resolve() behaves identically without them.
    """
    candidates: dict[str, str] = {}
    sources: dict[str, set[str]] = {}
    for p in corpus.passages:
        alias = normalize_entity(strip_parenthetical(p.title), mode) if p.title else ""
        canonical = normalize_entity(p.title, mode) if p.title else ""
        if not alias or not canonical:
            continue
        sources.setdefault(alias, set()).add(p.title)
        candidates[alias] = canonical
    return {
        alias: canonical
        for alias, canonical in candidates.items()
        if len(sources[alias]) == 1 and alias != canonical
    }


def resolve(mention: str, alias_map: dict[str, str]) -> str:
    """Canonical form for a normalized mention; unchanged when unmapped."""
    return alias_map.get(mention, mention)


def load_external_entities(path: str) -> dict[str, list[str]]:
    """Per-passage entity surfaces from a JSONL file of {"id", "entities"} lines.

    Stands in for model-based NER output produced out of process.
    """
    out: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            try:
                out[str(obj["id"])] = [str(e) for e in obj["entities"]]
            except KeyError as exc:
                raise ValueError(f"{path}:{lineno}: missing key {exc}") from exc
    return out


def mentions_from_surfaces(
    surfaces: list[str],
    passage_ordinal: int,
    mode: str = "simple",
    min_entity_len: int = 2,
    alias_map: dict[str, str] | None = None,
) -> list[EntityMention]:
    """Aggregate externally supplied surfaces the same way as regex extraction."""
    counts: Counter[str] = Counter()
    firsts: dict[str, str] = {}
    for surface in surfaces:
        norm = normalize_entity(surface, mode)
        if len(norm) < min_entity_len:
            continue
        if alias_map is not None:
            norm = resolve(norm, alias_map)
        counts[norm] += 1
        firsts.setdefault(norm, surface)
    return [
        EntityMention(surface=firsts[n], normalized=n, passage_ordinal=passage_ordinal, count=c)
        for n, c in counts.items()
    ]
