"""Ranked retrieval results with per-query timing attribution."""

from __future__ import annotations

from dataclasses import dataclass, field, replace


@dataclass
class RankedList:
    """Ordered (passage id, score) pairs, best first.

    ``seed_seconds`` covers the seeding stage (lexical/dense/fusion retrieval
    feeding a graph walk), ``traversal_seconds`` the walk itself; plain
    retrieval methods report everything under ``total_seconds``.
    """

    items: list[tuple[str, float]] = field(default_factory=list)
    seed_seconds: float = 0.0
    traversal_seconds: float = 0.0
    total_seconds: float = 0.0

    def __len__(self) -> int:
        return len(self.items)

    def ids(self) -> list[str]:
        return [pid for pid, _ in self.items]

    def top(self, k: int) -> "RankedList":
        return replace(self, items=self.items[:k])

    def with_timings(
        self, seed: float = 0.0, traversal: float = 0.0, total: float | None = None
    ) -> "RankedList":
        return replace(
            self,
            seed_seconds=seed,
            traversal_seconds=traversal,
            total_seconds=total if total is not None else seed + traversal,
        )
