"""Candidate pool reduction: naming variants, signature variants, corruption.

All three strategies key on the precomputed consequence sets, so they cost
set operations only.  Representatives are canonical (lowest latent ordinal,
or lexicographically least serialization) to keep runs reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .candidates import CandidateClause, latent_ordinal
from .kb import KnowledgeBase


@dataclass(frozen=True)
class PruneReport:
    """Counts reconcile exactly: input = removed + survivors."""

    input_count: int
    removed_naming: int
    removed_signature: int
    removed_corruption: int
    survivors: tuple[CandidateClause, ...]

    def __post_init__(self):
        total = (
            self.removed_naming
            + self.removed_signature
            + self.removed_corruption
            + len(self.survivors)
        )
        if total != self.input_count:
            raise ValueError(
                f"prune counts do not reconcile: {total} != {self.input_count}"
            )

    def counters(self) -> dict:
        return {
            "input_count": self.input_count,
            "removed_naming": self.removed_naming,
            "removed_signature": self.removed_signature,
            "removed_corruption": self.removed_corruption,
            "survivors": len(self.survivors),
        }


def prune_naming_variants(
    encoders: list[CandidateClause],
) -> list[CandidateClause]:
    """Keep one encoder per class of identical consequences modulo the
    latent predicate name; the survivor is the lowest latent ordinal."""
    groups: dict[frozenset, CandidateClause] = {}
    for cand in sorted(
        encoders, key=lambda c: latent_ordinal(c.clause.head.predicate)
    ):
        key = frozenset(f.args for f in cand.consequences)
        groups.setdefault(key, cand)
    return sorted(
        groups.values(), key=lambda c: latent_ordinal(c.clause.head.predicate)
    )


def prune_signature_variants(
    decoders: list[CandidateClause],
) -> list[CandidateClause]:
    """Keep one decoder per (head predicate, consequence set, body predicate
    set) group; the survivor is the lexicographically least serialization."""
    groups: dict[tuple, CandidateClause] = {}
    for cand in sorted(decoders, key=lambda c: c.key()):
        key = (
            cand.clause.head.predicate,
            cand.consequences,
            frozenset(l.predicate for l in cand.clause.body),
        )
        groups.setdefault(key, cand)
    return sorted(groups.values(), key=lambda c: c.key())


def corruption_level(decoder: CandidateClause, kb: KnowledgeBase) -> Fraction:
    """Fraction of the decoder's reconstructions that are not KB facts."""
    false = len(decoder.consequences - kb.facts)
    return Fraction(false, len(decoder.consequences))


def prune_corrupt(
    decoders: list[CandidateClause], kb: KnowledgeBase
) -> list[CandidateClause]:
    """Drop decoders introducing at least as many false as true facts."""
    return [
        c for c in decoders if corruption_level(c, kb) < Fraction(1, 2)
    ]


def build_report(
    encoders_in: int,
    decoders_in: int,
    encoders_out: list[CandidateClause],
    decoders_after_signature: int,
    decoders_out: list[CandidateClause],
) -> PruneReport:
    removed_naming = encoders_in - len(encoders_out)
    removed_signature = decoders_in - decoders_after_signature
    removed_corruption = decoders_after_signature - len(decoders_out)
    return PruneReport(
        input_count=encoders_in + decoders_in,
        removed_naming=removed_naming,
        removed_signature=removed_signature,
        removed_corruption=removed_corruption,
        survivors=tuple(encoders_out) + tuple(decoders_out),
    )
