"""Auto-encoding logic programs: learn encoder/decoder clause pairs that
compress a relational knowledge base into a latent vocabulary and back.
"""

from .kb import (
    Constant,
    Fact,
    KnowledgeBase,
    ModeDeclaration,
    Predicate,
    avg_facts_per_predicate,
    herbrand_base,
    parse_kb,
    parse_kb_document,
    serialize_kb,
)
from .logic import (
    Alp,
    Clause,
    Literal,
    LogicProgram,
    Variable,
    apply_program,
    clause_covers,
    ground_consequences,
    parse_program,
    reconstruction_loss,
    serialize_program,
)
from .candidates import GenerationConfig
from .solver import SearchConfig
from .pipeline import learn

__all__ = [
    "Alp",
    "Clause",
    "Constant",
    "Fact",
    "GenerationConfig",
    "KnowledgeBase",
    "Literal",
    "LogicProgram",
    "ModeDeclaration",
    "Predicate",
    "SearchConfig",
    "Variable",
    "learn",
    "apply_program",
    "avg_facts_per_predicate",
    "clause_covers",
    "ground_consequences",
    "herbrand_base",
    "parse_kb",
    "parse_kb_document",
    "parse_program",
    "reconstruction_loss",
    "serialize_kb",
    "serialize_program",
]
