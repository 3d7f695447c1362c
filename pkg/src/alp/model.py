"""Compile a pruned candidate pool into a boolean constraint model.

Decision variables: one ``ec`` per candidate encoder clause, one ``dc`` per
candidate decoder clause, one ``rf`` per ground atom some decoder can
reconstruct.  Constraints:

  (a) bottleneck  -- sum((w_i - gamma*G) * ec_i) <= 0, the integer-scaled
      linearization of "average latent facts per selected latent predicate
      is at most gamma*G";
  (b) coupling    -- ec <-> OR(dc using its latent), for every encoder, so
      encoder selection is fully determined by the decoders (an encoder no
      surviving decoder uses is pinned to 0);
  (c) generality  -- not(c1 and c2) for covers-related pairs within the
      encoder pool and, per head predicate, within the decoder pool;
  (d) coverage    -- OR(dc with head p) per input predicate that still has
      candidate decoders (skipped, with a warning, for predicates that lost
      all of them);
  (e) definition  -- rf <-> OR(dc reconstructing the atom).

The objective counts missing KB atoms (1 - rf) and false reconstructions
(rf); KB facts no candidate can reconstruct are a constant offset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .candidates import CandidateClause, latent_ordinal
from .errors import AlpError, CapacityError, InfeasibleError
from .kb import Fact, KnowledgeBase, Predicate, avg_facts_per_predicate
from .logic import (
    Alp,
    DECODER,
    ENCODER,
    LogicProgram,
)

EC = "ec"
DC = "dc"
RF = "rf"

IFF_OR = "iff_or"
AT_MOST_ONE_OF_PAIR = "at_most_one_of_pair"
AT_LEAST_ONE = "at_least_one"
LINEAR_LE = "linear_le"


class ConstraintViolationError(AlpError):
    """An assignment offered as feasible violates the model's constraints."""


@dataclass(frozen=True, slots=True)
class VarId:
    index: int
    kind: str

    def __str__(self):
        return f"{self.kind}_{self.index}"


@dataclass(frozen=True, slots=True)
class Constraint:
    """One of the four constraint families.

    ``iff_or`` reads vars[0] <-> OR(vars[1:]) (an empty disjunction pins
    vars[0] to 0); ``linear_le`` reads sum(coeffs[i] * vars[i]) <= 0.
    """

    form: str
    vars: tuple[VarId, ...]
    coeffs: tuple[int, ...] = ()

    def __post_init__(self):
        if self.form == LINEAR_LE and len(self.coeffs) != len(self.vars):
            raise ValueError("linear constraint needs one coefficient per var")
        if self.form == AT_MOST_ONE_OF_PAIR and len(self.vars) != 2:
            raise ValueError("pairwise constraint needs exactly two vars")


Assignment = dict[VarId, int]


@dataclass(frozen=True)
class CopModel:
    """Immutable model; safe to share read-only across search workers."""

    ec_candidates: tuple[CandidateClause, ...]
    dc_candidates: tuple[CandidateClause, ...]
    rf_atoms: tuple[Fact, ...]
    rf_in_kb: tuple[bool, ...]
    constraints: tuple[Constraint, ...]
    constant_offset: int
    gamma: Fraction
    avg_facts: Fraction
    warnings: tuple[str, ...] = ()
    # Derived lookups, filled in __post_init__.
    dc_true_counts: tuple[int, ...] = field(init=False, compare=False)
    dc_heads: tuple[Predicate, ...] = field(init=False, compare=False)

    def __post_init__(self):
        in_kb_atoms = {
            a for a, in_kb in zip(self.rf_atoms, self.rf_in_kb) if in_kb
        }
        object.__setattr__(
            self,
            "dc_true_counts",
            tuple(len(c.consequences & in_kb_atoms) for c in self.dc_candidates),
        )
        object.__setattr__(
            self,
            "dc_heads",
            tuple(c.clause.head.predicate for c in self.dc_candidates),
        )

    @property
    def ec_ids(self) -> list[VarId]:
        return [VarId(i, EC) for i in range(len(self.ec_candidates))]

    @property
    def dc_ids(self) -> list[VarId]:
        return [VarId(i, DC) for i in range(len(self.dc_candidates))]

    @property
    def rf_ids(self) -> list[VarId]:
        return [VarId(i, RF) for i in range(len(self.rf_atoms))]

    def all_ids(self) -> list[VarId]:
        return self.ec_ids + self.dc_ids + self.rf_ids

    def size_summary(self) -> dict:
        return {
            "ec": len(self.ec_candidates),
            "dc": len(self.dc_candidates),
            "rf": len(self.rf_atoms),
            "constraints": len(self.constraints),
        }


def _containment_pairs(groups: dict, ceiling: int) -> list[tuple[int, int]]:
    """Within each group, index pairs whose sets are subset-related.

    Candidates sharing one consequence set form a class; the subset relation
    is computed once per pair of distinct sets (usually far fewer than the
    candidates) and expanded to index pairs afterwards.  The expansion can
    be quadratic in the pool, so it is metered against the ceiling.
    """
    pairs = []
    for members in groups.values():
        classes: dict = {}
        for i, aset in members:
            classes.setdefault(aset, []).append(i)
        distinct = sorted(
            classes.items(), key=lambda kv: (len(kv[0]), min(kv[1]))
        )
        related: list[tuple[list[int], list[int]]] = []
        for x in range(len(distinct)):
            a, ai = distinct[x]
            if len(ai) > 1:
                related.append((ai, ai))  # mutual: same consequences
            for y in range(x + 1, len(distinct)):
                b, bi = distinct[y]
                if a <= b:
                    related.append((ai, bi))
        for ai, bi in related:
            if ai is bi:
                new = [(ai[x], ai[y]) for x in range(len(ai)) for y in range(x + 1, len(ai))]
            else:
                new = [(min(i, j), max(i, j)) for i in ai for j in bi]
            pairs.extend(new)
            if len(pairs) > ceiling:
                raise CapacityError(
                    f"generality constraints exceed ceiling {ceiling}; "
                    "tighten --max-dec-len or --max-candidates"
                )
    return sorted(pairs)


def _covers_pairs_encoders(encoders, ceiling: int) -> list[tuple[int, int]]:
    """Index pairs where one encoder's consequences contain the other's,
    compared modulo the latent name (argument tuples)."""
    groups: dict = {}
    for i, c in enumerate(encoders):
        key = c.clause.head.predicate.arity
        groups.setdefault(key, []).append(
            (i, frozenset(f.args for f in c.consequences))
        )
    return _containment_pairs(groups, ceiling)


def _covers_pairs_decoders(decoders, ceiling: int) -> list[tuple[int, int]]:
    """Covers-related decoder pairs, restricted to a shared head predicate.

    Clauses with different heads reconstruct different atoms and are never
    substitutes, and pairing them would clash with the coverage constraint.
    """
    groups: dict = {}
    for i, c in enumerate(decoders):
        groups.setdefault(c.clause.head.predicate, []).append(
            (i, c.consequences)
        )
    return _containment_pairs(groups, ceiling)


def build_model(
    encoders: list[CandidateClause],
    decoders: list[CandidateClause],
    kb: KnowledgeBase,
    gamma: Fraction,
    include_generality: bool = True,
    include_coverage: bool = True,
    max_generality_pairs: int = 500_000,
) -> CopModel:
    """Compile the candidate pool against the training KB.

    ``gamma`` is the compression parameter; the bottleneck bounds the
    average number of latent facts per selected latent predicate by
    gamma * (average facts per input predicate).
    """
    gamma = Fraction(gamma)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    encoders = sorted(encoders, key=lambda c: latent_ordinal(c.clause.head.predicate))
    decoders = sorted(decoders, key=lambda c: c.key())
    if not encoders:
        raise InfeasibleError("no candidate encoder clauses survive generation")

    latent_of = {
        c.clause.head.predicate: i for i, c in enumerate(encoders)
    }
    for d in decoders:
        for lit in d.clause.body:
            if lit.predicate not in latent_of:
                raise ValueError(
                    f"decoder {d.clause} uses latent {lit.predicate} "
                    "with no defining encoder in the pool"
                )

    constraints: list[Constraint] = []
    warnings: list[str] = []

    # (a) bottleneck, scaled to integers over the common denominator.
    g = avg_facts_per_predicate(kb)
    bound = gamma * g
    ec_ids = [VarId(i, EC) for i in range(len(encoders))]
    coeffs = tuple(
        c.weight * bound.denominator - bound.numerator for c in encoders
    )
    constraints.append(Constraint(LINEAR_LE, tuple(ec_ids), coeffs))

    # (b) coupling: every encoder is defined by the decoders using its latent.
    dc_using: dict[int, list[int]] = {i: [] for i in range(len(encoders))}
    for j, d in enumerate(decoders):
        for lit in d.clause.body:
            ei = latent_of[lit.predicate]
            if j not in dc_using[ei]:
                dc_using[ei].append(j)
    for i in range(len(encoders)):
        constraints.append(
            Constraint(
                IFF_OR,
                (VarId(i, EC),) + tuple(VarId(j, DC) for j in dc_using[i]),
            )
        )

    # (c) generality: at most one of a covers-related pair.
    if include_generality:
        for i, j in _covers_pairs_encoders(encoders, max_generality_pairs):
            constraints.append(
                Constraint(AT_MOST_ONE_OF_PAIR, (VarId(i, EC), VarId(j, EC)))
            )
        for i, j in _covers_pairs_decoders(decoders, max_generality_pairs):
            constraints.append(
                Constraint(AT_MOST_ONE_OF_PAIR, (VarId(i, DC), VarId(j, DC)))
            )

    # (d) coverage: at least one decoder per input predicate that has any.
    if include_coverage:
        heads: dict[Predicate, list[int]] = {}
        for j, d in enumerate(decoders):
            heads.setdefault(d.clause.head.predicate, []).append(j)
        kb_predicates = {f.predicate for f in kb.facts}
        for p in sorted(kb.input_predicates, key=lambda p: (p.name, p.arity)):
            if p in heads:
                constraints.append(
                    Constraint(
                        AT_LEAST_ONE, tuple(VarId(j, DC) for j in heads[p])
                    )
                )
            elif p in kb_predicates:
                warnings.append(
                    f"no candidate decoder reconstructs {p}; "
                    "coverage constraint skipped"
                )

    # (e) rf definitions and the objective layout.
    reconstructable: dict[Fact, list[int]] = {}
    for j, d in enumerate(decoders):
        for atom in d.consequences:
            reconstructable.setdefault(atom, []).append(j)
    rf_atoms = sorted(
        reconstructable,
        key=lambda f: (f.predicate.name, f.predicate.arity, tuple(a.symbol for a in f.args)),
    )
    for i, atom in enumerate(rf_atoms):
        constraints.append(
            Constraint(
                IFF_OR,
                (VarId(i, RF),)
                + tuple(VarId(j, DC) for j in sorted(reconstructable[atom])),
            )
        )
    rf_in_kb = tuple(atom in kb.facts for atom in rf_atoms)
    offset = sum(1 for f in kb.facts if f not in reconstructable)

    return CopModel(
        ec_candidates=tuple(encoders),
        dc_candidates=tuple(decoders),
        rf_atoms=tuple(rf_atoms),
        rf_in_kb=rf_in_kb,
        constraints=tuple(constraints),
        constant_offset=offset,
        gamma=gamma,
        avg_facts=g,
        warnings=tuple(warnings),
    )


def check_assignment(model: CopModel, assignment: Assignment) -> list[Constraint]:
    """Every constraint the assignment violates; empty means feasible."""
    violations = []
    for con in model.constraints:
        values = [assignment[v] for v in con.vars]
        if con.form == IFF_OR:
            ok = values[0] == (1 if any(values[1:]) else 0)
        elif con.form == AT_MOST_ONE_OF_PAIR:
            ok = values[0] + values[1] <= 1
        elif con.form == AT_LEAST_ONE:
            ok = any(values)
        else:
            ok = sum(a * v for a, v in zip(con.coeffs, values)) <= 0
        if not ok:
            violations.append(con)
    return violations


def objective_value(model: CopModel, assignment: Assignment) -> int:
    """Missing plus false reconstructions under the assignment.

    Raises ConstraintViolationError for infeasible assignments: this is the
    solver-audit entry point, not a relaxation score.
    """
    violations = check_assignment(model, assignment)
    if violations:
        raise ConstraintViolationError(
            f"{len(violations)} violated constraint(s), first: {violations[0]}"
        )
    total = model.constant_offset
    for i, in_kb in enumerate(model.rf_in_kb):
        value = assignment[VarId(i, RF)]
        if in_kb:
            total += 1 - value
        else:
            total += value
    return total


def assignment_from_dc(model: CopModel, selected: set[int]) -> Assignment:
    """Extend a decoder selection to the full variable set.

    ec and rf values follow their defining disjunctions, which is the unique
    completion satisfying constraints (b) and (e).
    """
    assignment: Assignment = {}
    for j in range(len(model.dc_candidates)):
        assignment[VarId(j, DC)] = 1 if j in selected else 0
    used_latents = {
        lit.predicate
        for j in selected
        for lit in model.dc_candidates[j].clause.body
    }
    for i, c in enumerate(model.ec_candidates):
        assignment[VarId(i, EC)] = 1 if c.clause.head.predicate in used_latents else 0
    reconstructed: set[Fact] = set()
    for j in selected:
        reconstructed.update(model.dc_candidates[j].consequences)
    for i, atom in enumerate(model.rf_atoms):
        assignment[VarId(i, RF)] = 1 if atom in reconstructed else 0
    return assignment


def induced_alp(model: CopModel, assignment: Assignment) -> Alp:
    """The ALP selected by the assignment's ec/dc variables."""
    enc_clauses = tuple(
        c.clause
        for i, c in enumerate(model.ec_candidates)
        if assignment[VarId(i, EC)] == 1
    )
    dec_clauses = tuple(
        c.clause
        for j, c in enumerate(model.dc_candidates)
        if assignment[VarId(j, DC)] == 1
    )
    encoder = LogicProgram(enc_clauses, ENCODER)
    decoder = LogicProgram(dec_clauses, DECODER)
    latents = encoder.head_predicates() | decoder.body_predicates()
    return Alp(encoder, decoder, frozenset(latents))


def loss_consistency(
    model: CopModel,
    assignment: Assignment,
    kb: KnowledgeBase,
) -> bool:
    """True when the COP objective matches the reconstruction loss of the
    induced ALP, recomputed independently through the evaluator."""
    from .logic import reconstruction_loss

    alp = induced_alp(model, assignment)
    return objective_value(model, assignment) == reconstruction_loss(alp, kb)


def dump_model(model: CopModel) -> str:
    """Line-oriented text form for external cross-checks."""
    lines = []
    for i, c in enumerate(model.ec_candidates):
        lines.append(f"var ec_{i} {c.clause}")
    for j, c in enumerate(model.dc_candidates):
        lines.append(f"var dc_{j} {c.clause}")
    for i, atom in enumerate(model.rf_atoms):
        lines.append(f"var rf_{i} {atom}")
    for con in model.constraints:
        if con.form == LINEAR_LE:
            terms = " ".join(
                f"{a:+d}*{v}" for a, v in zip(con.coeffs, con.vars)
            )
            lines.append(f"constraint linear_le {terms} <= 0")
        else:
            lines.append(f"constraint {con.form} {' '.join(map(str, con.vars))}")
    for i, in_kb in enumerate(model.rf_in_kb):
        lines.append(f"objective {'missing' if in_kb else 'false'} rf_{i}")
    lines.append(f"offset {model.constant_offset}")
    return "\n".join(lines) + "\n"
