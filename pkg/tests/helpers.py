"""Shared test fixtures: tiny constructors, random instances, brute-force
oracles kept deliberately independent of the library's evaluation path."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import product

from alp.candidates import GenerationConfig
from alp.kb import Constant, Fact, KnowledgeBase, Predicate
from alp.logic import (
    CONJUNCTION,
    DISJUNCTION,
    Clause,
    Literal,
    Variable,
)
from alp.model import assignment_from_dc, check_assignment
from alp.pipeline import prepare_pool


def pred(name, arity, origin="input"):
    return Predicate(name, arity, origin)


def const(s):
    return Constant(s)


def var(s):
    return Variable(s)


def fact(p, *args):
    return Fact(p, tuple(Constant(a) for a in args))


def lit(p, *args, negated=False):
    terms = tuple(Variable(a) if a[0].isupper() else Constant(a) for a in args)
    return Literal(p, terms, negated)


def kb_of(*facts, background=(), extra_predicates=(), extra_constants=()):
    return KnowledgeBase.from_facts(
        facts,
        background=background,
        extra_predicates=extra_predicates,
        extra_constants=extra_constants,
    )


def brute_force_consequences(clause: Clause, facts) -> frozenset[Fact]:
    """Try every substitution of body variables to constants in the facts.

    Independent of the join evaluator: used as the ground-truth oracle.
    """
    facts = set(facts)
    constants = sorted(
        {a for f in facts for a in f.args}, key=lambda c: c.symbol
    )
    variables = []
    for l in clause.body:
        for v in l.variables():
            if v not in variables:
                variables.append(v)
    out = set()
    for values in product(constants, repeat=len(variables)):
        subst = dict(zip(variables, values))

        def ground(literal):
            args = tuple(
                subst[a] if isinstance(a, Variable) else a for a in literal.args
            )
            return Fact(literal.predicate, args)

        if clause.body_connective == DISJUNCTION:
            ok = any(ground(l) in facts for l in clause.body)
        else:
            ok = all(
                (ground(l) not in facts) if l.negated else (ground(l) in facts)
                for l in clause.body
            )
        if ok:
            out.add(ground(clause.head))
    return frozenset(out)


def random_kb(
    rng: random.Random,
    max_constants=6,
    max_predicates=4,
    max_arity=2,
    max_facts=10,
) -> KnowledgeBase:
    constants = [Constant(f"c{i}") for i in range(rng.randint(2, max_constants))]
    predicates = [
        Predicate(f"p{i}", rng.randint(1, max_arity))
        for i in range(rng.randint(2, max_predicates))
    ]
    facts = set()
    for _ in range(rng.randint(2, max_facts)):
        p = rng.choice(predicates)
        facts.add(Fact(p, tuple(rng.choice(constants) for _ in range(p.arity))))
    return KnowledgeBase.from_facts(
        facts, extra_predicates=predicates, extra_constants=constants
    )


def random_clause(rng: random.Random, kb: KnowledgeBase) -> Clause:
    """A random range-restricted conjunctive clause over the KB vocabulary."""
    preds = sorted(kb.vocabulary, key=lambda p: (p.name, p.arity))
    preds = [p for p in preds if p.arity >= 1]
    body = []
    names = ["X", "Y", "Z", "W"]
    n_vars = rng.randint(1, 3)
    variables = [Variable(names[i]) for i in range(n_vars)]
    for _ in range(rng.randint(1, 3)):
        p = rng.choice(preds)
        body.append(
            Literal(p, tuple(rng.choice(variables) for _ in range(p.arity)))
        )
    body_vars = []
    for l in body:
        for v in l.variables():
            if v not in body_vars:
                body_vars.append(v)
    k = rng.randint(1, len(body_vars))
    head_args = tuple(body_vars[:k])
    head = Literal(Predicate("latent_1", k, "latent"), head_args)
    return Clause(head, tuple(body), CONJUNCTION)


def default_config(**overrides) -> GenerationConfig:
    base = dict(
        max_encoder_body_len=2,
        max_decoder_body_len=1,
        max_head_vars=2,
    )
    base.update(overrides)
    return GenerationConfig(**base)


def pipeline_pool(kb, config=None):
    return prepare_pool(kb, {}, config or default_config())


def brute_force_objective(model) -> int | None:
    """Minimum COP objective over every feasible decoder subset."""
    n = len(model.dc_candidates)
    best = None
    for mask in range(2**n):
        selected = {j for j in range(n) if mask >> j & 1}
        assignment = assignment_from_dc(model, selected)
        if check_assignment(model, assignment):
            continue
        from alp.model import objective_value

        obj = objective_value(model, assignment)
        if best is None or obj < best:
            best = obj
    return best


def brute_force_loss_optimum(model, kb) -> int | None:
    """Minimum reconstruction loss over every feasible decoder subset,
    re-scored through the logic evaluator (Eq.-independent of the model)."""
    from alp.logic import reconstruction_loss
    from alp.model import induced_alp

    n = len(model.dc_candidates)
    best = None
    for mask in range(2**n):
        selected = {j for j in range(n) if mask >> j & 1}
        assignment = assignment_from_dc(model, selected)
        if check_assignment(model, assignment):
            continue
        loss = reconstruction_loss(induced_alp(model, assignment), kb)
        if best is None or loss < best:
            best = loss
    return best


FIG1_TEXT = """\
father(vader,luke).
father(vader,leia).
mother(padme,luke).
mother(padme,leia).
married(vader,padme).
saber(vader,red).
saber(luke,green).
jedi(luke).
jedi(leia).
"""


def fig1_kb() -> KnowledgeBase:
    """Nine facts over five predicates, so avg facts per predicate is 9/5."""
    from alp.kb import parse_kb

    return parse_kb(FIG1_TEXT)


def synthesize_lossless_instance(rng: random.Random):
    """A KB generated by a hidden ALP, bottleneck-feasible at gamma = 0.7.

    Shape: a few copy groups (predicates sharing one tuple set, compressible
    into a single latent via the disjunctive or single-body encoder) plus a
    light unary predicate; the truth selection's average latent weight is
    verified against 0.7 * G before the instance is accepted.
    """
    while True:
        constants = [Constant(f"e{i}") for i in range(rng.randint(4, 7))]
        group_size = rng.randint(4, 5)
        n_tuples = rng.randint(4, 8)
        tuples = set()
        while len(tuples) < n_tuples:
            tuples.add((rng.choice(constants), rng.choice(constants)))
        group = [Predicate(f"r{i}", 2) for i in range(group_size)]
        light = Predicate("u", 1)
        light_facts = {Fact(light, (rng.choice(constants),))}
        facts = {Fact(p, t) for p in group for t in tuples} | light_facts
        kb = KnowledgeBase.from_facts(facts)
        g = Fraction(len(facts), group_size + 1)
        truth_weights = [n_tuples, len(light_facts)]
        avg = Fraction(sum(truth_weights), len(truth_weights))
        if avg <= Fraction(7, 10) * g:
            return kb
