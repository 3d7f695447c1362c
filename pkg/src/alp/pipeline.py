"""End-to-end learning pipeline: parse, enumerate, prune, compile, search.

This is the library entry point behind ``alp learn``; each stage is timed
and the result carries everything the run report needs.  The final
objective is audited against an independent recomputation of the
reconstruction loss through the evaluator; a mismatch is a bug, not a
model property, and raises.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .candidates import (
    CandidateClause,
    GenerationConfig,
    generate_decoder_candidates,
    generate_encoder_candidates,
)
from .errors import AlpError
from .kb import KnowledgeBase, ModeDeclaration, Predicate
from .logic import Alp, loss_parts, encode
from .model import CopModel, build_model, induced_alp
from .pruning import (
    PruneReport,
    build_report,
    prune_corrupt,
    prune_naming_variants,
    prune_signature_variants,
)
from .solver import SearchConfig, Solution, lns_minimize, ProgressFn


@dataclass
class LearnResult:
    alp: Alp
    latent: frozenset
    solution: Solution
    model: CopModel
    prune_report: PruneReport
    encoders: tuple[CandidateClause, ...]
    decoders: tuple[CandidateClause, ...]
    counts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    loss: dict = field(default_factory=dict)
    improvements: list = field(default_factory=list)


def prepare_pool(
    kb: KnowledgeBase,
    modes: dict[Predicate, ModeDeclaration],
    config: GenerationConfig,
) -> tuple[list[CandidateClause], list[CandidateClause], PruneReport, dict]:
    """Generate and prune the candidate pool.

    Naming-variant pruning runs before decoder generation, so decoders are
    built only over surviving latents; signature and corruption pruning
    follow.
    """
    encoders = generate_encoder_candidates(kb, modes, config)
    enc_survivors = prune_naming_variants(encoders)
    decoders = generate_decoder_candidates(enc_survivors, kb, config)
    dec_sig = prune_signature_variants(decoders)
    dec_survivors = prune_corrupt(dec_sig, kb)
    report = build_report(
        len(encoders), len(decoders), enc_survivors, len(dec_sig), dec_survivors
    )
    counts = {
        "encoders_generated": len(encoders),
        "encoders_pruned": len(enc_survivors),
        "decoders_generated": len(decoders),
        "decoders_pruned": len(dec_survivors),
    }
    return enc_survivors, dec_survivors, report, counts


def learn(
    kb: KnowledgeBase,
    modes: dict[Predicate, ModeDeclaration],
    gen_config: GenerationConfig,
    search_config: SearchConfig,
    gamma: Fraction,
    progress: ProgressFn | None = None,
) -> LearnResult:
    timings = {}
    t0 = time.monotonic()

    t = time.monotonic()
    encoders, decoders, prune_report, counts = prepare_pool(kb, modes, gen_config)
    timings["enumerate_and_prune"] = time.monotonic() - t

    t = time.monotonic()
    model = build_model(encoders, decoders, kb, gamma)
    timings["build_model"] = time.monotonic() - t

    improvements: list[tuple[int, int, float, int, int]] = []

    def record(iteration, objective, elapsed_ms, n_ec, n_dc):
        improvements.append((iteration, objective, elapsed_ms, n_ec, n_dc))
        if progress is not None:
            progress(iteration, objective, elapsed_ms, n_ec, n_dc)

    t = time.monotonic()
    solution = lns_minimize(model, search_config, progress=record)
    timings["solve"] = time.monotonic() - t

    alp = induced_alp(model, solution.assignment)
    latent = encode(alp, kb)
    missing, false = loss_parts(alp, kb)
    recomputed = missing + false
    if recomputed != solution.objective:
        raise AlpError(
            f"objective {solution.objective} disagrees with recomputed "
            f"reconstruction loss {recomputed}"
        )
    timings["total"] = time.monotonic() - t0
    return LearnResult(
        alp=alp,
        latent=latent,
        solution=solution,
        model=model,
        prune_report=prune_report,
        encoders=tuple(encoders),
        decoders=tuple(decoders),
        counts=counts,
        timings=timings,
        loss={"objective": solution.objective, "missing": missing, "false": false},
        improvements=improvements,
    )


def run_report(
    result: LearnResult,
    gen_config: GenerationConfig,
    search_config: SearchConfig,
    gamma: Fraction,
) -> dict:
    """The JSON-ready run report; timing fields are not deterministic."""
    return {
        "schema": 1,
        "config": {
            "gamma": str(gamma),
            "max_encoder_body_len": gen_config.max_encoder_body_len,
            "max_decoder_body_len": gen_config.max_decoder_body_len,
            "max_head_vars": gen_config.max_head_vars,
            "allow_disjunction": gen_config.allow_disjunction,
            "allow_negation": gen_config.allow_negation,
            "alpha": search_config.alpha,
            "beta": search_config.beta,
            "iterations": search_config.iterations,
            "fail_limit": search_config.fail_limit,
            "time_limit": search_config.time_limit,
            "seed": search_config.seed,
        },
        "candidates": result.counts,
        "pruning": result.prune_report.counters(),
        "model": result.model.size_summary(),
        "warnings": list(result.model.warnings),
        "solver": {
            "objective": result.solution.objective,
            "iteration_found": result.solution.iteration_found,
            "proven_optimal": result.solution.proven_optimal,
            "improving_iterations": len(result.improvements),
            "selected_encoders": len(result.alp.encoder.clauses),
            "selected_decoders": len(result.alp.decoder.clauses),
        },
        "loss": result.loss,
        "timings": result.timings,
    }
