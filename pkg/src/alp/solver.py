"""Objective minimization: LNS around a complete branch-and-bound subsolver.

The subsolver branches over ec/dc variables only; rf variables follow from
their defining disjunctions by unit propagation.  Nodes are pruned against
the incumbent using the decided rf penalties plus the constant offset, which
never overestimates any completion.  Variable order is static by descending
constraint degree, overridden by the variable that most recently caused a
failure (last conflict); the incumbent's value is tried first.

Each LNS iteration freezes a share of the incumbent's structure: alpha % of
the active decoder variables stay 1 and beta % of the inactive encoder
variables stay 0; everything else is searched exactly under a fail limit.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .errors import InfeasibleError
from .model import (
    AT_LEAST_ONE,
    AT_MOST_ONE_OF_PAIR,
    Assignment,
    CopModel,
    DC,
    EC,
    IFF_OR,
    LINEAR_LE,
    VarId,
    assignment_from_dc,
    check_assignment,
    objective_value,
)

UNASSIGNED = -1

_STAGNATION_WINDOW = 25


@dataclass(frozen=True)
class SearchConfig:
    """alpha/beta are percentages in [0, 100]; the seed fixes the structure
    sampling stream, so (model, config) fully determines the result."""

    alpha: float = 70.0
    beta: float = 90.0
    iterations: int = 500
    fail_limit: int = 10_000
    time_limit: float = 600.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.alpha <= 100 or not 0 <= self.beta <= 100:
            raise ValueError("alpha and beta must lie in [0, 100]")
        if self.iterations < 1 or self.fail_limit < 1:
            raise ValueError("iterations and fail_limit must be >= 1")


@dataclass(frozen=True)
class Solution:
    assignment: Assignment
    objective: int
    iteration_found: int
    proven_optimal: bool


@dataclass(frozen=True)
class ExactResult:
    """complete=True means the subproblem was searched exhaustively; a None
    best then means no completion beats the given bound (or none exists)."""

    best: Assignment | None
    objective: int | None
    complete: bool
    failures: int


class _Searcher:
    """Reusable propagation context for one model."""

    def __init__(self, model: CopModel):
        self.model = model
        self.vars: list[VarId] = model.all_ids()
        self.pos: dict[VarId, int] = {v: i for i, v in enumerate(self.vars)}
        n = len(self.vars)
        self.occurrences: list[list[int]] = [[] for _ in range(n)]
        for ci, con in enumerate(model.constraints):
            for v in con.vars:
                self.occurrences[self.pos[v]].append(ci)
        # rf penalty bookkeeping: penalty_value[p] is the objective
        # contribution of rf position p when assigned that value.
        self.rf_offset = len(model.ec_candidates) + len(model.dc_candidates)
        self.rf_in_kb = model.rf_in_kb
        branchable = [
            i
            for i, v in enumerate(self.vars)
            if v.kind in (EC, DC)
        ]
        branchable.sort(key=lambda i: (-len(self.occurrences[i]), i))
        self.static_order = branchable

    def _penalty(self, p: int, value: int) -> int:
        i = p - self.rf_offset
        if i < 0:
            return 0
        if self.rf_in_kb[i]:
            return 1 - value
        return value

    def solve(
        self,
        fixed: Assignment,
        fail_limit: int,
        incumbent_bound: float,
        incumbent: Assignment | None = None,
    ) -> ExactResult:
        model = self.model
        n = len(self.vars)
        values = [UNASSIGNED] * n
        trail: list[int] = []
        lb = model.constant_offset  # decided objective terms so far
        conflict = False

        def assign(p: int, v: int) -> bool:
            """Returns True on conflict."""
            nonlocal lb
            cur = values[p]
            if cur != UNASSIGNED:
                return cur != v
            values[p] = v
            trail.append(p)
            lb += self._penalty(p, v)
            queue.extend(self.occurrences[p])
            return False

        def propagate() -> bool:
            while queue:
                con = model.constraints[queue.pop()]
                form = con.form
                if form == IFF_OR:
                    head = self.pos[con.vars[0]]
                    vh = values[head]
                    any_one = False
                    unknown = []
                    for v in con.vars[1:]:
                        p = self.pos[v]
                        val = values[p]
                        if val == 1:
                            any_one = True
                        elif val == UNASSIGNED:
                            unknown.append(p)
                    if any_one:
                        if assign(head, 1):
                            return True
                    elif not unknown:
                        if assign(head, 0):
                            return True
                    elif vh == 0:
                        for p in unknown:
                            if assign(p, 0):
                                return True
                    elif vh == 1 and len(unknown) == 1:
                        if assign(unknown[0], 1):
                            return True
                elif form == AT_MOST_ONE_OF_PAIR:
                    a, b = self.pos[con.vars[0]], self.pos[con.vars[1]]
                    if values[a] == 1 and values[b] == 1:
                        return True
                    if values[a] == 1 and values[b] == UNASSIGNED:
                        if assign(b, 0):
                            return True
                    elif values[b] == 1 and values[a] == UNASSIGNED:
                        if assign(a, 0):
                            return True
                elif form == AT_LEAST_ONE:
                    unknown = []
                    satisfied = False
                    for v in con.vars:
                        p = self.pos[v]
                        val = values[p]
                        if val == 1:
                            satisfied = True
                            break
                        if val == UNASSIGNED:
                            unknown.append(p)
                    if satisfied:
                        continue
                    if not unknown:
                        return True
                    if len(unknown) == 1:
                        if assign(unknown[0], 1):
                            return True
                else:  # LINEAR_LE
                    base = 0
                    free_pos = []
                    for a, v in zip(con.coeffs, con.vars):
                        p = self.pos[v]
                        val = values[p]
                        if val == UNASSIGNED:
                            if a < 0:
                                base += a
                            else:
                                free_pos.append((p, a))
                        else:
                            base += a * val
                    if base > 0:
                        return True
                    for p, a in free_pos:
                        if base + a > 0:
                            if assign(p, 0):
                                return True
            return False

        queue: list[int] = []
        for var, v in fixed.items():
            if assign(self.pos[var], v):
                conflict = True
                break
        if not conflict:
            queue.extend(range(len(model.constraints)))
            conflict = propagate()
        if conflict:
            return ExactResult(None, None, True, 1)

        best: Assignment | None = None
        best_obj = incumbent_bound
        failures = 0
        last_conflict: int | None = None
        # frames: (position, values left to try, trail length before assign)
        frames: list[list] = []

        def value_order(p: int) -> list[int]:
            first = 0
            if incumbent is not None:
                first = incumbent.get(self.vars[p], 0)
            return [first, 1 - first]

        def next_var() -> int | None:
            if (
                last_conflict is not None
                and values[last_conflict] == UNASSIGNED
            ):
                return last_conflict
            for p in self.static_order:
                if values[p] == UNASSIGNED:
                    return p
            return None

        while True:
            conflict = lb >= best_obj
            if not conflict:
                p = next_var()
                if p is None:
                    # All ec/dc decided; propagation has settled every rf.
                    assert UNASSIGNED not in values
                    best = {
                        v: values[i] for i, v in enumerate(self.vars)
                    }
                    best_obj = lb
                    conflict = True  # keep searching for strictly better
                else:
                    order = value_order(p)
                    frames.append([p, order, 0, len(trail)])
                    queue.clear()
                    conflict = assign(p, order[0]) or propagate()
                    if conflict:
                        failures += 1
                        last_conflict = p
            else:
                failures += 1

            while conflict:
                if failures >= fail_limit:
                    return ExactResult(
                        best,
                        best_obj if best is not None else None,
                        False,
                        failures,
                    )
                if not frames:
                    return ExactResult(
                        best,
                        best_obj if best is not None else None,
                        True,
                        failures,
                    )
                frame = frames[-1]
                fp, order, idx, mark = frame
                while len(trail) > mark:
                    q = trail.pop()
                    lb -= self._penalty(q, values[q])
                    values[q] = UNASSIGNED
                if idx + 1 >= len(order):
                    frames.pop()
                    continue
                frame[2] = idx + 1
                queue.clear()
                conflict = assign(fp, order[idx + 1]) or propagate()
                if conflict:
                    failures += 1
                    last_conflict = fp


def solve_exact(
    model: CopModel,
    fixed: Assignment | None = None,
    fail_limit: int = 10_000,
    incumbent_bound: float = float("inf"),
    incumbent: Assignment | None = None,
    searcher: _Searcher | None = None,
) -> ExactResult:
    """Complete depth-first branch and bound over the unfixed variables.

    Returns the best completion strictly below incumbent_bound, or None if
    there is none (complete=True) or the fail limit struck first
    (complete=False).
    """
    if searcher is None:
        searcher = _Searcher(model)
    return searcher.solve(fixed or {}, fail_limit, incumbent_bound, incumbent)


def _greedy_seed_selection(model: CopModel) -> set[int]:
    """Per input predicate, the candidate decoder of least corruption."""
    by_head: dict = {}
    for j in range(len(model.dc_candidates)):
        by_head.setdefault(model.dc_heads[j], []).append(j)
    selected = set()
    for p in sorted(by_head, key=lambda p: (p.name, p.arity)):
        js = by_head[p]
        selected.add(
            min(js, key=lambda j: (_corruption_key(model, j), model.dc_candidates[j].key()))
        )
    return selected


def _corruption_key(model: CopModel, j: int):
    size = len(model.dc_candidates[j].consequences)
    true = model.dc_true_counts[j]
    return (Fraction(size - true, size), -true)


def _bottleneck_excess(model: CopModel, assignment: Assignment) -> int:
    con = model.constraints[0]
    assert con.form == LINEAR_LE
    return sum(a * assignment[v] for a, v in zip(con.coeffs, con.vars))


def initial_solution(model: CopModel, fallback_fail_limit: int = 50_000) -> Assignment:
    """Greedy constraint-consistent seed for the LNS.

    Picks the least-corrupt decoder per input predicate, then sheds the
    heaviest encoders (and their decoders) while the bottleneck is violated,
    re-covering predicates with lighter alternatives where possible.  Falls
    back to a bounded exact search when the repair cannot reach feasibility.
    """
    selected = _greedy_seed_selection(model)
    banned_latents: set = set()
    for _ in range(len(model.ec_candidates) + 1):
        assignment = assignment_from_dc(model, selected)
        if _bottleneck_excess(model, assignment) <= 0:
            break
        heaviest = max(
            (
                i
                for i, c in enumerate(model.ec_candidates)
                if assignment[VarId(i, EC)] == 1
            ),
            key=lambda i: (model.ec_candidates[i].weight, i),
        )
        banned_latents.add(model.ec_candidates[heaviest].clause.head.predicate)
        selected = {
            j
            for j in selected
            if not any(
                l.predicate in banned_latents
                for l in model.dc_candidates[j].clause.body
            )
        }
        covered = {model.dc_heads[j] for j in selected}
        by_head: dict = {}
        for j in range(len(model.dc_candidates)):
            by_head.setdefault(model.dc_heads[j], []).append(j)
        for p in sorted(by_head, key=lambda p: (p.name, p.arity)):
            if p in covered:
                continue
            usable = [
                j
                for j in by_head[p]
                if not any(
                    l.predicate in banned_latents
                    for l in model.dc_candidates[j].clause.body
                )
            ]
            if usable:
                selected.add(
                    min(
                        usable,
                        key=lambda j: (
                            _corruption_key(model, j),
                            model.dc_candidates[j].key(),
                        ),
                    )
                )
    assignment = assignment_from_dc(model, selected)
    if not check_assignment(model, assignment):
        return assignment
    result = solve_exact(model, {}, fallback_fail_limit)
    if result.best is None:
        detail = "infeasible" if result.complete else "no seed found within limits"
        raise InfeasibleError(f"cannot construct a feasible seed: {detail}")
    return result.best


ProgressFn = Callable[[int, int, float, int, int], None]


def lns_minimize(
    model: CopModel,
    config: SearchConfig,
    progress: ProgressFn | None = None,
) -> Solution:
    """Large-neighbourhood search; see the module docstring for the scheme.

    The returned Solution is audited against the constraints.  It is proven
    optimal when the objective hits 0 or a nothing-fixed exact pass ran to
    completion within its limits.
    """
    start = time.monotonic()
    searcher = _Searcher(model)
    seed_assignment = initial_solution(model)
    violations = check_assignment(model, seed_assignment)
    if violations:
        raise AssertionError(f"seed violates constraints: {violations[:1]}")
    objective = objective_value(model, seed_assignment)
    incumbent = Solution(seed_assignment, objective, 0, objective == 0)
    if incumbent.proven_optimal:
        _emit(progress, 0, incumbent, start, model)
        return incumbent
    _emit(progress, 0, incumbent, start, model)

    rng = random.Random(config.seed)
    stagnation = 0
    proven = False
    for iteration in range(1, config.iterations + 1):
        if time.monotonic() - start > config.time_limit:
            break
        alpha = config.alpha
        if stagnation >= _STAGNATION_WINDOW:
            alpha = config.alpha / 2
            stagnation = 0
        active_dc = [v for v in model.dc_ids if incumbent.assignment[v] == 1]
        inactive_ec = [v for v in model.ec_ids if incumbent.assignment[v] == 0]
        fixed: Assignment = {}
        for v in rng.sample(active_dc, int(len(active_dc) * alpha / 100)):
            fixed[v] = 1
        for v in rng.sample(inactive_ec, int(len(inactive_ec) * config.beta / 100)):
            fixed[v] = 0
        result = searcher.solve(
            fixed, config.fail_limit, incumbent.objective, incumbent.assignment
        )
        improved = (
            result.best is not None and result.objective < incumbent.objective
        )
        if improved:
            violations = check_assignment(model, result.best)
            if violations:
                raise AssertionError(
                    f"solver produced an infeasible assignment: {violations[:1]}"
                )
            incumbent = Solution(result.best, result.objective, iteration, False)
            _emit(progress, iteration, incumbent, start, model)
            stagnation = 0
        else:
            stagnation += 1
        if not fixed and result.complete:
            proven = True
        if incumbent.objective == 0:
            proven = True
        if proven:
            break
    return Solution(
        incumbent.assignment,
        incumbent.objective,
        incumbent.iteration_found,
        proven,
    )


def _emit(
    progress: ProgressFn | None,
    iteration: int,
    incumbent: Solution,
    start: float,
    model: CopModel,
):
    if progress is None:
        return
    elapsed_ms = (time.monotonic() - start) * 1000.0
    n_ec = sum(incumbent.assignment[v] for v in model.ec_ids)
    n_dc = sum(incumbent.assignment[v] for v in model.dc_ids)
    progress(iteration, incumbent.objective, elapsed_ms, n_ec, n_dc)


def portfolio_minimize(
    model: CopModel, config: SearchConfig, workers: int
) -> Solution:
    """Run independent LNS instances with derived seeds; return the best.

    Workers share the immutable model and nothing else; ties break on the
    lowest worker index, so the result is deterministic.
    """
    from concurrent.futures import ThreadPoolExecutor
    from dataclasses import replace

    if workers < 1:
        raise ValueError("workers must be >= 1")
    configs = [replace(config, seed=config.seed + i) for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda c: lns_minimize(model, c), configs))
    best_index = min(range(workers), key=lambda i: (results[i].objective, i))
    return results[best_index]
