"""Multi-panel composite systems and their admissibility-protocol checks.

A system of m autonomous panels shares a pool of admissible evidence: one
common-knowledge symbol, one evidence symbol per ordered panel pair, the
collection of own-domain evidence, and the full pool.  Four independence
conditions over these symbols (delegable, separately informed, cutting,
commonly separated) are generated here, and the coherence claim - that every
panel's parameter block is independent of the others given the full pool,
and is updated only through its own evidence - is verified either by the
axiomatic prover or by d-separation on a user-supplied graph.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .ci import (
    CIStatement,
    DEFAULT_BUDGET,
    DeriveResult,
    FunctionalDependency,
    Proof,
    Symbol,
    VarSet,
    aggregate_dependencies,
    derive,
    derive_through,
    normalize,
)
from .dag import Dag, d_separated, local_markov_basis


class ProtocolError(Exception):
    pass


class InvalidPanelCount(ProtocolError):
    pass


class IndexOutOfRange(ProtocolError):
    pass


class UniverseMismatch(ProtocolError):
    pass


class ConditionKind(enum.Enum):
    DELEGABLE = "delegable"
    SEPARATELY_INFORMED = "separately_informed"
    CUTTING = "cutting"
    COMMONLY_SEPARATED = "commonly_separated"


ALL_CONDITIONS = tuple(ConditionKind)


@dataclass(frozen=True)
class PanelSystem:
    """Symbol universe and determinism facts for an m-panel composite."""

    m: int
    epoch: int

    def theta(self, i: int) -> Symbol:
        self._check_index(i)
        return f"theta_{i}"

    def theta_rest(self, i: int) -> VarSet:
        self._check_index(i)
        return frozenset(f"theta_{j}" for j in range(1, self.m + 1) if j != i)

    def thetas(self) -> VarSet:
        return frozenset(f"theta_{j}" for j in range(1, self.m + 1))

    @property
    def common(self) -> Symbol:
        return f"I_0^{self.epoch}"

    def evidence(self, i: int, j: int) -> Symbol:
        self._check_index(i)
        self._check_index(j)
        return f"I_{i}{j}^{self.epoch}"

    @property
    def own_evidence_pool(self) -> Symbol:
        """Collection of every panel's own-domain evidence."""
        return f"I_*^{self.epoch}"

    @property
    def full_pool(self) -> Symbol:
        """All admissible evidence at this epoch."""
        return f"I_+^{self.epoch}"

    @property
    def universe(self) -> VarSet:
        syms = set(self.thetas()) | {self.common, self.own_evidence_pool, self.full_pool}
        syms.update(
            self.evidence(i, j)
            for i in range(1, self.m + 1)
            for j in range(1, self.m + 1)
        )
        return frozenset(syms)

    @property
    def aggregates(self) -> tuple[tuple[Symbol, VarSet], ...]:
        """The two collection symbols with their defining components."""
        own = frozenset(self.evidence(i, i) for i in range(1, self.m + 1))
        full = frozenset(
            self.evidence(i, j)
            for i in range(1, self.m + 1)
            for j in range(1, self.m + 1)
        ) | {self.common}
        return ((self.own_evidence_pool, own), (self.full_pool, full))

    @property
    def dependencies(self) -> tuple[FunctionalDependency, ...]:
        facts: list[FunctionalDependency] = []
        for symbol, components in self.aggregates:
            facts.extend(aggregate_dependencies(symbol, components))
        return tuple(facts)

    def _check_index(self, i: int) -> None:
        if not 1 <= i <= self.m:
            raise IndexOutOfRange(f"panel index {i} not in 1..{self.m}")


def build_system(m: int, epoch: int = 0) -> PanelSystem:
    if m < 1:
        raise InvalidPanelCount(f"panel count must be >= 1, got {m}")
    if epoch < 0:
        raise ProtocolError(f"epoch must be non-negative, got {epoch}")
    return PanelSystem(m=m, epoch=epoch)


def condition_statement(
    sys: PanelSystem, kind: ConditionKind, i: Optional[int] = None
) -> Optional[CIStatement]:
    """The independence assertion a condition makes, or None when degenerate.

    Per-panel conditions need ``i``; with a single panel the conditions that
    quantify over "the other panels" have nothing to assert.
    """
    if kind is ConditionKind.DELEGABLE:
        return normalize(
            {sys.full_pool}, sys.thetas(), {sys.common, sys.own_evidence_pool}
        )
    if i is None:
        raise IndexOutOfRange(f"{kind.value} is a per-panel condition; panel index required")
    sys._check_index(i)
    rest = sys.theta_rest(i)
    if kind is ConditionKind.SEPARATELY_INFORMED:
        if not rest:
            return None
        return normalize({sys.evidence(i, i)}, rest, {sys.common, sys.theta(i)})
    if kind is ConditionKind.CUTTING:
        return normalize(
            {sys.own_evidence_pool},
            {sys.theta(i)},
            {sys.common, sys.evidence(i, i)} | rest,
        )
    if kind is ConditionKind.COMMONLY_SEPARATED:
        if not rest:
            return None
        return normalize({sys.theta(i)}, rest, {sys.common})
    raise ValueError(kind)


def condition_statements(sys: PanelSystem, kind: ConditionKind) -> tuple[CIStatement, ...]:
    """All statements a condition expands to, deduplicated, in canonical order."""
    if kind is ConditionKind.DELEGABLE:
        stmts = {condition_statement(sys, kind)}
    else:
        stmts = {
            s
            for i in range(1, sys.m + 1)
            if (s := condition_statement(sys, kind, i)) is not None
        }
    return tuple(sorted(stmts, key=CIStatement.sort_key))


def base_statements(
    sys: PanelSystem, conditions: Iterable[ConditionKind] = ALL_CONDITIONS
) -> tuple[CIStatement, ...]:
    out: list[CIStatement] = []
    for kind in conditions:
        out.extend(condition_statements(sys, kind))
    return tuple(sorted(set(out), key=CIStatement.sort_key))


@dataclass(frozen=True)
class AxiomaticMode:
    base: tuple[CIStatement, ...]
    budget: int = DEFAULT_BUDGET


@dataclass(frozen=True)
class GraphicalMode:
    dag: Dag


Mode = Union[AxiomaticMode, GraphicalMode]


@dataclass(frozen=True)
class ConditionStatus:
    kind: ConditionKind
    statements: tuple[CIStatement, ...]
    status: str  # "holds" | "not_established" | "inconclusive"
    witnesses: tuple  # Proof per statement (axiomatic) or bool per statement (graphical)

    @property
    def holds(self) -> bool:
        return self.status == "holds"


@dataclass(frozen=True)
class GoalResult:
    panel: int
    name: str  # "panel_independence" | "autonomous_updating"
    goal: Optional[CIStatement]
    status: str  # "proved" | "not_derivable" | "budget_exhausted" | "trivial" | "separated" | "not_separated"
    proof: Optional[Proof] = None

    @property
    def established(self) -> bool:
        return self.status in ("proved", "trivial", "separated")


@dataclass(frozen=True)
class Verdict:
    conditions: tuple[ConditionStatus, ...]
    goals: tuple[GoalResult, ...]
    sound_and_distributed: bool


def independence_goal(sys: PanelSystem, i: int) -> Optional[CIStatement]:
    """Panel i's block is independent of all other blocks given the full pool."""
    rest = sys.theta_rest(i)
    if not rest:
        return None
    return normalize({sys.theta(i)}, rest, {sys.full_pool})


def autonomy_goal(sys: PanelSystem, i: int) -> CIStatement:
    """Panel i's block depends on the pool only through common and own evidence."""
    return normalize({sys.theta(i)}, {sys.full_pool}, {sys.common, sys.evidence(i, i)})


def _goal_waypoints(sys: PanelSystem, i: int, name: str) -> tuple[CIStatement, ...]:
    """Milestones mirroring the published derivation chain for each goal."""
    rest = sys.theta_rest(i)
    common, own_i = sys.common, sys.evidence(i, i)
    pool, own = sys.full_pool, sys.own_evidence_pool
    cut_in = normalize({sys.theta(i)}, {own} | rest, {common, own_i}) if rest else None
    if name == "panel_independence":
        pooled = normalize({sys.theta(i)}, rest, {common, own})
        return tuple(w for w in (cut_in, pooled, independence_goal(sys, i)) if w is not None)
    shielded = normalize({sys.theta(i)}, {pool}, {common, own_i, own})
    own_only = normalize({sys.theta(i)}, {own}, {common, own_i})
    waypoints = [cut_in, shielded, own_only, autonomy_goal(sys, i)]
    return tuple(w for w in waypoints if w is not None)


def _check_axiomatic(sys: PanelSystem, mode: AxiomaticMode) -> tuple[ConditionStatus, ...]:
    for stmt in mode.base:
        if not stmt.symbols() <= sys.universe:
            raise UniverseMismatch(f"base statement {stmt.render()} leaves the system universe")
    out: list[ConditionStatus] = []
    base = set(mode.base)
    for kind in ALL_CONDITIONS:
        stmts = condition_statements(sys, kind)
        witnesses: list[Proof] = []
        status = "holds"
        for stmt in stmts:
            result = derive(
                mode.base, sys.dependencies, stmt, mode.budget, universe=sys.universe
            )
            if result.proved:
                witnesses.append(result.proof)
            else:
                status = (
                    "inconclusive" if result.status == "budget_exhausted" else "not_established"
                )
                break
        out.append(ConditionStatus(kind, stmts, status, tuple(witnesses)))
    return tuple(out)


def _check_graphical(sys: PanelSystem, mode: GraphicalMode) -> tuple[ConditionStatus, ...]:
    if not sys.universe <= mode.dag.node_names:
        missing = sorted(sys.universe - mode.dag.node_names)
        raise UniverseMismatch(f"graph is missing system symbols: {missing}")
    out: list[ConditionStatus] = []
    for kind in ALL_CONDITIONS:
        stmts = condition_statements(sys, kind)
        answers = tuple(d_separated(mode.dag, s.a, s.b, s.c) for s in stmts)
        status = "holds" if all(answers) else "not_established"
        out.append(ConditionStatus(kind, stmts, status, answers))
    return tuple(out)


def check_conditions(sys: PanelSystem, mode: Mode) -> tuple[ConditionStatus, ...]:
    if isinstance(mode, AxiomaticMode):
        return _check_axiomatic(sys, mode)
    if isinstance(mode, GraphicalMode):
        return _check_graphical(sys, mode)
    raise TypeError(f"unsupported mode: {mode!r}")


def verify_coherence(sys: PanelSystem, mode: Mode) -> Verdict:
    """Check the coherence conclusion: panel-independent beliefs plus
    own-evidence-only updating for every panel."""
    conditions = check_conditions(sys, mode)
    goals: list[GoalResult] = []
    for i in range(1, sys.m + 1):
        for name, goal in (
            ("panel_independence", independence_goal(sys, i)),
            ("autonomous_updating", autonomy_goal(sys, i)),
        ):
            if goal is None:
                goals.append(GoalResult(i, name, None, "trivial"))
                continue
            if isinstance(mode, AxiomaticMode):
                result = derive_through(
                    mode.base,
                    sys.dependencies,
                    _goal_waypoints(sys, i, name),
                    mode.budget,
                    universe=sys.universe,
                )
                if not result.proved:
                    # waypoint route failed; fall back to an unconstrained search
                    result = derive(
                        mode.base, sys.dependencies, goal, mode.budget, universe=sys.universe
                    )
                goals.append(GoalResult(i, name, goal, result.status, result.proof))
            else:
                sep = d_separated(mode.dag, goal.a, goal.b, goal.c)
                goals.append(GoalResult(i, name, goal, "separated" if sep else "not_separated"))
    ok = all(g.established for g in goals)
    return Verdict(tuple(conditions), tuple(goals), ok)


def ablate(
    sys: PanelSystem, budget: int = DEFAULT_BUDGET
) -> tuple[tuple[Optional[ConditionKind], Verdict], ...]:
    """Verdicts with each condition dropped in turn, plus a control row.

    Axiomatic only: a "fails" row is a saturation certificate that the goal
    is not derivable in this rule system from the remaining conditions.
    """
    rows: list[tuple[Optional[ConditionKind], Verdict]] = []
    rows.append((None, verify_coherence(sys, AxiomaticMode(base_statements(sys), budget))))
    for dropped in ALL_CONDITIONS:
        kept = tuple(k for k in ALL_CONDITIONS if k is not dropped)
        mode = AxiomaticMode(base_statements(sys, kept), budget)
        rows.append((dropped, verify_coherence(sys, mode)))
    return tuple(rows)


def markov_seed(dag: Dag) -> tuple[CIStatement, ...]:
    """Axiomatic base harvested from a graph's local Markov statements."""
    return tuple(sorted(local_markov_basis(dag), key=CIStatement.sort_key))


def canonical_dag(sys: PanelSystem) -> Dag:
    """The reference graph for a well-run protocol: parameters are roots,
    each panel's own evidence is driven by its block plus common knowledge,
    cross-panel evidence carries only common knowledge, and the two pool
    nodes deterministically aggregate their components."""
    from .dag import build_dag

    nodes = [(t, "parameter") for t in sorted(sys.thetas())]
    nodes.append((sys.common, "common-knowledge"))
    edges = []
    for i in range(1, sys.m + 1):
        for j in range(1, sys.m + 1):
            name = sys.evidence(i, j)
            nodes.append((name, "evidence"))
            edges.append((sys.common, name))
            if i == j:
                edges.append((sys.theta(i), name))
    nodes.append((sys.own_evidence_pool, "evidence"))
    nodes.append((sys.full_pool, "evidence"))
    for i in range(1, sys.m + 1):
        edges.append((sys.evidence(i, i), sys.own_evidence_pool))
        for j in range(1, sys.m + 1):
            if i != j:
                edges.append((sys.evidence(i, j), sys.full_pool))
    edges.append((sys.common, sys.full_pool))
    edges.append((sys.own_evidence_pool, sys.full_pool))
    return build_dag(nodes, edges, sys.dependencies)


def confounded_dag(sys: PanelSystem, latent: Symbol = "H") -> Dag:
    """Canonical graph plus a hidden confounder across all parameter blocks."""
    from .dag import build_dag

    base = canonical_dag(sys)
    nodes = base.nodes + ((latent, "parameter"),)
    edges = base.edges + tuple((latent, t) for t in sorted(sys.thetas()))
    return build_dag(nodes, edges, sys.dependencies)
