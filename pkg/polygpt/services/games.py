"""
The adaptive CHSH game.

Alice and Charlie receive questions rA and rC and answer a and c. Bob
picks one of four variants b; the round is won when a ⊕ c matches the
variant's condition on (rA, rC). Distributions are stored as
P[rA, rC, a, b, c] with b = 2·b0 + b1.
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from polygpt.config import Tolerances, get_settings
from polygpt.services.boxes import Box, local_visibility
from polygpt.services.chsh import GameCondition, chsh_max
from polygpt.services.geometry import PolygonSystem
from polygpt.utils.errors import ConfigurationError, DomainError

logger = structlog.get_logger()

VARIANTS: Tuple[Tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


class VariantTable(str, Enum):
    """Winning-condition table for Bob's four variants."""
    LITERAL = "literal"
    SWAP_CONSISTENT = "swap-consistent"


# each variant's condition written as (rA ⊕ alpha)(rC ⊕ gamma) ⊕ parity
_CONDITIONS: Dict[VariantTable, Dict[Tuple[int, int], GameCondition]] = {
    VariantTable.LITERAL: {
        (0, 0): GameCondition(1, 0, 0),
        (0, 1): GameCondition(1, 1, 1),
        (1, 0): GameCondition(1, 1, 0),
        (1, 1): GameCondition(0, 1, 1),
    },
    VariantTable.SWAP_CONSISTENT: {
        (0, 0): GameCondition(1, 0, 0),
        (0, 1): GameCondition(1, 1, 1),
        (1, 0): GameCondition(1, 1, 0),
        (1, 1): GameCondition(1, 0, 1),
    },
}


def as_variant_table(table: Union[VariantTable, str, None]) -> VariantTable:
    try:
        return VariantTable(table or get_settings().GAME_TABLE)
    except ValueError:
        raise ConfigurationError(f"unknown game table: {table}", setting="game_table")


def variant_condition(b: Tuple[int, int], table: Union[VariantTable, str, None] = None) -> GameCondition:
    return _CONDITIONS[as_variant_table(table)][tuple(b)]


def _bit(value: int, name: str) -> int:
    if value not in (0, 1):
        raise DomainError(f"{name} must be a bit, got {value}", field=name)
    return int(value)


@dataclass(frozen=True)
class GameRound:
    r_a: int
    r_c: int
    a: int
    b: Tuple[int, int]
    c: int

    def __post_init__(self):
        for name in ("r_a", "r_c", "a", "c"):
            _bit(getattr(self, name), name)
        if len(self.b) != 2:
            raise DomainError("b must be a pair of bits", field="b")
        object.__setattr__(self, "b", (_bit(self.b[0], "b0"), _bit(self.b[1], "b1")))


def win_predicate(round_: GameRound, table: Union[VariantTable, str, None] = None) -> int:
    condition = variant_condition(round_.b, table)
    return int(condition.target(round_.r_a, round_.r_c) == round_.a ^ round_.c)


def win_table(table: Union[VariantTable, str, None] = None) -> np.ndarray:
    """Q[rA, rC, a, b, c] as a 0/1 array."""
    table = as_variant_table(table)
    Q = np.zeros((2, 2, 2, 4, 2))
    for r_a, r_c, a, b, c in product((0, 1), (0, 1), (0, 1), range(4), (0, 1)):
        Q[r_a, r_c, a, b, c] = win_predicate(GameRound(r_a, r_c, a, divmod(b, 2), c), table)
    return Q


@dataclass(frozen=True)
class ConditionalDistribution:
    """P(a, b, c | rA, rC) as a (2, 2, 2, 4, 2) array."""

    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        if table.shape != (2, 2, 2, 4, 2):
            raise DomainError(f"distribution must have shape (2, 2, 2, 4, 2), got {table.shape}")
        object.__setattr__(self, "table", table)

    def validate(self, tol: Optional[Tolerances] = None) -> None:
        """Raises DomainError unless normalized and no-signaling to Alice and Charlie."""
        tol = tol or Tolerances.from_settings()
        P = self.table
        if not np.all(np.isfinite(P)) or P.min() < -tol.feas:
            raise DomainError("distribution has negative or non-finite entries")
        if np.abs(P.sum(axis=(2, 3, 4)) - 1.0).max() > tol.feas:
            raise DomainError("conditional distributions are not normalized")
        alice = P.sum(axis=(3, 4))
        charlie = P.sum(axis=(2, 3))
        if np.abs(alice[:, 0] - alice[:, 1]).max() > tol.feas:
            raise DomainError("Charlie's question signals to Alice")
        if np.abs(charlie[0] - charlie[1]).max() > tol.feas:
            raise DomainError("Alice's question signals to Charlie")


def deterministic_distribution(alice: Sequence[int], b: Tuple[int, int],
                               charlie: Sequence[int]) -> ConditionalDistribution:
    """a = alice[rA], c = charlie[rC], fixed variant b."""
    P = np.zeros((2, 2, 2, 4, 2))
    for r_a, r_c in product((0, 1), repeat=2):
        P[r_a, r_c, alice[r_a], 2 * b[0] + b[1], charlie[r_c]] = 1.0
    return ConditionalDistribution(P)


def win_probability(distribution: ConditionalDistribution,
                    table: Union[VariantTable, str, None] = None,
                    tol: Optional[Tolerances] = None) -> float:
    """¼ Σ P(a, b, c | rA, rC) Q(a, b, c, rA, rC).

    Raises:
        DomainError: invalid distribution
    """
    distribution.validate(tol)
    return float(np.sum(distribution.table * win_table(table)) / 4.0)


@dataclass(frozen=True)
class ClassicalResult:
    value: Fraction
    alice: Tuple[int, int]
    b: Tuple[int, int]
    charlie: Tuple[int, int]
    optimal_count: int
    strategy_count: int


def classical_max(table: Union[VariantTable, str, None] = None) -> ClassicalResult:
    """Exhaustive maximum over the 64 deterministic strategies, in exact arithmetic."""
    table = as_variant_table(table)
    functions = list(product((0, 1), repeat=2))
    scored = []
    for alice, b, charlie in product(functions, VARIANTS, functions):
        wins = sum(
            win_predicate(GameRound(r_a, r_c, alice[r_a], b, charlie[r_c]), table)
            for r_a, r_c in product((0, 1), repeat=2)
        )
        scored.append((Fraction(wins, 4), alice, b, charlie))
    best = max(s[0] for s in scored)
    optimal = [s for s in scored if s[0] == best]
    value, alice, b, charlie = optimal[0]
    logger.debug("classical maximum", value=str(value), optimal=len(optimal))
    return ClassicalResult(value, alice, b, charlie, len(optimal), len(scored))


@dataclass(frozen=True)
class Relabeling:
    r_a_offset: int
    r_c_offset: int
    parity_offset: int


def variant_relabeling(b: Tuple[int, int],
                       table: Union[VariantTable, str, None] = None) -> Relabeling:
    """Offsets mapping variant b onto the canonical a ⊕ c = rA·rC.

    Found by truth-table search over all 16 (a, c, rA, rC).
    """
    table = as_variant_table(table)
    b = (_bit(b[0], "b0"), _bit(b[1], "b1"))
    for r_a_offset, r_c_offset, parity_offset in product((0, 1), repeat=3):
        if all(
            win_predicate(GameRound(r_a, r_c, a, b, c), table)
            == int(a ^ c == ((r_a ^ r_a_offset) & (r_c ^ r_c_offset)) ^ parity_offset)
            for a, c, r_a, r_c in product((0, 1), repeat=4)
        ):
            return Relabeling(r_a_offset, r_c_offset, parity_offset)
    raise DomainError(f"variant {b} is not a relabeled CHSH game")


@dataclass
class AdaptiveBound:
    value: float
    per_variant: Dict[Tuple[int, int], float] = field(default_factory=dict)


def adaptive_upper_bound(sys_a: PolygonSystem, sys_b: PolygonSystem,
                         sys_b_prime: PolygonSystem, sys_c: PolygonSystem,
                         kind=None, table: Union[VariantTable, str, None] = None,
                         **options) -> AdaptiveBound:
    """Max over variants of the relabeled CHSH maximum between A and C.

    Bob's systems do not enter the bound; every variant is a relabeled CHSH
    game, so each entry equals the canonical maximum.
    """
    table = as_variant_table(table)
    logger.info("adaptive upper bound", sys_a=sys_a.label, sys_b=sys_b.label,
                sys_b_prime=sys_b_prime.label, sys_c=sys_c.label)
    per_variant = {}
    for b in VARIANTS:
        result = chsh_max(sys_a, sys_c, kind, game=variant_condition(b, table), **options)
        per_variant[b] = result.value
    return AdaptiveBound(max(per_variant.values()), per_variant)


# Response functions for Alice and Charlie: box input is one of
# (0, 1, r, r ⊕ 1) and the answer any function of (r, box output).
_INPUT_MAPS = ((0, 0), (1, 1), (0, 1), (1, 0))
_OUTPUT_FUNCTIONS = list(product((0, 1), repeat=4))


@dataclass(frozen=True)
class Response:
    input_map: Tuple[int, int]
    output_function: Tuple[int, int, int, int]

    def answer(self, r: int, output: int) -> int:
        return self.output_function[2 * r + output]


RESPONSES = [Response(m, g) for m in _INPUT_MAPS for g in _OUTPUT_FUNCTIONS]


@dataclass(frozen=True)
class Wiring:
    """Bob's deterministic wiring of his two box halves.

    ``first`` names the box measured first ("ab" or "bc"), ``x1`` its input,
    ``input_rule[o1]`` the input of the second box, ``output_rule[2·o1 + o2]``
    the variant index b.
    """

    first: str
    x1: int
    input_rule: Tuple[int, int]
    output_rule: Tuple[int, int, int, int] = (0, 0, 0, 0)

    def input_wiring(self) -> "Wiring":
        return Wiring(self.first, self.x1, self.input_rule)


BOB_INPUT_WIRINGS = [
    Wiring(first, x1, rule)
    for first in ("ab", "bc")
    for x1 in (0, 1)
    for rule in product((0, 1), repeat=2)
]


@dataclass(frozen=True)
class ConditionedBox:
    """A–C box conditioned on Bob's outcomes under an input wiring."""

    wiring: Wiring
    outcomes: Tuple[int, int]
    probability: float
    box: Box


@dataclass
class WiringResult:
    value: float
    wiring: Wiring
    alice: Response
    charlie: Response
    conditioned: List[ConditionedBox]


def _response_tensors(table: np.ndarray, party_first: bool) -> np.ndarray:
    """T[k, r, answer, y, o] for every response k of the outer party.

    ``table`` is the box P[x, y, o_outer, o_bob] with the outer party first
    when ``party_first``, else P[y, x, o_bob, o_outer].
    """
    P = table if party_first else table.transpose(1, 0, 3, 2)
    T = np.zeros((len(RESPONSES), 2, 2, 2, 2))
    for k, response in enumerate(RESPONSES):
        for r, x, o_outer in product((0, 1), repeat=3):
            if response.input_map[r] != x:
                continue
            T[k, r, response.answer(r, o_outer)] += P[x, :, o_outer, :]
    return T


def _joint(ta: np.ndarray, tc: np.ndarray, wiring: Wiring) -> np.ndarray:
    """J[i, j, rA, a, rC, c, o1, o2] for all response pairs."""
    rule = list(wiring.input_rule)
    if wiring.first == "ab":
        first = ta[:, :, :, wiring.x1, :]                    # i rA a o1
        second = tc[:, :, :, rule, :]                        # j rC c o1 o2
        return np.einsum("iRao,jCcop->ijRaCcop", first, second)
    first = tc[:, :, :, wiring.x1, :]                        # j rC c o1
    second = ta[:, :, :, rule, :]                            # i rA a o1 o2
    return np.einsum("jCco,iRaop->ijRaCcop", first, second)


def wiring_max(box_ab: Box, box_bc: Box,
               table: Union[VariantTable, str, None] = None,
               tol: Optional[Tolerances] = None) -> WiringResult:
    """Best deterministic wiring strategy with two bipartite boxes.

    ``box_ab`` is P[xA, y, oA, oB] shared by Alice and Bob, ``box_bc`` is
    P[y', xC, oB', oC] shared by Bob and Charlie. Bob's output rule is
    optimized cell by cell for each input wiring.

    Raises:
        DomainError: malformed boxes
    """
    for box in (box_ab, box_bc):
        box.validate(tol)
    table = as_variant_table(table)
    Q = win_table(table).transpose(3, 0, 2, 1, 4)            # b rA a rC c
    ta = _response_tensors(box_ab.table, party_first=True)
    tc = _response_tensors(box_bc.table, party_first=False)

    best = None
    for wiring in BOB_INPUT_WIRINGS:
        J = _joint(ta, tc, wiring)
        cells = np.einsum("ijRaCcop,bRaCc->ijbop", J, Q, optimize=True)
        values = cells.max(axis=2).sum(axis=(2, 3)) / 4.0
        i, j = np.unravel_index(int(np.argmax(values)), values.shape)
        value = float(values[i, j])
        if best is None or value > best[0] + 1e-12:
            output_rule = tuple(int(cells[i, j, :, o1, o2].argmax())
                                for o1, o2 in product((0, 1), repeat=2))
            best = (value, Wiring(wiring.first, wiring.x1, wiring.input_rule, output_rule), i, j)

    value, wiring, i, j = best
    logger.info("wiring maximum", value=value, wiring=wiring.first, x1=wiring.x1)
    return WiringResult(
        value=value,
        wiring=wiring,
        alice=RESPONSES[i],
        charlie=RESPONSES[j],
        conditioned=conditioned_boxes(box_ab, box_bc),
    )


def conditioned_boxes(box_ab: Box, box_bc: Box,
                      wirings: Optional[Sequence[Wiring]] = None,
                      tol: Optional[Tolerances] = None) -> List[ConditionedBox]:
    """A–C boxes P(oA, oC | xA, xC, o1, o2) for every input wiring and outcome pair."""
    tol = tol or Tolerances.from_settings()
    conditioned = []
    for wiring in wirings or BOB_INPUT_WIRINGS:
        rule = list(wiring.input_rule)
        # joint[xA, xC, oA, oC, o1, o2]
        if wiring.first == "ab":
            joint = np.einsum("xao,ozpc->xzacop",
                              box_ab.table[:, wiring.x1], box_bc.table[rule])
        else:
            joint = np.einsum("zoc,oxap->xzacop",
                              box_bc.table[wiring.x1],
                              box_ab.table[:, rule].transpose(1, 0, 2, 3))
        for o1, o2 in product((0, 1), repeat=2):
            block = joint[:, :, :, :, o1, o2]
            probability = float(block[0, 0].sum())
            if probability <= tol.feas:
                continue
            conditioned.append(ConditionedBox(
                wiring.input_wiring(), (o1, o2), probability,
                Box(block / block.sum(axis=(2, 3), keepdims=True), "conditioned"),
            ))
    return conditioned


def conditioned_locality_check(conditioned: Sequence[ConditionedBox],
                               tol: Optional[Tolerances] = None,
                               margin: float = 1e-7) -> bool:
    """True iff every conditioned A–C box lies in the local polytope."""
    all_local = True
    for item in conditioned:
        visibility = local_visibility(item.box, tol)
        if visibility < 1.0 - margin:
            logger.warning("conditioned box is nonlocal", wiring=item.wiring.first,
                           x1=item.wiring.x1, outcomes=item.outcomes, visibility=visibility)
            all_local = False
    return all_local


def wiring_bound_holds(result: WiringResult, tol: Optional[Tolerances] = None) -> bool:
    tol = tol or Tolerances.from_settings()
    return result.value <= 0.75 + tol.gap
