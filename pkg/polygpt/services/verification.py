"""
Acceptance checks run by ``polygpt verify``.

Each check returns a CheckResult; the scheme selection check also yields
the configuration to freeze.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import structlog

from polygpt.config import SCHEMES, Tolerances, get_settings
from polygpt.services.boxes import pr_box, shared_random_bit
from polygpt.services.chsh import (
    QUANTUM_VALUE,
    base_program,
    chsh_max,
    extremal_measurements,
    measurement_effects,
    measurement_tuples,
    score_matrix,
    solve_tuple,
    validate_measurement,
)
from polygpt.services.games import (
    VariantTable,
    classical_max,
    conditioned_boxes,
    conditioned_locality_check,
    win_probability,
    wiring_max,
)
from polygpt.services.geometry import (
    Cone,
    build_polygon_system,
    dual_cone,
    same_rays,
    self_duality_check,
    validate_system,
)
from polygpt.services.lp import LinearProgram, solve_lp, vertex_oracle
from polygpt.services.quantum import quantum_game_strategy
from polygpt.services.sweep import convergence_report, sweep
from polygpt.services.tensor import enumerate_vertices, tensor_polytope
from polygpt.utils.errors import DomainError, PolyGPTError

logger = structlog.get_logger()


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    checks: List[CheckResult] = field(default_factory=list)
    selection: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]


def check_classical() -> CheckResult:
    result = classical_max()
    return CheckResult("classical maximum is 3/4", result.value == Fraction(3, 4),
                       f"{result.value}, {result.optimal_count} optimal strategies")


def check_quantum(tol: Tolerances) -> CheckResult:
    value = win_probability(quantum_game_strategy(), VariantTable.SWAP_CONSISTENT, tol)
    return CheckResult("quantum strategy reaches the quantum value",
                       abs(value - QUANTUM_VALUE) <= 1e-9, f"{value:.12g}")


def check_boxworld(tol: Tolerances) -> CheckResult:
    result = wiring_max(pr_box(), pr_box(), tol=tol)
    local = conditioned_locality_check(result.conditioned, tol)
    return CheckResult("box-world wirings stay at 3/4 with local conditioned boxes",
                       abs(result.value - 0.75) <= tol.gap and local,
                       f"value {result.value:.12g}, local {local}")


def check_gbit(tol: Tolerances, workers: Optional[int]) -> CheckResult:
    gbit = build_polygon_system(4, "unrestricted")
    value = chsh_max(gbit, gbit, "maximal", workers=workers, tol=tol).value
    return CheckResult("gbit maximum is 1", abs(value - 1.0) <= 1e-8, f"{value:.12g}")


def _anchored(rows, anchor: float, margin: float) -> bool:
    for row in rows:
        if row.n % 8 == 0:
            if abs(row.p_win - QUANTUM_VALUE) > anchor:
                return False
        elif QUANTUM_VALUE - row.p_win < margin:
            return False
    return True


def select_scheme(sizes, tol: Tolerances, workers: Optional[int]) -> Dict[str, Any]:
    """First scheme and marginal setting that meets the quantum anchors."""
    settings = get_settings()
    candidates = [settings.SCHEME] + [s for s in SCHEMES if s != settings.SCHEME]
    for scheme in candidates:
        for marginal in (settings.MARGINAL_CONSTRAINTS, not settings.MARGINAL_CONSTRAINTS):
            try:
                rows = sweep("selfdual", scheme, sizes, "maximal", marginal,
                             workers=workers, tol=tol)
            except PolyGPTError as e:
                logger.warning("scheme rejected", scheme=scheme, marginal_constraints=marginal,
                               error=e.message, code=e.code)
                continue
            if _anchored(rows, settings.ANCHOR_TOLERANCE, settings.STRICTNESS_MARGIN):
                logger.info("scheme selected", scheme=scheme, marginal_constraints=marginal)
                return {"scheme": scheme, "marginal_constraints": marginal, "rows": rows}
            logger.info("scheme rejected", scheme=scheme, marginal_constraints=marginal)
    return {}


def check_selection(selection: Dict[str, Any]) -> List[CheckResult]:
    if not selection:
        return [CheckResult("a self-dual scheme meets the quantum anchors", False,
                            "no scheme and marginal setting matched")]
    rows = selection["rows"]
    worst = max(r.p_win for r in rows)
    report = convergence_report(rows)
    converging = all(e.nondecreasing and e.gap_shrinks for e in report.values())
    return [
        CheckResult("a self-dual scheme meets the quantum anchors", True,
                    f"{selection['scheme']}, marginal constraints {selection['marginal_constraints']}"),
        CheckResult("no sweep value exceeds the quantum value",
                    worst <= QUANTUM_VALUE + 1e-6, f"max {worst:.12g}"),
        CheckResult("residue classes converge", converging,
                    ", ".join(f"{k}: {e.final_gap:.3g}" for k, e in report.items())),
    ]


def check_vertex_enumeration(sizes, tol: Tolerances, workers: Optional[int] = None) -> CheckResult:
    """chsh_max equals the best enumerated vertex over every measurement tuple."""
    marginal = get_settings().MARGINAL_CONSTRAINTS
    worst = 0.0
    for n in sizes:
        system = build_polygon_system(n, "unrestricted")
        polytope = tensor_polytope(system, system, "maximal", marginal)
        vertices = enumerate_vertices(polytope, tol=tol)
        effects = measurement_effects(system)
        enumerated = max(
            float(np.einsum("ij,kij->k", score_matrix(effects[[a0, a1]], effects[[b0, b1]]),
                            vertices).max())
            for a0, a1, b0, b1 in measurement_tuples(system, system, full_enumeration=True)
        )
        lp = chsh_max(system, system, "maximal", marginal_constraints=marginal,
                      workers=workers, tol=tol).value
        worst = max(worst, abs(lp - enumerated))
    return CheckResult("LP agrees with vertex enumeration", worst <= 1e-7, f"max diff {worst:.3g}")


def chsh_max_for_matrix(polytope, C: np.ndarray, tol: Tolerances) -> float:
    value, _, _ = solve_tuple(polytope, base_program(polytope), C, tol)
    return value


def check_reduction(sizes, tol: Tolerances, workers: Optional[int]) -> CheckResult:
    worst = 0.0
    for n in sizes:
        system = build_polygon_system(n, "selfdual")
        reduced = chsh_max(system, system, "maximal", workers=workers, tol=tol).value
        full = chsh_max(system, system, "maximal", full_enumeration=True,
                        workers=workers, tol=tol).value
        worst = max(worst, abs(reduced - full))
    return CheckResult("symmetry reduction matches full enumeration", worst <= 1e-10,
                       f"max diff {worst:.3g}")


def check_minimal(sizes, tol: Tolerances, workers: Optional[int]) -> CheckResult:
    values = []
    for n in sizes:
        system = build_polygon_system(n, "selfdual")
        values.append(chsh_max(system, system, "minimal", workers=workers, tol=tol).value)
    worst = max(abs(v - 0.75) for v in values)
    return CheckResult("minimal tensor product stays at 3/4", worst <= tol.gap,
                       f"max diff {worst:.3g}")


def _effect_problems(n_max: int, tol: Tolerances) -> List[str]:
    """Effects of every self-dual scheme stay in [0, 1] on the states."""
    problems = []
    for n in range(3, n_max + 1):
        for scheme in (SCHEMES if n % 2 == 0 else (None,)):
            try:
                system = build_polygon_system(n, "selfdual", scheme)
                effects = np.vstack([system.effect_vertices, system.complements])
                values = effects @ system.state_vertices.T
                if values.min() < -tol.geom or values.max() > 1.0 + tol.geom:
                    problems.append(f"effects n={n} {scheme}")
                for measurement in extremal_measurements(system):
                    validate_measurement(measurement, system, tol)
            except DomainError as e:
                problems.append(f"n={n} {scheme}: {e.message}")
    return problems


def check_invariants(tol: Tolerances, lp_count: int = 1000) -> CheckResult:
    problems = []
    for n in range(3, 13):
        system = build_polygon_system(n, "unrestricted")
        cone = system.state_cone
        if not same_rays(dual_cone(dual_cone(cone, tol), tol).generators, cone.generators, 1e-7):
            problems.append(f"double dual n={n}")
        validate_system(system, tol)
    problems.extend(_effect_problems(16, tol))
    for n in range(3, 30, 2):
        if not self_duality_check(build_polygon_system(n, "unrestricted").state_cone, tol):
            problems.append(f"self-duality n={n}")
    octant = Cone.from_generators(np.eye(3), tol)
    if not self_duality_check(octant, tol):
        problems.append("octant self-duality")

    rng = np.random.default_rng(11)
    for _ in range(lp_count):
        k = int(rng.integers(1, 5))
        lower = rng.integers(-8, 0, size=k) / 4.0
        upper = rng.integers(1, 9, size=k) / 4.0
        objective = rng.integers(-5, 6, size=k).astype(float)
        program = LinearProgram.from_blocks(
            objective, ge=np.eye(k), ge_rhs=lower, le=np.eye(k), le_rhs=upper
        )
        value = solve_lp(program, tol).value
        if abs(value - vertex_oracle(objective, lower, upper)) > 1e-9:
            problems.append("random LP")
            break
    return CheckResult("invariant suites", not problems, ", ".join(problems) or "ok")


def check_no_signaling(tol: Tolerances) -> CheckResult:
    """The quantum strategy and every conditioned A–C box are no-signaling."""
    problems = []
    try:
        quantum_game_strategy(tol=tol).validate(tol)
    except DomainError as e:
        problems.append(f"quantum strategy: {e.message}")
    pairs = {
        "PR, PR": (pr_box(), pr_box()),
        "PR, shared bit": (pr_box(), shared_random_bit()),
        "shared bit, PR": (shared_random_bit(), pr_box()),
    }
    for label, (box_ab, box_bc) in pairs.items():
        for item in conditioned_boxes(box_ab, box_bc, tol=tol):
            try:
                item.box.validate(tol)
            except DomainError as e:
                problems.append(f"{label} outcomes {item.outcomes}: {e.message}")
                break
    return CheckResult("assembled distributions are no-signaling", not problems,
                       "; ".join(problems) or "ok")


def run_verification(n_max: int = 30, quick: bool = False, workers: Optional[int] = None,
                     tol: Optional[Tolerances] = None,
                     on_check: Optional[Callable[[CheckResult], None]] = None
                     ) -> VerificationReport:
    """Run every acceptance check; ``quick`` shrinks the expensive ranges."""
    tol = tol or Tolerances.from_settings()
    report = VerificationReport()

    def record(check: CheckResult) -> None:
        report.checks.append(check)
        logger.info("check finished", check=check.name, passed=check.passed, detail=check.detail)
        if on_check:
            on_check(check)

    def attempt(name: str, check: Callable[[], CheckResult]) -> None:
        try:
            record(check())
        except PolyGPTError as e:
            record(CheckResult(name, False, e.message))

    attempt("classical maximum is 3/4", check_classical)
    attempt("quantum strategy reaches the quantum value", lambda: check_quantum(tol))
    attempt("box-world wirings stay at 3/4 with local conditioned boxes",
            lambda: check_boxworld(tol))
    attempt("gbit maximum is 1", lambda: check_gbit(tol, workers))

    sizes = range(3, (min(n_max, 16) if quick else n_max) + 1)
    selection = select_scheme(sizes, tol, workers)
    for check in check_selection(selection):
        record(check)
    if selection:
        report.selection = {
            "family": "selfdual",
            "scheme": selection["scheme"],
            "marginal_constraints": selection["marginal_constraints"],
            "n_range": [sizes.start, sizes.stop - 1],
        }

    attempt("LP agrees with vertex enumeration",
            lambda: check_vertex_enumeration([3, 4, 5] if quick else [3, 4, 5, 6], tol, workers))
    attempt("symmetry reduction matches full enumeration",
            lambda: check_reduction(range(3, 6 if quick else 9), tol, workers))
    attempt("minimal tensor product stays at 3/4",
            lambda: check_minimal(range(3, 7 if quick else 13), tol, workers))
    attempt("invariant suites", lambda: check_invariants(tol))
    attempt("assembled distributions are no-signaling", lambda: check_no_signaling(tol))
    return report
