"""Native evaluation of certificate validity with failure localization.

The check is the conjunction of a solution-side predicate (every listed
point feasible, the claimed bound witnessed) and a derivation-side
predicate (every derived constraint implied by its stated reasoning,
and the last constraint clinching the claimed relation).  Assumption
sets are not stored in certificate files; they are recomputed here in
one sequential pass, which discharges their correctness by construction.

Failure reporting is deterministic regardless of the worker count:
solution points in listed order, then derivations by ascending index,
then the final obligation.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .algebra import (
    UnresolvableIndex,
    constraint_dominates,
    is_split_disjunction,
    linear_combination,
    rnd_dominance,
    roundable_flags,
)
from .model import (
    Certificate,
    Constraint,
    DerivedConstraint,
    LinearExpr,
    Location,
    Multipliers,
    Problem,
    Reason,
    Sense,
    Sign,
    SolutionPoint,
    Unsplit,
    Verdict,
    constraint_at,
    nz,
    total_constraints,
)
from .rational import ONE, Rational, ZERO, format_rational, is_integer


class EmptyConstraintSystem(Exception):
    """The final obligation needs a last constraint, but d = 0."""


@dataclass(frozen=True)
class RtpFlags:
    """Constants derived from the problem sense and the relation to prove.

    `upper`/`lower` default to zero when the corresponding bound is not
    being proven; they are only ever read behind their prove_* guard.
    """

    minimize: bool          # problem sense is min
    has_range: bool         # relation to prove is not infeasibility
    prove_upper: bool       # has_range and ub finite
    prove_lower: bool       # has_range and lb finite
    upper: Rational
    lower: Rational

    @classmethod
    def of(cls, problem: Problem, certificate: Certificate) -> "RtpFlags":
        rtp = certificate.rtp
        has_range = not rtp.infeasible
        prove_upper = has_range and rtp.ub is not None
        prove_lower = has_range and rtp.lb is not None
        return cls(
            minimize=problem.sense is Sense.MIN,
            has_range=has_range,
            prove_upper=prove_upper,
            prove_lower=prove_lower,
            upper=rtp.ub if prove_upper else ZERO,
            lower=rtp.lb if prove_lower else ZERO,
        )


@dataclass(frozen=True)
class AssumptionSets:
    """A(k) for every k in [1, d], plus the set S of assumption indices.

    Problem constraints have empty sets.  An unsplit derivation whose
    source indices are not strictly earlier gets an empty set recorded
    together with a violation mark, which the per-constraint check
    consumes (the certificate is then invalid at that index)."""

    sets: tuple[frozenset[int], ...]
    assumption_indices: frozenset[int]
    unsplit_violations: frozenset[int]

    def at(self, k: int) -> frozenset[int]:
        return self.sets[k - 1]


def compute_assumption_sets(problem: Problem, certificate: Certificate) -> AssumptionSets:
    """Sequential replay of the assumption-set union rules."""
    m = problem.m
    sets: list[frozenset[int]] = [frozenset()] * m
    violations: set[int] = set()
    assumption_indices: set[int] = set()
    for offset, derived in enumerate(certificate.der):
        k = m + 1 + offset
        if derived.reason is Reason.ASM:
            assumption_indices.add(k)
            current = frozenset((k,))
        elif derived.reason in (Reason.LIN, Reason.RND):
            assert isinstance(derived.data, Multipliers)
            union: set[int] = set()
            for i in nz(derived.data):
                if 1 <= i < k:
                    union |= sets[i - 1]
            current = frozenset(union)
        elif derived.reason is Reason.UNS:
            assert isinstance(derived.data, Unsplit)
            data = derived.data
            if 1 <= data.i1 < k and 1 <= data.i2 < k:
                current = frozenset(
                    (sets[data.i1 - 1] - {data.l1}) | (sets[data.i2 - 1] - {data.l2})
                )
            else:
                violations.add(k)
                current = frozenset()
        else:  # sol
            current = frozenset()
        sets.append(current)
    return AssumptionSets(
        sets=tuple(sets),
        assumption_indices=frozenset(assumption_indices),
        unsplit_violations=frozenset(violations),
    )


def phi_feas(problem: Problem, point: SolutionPoint) -> bool:
    """Is the point feasible: integral on integer variables, and on the
    right side of every problem constraint?"""
    for j in problem.int_vars:
        if not is_integer(point.coordinate(j)):
            return False
    for constraint in problem.constraints:
        value = constraint.lhs.evaluate(point.coords)
        s = constraint.sign.value
        if s >= 0 and not value >= constraint.rhs:
            return False
        if s <= 0 and not value <= constraint.rhs:
            return False
    return True


def sol_violations(
    problem: Problem, certificate: Certificate, flags: RtpFlags
) -> list[Verdict]:
    """All solution-side failures, in deterministic order."""
    failures: list[Verdict] = []
    if not flags.has_range:
        if certificate.sol:
            failures.append(
                Verdict.invalid(
                    Location.sol(certificate.sol[0].name),
                    "sol-nonempty",
                    "relation to prove is infeasibility but the solution list is non-empty",
                )
            )
        return failures
    for point in certificate.sol:
        if not phi_feas(problem, point):
            failures.append(
                Verdict.invalid(
                    Location.sol(point.name),
                    "feas",
                    f"solution point {point.name} is not feasible",
                )
            )
    objective = problem.objective
    if flags.minimize:
        if flags.prove_upper and not any(
            objective.evaluate(p.coords) <= flags.upper for p in certificate.sol
        ):
            failures.append(
                Verdict.invalid(
                    Location.final(),
                    "sol-bound",
                    "no listed solution achieves objective value"
                    f" <= {format_rational(flags.upper)}",
                )
            )
    else:
        if flags.prove_lower and not any(
            objective.evaluate(p.coords) >= flags.lower for p in certificate.sol
        ):
            failures.append(
                Verdict.invalid(
                    Location.final(),
                    "sol-bound",
                    "no listed solution achieves objective value"
                    f" >= {format_rational(flags.lower)}",
                )
            )
    return failures


def phi_sol(problem: Problem, certificate: Certificate, flags: RtpFlags) -> bool:
    return not sol_violations(problem, certificate, flags)


def phi_prv(k: int, multipliers: Multipliers) -> bool:
    """Every multiplier index refers to a strictly earlier constraint."""
    return all(1 <= i < k for i in nz(multipliers))


def _objective_bound_constraint(problem: Problem, sign: Sign, bound: Rational) -> Constraint:
    return Constraint(name="objective-bound", lhs=problem.objective, sign=sign, rhs=bound)


def der_violation(
    problem: Problem,
    certificate: Certificate,
    asets: AssumptionSets,
    k: int,
) -> Optional[Verdict]:
    """Check derived constraint C_k; None means it is valid.

    The assumption predicate holds by construction of the computed sets
    and is never re-evaluated here.
    """
    derived: DerivedConstraint = certificate.der[k - problem.m - 1]
    target = derived.constraint
    d = total_constraints(problem, certificate)

    def resolve(i: int) -> Constraint:
        if not 1 <= i <= d:
            raise UnresolvableIndex(f"constraint index {i} outside [1, {d}]")
        return constraint_at(problem, certificate, i)

    def fail(predicate_id: str, message: str) -> Verdict:
        return Verdict.invalid(Location.der(k), predicate_id, f"{target.name}: {message}")

    if derived.reason is Reason.ASM:
        return None

    if derived.reason in (Reason.LIN, Reason.RND):
        assert isinstance(derived.data, Multipliers)
        if not phi_prv(k, derived.data):
            return fail(
                "prv", "multiplier indices must refer to strictly earlier constraints"
            )
        combination = linear_combination(derived.data, resolve)
        if derived.reason is Reason.LIN:
            if not combination.dominates(target):
                return fail("lin-domination", "the linear combination does not dominate")
            return None
        if not roundable_flags(combination.lhs, combination.eq, problem.int_vars):
            return fail("rnd-roundable", "the linear combination is not roundable")
        if not rnd_dominance(
            combination.lhs, combination.rhs, combination.geq, combination.leq, target
        ):
            return fail("rnd-domination", "the rounded combination does not dominate")
        return None

    if derived.reason is Reason.UNS:
        assert isinstance(derived.data, Unsplit)
        data = derived.data
        if k in asets.unsplit_violations or not all(
            1 <= i < k for i in data.as_tuple()
        ):
            return fail("uns-index", "unsplit data must refer to strictly earlier constraints")
        first = constraint_at(problem, certificate, data.i1)
        second = constraint_at(problem, certificate, data.i2)
        if not constraint_dominates(first, target):
            return fail("uns-domination", f"constraint {data.i1} does not dominate")
        if not constraint_dominates(second, target):
            return fail("uns-domination", f"constraint {data.i2} does not dominate")
        left = constraint_at(problem, certificate, data.l1)
        right = constraint_at(problem, certificate, data.l2)
        if not is_split_disjunction(left, right, problem.int_vars):
            return fail(
                "uns-disjunction",
                f"constraints {data.l1} and {data.l2} do not form a split disjunction",
            )
        return None

    # sol reasoning: some listed point's objective bound must dominate
    sign = Sign.LEQ if problem.sense is Sense.MIN else Sign.GEQ
    for point in certificate.sol:
        bound = problem.objective.evaluate(point.coords)
        source = _objective_bound_constraint(problem, sign, bound)
        if constraint_dominates(source, target):
            return None
    return fail("sol-domination", "no listed solution's objective bound dominates")


def phi_der_k(problem: Problem, certificate: Certificate, asets: AssumptionSets, k: int) -> bool:
    return der_violation(problem, certificate, asets, k) is None


def final_violation(
    problem: Problem,
    certificate: Certificate,
    asets: AssumptionSets,
    flags: RtpFlags,
) -> Optional[Verdict]:
    """The closing obligation on C_d, selected by the relation to prove.

    Raises EmptyConstraintSystem when an obligation is active but the
    unified constraint array is empty.
    """
    if not flags.has_range:
        target = Constraint("absurdity", LinearExpr({}), Sign.GEQ, ONE)
        label = "infeasibility requires the last constraint to dominate 0 >= 1"
    elif flags.minimize and flags.prove_lower:
        target = _objective_bound_constraint(problem, Sign.GEQ, flags.lower)
        label = (
            "the last constraint must dominate the objective lower bound"
            f" (>= {format_rational(flags.lower)})"
        )
    elif not flags.minimize and flags.prove_upper:
        target = _objective_bound_constraint(problem, Sign.LEQ, flags.upper)
        label = (
            "the last constraint must dominate the objective upper bound"
            f" (<= {format_rational(flags.upper)})"
        )
    else:
        return None
    d = total_constraints(problem, certificate)
    if d == 0:
        raise EmptyConstraintSystem(
            "the relation to prove requires a last constraint, but there are none"
        )
    last = constraint_at(problem, certificate, d)
    if not constraint_dominates(last, target):
        return Verdict.invalid(
            Location.final(), "der-final", f"{last.name}: {label}"
        )
    if asets.at(d):
        remaining = ", ".join(str(i) for i in sorted(asets.at(d)))
        return Verdict.invalid(
            Location.final(),
            "der-final",
            f"{last.name}: the last constraint still depends on assumptions {{{remaining}}}",
        )
    return None


def der_violations(
    problem: Problem,
    certificate: Certificate,
    asets: AssumptionSets,
    flags: RtpFlags,
    jobs: int = 1,
) -> list[Verdict]:
    """All derivation-side failures: ascending k, then the final check."""
    m = problem.m
    d = total_constraints(problem, certificate)
    indices = range(m + 1, d + 1)
    failures: list[Verdict] = []
    if jobs > 1 and len(certificate.der) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(
                lambda k: der_violation(problem, certificate, asets, k), indices
            )
            failures.extend(v for v in results if v is not None)
    else:
        for k in indices:
            violation = der_violation(problem, certificate, asets, k)
            if violation is not None:
                failures.append(violation)
    final = final_violation(problem, certificate, asets, flags)
    if final is not None:
        failures.append(final)
    return failures


def phi_der(
    problem: Problem,
    certificate: Certificate,
    asets: AssumptionSets,
    flags: RtpFlags,
) -> bool:
    return not der_violations(problem, certificate, asets, flags)


@dataclass(frozen=True)
class CheckReport:
    """Verdict plus every individual failure, for diagnosis output."""

    verdict: Verdict
    failures: tuple[Verdict, ...]
    solutions_checked: int
    derivations_checked: int


def check_certificate_report(
    problem: Problem, certificate: Certificate, jobs: int = 1
) -> CheckReport:
    flags = RtpFlags.of(problem, certificate)
    asets = compute_assumption_sets(problem, certificate)
    failures = sol_violations(problem, certificate, flags)
    failures.extend(der_violations(problem, certificate, asets, flags, jobs=jobs))
    verdict = failures[0] if failures else Verdict.ok()
    return CheckReport(
        verdict=verdict,
        failures=tuple(failures),
        solutions_checked=len(certificate.sol) if flags.has_range else 0,
        derivations_checked=len(certificate.der),
    )


def check_certificate(problem: Problem, certificate: Certificate, jobs: int = 1) -> Verdict:
    """Valid iff the solution side and the derivation side both hold;
    otherwise the deterministic first failure."""
    return check_certificate_report(problem, certificate, jobs=jobs).verdict


def default_jobs() -> int:
    return os.cpu_count() or 1
