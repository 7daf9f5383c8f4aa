from __future__ import annotations

import random
import shlex
import sys
from dataclasses import replace
from pathlib import Path

import pytest

from viprcert import (
    Certificate,
    Constraint,
    DerivedConstraint,
    LinearExpr,
    Multipliers,
    Problem,
    Reason,
    Rtp,
    Sense,
    Sign,
    SolutionPoint,
    Unsplit,
    parse_certificate,
    serialize_certificate,
)
from viprcert.rational import Rational

FIXTURE_DIR = Path(__file__).parent / "fixtures"
CORPUS = ("cert0", "forged1", "forged2", "manipulated1")

# Bundled ground-formula evaluator, used wherever tests need an external
# SMT-LIB executable.
SOLVER_COMMAND = f"{shlex.quote(sys.executable)} -m viprcert.smteval {{}}"


def fixture_path(name: str) -> Path:
    return FIXTURE_DIR / f"{name}.vipr"


def load_fixture(name: str):
    return parse_certificate(fixture_path(name).read_bytes())


@pytest.fixture(scope="session")
def corpus():
    return {name: load_fixture(name) for name in CORPUS}


# --- random model mutation (always yields a parseable certificate) ----------


def _mutate_rational(rng: random.Random, value: Rational) -> Rational:
    delta = rng.choice([Rational(1), Rational(-1), Rational(1, 2), Rational(-1, 3)])
    mutated = value + delta
    return mutated if mutated != value else value + 1


def _replace_constraint(problem, certificate, index, constraint):
    """index is 1-based over the unified array."""
    if index <= problem.m:
        constraints = list(problem.constraints)
        constraints[index - 1] = constraint
        return replace(problem, constraints=tuple(constraints)), certificate
    der = list(certificate.der)
    old = der[index - problem.m - 1]
    der[index - problem.m - 1] = replace(old, constraint=constraint)
    return problem, replace(certificate, der=tuple(der))


def mutate_model(problem: Problem, certificate: Certificate, rng: random.Random):
    """Apply one random semantic mutation at the model level."""
    d = problem.m + len(certificate.der)
    for _ in range(64):
        kind = rng.choice(
            ["rhs", "sign", "coefficient", "multiplier", "mult-index", "uns", "rtp", "sol", "objective"]
        )
        if kind == "rhs" and d:
            k = rng.randint(1, d)
            target = _constraint_at(problem, certificate, k)
            mutated = replace(target, rhs=_mutate_rational(rng, target.rhs))
            return _replace_constraint(problem, certificate, k, mutated)
        if kind == "sign" and d:
            k = rng.randint(1, d)
            target = _constraint_at(problem, certificate, k)
            other = rng.choice([s for s in Sign if s is not target.sign])
            return _replace_constraint(problem, certificate, k, replace(target, sign=other))
        if kind == "coefficient" and d:
            k = rng.randint(1, d)
            target = _constraint_at(problem, certificate, k)
            if not target.lhs.terms:
                continue
            j = rng.choice(sorted(target.lhs.terms))
            terms = dict(target.lhs.terms)
            terms[j] = _mutate_rational(rng, terms[j])
            return _replace_constraint(
                problem, certificate, k, replace(target, lhs=LinearExpr(terms))
            )
        if kind in ("multiplier", "mult-index"):
            candidates = [
                i
                for i, dc in enumerate(certificate.der)
                if dc.reason in (Reason.LIN, Reason.RND) and dc.data.weights
            ]
            if not candidates:
                continue
            i = rng.choice(candidates)
            dc = certificate.der[i]
            weights = dict(dc.data.weights)
            key = rng.choice(sorted(weights))
            if kind == "multiplier":
                weights[key] = _mutate_rational(rng, weights[key])
            else:
                weights.pop(key)
                weights[rng.randint(1, d)] = Rational(rng.randint(1, 3))
            der = list(certificate.der)
            der[i] = replace(dc, data=Multipliers(weights))
            return problem, replace(certificate, der=tuple(der))
        if kind == "uns":
            candidates = [
                i for i, dc in enumerate(certificate.der) if dc.reason is Reason.UNS
            ]
            if not candidates:
                continue
            i = rng.choice(candidates)
            dc = certificate.der[i]
            values = list(dc.data.as_tuple())
            values[rng.randrange(4)] = rng.randint(1, d)
            der = list(certificate.der)
            der[i] = replace(dc, data=Unsplit(*values))
            return problem, replace(certificate, der=tuple(der))
        if kind == "rtp":
            rtp = certificate.rtp
            if rtp.infeasible:
                mutated = Rtp.make_range(Rational(0), Rational(rng.randint(0, 2)))
            elif rng.random() < 0.5:
                mutated = Rtp.make_infeasible()
            else:
                lb = rtp.lb if rtp.lb is not None else Rational(0)
                mutated = Rtp.make_range(_mutate_rational(rng, lb), rtp.ub)
            return problem, replace(certificate, rtp=mutated)
        if kind == "sol" and certificate.sol:
            i = rng.randrange(len(certificate.sol))
            point = certificate.sol[i]
            j = rng.randint(1, problem.n)
            coords = dict(point.coords)
            coords[j] = _mutate_rational(rng, point.coordinate(j))
            sol = list(certificate.sol)
            sol[i] = SolutionPoint(point.name, coords)
            return problem, replace(certificate, sol=tuple(sol))
        if kind == "objective" and problem.n:
            j = rng.randint(1, problem.n)
            terms = dict(problem.objective.terms)
            terms[j] = _mutate_rational(rng, problem.objective.coefficient(j))
            return replace(problem, objective=LinearExpr(terms)), certificate
    raise AssertionError("no applicable mutation found")


def _constraint_at(problem, certificate, k):
    if k <= problem.m:
        return problem.constraints[k - 1]
    return certificate.der[k - problem.m - 1].constraint


def mutated_variant(name: str, rng: random.Random):
    """A mutated corpus certificate, normalized through a serialize/parse
    round trip so it is guaranteed to be expressible in the format."""
    problem, certificate = load_fixture(name)
    problem, certificate = mutate_model(problem, certificate, rng)
    return parse_certificate(serialize_certificate(problem, certificate))


# --- small random certificates from scratch ---------------------------------


def random_certificate(rng: random.Random):
    """A tiny random problem and certificate; usually invalid, which is
    the interesting case for agreement tests."""
    n = rng.randint(1, 2)
    var_names = tuple(f"x{j}" for j in range(1, n + 1))
    int_vars = frozenset(j for j in range(1, n + 1) if rng.random() < 0.7)
    sense = rng.choice([Sense.MIN, Sense.MAX])

    def random_expr(allow_empty=True):
        terms = {}
        for j in range(1, n + 1):
            if rng.random() < 0.6:
                terms[j] = Rational(rng.randint(-3, 3))
        if not terms and not allow_empty:
            terms[rng.randint(1, n)] = Rational(rng.choice([-2, -1, 1, 2]))
        return LinearExpr(terms)

    def random_rhs():
        return Rational(rng.randint(-4, 4), rng.choice([1, 1, 2, 3]))

    m = rng.randint(1, 3)
    constraints = tuple(
        Constraint(f"C{i}", random_expr(), rng.choice(list(Sign)), random_rhs())
        for i in range(1, m + 1)
    )
    objective = random_expr()
    problem = Problem(
        n=n,
        var_names=var_names,
        int_vars=int_vars,
        sense=sense,
        objective=objective,
        constraints=constraints,
    )

    if rng.random() < 0.4:
        rtp = Rtp.make_infeasible()
        sol: tuple[SolutionPoint, ...] = ()
    else:
        lb = None if rng.random() < 0.3 else random_rhs()
        ub = None if rng.random() < 0.3 else random_rhs()
        rtp = Rtp.make_range(lb, ub)
        sol = tuple(
            SolutionPoint(
                f"s{i}",
                {j: Rational(rng.randint(-2, 2)) for j in range(1, n + 1) if rng.random() < 0.7},
            )
            for i in range(rng.randint(0, 2))
        )

    der_count = rng.randint(0, 4)
    d = m + der_count
    der = []
    for offset in range(der_count):
        constraint = Constraint(
            f"D{offset}", random_expr(), rng.choice(list(Sign)), random_rhs()
        )
        reason = rng.choice(list(Reason))
        if reason in (Reason.ASM, Reason.SOL):
            data = None
        elif reason in (Reason.LIN, Reason.RND):
            data = Multipliers(
                {
                    rng.randint(1, d): Rational(rng.randint(-2, 2))
                    for _ in range(rng.randint(0, 3))
                }
            )
        else:
            data = Unsplit(*(rng.randint(1, d) for _ in range(4)))
        der.append(DerivedConstraint(constraint, reason, data))
    certificate = Certificate(rtp=rtp, sol=sol, der=tuple(der))
    return problem, certificate


# --- random certificates that are valid by construction ----------------------


def random_valid_certificate(rng: random.Random):
    """Problem plus a certificate assembled so every derivation is
    correct: suitable combinations weaken their own result, roundings
    round their own combination, unsplits reuse a dominating ancestor
    over a genuine split pair, and the final obligation is discharged
    by a combination of problem constraints only (empty assumption set).
    """
    from viprcert import constraint_at, linear_combination
    from viprcert.algebra import roundable_flags

    n = rng.randint(1, 3)
    int_vars = frozenset(
        j for j in range(1, n + 1) if rng.random() < 0.8
    ) or frozenset({1})

    def integral_expr():
        terms = {
            j: Rational(rng.randint(-2, 2))
            for j in sorted(int_vars)
            if rng.random() < 0.8
        }
        if not all(terms.values()):
            terms = {j: c for j, c in terms.items() if c}
        return LinearExpr(terms or {min(int_vars): Rational(1)})

    def any_expr():
        return LinearExpr(
            {
                j: Rational(rng.randint(-3, 3), rng.choice([1, 1, 2]))
                for j in range(1, n + 1)
                if rng.random() < 0.6
            }
        )

    kind = rng.choice(["open", "lower-bound", "upper-bound", "infeasible", "witnessed"])
    m = rng.randint(1, 3)
    points: tuple[SolutionPoint, ...] = ()
    if kind == "witnessed":
        # points first, then constraints every point satisfies
        points = tuple(
            SolutionPoint(
                f"p{i}",
                {
                    j: Rational(
                        rng.randint(-3, 3)
                        if j in int_vars
                        else rng.choice([-2, -1, 1, 2])
                    )
                    for j in range(1, n + 1)
                    if rng.random() < 0.8
                },
            )
            for i in range(rng.randint(1, 2))
        )
        constraints = []
        for i in range(1, m + 1):
            lhs = any_expr()
            values = [lhs.evaluate(p.coords) for p in points]
            if rng.random() < 0.5:
                body = Constraint(f"C{i}", lhs, Sign.GEQ, min(values) - rng.randint(0, 2))
            else:
                body = Constraint(f"C{i}", lhs, Sign.LEQ, max(values) + rng.randint(0, 2))
            constraints.append(body)
    else:
        constraints = [
            Constraint(
                f"C{i}",
                any_expr(),
                rng.choice(list(Sign)),
                Rational(rng.randint(-4, 4), rng.choice([1, 2])),
            )
            for i in range(1, m + 1)
        ]
        if kind == "infeasible":
            # make infeasibility honest: one problem constraint is 0 >= 1
            constraints[rng.randrange(m)] = Constraint(
                "absurd", LinearExpr({}), Sign.GEQ, Rational(1)
            )

    problem = Problem(
        n=n,
        var_names=tuple(f"x{j}" for j in range(1, n + 1)),
        int_vars=int_vars,
        sense=rng.choice([Sense.MIN, Sense.MAX]),
        objective=any_expr(),
        constraints=tuple(constraints),
    )
    rtp: Rtp
    if kind == "witnessed":
        values = [problem.objective.evaluate(p.coords) for p in points]
        if problem.sense is Sense.MIN:
            best = min(values)
            rtp = Rtp.make_range(None, best + rng.randint(0, 2))
        else:
            best = max(values)
            rtp = Rtp.make_range(best - rng.randint(0, 2), None)
    der: list[DerivedConstraint] = []

    def resolve(i):
        return constraint_at(problem, Certificate(Rtp.make_range(None, None), (), tuple(der)), i)

    def suitable_multipliers(limit: int, problem_only: bool = False) -> Multipliers:
        direction = rng.choice([1, -1])  # +1: weights agree with signs (geq)
        weights = {}
        pool = range(1, (m if problem_only else limit) + 1)
        for i in rng.sample(list(pool), k=min(len(pool), rng.randint(1, 3))):
            s = resolve(i).sign.value
            magnitude = Rational(rng.randint(1, 3), rng.choice([1, 2]))
            if s == 0:
                weights[i] = magnitude * rng.choice([1, -1])
            else:
                weights[i] = magnitude * s * direction
        return Multipliers(weights)

    def derived_from_combination(name, multipliers) -> DerivedConstraint:
        combo = linear_combination(multipliers, resolve)
        slack = Rational(rng.randint(0, 2))
        if combo.geq:
            body = Constraint(name, combo.lhs, Sign.GEQ, combo.rhs - slack)
        else:
            body = Constraint(name, combo.lhs, Sign.LEQ, combo.rhs + slack)
        return DerivedConstraint(body, Reason.LIN, multipliers)

    steps = rng.randint(1, 6)
    for step in range(steps):
        k = m + len(der) + 1
        ops = ["lin", "rnd", "asm", "uns"]
        if kind == "witnessed":
            ops.append("sol")
        op = rng.choice(ops)
        if op == "sol":
            # the best listed point's objective bound justifies this
            if problem.sense is Sense.MIN:
                body = Constraint(
                    f"B{step}", problem.objective, Sign.LEQ, best + rng.randint(0, 2)
                )
            else:
                body = Constraint(
                    f"B{step}", problem.objective, Sign.GEQ, best - rng.randint(0, 2)
                )
            der.append(DerivedConstraint(body, Reason.SOL, None))
        elif op == "asm":
            body = Constraint(f"A{step}", any_expr(), rng.choice(list(Sign)), Rational(rng.randint(-3, 3)))
            der.append(DerivedConstraint(body, Reason.ASM, None))
        elif op == "lin":
            der.append(derived_from_combination(f"L{step}", suitable_multipliers(k - 1)))
        elif op == "rnd":
            multipliers = suitable_multipliers(k - 1)
            combo = linear_combination(multipliers, resolve)
            if not roundable_flags(combo.lhs, combo.eq, int_vars):
                der.append(derived_from_combination(f"L{step}", multipliers))
                continue
            if combo.geq:
                ceiling = Rational(-((-combo.rhs).__floor__()))
                if combo.lhs.is_zero and combo.rhs > 0:
                    body = Constraint(f"R{step}", combo.lhs, Sign.GEQ, ceiling)
                else:
                    body = Constraint(f"R{step}", combo.lhs, Sign.GEQ, ceiling - rng.randint(0, 1))
            else:
                floor = Rational(combo.rhs.__floor__())
                if combo.lhs.is_zero and combo.rhs < 0:
                    body = Constraint(f"R{step}", combo.lhs, Sign.LEQ, floor)
                else:
                    body = Constraint(f"R{step}", combo.lhs, Sign.LEQ, floor + rng.randint(0, 1))
            der.append(DerivedConstraint(body, Reason.RND, multipliers))
        else:  # uns over a fresh split pair, reusing a dominating ancestor
            shared = integral_expr()
            delta = rng.randint(-2, 2)
            lower = Constraint(f"S{step}l", shared, Sign.LEQ, Rational(delta))
            upper = Constraint(f"S{step}u", shared, Sign.GEQ, Rational(delta + 1))
            der.append(DerivedConstraint(lower, Reason.ASM, None))
            der.append(DerivedConstraint(upper, Reason.ASM, None))
            i = rng.randint(1, k - 1)
            target = resolve(i)
            body = Constraint(f"U{step}", target.lhs, target.sign, target.rhs)
            der.append(
                DerivedConstraint(body, Reason.UNS, Unsplit(i, k, i, k + 1))
            )

    sol: tuple[SolutionPoint, ...] = ()
    if kind == "witnessed":
        sol = points
    elif kind == "open":
        rtp = Rtp.make_range(None, None)
    elif kind == "infeasible":
        absurd_index = next(
            i for i, c in enumerate(constraints, start=1) if c.name == "absurd"
        )
        der.append(
            DerivedConstraint(
                Constraint("final", LinearExpr({}), Sign.GEQ, Rational(1)),
                Reason.LIN,
                Multipliers({absurd_index: Rational(1)}),
            )
        )
        rtp = Rtp.make_infeasible()
    else:
        # close with a combination of problem constraints only (A = empty),
        # and point the objective at its left-hand side
        multipliers = suitable_multipliers(m, problem_only=True)
        closing = derived_from_combination("final", multipliers)
        der.append(closing)
        problem = replace(problem, objective=closing.constraint.lhs)
        bound = closing.constraint.rhs
        if closing.constraint.sign is Sign.GEQ:
            problem = replace(problem, sense=Sense.MIN)
            rtp = Rtp.make_range(bound - rng.randint(0, 2), None)
        else:
            problem = replace(problem, sense=Sense.MAX)
            rtp = Rtp.make_range(None, bound + rng.randint(0, 2))

    certificate = Certificate(rtp=rtp, sol=sol, der=tuple(der))
    return parse_certificate(serialize_certificate(problem, certificate))
