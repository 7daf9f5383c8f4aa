"""Emission of the validity formula as partitioned SMT-LIB files, and
orchestration of an external solver over them.

The split of labor: this side computes only assumption sets and the
sign flags of linear combinations, folding them into the emitted text
as Boolean constants; every sum, product, comparison, floor/ceiling,
and integrality test is written out symbolically for the solver to
re-derive.  Each file is a ground script: one `(set-logic ALL)`, one
`(assert ...)` with no declared symbols, one `(check-sat)`, so `sat`
means "this slice of the formula holds".

Files partition the formula as: one solution-side file, consecutive
blocks of per-derivation conjuncts, and one file for the closing
obligation on the last constraint.  The aggregate over all files is
therefore exactly the whole-certificate verdict.
"""

from __future__ import annotations

import shlex
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

from .checker import AssumptionSets, EmptyConstraintSystem, RtpFlags
from .model import (
    Certificate,
    Constraint,
    LinearExpr,
    Multipliers,
    Problem,
    Reason,
    Sign,
    Unsplit,
    constraint_at,
    total_constraints,
)
from .rational import ONE, Rational, ZERO

_RZERO = "(/ 0 1)"
_RONE = "(/ 1 1)"


def _rat(value: Rational) -> str:
    if value < 0:
        return f"(- (/ {-value.numerator} {value.denominator}))"
    return f"(/ {value.numerator} {value.denominator})"


def _conj(parts: Sequence[str]) -> str:
    flat = [p for p in parts if p != "true"]
    if any(p == "false" for p in flat):
        return "false"
    if not flat:
        return "true"
    if len(flat) == 1:
        return flat[0]
    return "(and " + " ".join(flat) + ")"


def _disj(parts: Sequence[str]) -> str:
    flat = [p for p in parts if p != "false"]
    if any(p == "true" for p in flat):
        return "true"
    if not flat:
        return "false"
    if len(flat) == 1:
        return flat[0]
    return "(or " + " ".join(flat) + ")"


def _sum(terms: Sequence[str]) -> str:
    if not terms:
        return _RZERO
    if len(terms) == 1:
        return terms[0]
    return "(+ " + " ".join(terms) + ")"


def _ceil(expr: str) -> str:
    return f"(to_real (- (to_int (- {expr}))))"


def _floor(expr: str) -> str:
    return f"(to_real (to_int {expr}))"


def _dom_expr(
    a_exprs: dict[int, str],
    b_expr: str,
    eq: bool,
    geq: bool,
    leq: bool,
    target: Constraint,
) -> str:
    """Domination of a (possibly symbolic) source over a literal target;
    the source's sign flags are already folded."""
    if eq:
        absurd_tail: Optional[str] = f"(not (= {b_expr} {_RZERO}))"
    elif geq:
        absurd_tail = f"(> {b_expr} {_RZERO})"
    elif leq:
        absurd_tail = f"(< {b_expr} {_RZERO})"
    else:
        absurd_tail = None
    if absurd_tail is None:
        absurd = "false"
    else:
        zeros = [f"(= {a_exprs[j]} {_RZERO})" for j in sorted(a_exprs)]
        absurd = _conj(zeros + [absurd_tail])

    support = sorted(set(a_exprs) | set(target.lhs.terms))
    same_lhs = [
        f"(= {a_exprs.get(j, _RZERO)} {_rat(target.lhs.coefficient(j))})" for j in support
    ]
    rhs = _rat(target.rhs)
    if target.sign is Sign.EQ:
        direct = "false" if not eq else _conj(same_lhs + [f"(= {b_expr} {rhs})"])
    elif target.sign is Sign.GEQ:
        direct = "false" if not geq else _conj(same_lhs + [f"(>= {b_expr} {rhs})"])
    else:
        direct = "false" if not leq else _conj(same_lhs + [f"(<= {b_expr} {rhs})"])
    return _disj([absurd, direct])


def _literal_exprs(constraint: Constraint) -> tuple[dict[int, str], str]:
    a_exprs = {j: _rat(c) for j, c in constraint.lhs.terms.items()}
    return a_exprs, _rat(constraint.rhs)


def _constraint_dom_expr(source: Constraint, target: Constraint) -> str:
    a_exprs, b_expr = _literal_exprs(source)
    s = source.sign.value
    return _dom_expr(a_exprs, b_expr, s == 0, s >= 0, s <= 0, target)


def _dis_expr(ci: Constraint, cj: Constraint, int_vars: frozenset[int]) -> str:
    si, sj = ci.sign.value, cj.sign.value
    if si == 0 or si + sj != 0:
        return "false"
    support = sorted(set(ci.lhs.terms) | set(cj.lhs.terms))
    parts = [
        f"(= {_rat(ci.lhs.coefficient(j))} {_rat(cj.lhs.coefficient(j))})" for j in support
    ]
    for j, coefficient in ci.lhs.items_sorted():
        if j in int_vars:
            parts.append(f"(is_int {_rat(coefficient)})")
        else:
            parts.append(f"(= {_rat(coefficient)} {_RZERO})")
    parts.append(f"(is_int {_rat(ci.rhs)})")
    parts.append(f"(is_int {_rat(cj.rhs)})")
    if si == 1:
        parts.append(f"(= {_rat(ci.rhs)} (+ {_rat(cj.rhs)} {_RONE}))")
    else:
        parts.append(f"(= {_rat(ci.rhs)} (- {_rat(cj.rhs)} {_RONE}))")
    return _conj(parts)


def _symbolic_combination(
    problem: Problem, certificate: Certificate, multipliers: Multipliers
) -> tuple[dict[int, str], str, bool, bool]:
    """Per-variable sum expressions and the bound sum for a combination,
    plus the folded sign flags.  Zero-parsed factors never appear."""
    a_terms: dict[int, list[str]] = {}
    b_terms: list[str] = []
    geq = True
    leq = True
    for i, weight in multipliers.items_sorted():
        constraint = constraint_at(problem, certificate, i)
        weighted_sign = weight * constraint.sign.value
        if weighted_sign < 0:
            geq = False
        if weighted_sign > 0:
            leq = False
        w = _rat(weight)
        for j, coefficient in constraint.lhs.items_sorted():
            a_terms.setdefault(j, []).append(f"(* {w} {_rat(coefficient)})")
        if constraint.rhs != 0:
            b_terms.append(f"(* {w} {_rat(constraint.rhs)})")
    a_exprs = {j: _sum(terms) for j, terms in a_terms.items()}
    return a_exprs, _sum(b_terms), geq, leq


def _objective_dot(problem: Problem, coords) -> str:
    terms = []
    for j, c in problem.objective.items_sorted():
        value = coords.get(j, ZERO)
        if value:
            terms.append(f"(* {_rat(c)} {_rat(value)})")
    return _sum(terms)


def der_constraint_expr(problem: Problem, certificate: Certificate, k: int) -> str:
    """Ground formula for the validity of derived constraint C_k; the
    assumption predicate is discharged at emission time."""
    derived = certificate.der[k - problem.m - 1]
    target = derived.constraint
    d = total_constraints(problem, certificate)

    if derived.reason is Reason.ASM:
        return "true"

    if derived.reason in (Reason.LIN, Reason.RND):
        assert isinstance(derived.data, Multipliers)
        indices = sorted(derived.data.weights)
        if any(not 1 <= i <= d for i in indices):
            return "false"
        prv = [f"(< {i} {k})" for i in indices]
        a_exprs, b_expr, geq, leq = _symbolic_combination(problem, certificate, derived.data)
        if derived.reason is Reason.LIN:
            return _conj(prv + [_dom_expr(a_exprs, b_expr, geq and leq, geq, leq, target)])
        if geq and leq:  # an equality combination is never roundable
            return "false"
        roundable = []
        for j in sorted(a_exprs):
            if j in problem.int_vars:
                roundable.append(f"(is_int {a_exprs[j]})")
            else:
                roundable.append(f"(= {a_exprs[j]} {_RZERO})")
        if geq:
            absurd_tail: Optional[str] = f"(> {b_expr} {_RZERO})"
        elif leq:
            absurd_tail = f"(< {b_expr} {_RZERO})"
        else:
            absurd_tail = None
        if absurd_tail is None:
            absurd = "false"
        else:
            zeros = [f"(= {a_exprs[j]} {_RZERO})" for j in sorted(a_exprs)]
            absurd = _conj(zeros + [absurd_tail])
        support = sorted(set(a_exprs) | set(target.lhs.terms))
        same_lhs = [
            f"(= {a_exprs.get(j, _RZERO)} {_rat(target.lhs.coefficient(j))})" for j in support
        ]
        rhs = _rat(target.rhs)
        if target.sign is Sign.EQ:
            rounded = "false"
        elif target.sign is Sign.GEQ:
            rounded = "false" if not geq else _conj(same_lhs + [f"(>= {_ceil(b_expr)} {rhs})"])
        else:
            rounded = "false" if not leq else _conj(same_lhs + [f"(<= {_floor(b_expr)} {rhs})"])
        return _conj(prv + roundable + [_disj([absurd, rounded])])

    if derived.reason is Reason.UNS:
        assert isinstance(derived.data, Unsplit)
        data = derived.data
        if any(not 1 <= i <= d for i in data.as_tuple()):
            return "false"
        parts = [f"(> {k} {i})" for i in data.as_tuple()]
        parts.append(
            _constraint_dom_expr(constraint_at(problem, certificate, data.i1), target)
        )
        parts.append(
            _constraint_dom_expr(constraint_at(problem, certificate, data.i2), target)
        )
        parts.append(
            _dis_expr(
                constraint_at(problem, certificate, data.l1),
                constraint_at(problem, certificate, data.l2),
                problem.int_vars,
            )
        )
        return _conj(parts)

    # sol reasoning
    minimize = problem.sense.value == "min"
    a_exprs = {j: _rat(c) for j, c in problem.objective.terms.items()}
    branches = []
    for point in certificate.sol:
        b_expr = _objective_dot(problem, point.coords)
        branches.append(
            _dom_expr(a_exprs, b_expr, False, not minimize, minimize, target)
        )
    return _disj(branches)


def sol_expr(problem: Problem, certificate: Certificate, flags: RtpFlags) -> str:
    """Ground formula for the solution side."""
    if not flags.has_range:
        return "true" if not certificate.sol else "false"
    parts: list[str] = []
    for point in certificate.sol:
        for j in sorted(problem.int_vars):
            value = point.coordinate(j)
            if value:
                parts.append(f"(is_int {_rat(value)})")
        for constraint in problem.constraints:
            terms = []
            for j, coefficient in constraint.lhs.items_sorted():
                value = point.coordinate(j)
                if value:
                    terms.append(f"(* {_rat(coefficient)} {_rat(value)})")
            dot = _sum(terms)
            rhs = _rat(constraint.rhs)
            s = constraint.sign.value
            if s >= 0:
                parts.append(f"(>= {dot} {rhs})")
            if s <= 0:
                parts.append(f"(<= {dot} {rhs})")
    if flags.minimize and flags.prove_upper:
        bound = _rat(flags.upper)
        parts.append(
            _disj([f"(<= {_objective_dot(problem, p.coords)} {bound})" for p in certificate.sol])
        )
    elif not flags.minimize and flags.prove_lower:
        bound = _rat(flags.lower)
        parts.append(
            _disj([f"(>= {_objective_dot(problem, p.coords)} {bound})" for p in certificate.sol])
        )
    return _conj(parts)


def final_expr(
    problem: Problem, certificate: Certificate, asets: AssumptionSets, flags: RtpFlags
) -> str:
    """Ground formula for the closing obligation on the last constraint."""
    if not flags.has_range:
        target = Constraint("absurdity", LinearExpr({}), Sign.GEQ, ONE)
    elif flags.minimize and flags.prove_lower:
        target = Constraint("objective-bound", problem.objective, Sign.GEQ, flags.lower)
    elif not flags.minimize and flags.prove_upper:
        target = Constraint("objective-bound", problem.objective, Sign.LEQ, flags.upper)
    else:
        return "true"
    d = total_constraints(problem, certificate)
    if d == 0:
        raise EmptyConstraintSystem(
            "the relation to prove requires a last constraint, but there are none"
        )
    last = constraint_at(problem, certificate, d)
    assumption_free = "true" if not asets.at(d) else "false"
    return _conj([_constraint_dom_expr(last, target), assumption_free])


# --- emission plan and file writing ----------------------------------------


@dataclass(frozen=True)
class EmissionPlan:
    """Partition of the per-derivation conjuncts into consecutive blocks."""

    block_size: int
    blocks: tuple[tuple[int, int], ...]

    @classmethod
    def create(
        cls,
        problem: Problem,
        certificate: Certificate,
        block_size: Optional[int] = None,
        workers: int = 1,
    ) -> "EmissionPlan":
        count = len(certificate.der)
        if block_size is None:
            block_size = max(1, count // max(1, workers))
        if block_size < 1:
            raise ValueError("block size must be positive")
        m = problem.m
        blocks = tuple(
            (start, min(start + block_size - 1, m + count))
            for start in range(m + 1, m + count + 1, block_size)
        )
        return cls(block_size=block_size, blocks=blocks)


@dataclass(frozen=True)
class EmittedFile:
    path: Path
    kind: str  # "sol" | "block" | "final"
    first_k: Optional[int] = None
    last_k: Optional[int] = None

    @property
    def label(self) -> str:
        if self.kind == "block":
            return f"block[{self.first_k}..{self.last_k}]"
        return self.kind


def _write_script(path: Path, expression: str) -> None:
    path.write_text(f"(set-logic ALL)\n(assert {expression})\n(check-sat)\n", encoding="utf-8")


def emit(
    problem: Problem,
    certificate: Certificate,
    asets: AssumptionSets,
    plan: EmissionPlan,
    out_dir: Union[str, Path],
) -> list[EmittedFile]:
    """Write the solution file, one file per block, and the final file.

    Emission is deterministic: identical inputs and plan produce
    byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    flags = RtpFlags.of(problem, certificate)
    files: list[EmittedFile] = []

    sol_path = out / "sol.smt2"
    _write_script(sol_path, sol_expr(problem, certificate, flags))
    files.append(EmittedFile(sol_path, "sol"))

    width = max(4, len(str(total_constraints(problem, certificate))))
    for first_k, last_k in plan.blocks:
        conjuncts = [
            der_constraint_expr(problem, certificate, k) for k in range(first_k, last_k + 1)
        ]
        path = out / f"der_{first_k:0{width}d}_{last_k:0{width}d}.smt2"
        _write_script(path, _conj(conjuncts))
        files.append(EmittedFile(path, "block", first_k, last_k))

    final_path = out / "final.smt2"
    _write_script(final_path, final_expr(problem, certificate, asets, flags))
    files.append(EmittedFile(final_path, "final"))
    return files


# --- dispatch ----------------------------------------------------------------


class SolverSpawnError(Exception):
    """The solver command could not be started at all."""


class Aggregate(Enum):
    VALID = "valid"
    INVALID = "invalid"
    ERROR = "error"


@dataclass(frozen=True)
class FileOutcome:
    path: Path
    status: str  # "sat" | "unsat" | "timeout" | "error" | "cancelled"
    detail: str = ""


@dataclass(frozen=True)
class DispatchResult:
    outcomes: tuple[FileOutcome, ...]

    @property
    def aggregate(self) -> Aggregate:
        statuses = [o.status for o in self.outcomes]
        if any(s == "unsat" for s in statuses):
            return Aggregate.INVALID
        if all(s == "sat" for s in statuses):
            return Aggregate.VALID
        return Aggregate.ERROR


def _solver_argv(command: str, path: Path) -> list[str]:
    tokens = shlex.split(command)
    if not tokens:
        raise SolverSpawnError("empty solver command")
    if any("{}" in token for token in tokens):
        return [token.replace("{}", str(path)) for token in tokens]
    return tokens + [str(path)]


def _parse_solver_output(stdout: str) -> Optional[str]:
    lines = [line.strip() for line in stdout.splitlines() if line.strip()]
    if not lines:
        return None
    first_token = lines[-1].split()[0].lower()
    if first_token in ("sat", "unsat", "unknown"):
        return first_token
    return None


def dispatch(
    files: Sequence[Union[Path, EmittedFile]],
    solver_command: str,
    jobs: int = 1,
    timeout_s: float = 300.0,
) -> DispatchResult:
    """Run the solver over every file with a bounded subprocess pool.

    Work not yet started when some file comes back unsat is cancelled;
    a timeout or unparseable solver response is recorded as a failure
    of that file and makes the aggregate an error, never a pass.
    """
    paths = [f.path if isinstance(f, EmittedFile) else Path(f) for f in files]
    stop = threading.Event()

    def run_one(path: Path) -> FileOutcome:
        if stop.is_set():
            return FileOutcome(path, "cancelled", "not run: earlier file was unsat")
        argv = _solver_argv(solver_command, path)
        try:
            process = subprocess.Popen(
                argv,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
            )
        except OSError as exc:
            raise SolverSpawnError(f"cannot start solver {argv[0]!r}: {exc}") from exc
        try:
            stdout, stderr = process.communicate(timeout=timeout_s)
        except subprocess.TimeoutExpired:
            process.kill()
            process.communicate()
            return FileOutcome(path, "timeout", f"no answer within {timeout_s}s")
        answer = _parse_solver_output(stdout)
        if answer == "sat":
            return FileOutcome(path, "sat")
        if answer == "unsat":
            stop.set()
            return FileOutcome(path, "unsat")
        detail = answer or (stderr.strip() or stdout.strip() or "no output")
        return FileOutcome(path, "error", detail[:500])

    if jobs > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_one, paths))
    else:
        outcomes = [run_one(path) for path in paths]
    return DispatchResult(outcomes=tuple(outcomes))
