from __future__ import annotations

import io
import subprocess
import sys

import pytest

from viprcert.rational import Rational
from viprcert.smteval import EvalError, evaluate, parse_script, run_script


def term(text: str):
    (node,) = parse_script(text)
    return node


def test_arithmetic():
    assert evaluate(term("(+ 1 2 3)")) == 6
    assert evaluate(term("(- 5)")) == -5
    assert evaluate(term("(- 5 1 1)")) == 3
    assert evaluate(term("(* 2 (/ 1 3))")) == Rational(2, 3)
    assert evaluate(term("(/ 1 4)")) == Rational(1, 4)
    assert evaluate(term("1.5")) == Rational(3, 2)


def test_floor_semantics_of_to_int():
    assert evaluate(term("(to_int (/ 1 2))")) == 0
    assert evaluate(term("(to_int (- (/ 1 2)))")) == -1
    assert evaluate(term("(- (to_int (- (/ 1 4))))")) == 1  # ceiling encoding
    assert evaluate(term("(to_real 3)")) == 3


def test_is_int():
    assert evaluate(term("(is_int (/ 4 2))")) is True
    assert evaluate(term("(is_int (/ 1 2))")) is False
    assert evaluate(term("(is_int 7)")) is True


def test_boolean_connectives():
    assert evaluate(term("(and true (or false true))")) is True
    assert evaluate(term("(=> false false)")) is True
    assert evaluate(term("(=> true false)")) is False
    assert evaluate(term("(ite (< 1 2) (= 1 1) false)")) is True
    assert evaluate(term("(not (distinct 1 1))")) is True
    assert evaluate(term("(xor true true)")) is False


def test_chainable_comparisons():
    assert evaluate(term("(< 1 2 3)")) is True
    assert evaluate(term("(< 1 3 2)")) is False
    assert evaluate(term("(>= (/ 1 1) (/ 1 1) (/ 0 1))")) is True


def test_mixed_equality_is_rejected():
    with pytest.raises(EvalError):
        evaluate(term("(= true 1)"))


def test_free_symbols_are_rejected():
    with pytest.raises(EvalError):
        evaluate(term("(+ x 1)"))


def test_division_by_zero_is_an_error():
    with pytest.raises(EvalError):
        evaluate(term("(/ 1 0)"))


def test_run_script_prints_sat_per_check():
    out = io.StringIO()
    ok = run_script("(set-logic ALL)(assert (= 1 1))(check-sat)", out=out)
    assert ok and out.getvalue() == "sat\n"
    out = io.StringIO()
    ok = run_script("(assert (= 1 2))(check-sat)", out=out)
    assert not ok and out.getvalue() == "unsat\n"


def test_comments_and_exit():
    out = io.StringIO()
    run_script("; header\n(assert true)\n(check-sat)\n(exit)\n(assert false)", out=out)
    assert out.getvalue() == "sat\n"


def test_unsupported_command_is_an_error():
    with pytest.raises(EvalError):
        run_script("(declare-const x Int)(check-sat)")


def test_command_line_interface(tmp_path):
    script = tmp_path / "ground.smt2"
    script.write_text("(set-logic ALL)\n(assert (>= (/ 1 4) (/ 0 1)))\n(check-sat)\n")
    result = subprocess.run(
        [sys.executable, "-m", "viprcert.smteval", str(script)],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert result.stdout.strip() == "sat"

    script.write_text("(assert (>= (/ 0 1) (/ 1 4)))\n(check-sat)\n")
    result = subprocess.run(
        [sys.executable, "-m", "viprcert.smteval", str(script)],
        capture_output=True,
        text=True,
    )
    assert result.stdout.strip() == "unsat"
