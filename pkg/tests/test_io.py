import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from novikov import io as fileio
from novikov.complex import FilteredComplex, Generator, barcode, random_complex
from novikov.core import NovikovScalar
from novikov.equivariant import tate_equivariant
from novikov.perturbation import random_sdr
from novikov.xk import xk_from_equivariant

F = Fraction

MINIMAL = """{
  "header": {"modulus": 3, "precision": [4, 1]},
  "generators": [{"id": "x", "action": [0, 1], "degree": 1},
                 {"id": "y", "action": [1, 2], "degree": 0}],
  "differential": [{"from": "x", "to": "y", "terms": [[2, 1, 2]]}]
}
"""


def test_minimal_file():
    cf = fileio.loads(MINIMAL)
    C = cf.complex
    assert C.p == 3 and C.precision == 4
    assert [g.action for g in C.generators] == [0, F(1, 2)]
    assert C.entry("y", "x") == NovikovScalar.monomial(2, F(1, 2), 3)
    assert barcode(C).lengths() == [1]
    assert cf.sdr is None and cf.families is None and cf.xk_operators is None


def test_round_trip_is_canonical():
    text = fileio.dumps(fileio.loads(MINIMAL))
    assert fileio.dumps(fileio.loads(text)) == text
    json.loads(text)


def test_attachments_round_trip():
    gens = [Generator("x", F(0), 1), Generator("y", F(0), 0)]
    C = FilteredComplex(3, 4, gens, {("y", "x"): NovikovScalar.monomial(1, F(1, 2), 3)}, graded=True)
    Eq = tate_equivariant(C, 3, 2)
    X = xk_from_equivariant(Eq)
    cf = fileio.ComplexFile(Eq.base, 2, [[g.id for g in Eq.base.generators[:3]]], None, Eq.families, None)
    back = fileio.loads(fileio.dumps(cf))
    assert back.families.keys() == Eq.families.keys()
    assert all(back.families[k] == Eq.families[k] for k in Eq.families)
    assert back.blocks == cf.blocks and back.u_precision == 2
    Cx = FilteredComplex.from_normalized(3, 4, [Generator(g.id) for g in X.generators], X.ops[0])
    again = fileio.loads(fileio.dumps(fileio.ComplexFile(Cx, xk_operators=X.ops)))
    assert again.xk_operators == X.ops


def test_sdr_round_trip():
    S, _ = random_sdr(2, 3, 2, 1, [F(1, 2), F(1)], precision=8)
    back = fileio.loads(fileio.dumps(fileio.ComplexFile(S.M, sdr=S))).sdr
    assert back.F == S.F and back.G == S.G and back.H == S.H
    assert back.N.d == S.N.d


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ('{"header": {"modulus": 3, "precision": [4, 1]},\n "generators": [}', 2, "Expecting"),
        ('{"header": {"modulus": 4, "precision": [4, 1]},\n "generators": [], "differential": []}', 1, "prime"),
        (
            '{"header": {"modulus": 2, "precision": [4, 1]},\n'
            ' "generators": [{"id": "x", "action": [0, 1], "degree": 0}],\n'
            ' "differential": [{"from": "x", "to": "z", "terms": [[1, 0, 1]]}]}',
            3,
            "z",
        ),
    ],
)
def test_parse_errors_carry_positions(text, line, fragment):
    with pytest.raises(fileio.ParseError) as info:
        fileio.loads(text)
    assert info.value.line == line
    assert info.value.column is not None
    assert fragment in str(info.value)


def test_missing_section_is_reported():
    with pytest.raises(fileio.ParseError) as info:
        fileio.loads('{"header": {"modulus": 2, "precision": [1, 1]}, "generators": []}')
    assert "differential" in str(info.value)


@given(st.integers(0, 10**6), st.sampled_from([2, 3, 5]), st.integers(0, 5), st.booleans())
def test_random_complexes_round_trip(seed, p, n, actions):
    C = random_complex(seed, n, [F(1, 3), F(1, 2), F(2)], p=p, precision=F(7, 2),
                       action_pool=[F(0), F(1, 3), F(-1, 2)] if actions else None)
    text = fileio.complex_to_text(C)
    back = fileio.loads(text).complex
    assert back.generators == C.generators
    assert back.d == C.d and back.precision == C.precision
    assert fileio.complex_to_text(back) == text
