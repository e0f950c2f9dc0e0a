from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from novikov.complex import FilteredComplex, Generator, barcode, random_complex, validate
from novikov.core import NovikovScalar
from novikov.matrix import Matrix
from novikov.perturbation import (
    BlockLeak,
    DivergentSeries,
    InvalidSplit,
    Perturbation,
    SDRData,
    apply_bpl,
    identity_sdr,
    level_raise,
    local_homology_dims,
    random_sdr,
    strictify,
    validate_sdr,
)

F = Fraction


def mono(p, c, e):
    return NovikovScalar.monomial(c, F(e), p)


def complex_of(p, gens, entries, E=8):
    gs = [Generator(g, a) for g, a in gens]
    return FilteredComplex(p, E, gs, {k: mono(p, c, e) for k, (c, e) in entries.items()})


@pytest.fixture
def zigzag():
    """x1 -> T y, z -> y + T x2 over F_3: one bar of length 2 once the pair (z, y) cancels."""
    return complex_of(
        3,
        [("x1", 0), ("x2", 0), ("y", 0), ("z", 0)],
        {("y", "x1"): (1, 1), ("y", "z"): (1, 0), ("x2", "z"): (1, 1)},
    )


# retracts and the perturbation lemma ------------------------------------


def test_identity_retract_is_valid(zigzag):
    assert validate_sdr(identity_sdr(zigzag)).ok


def test_nonzero_hg_is_flagged():
    C = complex_of(2, [("a", 0)], {})
    S = identity_sdr(C)
    S.H = Matrix.identity(2, 1)
    kinds = {v["kind"] for v in validate_sdr(S).violations}
    assert "HG=0" in kinds and "HH=0" in kinds


def test_negative_valuation_map_is_flagged():
    C = complex_of(2, [("a", 0)], {})
    S = identity_sdr(C)
    S.F = Matrix(2, 1, 1, {(0, 0): mono(2, 1, -1)})
    assert validate_sdr(S).violations[0]["kind"] == "F not filtration preserving"


def test_zero_perturbation_changes_nothing(zigzag):
    S = identity_sdr(zigzag)
    S2 = apply_bpl(S, Matrix.zero(3, 4, 4))
    assert S2.F == S.F and S2.G == S.G and S2.H == S.H


def test_level_preserving_perturbation_diverges(zigzag):
    S = identity_sdr(zigzag)
    D = Matrix(3, 4, 4, {(0, 1): mono(3, 1, 0)})
    with pytest.raises(DivergentSeries):
        apply_bpl(S, D)


def test_level_raise():
    assert level_raise(Matrix.zero(2, 2, 2)) is None
    assert level_raise(Matrix(2, 1, 1, {(0, 0): mono(2, 1, F(3, 4))})) == F(3, 4)
    assert Perturbation.of(Matrix(2, 1, 1, {(0, 0): mono(2, 1, 2)})).gap == 2


@pytest.mark.parametrize("seed", range(6))
def test_random_retracts_survive_perturbation(seed):
    S, P = random_sdr(seed, [2, 3, 5][seed % 3], 2, 2, [F(1, 2), F(1)], precision=8)
    assert validate_sdr(S).ok
    S2 = apply_bpl(S, P)
    assert validate_sdr(S2).ok
    assert validate(S2.N).ok


# strictification --------------------------------------------------------


def test_local_homology_dims(zigzag):
    assert local_homology_dims(zigzag) == 2
    assert local_homology_dims(zigzag, ["y", "z"]) == 0
    assert local_homology_dims(zigzag, ["x1"]) == 1


def test_strictify_hand_example(zigzag):
    Cs, S = strictify(zigzag)
    assert [g.id for g in Cs.generators] == ["x1", "x2"]
    assert Cs.is_strict()
    assert Cs.entry("x2", "x1") == mono(3, -1, 2)
    assert validate_sdr(S).ok


def test_strict_complex_is_unchanged():
    C = complex_of(5, [("a", 0), ("b", F(1, 2))], {("b", "a"): (2, F(1, 2))})
    Cs, _ = strictify(C)
    assert Cs.d == C.d
    assert [g.action for g in Cs.generators] == [0, F(1, 2)]


def test_strictify_with_blocks(zigzag):
    Cs, _ = strictify(zigzag, blocks=[["y", "z"]])
    assert Cs.n == 2
    assert barcode(Cs).lengths() == [F(2)]


def test_block_leak_detected(zigzag):
    with pytest.raises(BlockLeak):
        strictify(zigzag, blocks=[["y"], ["z"]])


def test_non_square_zero_split_is_rejected():
    C = complex_of(2, [("x", 0), ("y", 0)], {("y", "x"): (1, 0), ("x", "y"): (1, 0)})
    with pytest.raises(InvalidSplit):
        strictify(C)


def test_filtration_violation_is_rejected():
    C = complex_of(2, [("x", 0), ("y", 0)], {("y", "x"): (1, -1)})
    with pytest.raises(InvalidSplit):
        strictify(C)


complexes = st.tuples(
    st.integers(0, 10**6),
    st.sampled_from([2, 3, 5]),
    st.integers(1, 3),
    st.integers(0, 2),
).map(
    lambda t: random_complex(
        t[0], 2 * t[2] + 2 * t[3] + 1, [F(1, 2), F(1)],
        [F(1, 2) * (k + 1) for k in range(t[2])], p=t[1], precision=8,
        cancelling_pairs=t[3], action_pool=[F(0), F(1, 2)],
    )
)


@given(complexes)
def test_strictify_properties(C):
    Cs, S = strictify(C)
    assert Cs.is_strict()
    assert Cs.n == local_homology_dims(C)
    assert barcode(Cs).lengths() == barcode(C).lengths()
    assert barcode(Cs).free_rank == barcode(C).free_rank
    again, _ = strictify(Cs)
    assert again.d == Cs.d
