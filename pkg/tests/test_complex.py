import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from novikov.complex import (
    AtLeastE,
    ChainVector,
    FilteredComplex,
    Generator,
    NoTorsion,
    InfeasiblePlant,
    barcode,
    boundary_depth,
    image_rank_under_shift,
    nonvanishing_transfer,
    normalize,
    persistence_map,
    random_complex,
    sigma,
    tau_drop,
    validate,
    window_homology,
)
from novikov.core import NovikovScalar
from oracles import barcode_oracle, persistence_oracle, window_oracle

F = Fraction


def mono(p, c, e):
    return NovikovScalar.monomial(c, F(e), p)


def complex_of(p, gens, entries, E=8, graded=False):
    """gens: list of (id, action) or (id, action, degree); entries: {(to, from): (coeff, exp)}."""
    gs = [Generator(*g) for g in gens]
    return FilteredComplex(
        p, E, gs, {k: mono(p, c, e) for k, (c, e) in entries.items()}, graded
    )


@pytest.fixture
def single_bar():
    """d(x) = T^(1/2) y over F_2 with both actions zero."""
    return complex_of(2, [("x", F(0)), ("y", F(0))], {("y", "x"): (1, F(1, 2))})


@pytest.fixture
def two_bars():
    return complex_of(
        3,
        [("a", F(0)), ("b", F(0)), ("c", F(0)), ("e", F(0))],
        {("b", "a"): (1, F(1, 3)), ("e", "c"): (2, F(2, 3))},
    )


def lambda0_instances(count, seed):
    """Random complexes whose raw entries lie in Lambda_0, with actions on the grid."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        p = rng.choice([2, 3, 5])
        q = rng.choice([1, 2, 3])
        n = rng.randint(1, 5)
        pool = [F(k, q) for k in range(1, 3 * q + 1)]
        C = random_complex(
            rng.randrange(10**6), n, pool, p=p, precision=8,
            action_pool=[F(k, q) for k in range(q + 1)],
        )
        if all(v.valuation() >= 0 for v in C.d.data.values()):
            out.append((C, q, rng))
    return out


# validation -----------------------------------------------------------


def test_zero_differential_is_valid():
    C = complex_of(5, [("x", F(0)), ("y", F(1))], {})
    assert validate(C).ok


def test_d_squared_violation_located():
    C = complex_of(2, [("x", F(0)), ("y", F(0))], {("y", "x"): (1, 0), ("x", "y"): (1, 0)})
    rep = validate(C)
    kinds = {(v["kind"], v["to"], v["from"]) for v in rep.violations}
    assert ("d_squared", "x", "x") in kinds
    assert not rep.ok


def test_negative_level_change_is_filtration_violation():
    C = complex_of(3, [("x", F(0)), ("y", F(0))], {("y", "x"): (1, -1)})
    rep = validate(C)
    assert [v["kind"] for v in rep.violations] == ["filtration"]
    assert rep.violations[0]["level_change"] == -1


def test_degree_violation_in_graded_mode():
    C = complex_of(2, [("x", F(0), 0), ("y", F(0), 0)], {("y", "x"): (1, 1)}, graded=True)
    assert [v["kind"] for v in validate(C).violations] == ["degree"]


def test_duplicate_ids_and_bad_modulus_rejected():
    with pytest.raises(ValueError):
        complex_of(2, [("x", F(0)), ("x", F(1))], {})
    with pytest.raises(ValueError):
        complex_of(4, [("x", F(0))], {})


# normalization ----------------------------------------------------------


def test_normalize_rescales_by_action_gap():
    C = complex_of(5, [("x", F(0)), ("y", F(1))], {("y", "x"): (1, 0)})
    N = normalize(C)
    assert all(g.action == 0 for g in N.generators)
    assert N.entry("y", "x") == mono(5, 1, 1)


def test_normalize_preserves_barcode(two_bars):
    C = random_complex(3, 6, [F(1, 2), F(1)], [F(1, 2), F(3, 2)], p=3, precision=8,
                       action_pool=[F(0), F(1, 2), F(1)])
    assert barcode(normalize(C)).lengths() == barcode(C).lengths() == [F(1, 2), F(3, 2)]


# barcodes ---------------------------------------------------------------


def test_single_bar(single_bar):
    bc = barcode(single_bar)
    assert bc.free_rank == 0
    assert bc.lengths() == [F(1, 2)]
    assert bc.bars[0].birth == 0


def test_two_bars_match_oracle(two_bars):
    bc = barcode(two_bars)
    assert bc.lengths() == [F(1, 3), F(2, 3)]
    assert barcode_oracle(two_bars, 3) == (0, [F(1, 3), F(2, 3)])


def test_cancelling_pair_is_not_a_bar():
    C = complex_of(3, [("x", F(0)), ("y", F(0)), ("z", F(0))], {("y", "x"): (2, 0)})
    bc = barcode(C)
    assert bc.bars == [] and bc.free_rank == 1


def test_empty_complex():
    C = complex_of(2, [], {})
    assert barcode(C).free_rank == 0 and barcode(C).bars == []


def test_long_bar_is_censored_when_acyclic():
    C = complex_of(2, [("x", F(0)), ("y", F(0))], {("y", "x"): (1, 5)}, E=4)
    assert barcode(C).free_rank == 2
    bc = barcode(C, acyclic=True)
    assert bc.free_rank == 0
    assert bc.bars == [type(bc.bars[0])(None, AtLeastE(F(4)))]
    assert bc.lengths() == []


def test_acyclic_rejects_odd_free_rank():
    C = complex_of(2, [("x", F(0))], {})
    with pytest.raises(ValueError):
        barcode(C, acyclic=True)


def test_bars_agree_with_oracle_across_actions():
    for seed in range(25):
        rng = random.Random(seed)
        q = rng.choice([1, 2, 4])
        C = random_complex(seed, rng.randint(2, 6), [F(k, q) for k in range(1, 3 * q)],
                           p=rng.choice([2, 3, 5]), precision=8,
                           action_pool=[F(k, q) for k in range(-q, q + 1)])
        free, bars = barcode_oracle(C, q)
        bc = barcode(C)
        assert bc.lengths() == bars
        assert bc.free_rank == free


# sigma, tau and boundary depth -----------------------------------------


def test_sigma_and_tau(single_bar):
    x = ChainVector({"x": mono(2, 1, 1)})
    assert sigma(x, single_bar) == 1
    assert tau_drop(x, single_bar) == F(1, 2)
    y = ChainVector({"y": NovikovScalar.one(2)})
    assert tau_drop(y, single_bar) == float("inf")
    assert sigma(ChainVector({}), single_bar) == float("inf")


def test_sigma_uses_actions():
    C = complex_of(3, [("x", F(2)), ("y", F(1, 2))], {})
    z = ChainVector({"x": mono(3, 1, 0), "y": mono(3, 2, 1)})
    assert sigma(z, C) == F(3, 2)


def test_boundary_depth_is_smallest_bar(two_bars):
    depth, chain = boundary_depth(two_bars)
    assert depth == F(1, 3)
    assert tau_drop(chain, two_bars) == F(1, 3)


def test_boundary_depth_without_torsion():
    C = complex_of(2, [("x", F(0))], {})
    with pytest.raises(NoTorsion):
        boundary_depth(C)


def test_image_rank_under_shift(two_bars):
    assert image_rank_under_shift(two_bars, F(1, 4)) == 2
    assert image_rank_under_shift(two_bars, F(1, 2)) == 1
    assert image_rank_under_shift(two_bars, 1) == 0


# windows ----------------------------------------------------------------


def test_window_of_a_point():
    C = complex_of(3, [("x", F(0))], {})
    wh = window_homology(C, -1, 1)
    assert wh.dimension == 1 and wh.consistent
    assert window_oracle(C, F(-1), F(1), 1)[1] == 1


def test_window_of_single_bar(single_bar):
    wh = window_homology(single_bar, 0, 1)
    assert wh.dimension == 2
    assert wh.consistent


def test_window_narrower_than_bar_sees_both_ends(single_bar):
    assert window_homology(single_bar, 0, F(1, 4)).dimension == 2


def test_window_below_all_actions_is_zero():
    C = complex_of(2, [("x", F(3)), ("y", F(3))], {("y", "x"): (1, 1)})
    assert window_homology(C, 0, 1).dimension == 0


def test_window_rejects_empty_interval(single_bar):
    with pytest.raises(ValueError):
        window_homology(single_bar, 1, 1)


def test_window_needs_lambda0_entries():
    C = complex_of(2, [("x", F(0)), ("y", F(2))], {("y", "x"): (1, -1)})
    with pytest.raises(ValueError):
        window_homology(C, 0, 3)


def test_windows_match_oracle():
    for C, q, rng in lambda0_instances(40, 5):
        c = F(rng.randint(-q, 2 * q), q)
        d = c + F(rng.randint(1, 3 * q), q)
        wh = window_homology(C, c, d)
        _, gens = window_oracle(C, c, d, q)
        assert wh.dimension == gens, (C, c, d)
        assert wh.consistent


def test_persistence_maps_match_oracle():
    for C, q, rng in lambda0_instances(25, 9):
        c = F(rng.randint(0, 2 * q), q)
        d = c + F(rng.randint(1, 2 * q), q)
        c2 = c - F(rng.randint(0, q), q)
        d2 = max(c2 + F(1, q), d - F(rng.randint(0, q), q))
        if d2 > d:
            continue
        rank, _ = persistence_map(C, (c, d), (c2, d2))
        assert rank == persistence_oracle(C, (c, d), (c2, d2), q), (C, c, d, c2, d2)


def test_identity_window_map_has_full_rank(two_bars):
    dim = window_homology(two_bars, 0, 1).dimension
    rank, mat = persistence_map(two_bars, (0, 1), (0, 1))
    assert rank == dim == 4
    assert len(mat) == dim


def test_map_into_empty_window_vanishes():
    C = complex_of(2, [("x", F(0)), ("y", F(0))], {("y", "x"): (1, 1)})
    rank, _ = persistence_map(C, (0, 2), (-2, -1))
    assert rank == 0


def test_persistence_map_rejects_wrong_direction(single_bar):
    with pytest.raises(ValueError):
        persistence_map(single_bar, (0, 1), (F(1, 2), 1))


def test_nonvanishing_transfer():
    assert nonvanishing_transfer(3) == 3
    with pytest.raises(ValueError):
        nonvanishing_transfer(-1)


# random instances -------------------------------------------------------


def test_random_complex_is_deterministic_and_valid():
    a = random_complex(4, 6, [F(1, 2), F(1)], [F(1, 2), F(1)], p=3, precision=8)
    b = random_complex(4, 6, [F(1, 2), F(1)], [F(1, 2), F(1)], p=3, precision=8)
    assert a.d.data == b.d.data
    assert validate(a).ok
    assert barcode(a).lengths() == [F(1, 2), F(1)]


def test_random_complex_edge_cases():
    assert random_complex(0, 0, [F(1)]).n == 0
    with pytest.raises(InfeasiblePlant):
        random_complex(0, 3, [F(1)], [F(1), F(2)])
    with pytest.raises(InfeasiblePlant):
        random_complex(0, 2, [F(1)], [F(0)])


def test_cancelling_pairs_are_planted():
    C = random_complex(1, 6, [F(1)], [F(1)], cancelling_pairs=1, p=5, precision=8)
    bc = barcode(C)
    assert bc.lengths() == [F(1)] and bc.free_rank == 2


# properties -------------------------------------------------------------


planted = st.tuples(
    st.integers(0, 10**6),
    st.sampled_from([2, 3, 5]),
    st.integers(1, 4),
    st.lists(st.integers(1, 12), max_size=3),
)


@given(planted)
def test_planted_bars_recovered(params):
    seed, p, q, raw = params
    bars = sorted(F(b, q) for b in raw)
    n = 2 * len(bars) + 1
    C = random_complex(seed, n, [F(1, q), F(1)], bars, p=p, precision=16,
                       action_pool=[F(k, q) for k in range(q + 1)])
    assert validate(C).ok
    bc = barcode(C)
    assert bc.lengths() == bars
    assert bc.free_rank == 1


@given(planted)
def test_doubling_precision_keeps_short_bars(params):
    seed, p, q, raw = params
    bars = sorted(F(b, q) for b in raw)
    C = random_complex(seed, 2 * len(bars), [F(1, q)], bars, p=p, precision=16)
    for E in (F(2), F(4), F(8)):
        low = barcode(C.with_precision(E)).lengths()
        high = barcode(C.with_precision(2 * E)).lengths()
        assert low == [b for b in high if b < E]


@given(planted, st.integers(0, 6))
def test_tau_drop_bounded_below_by_depth(params, shift):
    seed, p, q, raw = params
    bars = sorted(F(b, q) for b in raw)
    if not bars:
        return
    C = random_complex(seed, 2 * len(bars), [F(1, q)], bars, p=p, precision=16)
    depth, chain = boundary_depth(C)
    assert depth == bars[0]
    scaled = ChainVector({k: v.shift(F(shift, q)) for k, v in chain.coefficients.items()})
    assert tau_drop(scaled, C) == depth
