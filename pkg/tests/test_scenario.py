from fractions import Fraction

import pytest

from novikov.complex import FilteredComplex, Generator
from novikov.core import NovikovScalar
from novikov.scenario import (
    ScenarioConfig,
    ScenarioPrecondition,
    cmd_scenario,
    model_complex,
    next_prime,
    next_prime_and_gap,
    prime_gap_sweep,
)

F = Fraction


@pytest.mark.parametrize("p,q", [(2, 3), (7, 11), (13, 17), (23, 29), (113, 127)])
def test_next_prime(p, q):
    assert next_prime(p) == q


def test_gap_condition_examples():
    # 2 * 4 * 1 = 8 < 7 * 2 = 14
    assert next_prime_and_gap(7, 2, 1) == {"p": 7, "next": 11, "gap": 4, "gap_ok": True}
    r = next_prime_and_gap(13, 1, 1)
    assert r["next"] == 17 and r["gap_ok"] is True
    # 2 * 4 * 1 = 8 < 7 is false
    assert next_prime_and_gap(7, 1, 1)["gap_ok"] is False
    with pytest.raises(ValueError):
        next_prime_and_gap(9, 1, 1)


def test_sweep_below_ten_thousand():
    r = prime_gap_sweep(10**4)
    assert r["checked"] == 1229
    assert r["failures"] == [2, 3, 7]
    assert r["first_pass_from"] == 11


def test_sweep_brute_force_agrees_on_small_range():
    primes = [p for p in range(2, 200) if all(p % d for d in range(2, p))]
    bad = []
    for p in primes:
        q = next(x for x in range(p + 1, 2 * p + 2) if all(x % d for d in range(2, x)))
        if not 2 * (q - p) < p:
            bad.append(p)
    assert prime_gap_sweep(200)["failures"] == bad


def test_default_scenario_passes():
    cfg = ScenarioConfig(5, F(2, 5), F(1, 10))
    rep = cmd_scenario(cfg, model_complex(1, 4, 5))
    assert rep.passed
    assert [s.id for s in rep.steps] == [1, 2, 3, 4, 5, 6]
    assert rep.step(2).values["equivariant_depth"] == 5
    assert rep.step(4).values["rank"] >= 1


def test_large_C_halts_at_first_step():
    cfg = ScenarioConfig(5, F(1, 2), F(1, 10))
    rep = cmd_scenario(cfg, model_complex(1, 4, 5))
    assert rep.halted_at == 1 and len(rep.steps) == 1 and not rep.passed


def test_zero_local_homology_is_a_precondition_failure():
    gens = [Generator("x", F(0), 0), Generator("y", F(0), 1)]
    C = FilteredComplex(5, 4, gens, {("y", "x"): NovikovScalar.one(5)}, graded=True)
    with pytest.raises(ScenarioPrecondition):
        cmd_scenario(ScenarioConfig(5, F(2, 5), F(1, 10)), C)


def test_modulus_mismatch_is_a_precondition_failure():
    with pytest.raises(ScenarioPrecondition):
        cmd_scenario(ScenarioConfig(3, F(2, 5), F(1, 10)), model_complex(1, 4, 5))


@pytest.mark.parametrize("kwargs", [dict(p=4), dict(C=0), dict(eps=F(1, 2), C=F(1, 2))])
def test_config_validation(kwargs):
    base = dict(p=5, C=F(2, 5), eps=F(1, 10))
    base.update(kwargs)
    with pytest.raises(ValueError):
        ScenarioConfig(**base)
