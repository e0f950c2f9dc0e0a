"""Six-step window-persistence pipeline on synthetic data, and the prime-gap condition."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

from .complex import (
    INF,
    ChainVector,
    FilteredComplex,
    Generator,
    barcode,
    nonvanishing_transfer,
    persistence_map,
    tau_drop,
)
from .core import NovikovError, NovikovScalar, as_fraction, is_prime
from .equivariant import equivariant_depth, tate_model_equivariant, verify_depth_inequality
from .perturbation import local_homology_dims


class ScenarioPrecondition(NovikovError):
    pass


def next_prime(p: int) -> int:
    q = p + 1
    while not is_prime(q):
        q += 1
    return q


@dataclass
class ScenarioConfig:
    p: int
    C: Fraction
    eps: Fraction
    norm: Fraction = Fraction(1, 4)
    seed: int = 0
    u_order: int = 3
    samples: int = 200

    def __post_init__(self):
        self.C = as_fraction(self.C)
        self.eps = as_fraction(self.eps)
        self.norm = as_fraction(self.norm)
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.C <= 0 or self.eps <= 0 or self.norm <= 0:
            raise ValueError("C, eps and the norm bound must be positive")
        if self.eps >= self.C:
            raise ValueError("the window eps must be smaller than C")


def next_prime_and_gap(p: int, C, norm) -> Dict[str, Any]:
    """p' = next prime after p, and whether 2 (p' - p) |H| < p C."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    C, norm = as_fraction(C), as_fraction(norm)
    q = next_prime(p)
    return {"p": p, "next": q, "gap": q - p, "gap_ok": 2 * (q - p) * norm < p * C}


def prime_gap_sweep(limit: int, C=1, norm=1) -> Dict[str, Any]:
    """Gap condition for every prime below ``limit``."""
    ok, bad = [], []
    for p in range(2, limit):
        if is_prime(p):
            (ok if next_prime_and_gap(p, C, norm)["gap_ok"] else bad).append(p)
    return {"checked": len(ok) + len(bad), "failures": bad, "first_pass_from": _tail_start(ok, bad)}


def _tail_start(ok: List[int], bad: List[int]) -> Optional[int]:
    """Smallest prime from which the condition holds for every larger prime checked."""
    if not ok:
        return None
    last_bad = max(bad) if bad else 0
    tail = [p for p in ok if p > last_bad]
    return min(tail) if tail else None


def model_complex(beta=1, precision=4, p: int = 5) -> FilteredComplex:
    """x (action 0, even) with d x = y, y (action beta, odd): one bar of length beta."""
    beta = as_fraction(beta)
    gens = [Generator("x", Fraction(0), 0), Generator("y", beta, 1)]
    return FilteredComplex(p, precision, gens, {("y", "x"): NovikovScalar.one(p)}, graded=True)


@dataclass
class Step:
    id: int
    name: str
    passed: bool
    values: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ScenarioReport:
    steps: List[Step] = field(default_factory=list)
    halted_at: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.halted_at is None and all(s.passed for s in self.steps)

    def step(self, k: int) -> Step:
        return next(s for s in self.steps if s.id == k)


def cmd_scenario(cfg: ScenarioConfig, C: FilteredComplex, blocks=None) -> ScenarioReport:
    """Run the six steps; the first failing step halts the pipeline."""
    if C.p != cfg.p:
        raise ScenarioPrecondition("complex modulus differs from the scenario prime")
    blocks = blocks or [None]
    local = [local_homology_dims(C, b) for b in blocks]
    if not any(local):
        raise ScenarioPrecondition("local homology vanishes in every block")
    rep = ScenarioReport()
    p = cfg.p

    def record(step: Step) -> bool:
        rep.steps.append(step)
        if not step.passed:
            rep.halted_at = step.id
        return step.passed

    # 1. minimal bar and the bound on C
    bc = barcode(C)
    lengths = bc.lengths()
    beta = lengths[0] if lengths else None
    ok = beta is not None and cfg.C < beta / 2
    if not record(Step(1, "minimal bar exceeds 2C", ok, {"beta": beta, "C": cfg.C, "local_homology": local})):
        return rep

    # 2. equivariant depth of the p-th power model
    Eq = tate_model_equivariant(C, p, cfg.u_order, gauge_seed=cfg.seed)
    depth = equivariant_depth(Eq)
    check = verify_depth_inequality(Eq.base, Eq, samples=50, seed=cfg.seed)
    ok = depth == p * beta and check.passed
    if not record(Step(2, "equivariant depth equals p*beta", ok, {"equivariant_depth": depth, "p_beta": p * beta, "delta1": check.delta1})):
        return rep

    # 3. action drop of sampled chains of the p-th power complex
    Cp = Eq.base
    bound = 2 * p * cfg.C
    rng = random.Random(cfg.seed)
    pool = [Fraction(k, 4) for k in range(9)]
    worst = INF
    for _ in range(cfg.samples):
        z = {}
        for i in rng.sample(range(Cp.n), rng.randint(1, Cp.n)):
            z[Cp.generators[i].id] = NovikovScalar.monomial(rng.randrange(1, p), rng.choice(pool), p)
        t = tau_drop(ChainVector(z), Cp)
        worst = min(worst, t)
    ok = worst >= bound
    if not record(Step(3, "sampled action drops are at least 2pC", ok, {"min_tau": worst, "bound": bound, "samples": cfg.samples})):
        return rep

    # 4. persistence map between the two windows
    src = (-cfg.eps, p * cfg.C)
    tgt = (-p * cfg.C, cfg.eps)
    rank, _ = persistence_map(Cp, src, tgt)
    if not record(Step(4, "window map is non-zero", rank >= 1, {"from": src, "to": tgt, "rank": rank})):
        return rep

    # 5. factorization through the intermediate window
    dim = nonvanishing_transfer(rank)
    if not record(Step(5, "intermediate window is non-zero", dim >= 1, {"dimension_lower_bound": dim})):
        return rep

    # 6. next prime and the gap condition
    g = next_prime_and_gap(p, cfg.C, cfg.norm)
    record(Step(6, "prime gap condition", g["gap_ok"], {"next_prime": g["next"], "gap": g["gap"], "norm": cfg.norm}))
    return rep
