import io
import itertools
import random

import pytest

import oracles
from rmpf.analysis import (
    attack_cost_curve, bench, brute_force_recover, extrapolate, search_space, write_csv,
)
from rmpf.core import BaseMatrix, Dims
from rmpf.kap import PrivateKey, Token, derive_key, gen_private, make_token, setup


def preimages(params, target):
    """Every (lambda, omega) in [1, p-2]^2 whose token, computed by the raw oracle, equals target."""
    p = params.p
    want = [list(r) for r in target.matrix.rows]
    hits = set()
    for lam, omega in itertools.product(range(1, p - 1), repeat=2):
        a = [[lam * v for v in r] for r in params.x.rows]
        b = [[omega * v for v in r] for r in params.y.rows]
        if oracles.two_sided(a, params.base.rows, b, p) == want:
            hits.add((lam, omega))
    return hits


@pytest.mark.parametrize("seed", range(8))
def test_recovery_p13_against_exhaustive_oracle(seed):
    rng = random.Random(seed)
    params = setup(0, Dims(3, 2), rng, p=13)
    secret = gen_private(params, rng)
    target = make_token(params, secret)
    allowed = preimages(params, target)
    assert (secret.lam, secret.omega) in allowed
    for mode in ("full", "reduced"):
        res = brute_force_recover(params, target, mode=mode)
        assert res.found and (res.lam, res.omega) in allowed
        assert res.trials <= search_space(13, mode)
        products = {lam * om % 12 for lam, om in allowed}
        if len(products) == 1:
            assert res.lam * res.omega % 12 == secret.lam * secret.omega % 12
    # row-major: nothing earlier in the order is a preimage
    full = brute_force_recover(params, target, mode="full")
    assert min(allowed) == (full.lam, full.omega)


def test_all_ones_target_not_reachable():
    rng = random.Random(1)
    params = setup(0, Dims(3, 2), rng, p=13)
    ones = Token(BaseMatrix.ones(params.dims, 13))
    legal = sum(1 for a, b in itertools.product(range(1, 12), repeat=2) if a * b % 12)
    res = brute_force_recover(params, ones)
    assert not res.found and res.trials == legal


def test_budget_contract():
    rng = random.Random(2)
    params = setup(0, Dims(3, 2), rng, p=31)
    target = make_token(params, gen_private(params, rng))
    zero = brute_force_recover(params, target, budget=0)
    assert not zero.found and zero.trials == 0
    full = brute_force_recover(params, target)
    if full.trials > 1:
        short = brute_force_recover(params, target, budget=full.trials - 1)
        assert not short.found and short.trials == full.trials - 1
    exact = brute_force_recover(params, target, budget=full.trials)
    assert exact.found and exact.trials == full.trials


def test_workers_do_not_change_result():
    rng = random.Random(4)
    params = setup(0, Dims(3, 2), rng, p=31)
    for _ in range(3):
        target = make_token(params, gen_private(params, rng))
        one = brute_force_recover(params, target)
        many = brute_force_recover(params, target, workers=3)
        assert (one.found, one.lam, one.omega, one.trials) == \
            (many.found, many.lam, many.omega, many.trials)
    ones = Token(BaseMatrix.ones(params.dims, 31))
    assert brute_force_recover(params, ones).trials == \
        brute_force_recover(params, ones, workers=3).trials
    budgeted = brute_force_recover(params, ones, budget=100, workers=3)
    assert not budgeted.found and budgeted.trials == 100


@pytest.mark.parametrize("p,dims", [(13, Dims(3, 2)), (101, Dims(4, 2)), (251, Dims(3, 1)),
                                    (251, Dims(4, 2))])
def test_completeness_desk_scale(p, dims):
    rng = random.Random(p)
    for _ in range(3):
        params = setup(0, dims, rng, p=p)
        secret = gen_private(params, rng)
        target = make_token(params, secret)
        peer = make_token(params, gen_private(params, rng))
        for mode in ("full", "reduced"):
            res = brute_force_recover(params, target, mode=mode)
            assert res.found
            rec = PrivateKey.from_scalars(params, res.lam, res.omega)
            assert make_token(params, rec) == target
            assert derive_key(params, rec, peer) == derive_key(params, secret, peer)


def test_cost_curve_shape():
    rows = attack_cost_curve([7], Dims(2, 1), 5, random.Random(0), modes=["full"])
    assert len(rows) == 1 and rows[0].p == 7 and rows[0].mode == "full"
    assert rows[0].found == 5
    rows = attack_cost_curve([7, 13], Dims(2, 1), 5, random.Random(0))
    assert [(r.p, r.mode) for r in rows] == [(7, "full"), (7, "reduced"), (13, "full"),
                                             (13, "reduced")]
    assert rows[0].nominal_mean == 12.5 and rows[1].nominal_mean == 2.5


def test_extrapolation_fits_line():
    rows = attack_cost_curve([13, 31, 61], Dims(3, 2), 20, random.Random(0))
    ex = {e.mode: e for e in extrapolate(rows, bits=64)}
    assert set(ex) == {"full", "reduced"}
    assert ex["full"].nominal_log2 == 128 and ex["reduced"].nominal_log2 == 64
    # both searches stop after ~p/2 candidates
    for e in ex.values():
        assert 0.7 < e.slope < 1.3
    assert extrapolate(rows[:2]) == []


def test_bench_counts():
    a = bench(32, Dims(5, 3), 2, random.Random(0))
    b = bench(32, Dims(5, 3), 2, random.Random(0))
    assert (a.modexp_factored, a.modexp_naive) == (72, 135)
    assert (a.modexp_factored, a.modexp_naive) == (b.modexp_factored, b.modexp_naive)
    assert a.token_time > 0 and a.derive_time > 0


def test_csv_output():
    rows = attack_cost_curve([7], Dims(2, 1), 2, random.Random(0), modes=["reduced"])
    buf = io.StringIO()
    write_csv(rows, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "p,mode,samples,mean_trials,nominal_mean,ratio,max_trials,space,found"
    assert lines[1].startswith("7,reduced,2,")
