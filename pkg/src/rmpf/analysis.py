"""Desk-scale attack and cost measurements.

Tokens depend on the two secret scalars only through lambda*omega mod p-1,
so besides the plain row-major search over (lambda, omega) there is a
"reduced" search over the product alone.  Both are measured.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, fields
import math
import random
import statistics
import time
from typing import Iterable, Optional, Sequence

from .core import Dims, modexp_counts, two_sided_action_naive
from .kap import PrivateKey, PublicParams, Token, derive_key, gen_private, make_token, setup

MODES = ("full", "reduced")
# exhaustive-search guard for the CLI and cost curves
MAX_CANDIDATES = 5_000_000


@dataclass(frozen=True)
class AttackResult:
    found: bool
    lam: int
    omega: int
    trials: int
    elapsed: float
    mode: str = "full"


def search_space(p: int, mode: str) -> int:
    q = p - 1
    return (q - 1) ** 2 if mode == "full" else q - 1


def _lambda_block(params, target, lo, hi, mode, limit):
    """Scan lambda in [lo, hi) row-major; returns (hit or None, trials used)."""
    q = params.q
    want = target.matrix
    trials = 0
    omegas = range(1, q) if mode == "full" else (1,)
    for lam in range(lo, hi):
        for omega in omegas:
            if lam * omega % q == 0:
                continue
            if trials >= limit:
                return None, trials
            trials += 1
            if make_token(params, PrivateKey.from_scalars(params, lam, omega)).matrix == want:
                return (lam, omega), trials
    return None, trials


def brute_force_recover(params: PublicParams, target: Token, budget: Optional[int] = None,
                        mode: str = "full", workers: int = 1) -> AttackResult:
    """Search for (lambda, omega) reproducing `target`, stopping at the first hit.

    Candidates with lambda*omega = 0 mod p-1 are never legal keys and are
    skipped without counting.  Search order (lambda outer, omega inner) and
    therefore the trial count do not depend on `workers`.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    limit = search_space(params.p, mode) if budget is None else budget
    t0 = time.perf_counter()
    q = params.q
    if workers <= 1:
        hit, trials = _lambda_block(params, target, 1, q, mode, limit)
    else:
        hit, trials = _parallel_scan(params, target, mode, limit, workers)
    elapsed = time.perf_counter() - t0
    if hit is None:
        return AttackResult(False, 0, 0, trials, elapsed, mode)
    return AttackResult(True, hit[0], hit[1], trials, elapsed, mode)


def _parallel_scan(params, target, mode, limit, workers):
    q = params.q
    block = max(1, math.ceil((q - 1) / (workers * 4)))
    starts = list(range(1, q, block))
    used = 0
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for r in range(0, len(starts), workers):
            round_starts = starts[r:r + workers]
            futures = [pool.submit(_lambda_block, params, target, lo, min(lo + block, q), mode,
                                   limit) for lo in round_starts]
            # first hit in search order wins; trial counts add up block by block
            for fut in futures:
                hit, n = fut.result()
                if used + n > limit or (hit is None and used + n == limit):
                    for f in futures:
                        f.cancel()
                    return None, limit
                used += n
                if hit is not None:
                    for f in futures:
                        f.cancel()
                    return hit, used
    return None, used


@dataclass(frozen=True)
class CostRow:
    p: int
    mode: str
    samples: int
    mean_trials: float
    nominal_mean: float
    ratio: float
    max_trials: int
    space: int
    found: int


def attack_cost_curve(p_list: Sequence[int], dims: Dims, samples: int,
                      rng: random.Random, modes: Iterable[str] = MODES) -> list[CostRow]:
    """Mean trials-to-recovery over random instances for each prime and mode.

    `nominal_mean` is half the search space, (p-2)^2/2 for the full search and
    (p-2)/2 for the reduced one.
    """
    modes = tuple(modes)
    rows = []
    for p in p_list:
        trials = {m: [] for m in modes}
        found = Counter()
        for _ in range(samples):
            params = setup(0, dims, rng, p=p)
            target = make_token(params, gen_private(params, rng))
            for mode in modes:
                res = brute_force_recover(params, target, mode=mode)
                trials[mode].append(res.trials)
                found[mode] += res.found
        for mode in modes:
            space = search_space(p, mode)
            mean = statistics.fmean(trials[mode]) if trials[mode] else 0.0
            rows.append(CostRow(p, mode, samples, mean, space / 2, mean / (space / 2),
                                max(trials[mode], default=0), space, found[mode]))
    return rows


@dataclass(frozen=True)
class Extrapolation:
    mode: str
    slope: float
    intercept: float
    bits: int
    log2_trials: float
    nominal_log2: float


def extrapolate(rows: Sequence[CostRow], bits: int = 64) -> list[Extrapolation]:
    """Fit log2(mean trials) against log2(p) per mode and project to p ~ 2^bits.

    Needs at least two distinct primes per mode.  `nominal_log2` is the
    search size the two-scalar argument predicts (2*bits full, bits reduced).
    """
    out = []
    for mode in sorted({r.mode for r in rows}):
        pts = [(math.log2(r.p), math.log2(r.mean_trials)) for r in rows
               if r.mode == mode and r.mean_trials > 0]
        if len({x for x, _ in pts}) < 2:
            continue
        slope, intercept = statistics.linear_regression([x for x, _ in pts], [y for _, y in pts])
        nominal = 2 * bits if mode == "full" else bits
        out.append(Extrapolation(mode, slope, intercept, bits, slope * bits + intercept, nominal))
    return out


@dataclass(frozen=True)
class BenchReport:
    p_bits: int
    m: int
    n: int
    iterations: int
    token_time: float
    derive_time: float
    naive_token_time: float
    modexp_factored: int
    modexp_naive: int


def bench(p_bits: int = 64, dims: Dims = Dims(5, 3), iterations: int = 20,
          rng: Optional[random.Random] = None) -> BenchReport:
    """Median wall-clock of token and key computation plus instrumented modexp counts."""
    rng = rng or random.Random(0)
    params = setup(p_bits, dims, rng)
    alice, bob = gen_private(params, rng), gen_private(params, rng)
    peer = make_token(params, bob)

    counts = Counter()
    make_token(params, alice, counts)
    factored = counts["modexp"]
    counts.clear()
    two_sided_action_naive(alice.a, params.base, alice.b, counts)
    naive = counts["modexp"]
    expected = modexp_counts(dims)
    if factored != expected["factored"] or naive != expected["naive"]:
        raise AssertionError(f"modexp counts {factored}/{naive} != formula {expected}")

    def median_time(fn):
        samples = []
        for _ in range(iterations):
            t0 = time.perf_counter()
            fn()
            samples.append(time.perf_counter() - t0)
        return statistics.median(samples)

    return BenchReport(
        p_bits=params.p.bit_length(), m=dims.m, n=dims.n, iterations=iterations,
        token_time=median_time(lambda: make_token(params, alice)),
        derive_time=median_time(lambda: derive_key(params, alice, peer)),
        naive_token_time=median_time(lambda: two_sided_action_naive(alice.a, params.base, alice.b)),
        modexp_factored=factored, modexp_naive=naive,
    )


def write_csv(records: Sequence, fh) -> None:
    """One header row from the dataclass fields, then one line per record."""
    if not records:
        return
    names = [f.name for f in fields(records[0])]
    w = csv.DictWriter(fh, fieldnames=names, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(asdict(r))
