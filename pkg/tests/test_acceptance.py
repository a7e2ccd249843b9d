"""Acceptance criteria at desk scale.

Run under pytest, or directly (``python tests/test_acceptance.py``) for one
PASS/FAIL line per criterion.  Each check returns ``(ok, detail)``; the wall
clock limit is part of the verdict.
"""

from __future__ import annotations

import contextlib
import io
import math
import sys
import tempfile
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from hardamp import bootstrap as bs
from hardamp import cli, nw, qsim
from hardamp import direct_product as dp
from hardamp.bitfunc import BooleanFunction, chi, popcount, random_function, walsh_hadamard
from hardamp.designs import build_design, verify_design
from hardamp.learner import default_gamma, density_experiment, fourier_sampling_learner, natural_property_test
from hardamp.oracle import junk_oracle, make_oracle, proportion_estimate
from hardamp.rng import child, make_rng

SEED = 20240611
CRITERIA: list = []


def criterion(num: int, slug: str, limit: float):
    def register(fn):
        CRITERIA.append((num, slug, limit, fn))
        return fn
    return register


def parity_of(xs, n):
    return popcount(np.asarray(xs, dtype=np.int64) & ((1 << n) - 1)) & 1


def brute_spectrum(table: np.ndarray, n: int) -> np.ndarray:
    xs = np.arange(1 << n)
    signs = 1 - 2 * table.astype(np.int64)
    return np.array([np.mean(signs * (1 - 2 * (popcount(xs & S) & 1))) for S in range(1 << n)])


@criterion(1, "fourier_core", 5)
def fourier_core():
    rng = make_rng(SEED, 1)
    worst_parseval = worst_brute = 0.0
    for i in range(100):
        n = int(rng.integers(1, 9))
        f = random_function(n, int(rng.integers(0, 2**31)))
        coeffs = walsh_hadamard(f).coeffs
        worst_parseval = max(worst_parseval, abs(float(np.sum(coeffs ** 2)) - 1.0))
        worst_brute = max(worst_brute, float(np.max(np.abs(coeffs - brute_spectrum(f.table, n)))))
    ok = worst_parseval <= 1e-12 and worst_brute <= 1e-12
    return ok, f"max |sum f^2 - 1| = {worst_parseval:.1e}, max |fwht - brute| = {worst_brute:.1e}"


@criterion(2, "designs", 30)
def designs():
    failures = []
    for n in range(1, 13):
        for t in sorted({1, 2, n, 2 * n, min(256, 2 ** n)}):
            ok, report = verify_design(build_design(n, t))
            if not ok:
                failures.append((n, t, report))
    return not failures, f"{len(failures)} failing (n, t) pairs {failures[:3]}"


@criterion(3, "nw_reconstruction", 120)
def nw_reconstruction():
    n, t = 3, 8
    f = BooleanFunction.constant(n, 0)
    gen = nw.NwGenerator(f, build_design(n, t))
    D = nw.zero_test_distinguisher(t)
    gamma = 1 - 2.0 ** -t
    measured = nw.measure_advantage(gen, D)
    trials = math.ceil(10 * t * t / gamma)
    threshold = 0.5 + gamma / (2 * t)
    wins = 0
    for s in range(20):
        _, successes = nw.reconstruction_trials(gen, D, trials, make_rng(SEED, 3, s), threshold)
        wins += successes >= 1
    ok = wins >= 18 and abs(measured - gamma) <= 1e-12
    return ok, f"gamma {measured:.6f} (analytic {gamma:.6f}), {trials} trials/seed, {wins}/20 seeds succeed"


@criterion(4, "gl_exact_case", 120)
def gl_exact_case():
    x_bits, k = 4, 2
    rng = make_rng(SEED, 4)
    answers = rng.integers(0, 1 << k, size=1 << x_bits)

    def exact_success(gamma):
        A = qsim.table_circuit(qsim.biased_predicate(answers, x_bits, k, gamma, rng), x_bits, k)
        probs = [qsim.gl_success_probability(A, x, x_bits, k, int(a)) for x, a in enumerate(answers)]
        return A, float(np.mean(probs))

    _, perfect = exact_success(0.5)
    gamma = 0.25
    A, biased = exact_success(gamma)
    runs = 100_000
    xs = rng.integers(0, 1 << x_bits, size=runs)
    got = qsim.GLDecoder(A, x_bits, k).decode_batch(xs, rng)
    est = proportion_estimate(int(np.count_nonzero(got == answers[xs])), runs)
    # squared correlation of the engineered predicate
    analytic = (2 * gamma) ** 2
    ok = (abs(perfect - 1) <= 1e-9 and abs(biased - analytic) <= 1e-9
          and est.point + 3 * est.sigma >= gamma ** 3 / 2)
    return ok, (f"perfect {perfect:.12f}, biased exact {biased:.6f} (analytic {analytic}), "
                f"measured {est.point:.5f} +- {est.sigma:.5f} vs bound {gamma ** 3 / 2:.6f}")


@lru_cache(maxsize=1)
def dp_benchmark():
    n, k, eps, delta = 8, 24, 0.25, 0.25
    g = random_function(n, 0)
    params = dp.DpParams(n, k, eps, delta, dp.default_iterations(eps, delta))
    target = dp.DirectProduct(g, k)
    V = dp.HashedSubset.draw(n, eps, make_rng(SEED, 5, 0))
    return g, params, make_oracle("subset_correct", target, V), make_oracle("spread", target, eps)


def dp_thresholds(report: dp.ListDecodeReport, params):
    good = report.agreements[report.agreements >= 1 - params.delta]
    sigma = float(good.std(ddof=1) / math.sqrt(good.size)) if good.size > 1 else math.inf
    mean = float(good.mean()) if good.size else math.nan
    ok = report.zeta_hat >= params.epsilon ** 2 / 4 and good.size > 0 and mean >= 1 - params.delta - 3 * sigma
    return ok, f"zeta {report.zeta_hat:.4f}, successful mean {mean:.4f} (n={good.size})"


@criterion(5, "list_decoder", 600)
def list_decoder():
    g, params, subset, spread = dp_benchmark()
    verdicts, details = [], []
    for v, (tag, oracle) in enumerate((("subset_correct", subset), ("spread", spread)), start=1):
        report = dp.run_list_decode_experiment(g, oracle, params, 2000, 500, None,
                                               substream=lambda i, v=v: make_rng(SEED, 5, v, i))
        ok, detail = dp_thresholds(report, params)
        verdicts.append(ok)
        details.append(f"{tag}: {detail}")
    return all(verdicts), f"T={params.T}; " + "; ".join(details)


@criterion(6, "excellence_empirics", 600)
def excellence_empirics():
    g, params, oracle, _ = dp_benchmark()
    eta = gamma = params.epsilon / 3
    alpha = params.delta / 48
    beta = params.delta / 3
    bound = dp.correctness_bound(beta, eta, gamma, alpha, params.T, params.k)
    lam = dp.bound_lambda(beta, params.k)
    rng = make_rng(SEED, 6)
    certified, draws, worst_margin = 0, 0, math.inf
    while certified < 50 and draws < 2000:
        draws += 1
        dec = dp.sample_decoder(oracle, params, rng)
        diag = dp.edge_diagnostics(g, oracle, dec.A, 400, rng, B=dec.B, eta=eta, repeat=4)
        if not diag.is_excellent(eta, gamma, alpha):
            continue
        certified += 1
        xs = g.sample_inputs(500, rng)
        got = dp.decode_batch(dec, xs, oracle, rng)
        est = proportion_estimate(int(np.count_nonzero(got == g.table[xs])), 500)
        worst_margin = min(worst_margin, est.point + 3 * est.sigma - bound)
    ok = certified == 50 and worst_margin >= 0
    return ok, (f"{certified} certified edges in {draws} draws; bound {bound:.3g} "
                f"(lambda {lam:.3f} vs gamma {gamma:.3f}); worst margin {worst_margin:.3g}")


@criterion(7, "fourier_sampling", 180)
def fourier_sampling():
    n = 8
    rng = make_rng(SEED, 7)
    f = random_function(n, 7)
    flag = qsim.fourier_flag_probability(f)
    shots = qsim.fourier_samples(f, 100_000, rng)
    hits = shots[shots >= 0]
    emp = np.bincount(hits, minlength=1 << n) / hits.size
    tv = 0.5 * float(np.abs(emp - walsh_hadamard(f).coeffs ** 2).sum())
    ok = abs(flag - 0.5) <= 1e-12 and tv <= 0.05
    parts = [f"flag {flag:.15f}, TV {tv:.4f}"]
    tables = [random_function(n, 1000 + i) for i in range(200)]
    for gamma in (0.3, 0.6):
        cut = gamma * 2 ** (-n / 2)
        large = exact_low = 0
        total = 0
        for i, h in enumerate(tables):
            coeffs = walsh_hadamard(h).coeffs
            exact_low = max(exact_low, float(np.sum(coeffs[np.abs(coeffs) < cut] ** 2)))
            s = qsim.fourier_samples(h, 200, child(rng, i, int(gamma * 10)))
            s = s[s >= 0]
            large += int(np.count_nonzero(np.abs(coeffs[s]) >= cut))
            total += s.size
        est = proportion_estimate(large, total)
        ok = ok and est.point >= 1 - gamma ** 2 - 3 * est.sigma and 1 - exact_low >= 1 - gamma ** 2
        parts.append(f"gamma {gamma}: sampled {est.point:.4f} vs {1 - gamma ** 2:.2f}, "
                     f"worst exact mass {1 - exact_low:.4f}")
    return ok, "; ".join(parts)


@criterion(8, "natural_property", 300)
def natural_property():
    n, reps = 8, 8
    gamma = default_gamma(n)
    rng = make_rng(SEED, 8)
    learner = fourier_sampling_learner(gamma)
    rejects = sum(1 - natural_property_test(chi(n, i % (1 << n)), learner, gamma, reps, child(rng, 0, i))
                  for i in range(200))
    accept, outcomes = density_experiment(n, learner, gamma, 200, child(rng, 1), reps)
    est = proportion_estimate(int(outcomes.sum()), outcomes.size)
    ok = rejects / 200 >= 2 / 3 and accept >= 0.5 - 3 * est.sigma
    return ok, f"gamma {gamma}, parity reject {rejects}/200, random accept {accept:.3f} +- {est.sigma:.3f}"


@criterion(9, "bootstrap_reductions", 300)
def bootstrap_reductions():
    rng = make_rng(SEED, 9)
    chain_ok = True
    for o in bs.lift_chain(bs.exact_oracle(1), 10):
        xs = np.repeat(np.arange(1 << o.in_bits), 4)
        chain_ok &= bool(np.array_equal(o.query_batch(xs, rng).astype(np.int64), parity_of(xs, o.in_bits)))
    n = 8
    bad = rng.choice(1 << n, size=math.ceil(2 ** n / n ** 3), replace=False)
    contract = 2.0 ** -n
    rsr_parts, rsr_ok = [], True
    for tag, U in (("fixed", bs.corrupted_oracle(n, bad)), ("noisy", bs.noisy_oracle(n, 1 - n ** -3))):
        amp = bs.rsr_amplify(U)
        failures = 0
        for x in range(1 << n):
            got = amp.query_batch(np.full(100, x), rng).astype(np.int64)
            failures += int(np.count_nonzero(got != parity_of([x], n)[0]))
        total = 100 << n
        allowed = total * contract + 3 * math.sqrt(total * contract * (1 - contract))
        rsr_ok &= failures <= allowed
        rsr_parts.append(f"{tag} {failures} failures")
    picked = 0
    for s in range(100):
        r = make_rng(SEED, 9, 1, s)
        cands = [junk_oracle(n, 1), bs.noisy_oracle(n, 0.55), junk_oracle(n, 1), bs.noisy_oracle(n, 0.6)]
        planted = int(r.integers(0, len(cands) + 1))
        cands.insert(planted, bs.exact_oracle(n))
        sel = bs.select_candidate(bs.exact_oracle(n - 1), cands, bs.PipelineParams().R, rng=r)
        picked += sel is not None and sel.index == planted
    ok = chain_ok and rsr_ok and picked >= 95
    return ok, f"chain to n=10 exact: {chain_ok}; rsr {', '.join(rsr_parts)}; planted picked {picked}/100"


@criterion(10, "end_to_end_pipeline", 900)
def end_to_end_pipeline():
    cfg = cli.BootstrapConfig()
    params = cfg.pipeline()
    t = bs.toy_design(cfg.j, params).t
    if t != params.design_m + 4:
        return False, f"toy output length {t} is not seed length + 4"
    _, summary = cli.run_experiment("bootstrap", cfg, 7)
    report = summary["first_success_report"]
    listed = {o["name"] for o in (report or {}).get("overrides", [])}
    needed = {"k", "epsilon_prime", "delta", "T"}
    ok = summary["exact_successes"] >= 1 and needed <= listed and summary["max_queries"] <= cfg.budget
    return ok, (f"{summary['exact_successes']}/{summary['attempts']} exact, max queries "
                f"{summary['max_queries']} within {cfg.budget}; overrides {sorted(listed)}")


REPRO_RUNS = {
    "design": ["--n", "5", "--t", "10"],
    "nw-recon": ["--runs", "3", "--trials", "30"],
    "dp-decode": ["--trials", "12", "--agreement-samples", "100"],
    "gl": ["--runs", "3000", "--block", "1000"],
    "fourier-sample": ["--samples", "20000"],
    "natprop": ["--functions", "10"],
    "bootstrap": ["--attempts", "3"],
    "hard-lang": ["--inputs", "30"],
}


@criterion(11, "reproducibility", 600)
def reproducibility():
    mismatched = []
    with tempfile.TemporaryDirectory() as tmp:
        for sub, argv in REPRO_RUNS.items():
            blobs = []
            for tag, workers in (("a", 1), ("b", 1), ("c", 2)):
                prefix = Path(tmp) / f"{sub}-{tag}"
                with contextlib.redirect_stdout(io.StringIO()):
                    code = cli.main([sub, *argv, "--seed", "5", "--workers", str(workers), "--out", str(prefix)])
                if code:
                    return False, f"{sub} exited {code}"
                blobs.append((Path(f"{prefix}.csv").read_bytes(), Path(f"{prefix}.json").read_bytes()))
            if not blobs[0] == blobs[1] == blobs[2]:
                mismatched.append(sub)
    return not mismatched, f"{len(REPRO_RUNS)} subcommands, mismatches {mismatched}"


def evaluate(fn, limit):
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    return ok and elapsed < limit, f"{detail} [{elapsed:.1f}s, limit {limit}s]"


@pytest.mark.parametrize("num,slug,limit,fn", CRITERIA, ids=[f"{c[0]:02d}_{c[1]}" for c in CRITERIA])
def test_criterion(num, slug, limit, fn):
    ok, detail = evaluate(fn, limit)
    print(f"{'PASS' if ok else 'FAIL'} {num:2d} {slug}: {detail}")
    assert ok, detail


def main(argv=None) -> int:
    wanted = {int(a) for a in (argv or [])}
    failed = 0
    for num, slug, limit, fn in CRITERIA:
        if wanted and num not in wanted:
            continue
        ok, detail = evaluate(fn, limit)
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {num:2d} {slug}: {detail}", flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
