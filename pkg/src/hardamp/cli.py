"""Seeded batch runner: one subcommand per experiment, CSV of raw trials plus a JSON summary.

Work is split into a fixed number of units per experiment; unit ``i`` draws
from the stream ``(seed, 1, i)`` and shared setup from ``(seed, 0)``, so the
output bytes never depend on ``--workers``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
import typing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import bootstrap as bs
from . import direct_product as dp
from . import nw, qsim
from .bitfunc import (BooleanFunction, chi, int_of, parity_fn, random_function, random_function_from,
                      walsh_hadamard)
from .designs import DesignInfeasible, build_design, verify_design
from .learner import (brute_force_learner, default_gamma, fourier_sampling_learner, natural_property_test,
                      silent_learner)
from .oracle import junk_oracle, make_oracle, proportion_estimate
from .rng import child, make_rng

SEED_ENV = "HARDAMP_SEED"
EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3


class ConfigError(ValueError):
    pass


class CheckFailure(RuntimeError):
    pass


def load_fixtures() -> dict:
    return json.loads(resources.files("hardamp").joinpath("data/fixtures.json").read_text(encoding="utf-8"))


def load_function(spec: str, n: int, seed: int) -> BooleanFunction:
    """``zero``, ``parity``, ``random`` (keyed by ``seed``) or a truth-table file."""
    if spec == "zero":
        return BooleanFunction.constant(n, 0)
    if spec == "parity":
        return parity_fn(n)
    if spec == "random":
        return random_function(n, seed)
    try:
        f = BooleanFunction.load(spec)
    except OSError as exc:
        raise ConfigError(f"cannot read truth table {spec!r}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(f"bad truth table {spec!r}: {exc}") from None
    if f.n != n:
        raise ConfigError(f"truth table {spec!r} has n={f.n}, expected {n}")
    return f


# -- configs ----------------------------------------------------------------

@dataclass(frozen=True)
class DesignConfig:
    n: int = 3
    t: int = 8
    c: int = 16
    m: Optional[int] = None
    alpha: Optional[int] = None


@dataclass(frozen=True)
class NwReconConfig:
    n: int = 3
    t: int = 8
    fn: str = "zero"
    fn_seed: int = 0
    distinguisher: str = "zero-test"
    m: Optional[int] = None
    alpha: Optional[int] = None
    trials: Optional[int] = None
    runs: int = 20
    repeat: int = 64


@dataclass(frozen=True)
class DpDecodeConfig:
    n: int = 8
    k: int = 24
    epsilon: float = 0.25
    delta: float = 0.25
    T: Optional[int] = None
    oracle: str = "subset_correct"
    fn: str = "random"
    fn_seed: int = 0
    trials: int = 2000
    agreement_samples: int = 500

    @property
    def iterations(self) -> int:
        return self.T or dp.default_iterations(self.epsilon, self.delta)


@dataclass(frozen=True)
class GlConfig:
    x_bits: int = 4
    k: int = 2
    gamma: float = 0.25
    mode: str = "biased"
    runs: int = 100_000
    block: int = 10_000


@dataclass(frozen=True)
class FourierConfig:
    n: int = 8
    fn: str = "random"
    fn_seed: int = 0
    samples: int = 100_000
    block: int = 10_000


@dataclass(frozen=True)
class NatpropConfig:
    n: int = 8
    gamma: Optional[float] = None
    reps: int = 8
    functions: int = 200
    learner: str = "fourier_sampling"
    target: str = "random"

    @property
    def resolved_gamma(self) -> float:
        return self.gamma if self.gamma is not None else default_gamma(self.n)


@dataclass(frozen=True)
class BootstrapConfig:
    j: int = 3
    attempts: int = 20
    prev: str = "exact"
    distinguisher: str = "image"
    exact_repeats: int = 8
    k: int = 2
    lambda_exp: float = 0.5
    design_m: int = 10
    design_t: int = 14
    design_alpha: int = 7
    epsilon_prime: float = 0.25
    delta: float = 0.125
    T: int = 64
    R: int = 48
    candidates: int = 8
    referee_votes: Optional[int] = None
    budget: int = 50_000
    consistency_points: int = 256
    consistency_floor: float = 0.9

    def pipeline(self) -> bs.PipelineParams:
        names = {f.name for f in dataclasses.fields(bs.PipelineParams)}
        return bs.PipelineParams(**{k: v for k, v in dataclasses.asdict(self).items() if k in names})


@dataclass(frozen=True)
class HardLangConfig:
    base_n: int = 8
    fn: str = "random"
    fn_seed: int = 0
    lam: float = 0.5
    t_max: int = 16
    inputs: int = 200
    malformed_every: int = 5


# -- experiments ------------------------------------------------------------

@dataclass(frozen=True)
class Experiment:
    config: type
    header: tuple
    setup: Callable          # (cfg, rng) -> state
    units: Callable          # (cfg, state) -> int
    unit: Callable           # (cfg, state, i, rng) -> list of rows
    summarize: Callable      # (cfg, state, rows) -> dict
    checks: Callable         # (cfg, summary, fixture) -> dict of name -> bool


def _design_setup(cfg: DesignConfig, rng):
    try:
        return build_design(cfg.n, cfg.t, cfg.c, cfg.m, cfg.alpha)
    except DesignInfeasible as exc:
        raise CheckFailure(str(exc)) from None


def _design_summary(cfg, d, rows):
    ok, report = verify_design(d)
    return {"design": d.to_dict(), "verified": ok, "report": report}


# nw-recon

def _nw_setup(cfg: NwReconConfig, rng):
    f = load_function(cfg.fn, cfg.n, cfg.fn_seed)
    design = build_design(cfg.n, cfg.t, m=cfg.m, alpha=cfg.alpha)
    gen = nw.NwGenerator(f, design)
    if cfg.distinguisher == "zero-test":
        D = nw.zero_test_distinguisher(cfg.t)
    elif cfg.distinguisher == "image":
        D = nw.image_distinguisher(gen)
    else:
        raise ConfigError(f"unknown distinguisher {cfg.distinguisher!r}")
    gamma = nw.measure_advantage(gen, D, rng=child(rng, 0), num_repeat=cfg.repeat)
    if gamma <= 0:
        raise CheckFailure(f"distinguisher has no advantage (gamma={gamma})")
    trials = cfg.trials or math.ceil(10 * cfg.t ** 2 / gamma - 1e-9)
    return gen, D, gamma, trials


def _nw_unit(cfg, state, i, rng):
    gen, D, gamma, trials = state
    rows, _ = nw.reconstruction_trials(gen, D, trials, rng, 0.5 + gamma / (2 * cfg.t), cfg.repeat)
    return [(i, trial, j, d, adv, int(ok)) for trial, j, d, adv, ok in rows]


def _nw_summary(cfg, state, rows):
    gen, D, gamma, trials = state
    per_run = np.zeros(cfg.runs, dtype=np.int64)
    for run, *_, ok in rows:
        per_run[run] += ok
    est = proportion_estimate(int(per_run.sum()), len(rows))
    return {"gamma": gamma, "threshold": 0.5 + gamma / (2 * cfg.t), "trials_per_run": trials,
            "runs": cfg.runs, "successful_runs": int(np.count_nonzero(per_run)),
            "trial_success_rate": est.point, "trial_success_sigma": est.sigma,
            "design": gen.design.to_dict()}


def _nw_checks(cfg, s, fx):
    return {"runs_with_predictor": s["successful_runs"] >= math.ceil(fx["min_run_fraction"] * s["runs"]),
            "trial_rate_floor": s["trial_success_rate"] >= fx["kappa"] * s["gamma"] / cfg.t ** 2}


# dp-decode

def _dp_setup(cfg: DpDecodeConfig, rng):
    g = load_function(cfg.fn, cfg.n, cfg.fn_seed)
    params = dp.DpParams(cfg.n, cfg.k, cfg.epsilon, cfg.delta, cfg.iterations)
    target = dp.DirectProduct(g, cfg.k)
    if cfg.oracle == "subset_correct":
        oracle = make_oracle("subset_correct", target, dp.HashedSubset.draw(cfg.n, cfg.epsilon, rng))
    elif cfg.oracle == "spread":
        oracle = make_oracle("spread", target, cfg.epsilon)
    else:
        raise ConfigError(f"unknown oracle {cfg.oracle!r}")
    return g, params, oracle


def _dp_unit(cfg, state, i, rng):
    g, params, oracle = state
    agree, bottom = dp.decoder_trial(g, oracle, params, cfg.agreement_samples, rng)
    return [(i, agree, bottom, int(agree >= 1 - cfg.delta))]


def _dp_summary(cfg, state, rows):
    agree = np.array([r[1] for r in rows])
    good = agree[agree >= 1 - cfg.delta]
    zeta = proportion_estimate(int(good.size), agree.size)
    mean = float(good.mean()) if good.size else float("nan")
    sigma = float(good.std(ddof=1) / math.sqrt(good.size)) if good.size > 1 else float("inf")
    return {"T": cfg.iterations, "zeta_hat": zeta.point, "zeta_sigma": zeta.sigma,
            "zeta_floor": cfg.epsilon ** 2 / 4, "successful": int(good.size),
            "successful_mean_agreement": mean, "successful_mean_sigma": sigma,
            "mean_agreement": float(agree.mean()),
            "mean_bottom_rate": float(np.mean([r[2] for r in rows]))}


def _dp_checks(cfg, s, fx):
    return {"zeta_floor": s["zeta_hat"] >= s["zeta_floor"],
            "successful_agreement": s["successful"] > 0
            and s["successful_mean_agreement"] >= 1 - cfg.delta - 3 * s["successful_mean_sigma"]}


# gl

def _gl_setup(cfg: GlConfig, rng):
    answers = rng.integers(0, 1 << cfg.k, size=1 << cfg.x_bits)
    if cfg.mode == "perfect":
        gamma = 0.5
    elif cfg.mode == "biased":
        gamma = cfg.gamma
    else:
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    pred = qsim.biased_predicate(answers, cfg.x_bits, cfg.k, gamma, rng)
    A = qsim.table_circuit(pred, cfg.x_bits, cfg.k)
    exact = float(np.mean([qsim.gl_success_probability(A, x, cfg.x_bits, cfg.k, int(a))
                           for x, a in enumerate(answers)]))
    return answers, gamma, qsim.GLDecoder(A, cfg.x_bits, cfg.k), exact


def _gl_units(cfg, state):
    return -(-cfg.runs // cfg.block)


def _gl_unit(cfg, state, i, rng):
    answers, gamma, decoder, _ = state
    size = min(cfg.block, cfg.runs - i * cfg.block)
    xs = rng.integers(0, 1 << cfg.x_bits, size=size)
    got = decoder.decode_batch(xs, rng)
    start = i * cfg.block
    return [(start + s, int(x), int(o), int(o == answers[x])) for s, (x, o) in enumerate(zip(xs, got))]


def _gl_summary(cfg, state, rows):
    _, gamma, _, exact = state
    est = proportion_estimate(sum(r[3] for r in rows), len(rows))
    return {"advantage": gamma, "exact_success": exact, "measured_success": est.point,
            "measured_sigma": est.sigma, "bound": gamma ** 3 / 2}


def _gl_checks(cfg, s, fx):
    out = {"measured_vs_bound": s["measured_success"] + 3 * s["measured_sigma"] >= s["bound"]}
    if cfg.mode == "perfect":
        out["exact_is_one"] = abs(s["exact_success"] - 1) <= fx["exact_tol"]
    return out


# fourier-sample

def _fs_setup(cfg: FourierConfig, rng):
    f = load_function(cfg.fn, cfg.n, cfg.fn_seed)
    return f, qsim.fourier_flag_probability(f)


def _fs_unit(cfg, state, i, rng):
    f, _ = state
    size = min(cfg.block, cfg.samples - i * cfg.block)
    shots = qsim.fourier_samples(f, size, rng)
    start = i * cfg.block
    return [(start + s, int(v)) for s, v in enumerate(shots)]


def _fs_summary(cfg, state, rows):
    f, flag_prob = state
    S = np.array([r[1] for r in rows])
    hits = S[S >= 0]
    emp = np.bincount(hits, minlength=1 << cfg.n) / max(hits.size, 1)
    tv = 0.5 * float(np.abs(emp - walsh_hadamard(f).coeffs ** 2).sum())
    est = proportion_estimate(int(hits.size), S.size)
    return {"flag_probability": flag_prob, "flag_rate": est.point, "flag_sigma": est.sigma,
            "conditional_samples": int(hits.size), "tv_distance": tv}


def _fs_checks(cfg, s, fx):
    return {"flag_half": abs(s["flag_probability"] - 0.5) <= fx["flag_tol"],
            "tv_distance": s["tv_distance"] <= fx["max_tv"]}


# natprop

_LEARNERS = {"fourier_sampling": fourier_sampling_learner, "brute_force": brute_force_learner,
             "silent": silent_learner}


def _np_setup(cfg: NatpropConfig, rng):
    if cfg.learner not in _LEARNERS:
        raise ConfigError(f"unknown learner {cfg.learner!r}")
    if cfg.target not in ("random", "parity"):
        raise ConfigError(f"unknown target {cfg.target!r}")
    if not 0 < cfg.resolved_gamma <= 0.5:
        raise ConfigError("gamma must lie in (0, 1/2]")
    return None


def _np_unit(cfg, state, i, rng):
    learner = _LEARNERS[cfg.learner]()
    if cfg.target == "parity":
        S = i % (1 << cfg.n)
        f = chi(cfg.n, S)
    else:
        S = -1
        f = random_function_from(cfg.n, rng)
    return [(i, S, natural_property_test(f, learner, cfg.resolved_gamma, cfg.reps, rng))]


def _np_summary(cfg, state, rows):
    est = proportion_estimate(sum(r[2] for r in rows), len(rows))
    return {"gamma": cfg.resolved_gamma, "accept_fraction": est.point, "accept_sigma": est.sigma,
            "reject_fraction": 1 - est.point}


def _np_checks(cfg, s, fx):
    if cfg.target == "parity":
        return {"parities_rejected": s["reject_fraction"] >= fx["parity_reject_floor"]}
    return {"dense_acceptance": s["accept_fraction"] >= 0.5 - 3 * s["accept_sigma"]}


# bootstrap

def _bs_setup(cfg: BootstrapConfig, rng):
    params = cfg.pipeline()
    j = cfg.j
    if cfg.prev == "exact":
        P_prev = bs.exact_oracle(j - 1)
    elif cfg.prev == "junk":
        P_prev = junk_oracle(j - 1, 1)
    else:
        raise ConfigError(f"unknown prev oracle {cfg.prev!r}")
    gen = bs.toy_generator(j, params)
    if cfg.distinguisher == "image":
        D = nw.image_distinguisher(gen)
    elif cfg.distinguisher == "constant":
        D = nw.constant_distinguisher(gen.out_bits)
    else:
        raise ConfigError(f"unknown distinguisher {cfg.distinguisher!r}")
    return params, P_prev, D


def _bs_unit(cfg, state, i, rng):
    params, P_prev, D = state
    res = bs.pipeline_step(cfg.j, P_prev, D, params, rng)
    exact = res.oracle is not None and bs.exact_on_all(res.oracle, cfg.j, cfg.exact_repeats, child(rng, 9))
    return [(i, res.diagnostic, int(res.unreliable), int(exact), res.report["queries"]["total"],
             json.dumps(res.report, sort_keys=True, default=_jsonable))]


def _bs_summary(cfg, state, rows):
    params = state[0]
    exact = [r for r in rows if r[3]]
    diagnostics: dict = {}
    for r in rows:
        diagnostics[r[1]] = diagnostics.get(r[1], 0) + 1
    return {"attempts": len(rows), "exact_successes": len(exact), "diagnostics": diagnostics,
            "max_queries": max(r[4] for r in rows), "overrides": params.overrides(cfg.j),
            "first_success_report": json.loads(exact[0][5]) if exact else None}


def _bs_checks(cfg, s, fx):
    return {"exact_oracle_found": s["exact_successes"] >= fx["min_successes"],
            "overrides_listed": len(s["overrides"]) >= fx["min_overrides"]}


def _bs_rows(rows):
    # the CSV keeps the compact columns; full reports go to the summary
    return [r[:5] for r in rows]


# hard-lang

def _hl_setup(cfg: HardLangConfig, rng):
    f = load_function(cfg.fn, cfg.base_n, cfg.fn_seed)
    fam = bs.NwFamily(f, cfg.lam)
    ts = [t for t in range(1, cfg.t_max + 1) if fam.supports(t)]
    if not ts:
        raise ConfigError("no supported t up to t_max")
    return fam, ts


def _hl_unit(cfg, state, i, rng):
    fam, ts = state
    if cfg.malformed_every and i % cfg.malformed_every == cfg.malformed_every - 1:
        u = "".join(map(str, rng.integers(0, 2, size=int(rng.integers(1, 40)))))
    else:
        t = int(rng.choice(ts))
        w = "".join(map(str, rng.integers(0, 2, size=fam.seed_len(t))))
        x = "".join(map(str, rng.integers(0, 2, size=fam.x_len(t))))
        u = bs.encode_input(fam, t, w, x)
    got = bs.hard_language_eval(fam, u)
    return [(i, u, "reject" if got is None else got, _hl_direct(fam, u))]


def _hl_direct(fam, u: str):
    """Second route: the addressed output bit read straight off the design set."""
    parsed = bs.parse_input(fam, u)
    if parsed is None:
        return "reject"
    t, w, x = parsed
    S = fam.generator(t).design.sets[int_of(x)]
    return fam.base(sum(int(w[e]) << i for i, e in enumerate(S)))


def _hl_summary(cfg, state, rows):
    return {"inputs": len(rows), "rejected": sum(r[2] == "reject" for r in rows),
            "ones": sum(r[2] == 1 for r in rows), "route_mismatches": sum(r[2] != r[3] for r in rows)}


def _hl_checks(cfg, s, fx):
    return {"routes_agree": s["route_mismatches"] == 0}


def _one(cfg, state):
    return 1


def _config_units(name):
    return lambda cfg, state: getattr(cfg, name)


EXPERIMENTS = {
    "design": Experiment(DesignConfig, ("index", "elements"), _design_setup, _one,
                         lambda cfg, d, i, rng: [(k, " ".join(map(str, s))) for k, s in enumerate(d.sets)],
                         _design_summary, lambda cfg, s, fx: {"verified": s["verified"]}),
    "nw-recon": Experiment(NwReconConfig, ("run", "trial", "j", "d", "advantage", "success"), _nw_setup,
                           _config_units("runs"), _nw_unit, _nw_summary, _nw_checks),
    "dp-decode": Experiment(DpDecodeConfig, ("trial", "agreement", "bottom_rate", "successful"), _dp_setup,
                            _config_units("trials"), _dp_unit, _dp_summary, _dp_checks),
    "gl": Experiment(GlConfig, ("run", "x", "output", "correct"), _gl_setup, _gl_units, _gl_unit,
                     _gl_summary, _gl_checks),
    "fourier-sample": Experiment(FourierConfig, ("shot", "S"), _fs_setup,
                                 lambda cfg, st: -(-cfg.samples // cfg.block), _fs_unit, _fs_summary, _fs_checks),
    "natprop": Experiment(NatpropConfig, ("function", "S", "accepted"), _np_setup, _config_units("functions"),
                          _np_unit, _np_summary, _np_checks),
    "bootstrap": Experiment(BootstrapConfig, ("attempt", "diagnostic", "unreliable", "exact", "queries"),
                            _bs_setup, _config_units("attempts"), _bs_unit, _bs_summary, _bs_checks),
    "hard-lang": Experiment(HardLangConfig, ("index", "input", "output", "direct"), _hl_setup,
                            _config_units("inputs"), _hl_unit, _hl_summary, _hl_checks),
}


# -- config resolution ------------------------------------------------------

def _field_types(cls) -> dict:
    hints = typing.get_type_hints(cls)
    out = {}
    for f in dataclasses.fields(cls):
        tp = hints[f.name]
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        out[f.name] = (args[0] if args else tp, bool(args))
    return out


def _coerce(name: str, value, tp, optional: bool):
    if value is None and optional:
        return None
    if tp is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if tp is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if tp is str and isinstance(value, str):
        return value
    raise ConfigError(f"{name}: expected {tp.__name__}, got {value!r}")


def _parse_seed(value) -> int:
    try:
        seed = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"seed must be an integer, got {value!r}") from None
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    return seed


def resolve(sub: str, config_file: Optional[str], flags: dict, check: bool, env=None):
    """Merge defaults, the JSON config and flags (flags win); returns ``(cfg, seed)``."""
    env = os.environ if env is None else env
    exp = EXPERIMENTS[sub]
    types = _field_types(exp.config)
    values: dict = {}
    seed = None
    if config_file:
        try:
            raw = json.loads(Path(config_file).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_file!r}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {config_file!r} is not valid JSON: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        raw = dict(raw)
        if raw.pop("subcommand", sub) != sub:
            raise ConfigError(f"config is for another subcommand, not {sub!r}")
        seed = raw.pop("seed", None)
        params = raw.pop("params", {})
        if not isinstance(params, dict):
            raise ConfigError("config 'params' must be an object")
        unknown = sorted((set(raw) | set(params)) - set(types))
        if unknown:
            raise ConfigError(f"unknown config key {unknown[0]!r} for {sub}")
        values.update(raw)
        values.update(params)
    for name, v in flags.items():
        if name == "seed":
            seed = v
        else:
            values[name] = v
    if seed is None and not check:
        seed = env.get(SEED_ENV)
    if seed is None:
        raise ConfigError("seed is mandatory (--seed or 'seed' in the config)")
    coerced = {k: _coerce(k, v, *types[k]) for k, v in values.items()}
    try:
        cfg = exp.config(**coerced)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg, _parse_seed(seed)


# -- execution --------------------------------------------------------------

@lru_cache(maxsize=4)
def _state(sub: str, cfg_json: str, seed: int):
    exp = EXPERIMENTS[sub]
    cfg = exp.config(**json.loads(cfg_json))
    return exp.setup(cfg, make_rng(seed, 0))


def _run_units(args):
    sub, cfg_json, seed, indices = args
    exp = EXPERIMENTS[sub]
    cfg = exp.config(**json.loads(cfg_json))
    state = _state(sub, cfg_json, seed)
    return [(i, exp.unit(cfg, state, i, make_rng(seed, 1, i))) for i in indices]


def run_experiment(sub: str, cfg, seed: int, workers: int = 1):
    """Raw rows (in unit order) and the summary dict."""
    exp = EXPERIMENTS[sub]
    cfg_json = json.dumps(dataclasses.asdict(cfg), sort_keys=True)
    try:
        state = _state(sub, cfg_json, seed)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    n = exp.units(cfg, state)
    if workers <= 1 or n <= 1:
        done = _run_units((sub, cfg_json, seed, list(range(n))))
    else:
        jobs = [(sub, cfg_json, seed, list(range(w, n, workers))) for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = [pair for part in pool.map(_run_units, jobs) for pair in part]
    done.sort(key=lambda pair: pair[0])
    rows = [row for _, part in done for row in part]
    summary = exp.summarize(cfg, state, rows)
    if sub == "bootstrap":
        rows = _bs_rows(rows)
    return rows, summary


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def render(sub: str, cfg, seed: int, rows, summary: dict, checks: Optional[dict]):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EXPERIMENTS[sub].header)
    w.writerows(rows)
    doc = {"config": {"subcommand": sub, "seed": seed, "params": dataclasses.asdict(cfg)},
           "summary": summary}
    if checks is not None:
        doc["checks"] = checks
    text = json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n"
    return buf.getvalue(), text


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"hardamp: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hardamp", description="Seeded hardness-amplification experiments.")
    subs = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name, exp in EXPERIMENTS.items():
        sp = subs.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help="JSON file with 'seed' and parameter keys")
        sp.add_argument("--seed", type=str, default=argparse.SUPPRESS)
        sp.add_argument("--out", help="output prefix for <prefix>.csv and <prefix>.json")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--check", action="store_true", help="exit 3 unless the acceptance fixtures pass")
        for fname, (tp, _) in _field_types(exp.config).items():
            sp.add_argument("--" + fname.replace("_", "-"), dest=fname, type=tp, default=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    sub = args.pop("subcommand")
    config_file, out, workers, check = (args.pop(k) for k in ("config", "out", "workers", "check"))
    try:
        if workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg, seed = resolve(sub, config_file, args, check)
        rows, summary = run_experiment(sub, cfg, seed, workers)
    except ConfigError as exc:
        print(f"hardamp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every failure gets a one-line diagnostic
        print(f"hardamp: experiment failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK
    checks = EXPERIMENTS[sub].checks(cfg, summary, load_fixtures().get(sub, {})) if check else None
    csv_text, json_text = render(sub, cfg, seed, rows, summary, checks)
    prefix = Path(out or f"{sub}-{seed}")
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.csv").write_text(csv_text, encoding="utf-8")
    Path(f"{prefix}.json").write_text(json_text, encoding="utf-8")
    if checks is not None:
        failed = [k for k, ok in checks.items() if not ok]
        if failed:
            print(f"hardamp: check failed: {', '.join(failed)}", file=sys.stderr)
            return EXIT_CHECK
    print(f"{prefix}.csv {prefix}.json")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
