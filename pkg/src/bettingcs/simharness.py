"""Seeded scenarios, coverage and width experiments, and timing benchmarks."""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import baselines, betting, supermg, wor
from .betting import BettingConfig
from .core import ConfigError, ConfSeqRecord, Interval

THREADS_ENV = "BETTINGCS_THREADS"

FAMILIES = ("bernoulli", "beta", "discrete", "switch", "population")


@dataclass
class ScenarioSpec:
    """A reproducible data-generating scenario.

    Parameters
    ----------
    family : str
        ``bernoulli`` (``p``), ``beta`` (``a``, ``b``), ``discrete`` (``atoms``,
        optional ``probs``), ``switch`` (``k``: Beta(10, 10) for the first ``k`` draws,
        Bernoulli(1/2) afterwards) or ``population`` (``atoms`` or
        ``base``/``N`` plus base parameters; each replicate is a fresh shuffle).
    params : dict
    horizon : int
        Stream length (at most ``N`` for populations).
    seed : int
    replicates : int
    """

    family: str
    params: Dict = field(default_factory=dict)
    horizon: int = 1000
    seed: int = 0
    replicates: int = 100

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.horizon < 1 or self.replicates < 1:
            raise ConfigError("horizon and replicates must be positive")
        p = self.params
        if self.family == "bernoulli" and not 0.0 <= p.get("p", -1.0) <= 1.0:
            raise ConfigError("bernoulli needs p in [0, 1]")
        if self.family == "beta" and not (p.get("a", 0) > 0 and p.get("b", 0) > 0):
            raise ConfigError("beta needs a, b > 0")
        if self.family in ("discrete",) and not p.get("atoms"):
            raise ConfigError("discrete needs atoms")
        if self.family == "population":
            pop = population(self)
            if self.horizon > pop.size:
                raise ConfigError("horizon exceeds population size")

    @property
    def is_wor(self) -> bool:
        return self.family == "population"


def _rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replicate)]))


def population(spec: ScenarioSpec) -> np.ndarray:
    """The fixed population of a ``population`` scenario (depends on the seed only)."""
    p = spec.params
    if "atoms" in p:
        pop = np.asarray(p["atoms"], dtype=float)
    else:
        base = p.get("base", "bernoulli")
        N = int(p["N"])
        rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 2**31 - 1]))
        if base == "bernoulli":
            pop = (rng.random(N) < p.get("p", 0.5)).astype(float)
        elif base == "beta":
            pop = rng.beta(p["a"], p["b"], N)
        else:
            raise ConfigError(f"unknown population base {base!r}")
    if np.any((pop < 0) | (pop > 1)):
        raise ConfigError("population values must lie in [0, 1]")
    return pop


def true_mean(spec: ScenarioSpec) -> float:
    p = spec.params
    if spec.family == "bernoulli":
        return float(p["p"])
    if spec.family == "beta":
        return p["a"] / (p["a"] + p["b"])
    if spec.family == "discrete":
        atoms = np.asarray(p["atoms"], dtype=float)
        probs = np.asarray(p.get("probs", np.full(atoms.size, 1.0 / atoms.size)))
        return float(np.dot(atoms, probs))
    if spec.family == "switch":
        return 0.5
    return float(population(spec).mean())


def make_stream(spec: ScenarioSpec, replicate_index: int) -> np.ndarray:
    """Stream for one replicate; a pure function of ``(spec, replicate_index)``."""
    rng = _rng(spec.seed, replicate_index)
    n = spec.horizon
    p = spec.params
    if spec.family == "bernoulli":
        return (rng.random(n) < p["p"]).astype(float)
    if spec.family == "beta":
        return rng.beta(p["a"], p["b"], n)
    if spec.family == "discrete":
        atoms = np.asarray(p["atoms"], dtype=float)
        return rng.choice(atoms, size=n, p=p.get("probs"))
    if spec.family == "switch":
        k = int(p.get("k", 250))
        head = rng.beta(10.0, 10.0, min(k, n))
        tail = (rng.random(max(n - k, 0)) < 0.5).astype(float)
        return np.concatenate((head, tail))
    pop = population(spec)
    return rng.permutation(pop)[:n]


# ---------------------------------------------------------------------------
# Method registry
# ---------------------------------------------------------------------------

@dataclass
class Method:
    """A named estimator. ``fn(xs, alpha, N)`` returns a ConfSeqRecord or an Interval."""

    name: str
    fn: Callable
    kind: str  # "cs" or "ci"
    wor: bool = False


def _cs(fn):
    return lambda xs, alpha, N, grid: fn(xs, alpha, BettingConfig(grid_size=grid))


METHODS: Dict[str, Method] = {
    "hedged": Method("hedged", _cs(betting.hedged_cs), "cs"),
    "conbo": Method("conbo", _cs(betting.conbo_cs), "cs"),
    "pm-h": Method("pm-h", lambda xs, a, N, g: supermg.pm_hoeffding_cs(xs, a), "cs"),
    "pm-eb": Method("pm-eb", lambda xs, a, N, g: supermg.pm_eb_cs(xs, a), "cs"),
    "bernoulli": Method("bernoulli",
                        lambda xs, a, N, g: baselines.bernoulli_mixture_cs(xs, a, grid_size=g),
                        "cs"),
    "akelly": Method("akelly", lambda xs, a, N, g: betting.betting_cs(xs, a, "akelly", g), "cs"),
    "lbow": Method("lbow", lambda xs, a, N, g: betting.betting_cs(xs, a, "lbow", g), "cs"),
    "ons": Method("ons", lambda xs, a, N, g: betting.betting_cs(xs, a, "ons", g), "cs"),
    "kelly": Method("kelly", lambda xs, a, N, g: betting.betting_cs(xs, a, "kelly", g), "cs"),
    "hgkelly": Method("hgkelly", lambda xs, a, N, g: betting.hgkelly_cs(xs, a, grid_size=g), "cs"),
    "trivial": Method("trivial",
                      lambda xs, a, N, g: ConfSeqRecord(np.zeros(len(xs)), np.ones(len(xs)),
                                                        "trivial", a), "cs"),
    "hedged-ci": Method("hedged-ci",
                        lambda xs, a, N, g: betting.hedged_ci(xs, a, BettingConfig(grid_size=g)),
                        "ci"),
    "va-eb-ci": Method("va-eb-ci", lambda xs, a, N, g: supermg.va_eb_ci(xs, a), "ci"),
    "hoeffding-ci": Method("hoeffding-ci", lambda xs, a, N, g: baselines.hoeffding_ci(xs, a), "ci"),
    "mp09-ci": Method("mp09-ci", lambda xs, a, N, g: baselines.mp09_ci(xs, a), "ci"),
    "anderson-ci": Method("anderson-ci", lambda xs, a, N, g: baselines.anderson_ci(xs, a), "ci"),
    "bentkus-ci": Method("bentkus-ci", lambda xs, a, N, g: baselines.bentkus_ci(xs, a), "ci"),
    "hedged-wor": Method("hedged-wor",
                         lambda xs, a, N, g: wor.hedged_wor_cs(xs, N, a, BettingConfig(grid_size=g)),
                         "cs", True),
    "conbo-wor": Method("conbo-wor",
                        lambda xs, a, N, g: wor.conbo_wor_cs(xs, N, a, BettingConfig(grid_size=g)),
                        "cs", True),
    "h-wor": Method("h-wor", lambda xs, a, N, g: baselines.wor_baseline_cs(xs, N, a, "H-WoR"),
                    "cs", True),
    "eb-wor": Method("eb-wor", lambda xs, a, N, g: baselines.wor_baseline_cs(xs, N, a, "EB-WoR"),
                     "cs", True),
    "hedged-wor-ci": Method("hedged-wor-ci",
                            lambda xs, a, N, g: wor.hedged_wor_ci(xs, N, None, a,
                                                                  BettingConfig(grid_size=g)),
                            "ci", True),
    "h-wor-ci": Method("h-wor-ci",
                       lambda xs, a, N, g: baselines.wor_baseline_ci(xs, N, None, a, "H-WoR"),
                       "ci", True),
    "eb-wor-ci": Method("eb-wor-ci",
                        lambda xs, a, N, g: baselines.wor_baseline_ci(xs, N, None, a, "EB-WoR"),
                        "ci", True),
}


def get_method(name: str) -> Method:
    try:
        return METHODS[name]
    except KeyError:
        raise ConfigError(f"unknown method {name!r}") from None


def run_method(name: str, xs, alpha: float, spec: Optional[ScenarioSpec] = None,
               grid_size: int = 1000):
    method = get_method(name)
    N = None
    if method.wor:
        if spec is None or not spec.is_wor:
            raise ConfigError(f"method {name!r} needs a population scenario")
        N = population(spec).size
    return method.fn(np.asarray(xs, dtype=float), alpha, N, grid_size)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def _workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, items):
    w = _workers()
    if w == 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


def _miss_one(args):
    spec, methods, alpha, grid_size, r = args
    xs = make_stream(spec, r)
    mu = true_mean(spec)
    out = {}
    for name in methods:
        res = run_method(name, xs, alpha, spec, grid_size)
        if isinstance(res, Interval):
            out[name] = mu not in res
        else:
            out[name] = bool(np.any(~res.covers(mu)))
    return out


def coverage_experiment(spec: ScenarioSpec, methods: Sequence[str], alpha: float = 0.05,
                        grid_size: int = 1000) -> List[dict]:
    """Frequency of ``exists t <= horizon: mu not in C_t`` (CIs: ``mu not in C_n``).

    Returns
    -------
    list of dict
        One row per method with ``miscoverage``, its binomial ``std_error`` and
        ``replicates``.
    """
    for name in methods:
        get_method(name)
    items = [(spec, list(methods), alpha, grid_size, r) for r in range(spec.replicates)]
    results = _map(_miss_one, items)
    rows = []
    R = spec.replicates
    for name in methods:
        k = sum(res[name] for res in results)
        rate = k / R
        rows.append({"method": name, "miscoverage": rate,
                     "std_error": float(np.sqrt(rate * (1.0 - rate) / R)), "replicates": R})
    return rows


def _width_one(args):
    spec, methods, alpha, checkpoints, grid_size, intersect, r = args
    xs = make_stream(spec, r)
    out = {}
    for name in methods:
        if get_method(name).kind == "ci":
            out[name] = [run_method(name, xs[:t], alpha, spec, grid_size).width
                         for t in checkpoints]
        else:
            rec = run_method(name, xs[: max(checkpoints)], alpha, spec, grid_size)
            w = rec.widths(intersect)
            out[name] = [float(w[t - 1]) for t in checkpoints]
    return out


def width_experiment(spec: ScenarioSpec, methods: Sequence[str], alpha: float = 0.05,
                     checkpoints: Sequence[int] = (100, 1000), grid_size: int = 1000,
                     intersect: bool = True) -> List[dict]:
    """Mean width at each checkpoint (CIs are recomputed on the first ``t`` points)."""
    checkpoints = [int(t) for t in checkpoints]
    if max(checkpoints) > spec.horizon or min(checkpoints) < 1:
        raise ConfigError("checkpoints must lie in [1, horizon]")
    for name in methods:
        get_method(name)
    items = [(spec, list(methods), alpha, checkpoints, grid_size, intersect, r)
             for r in range(spec.replicates)]
    results = _map(_width_one, items)
    rows = []
    for name in methods:
        w = np.array([res[name] for res in results])
        for j, t in enumerate(checkpoints):
            rows.append({"method": name, "t": t, "mean_width": float(w[:, j].mean()),
                         "std_error": float(w[:, j].std(ddof=1) / np.sqrt(len(w)))
                         if len(w) > 1 else 0.0})
    return rows


def bench_timings(methods: Sequence[str], t_max: int = 1000, grid_size: int = 1000,
                  seed: int = 0) -> List[dict]:
    """Wall time per method on one Bernoulli(1/2) stream."""
    spec = ScenarioSpec("bernoulli", {"p": 0.5}, horizon=t_max, seed=seed, replicates=1)
    xs = make_stream(spec, 0)
    rows = []
    for name in methods:
        if get_method(name).wor:
            raise ConfigError("bench runs with-replacement methods only")
        start = time.perf_counter()
        run_method(name, xs, 0.05, spec, grid_size)
        rows.append({"method": name, "t_max": t_max, "grid_size": grid_size,
                     "seconds": time.perf_counter() - start})
    return rows


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def write_csv(rows: List[dict], path) -> None:
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def read_csv(path) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_summary(rows: List[dict], config: dict, path) -> None:
    """JSON with the result rows and an echo of the configuration."""
    with open(path, "w") as fh:
        json.dump({"config": config, "results": rows}, fh, indent=2, default=_jsonable)


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    raise TypeError(type(o).__name__)
