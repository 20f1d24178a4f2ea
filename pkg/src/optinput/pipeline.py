"""End-to-end input design experiment and baseline evaluation.

Stages of :func:`run_pipeline`: prime cycles -> basis signals -> Monte Carlo
weight optimisation -> mixed stationary pmf -> Markov-chain input sample ->
information estimate of the sampled input.  Baselines skip straight to the
last stage with white-noise inputs.

Information estimates of a long input use windows: each of the
``eval_realizations`` replications (default ``M``) takes a window of ``horizon + 1``
samples (first sample is ``u0``) and fresh process/measurement noise.  All
evaluated inputs share the same evaluation seed.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .design import Criterion, DesignResult, run_mc_design
from .graph import Alphabet, BasisInput, basis_inputs, dump_cycles, mix_pmfs
from .infomat import (bootstrap_halfwidths, check_info_matrix, estimate_fim, log_det,
                      sample_scores, trace_inv)
from .model import TRUE_THETA, get_model
from .sampler import build_chain, sample_input
from .smc import SmootherConfig
from .utils import derive_seed

logger = logging.getLogger(__name__)

BASELINES = ("binary", "uniform")

# stream ids under the experiment seed
_DESIGN, _CHAIN, _EVAL, _BASELINE, _BOOT = range(5)


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        self.stage = stage
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")


@dataclass
class ExperimentConfig:
    model: str = "lgss"
    theta0: tuple | None = None
    alphabet: tuple = (-1.0, 0.0, 1.0)
    memory: int = 2
    horizon: int = 100
    n_seq: int = 500
    burn_in: int = 10_000
    num_particles: int = 200
    M: int = 200
    K: int = 10
    lag: int = 5
    criterion: str = "det"
    seed: int = 0
    eval_realizations: int | None = None
    bootstrap: int = 200
    threads: int = 1
    max_nodes: int = 10**5

    def __post_init__(self):
        if self.theta0 is None:
            self.theta0 = TRUE_THETA.get(self.model)
            if self.theta0 is None:
                raise ValueError(f"no default theta0 for model {self.model!r}")
        self.theta0 = tuple(float(v) for v in self.theta0)
        self.alphabet = tuple(float(v) for v in self.alphabet)
        if self.eval_realizations is None:
            self.eval_realizations = self.M
        Criterion.parse(self.criterion)
        for name in ("memory", "horizon", "n_seq", "num_particles", "M", "K",
                     "eval_realizations", "threads", "max_nodes"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if self.M < 2 or self.eval_realizations < 2:
            raise ValueError("M and eval_realizations must be >= 2")
        if self.burn_in < 0 or self.lag < 0:
            raise ValueError("burn_in and lag must be >= 0")
        if self.n_seq < self.horizon + 1:
            raise ValueError("n_seq must be at least horizon + 1 to hold one evaluation window")
        if not all(np.isfinite(self.alphabet + self.theta0)):
            raise ValueError("alphabet and theta0 must be finite")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def smoother(self) -> SmootherConfig:
        return SmootherConfig(self.num_particles, self.lag)


_DESK = dict(alphabet=(-1.0, 0.0, 1.0), memory=2, horizon=100, num_particles=200, M=200,
             K=10, n_seq=500, burn_in=10_000, lag=5)
_FULL = dict(alphabet=(-1.0, 0.0, 1.0), memory=2, horizon=100, num_particles=1000, M=5000,
             K=100, n_seq=5000, burn_in=2_000_000, lag=5)

PROFILES = {
    "ex1-desk": dict(_DESK, model="lgss"),
    "ex2-desk": dict(_DESK, model="gopaluni"),
    "ex1-full": dict(_FULL, model="lgss"),
    "ex2-full": dict(_FULL, model="gopaluni"),
}


@dataclass
class Report:
    label: str
    criterion: str
    n_bases: int
    log_det: float
    log_det_ci: float
    trace_inv: float
    trace_inv_ci: float
    fim: np.ndarray
    inputs: np.ndarray
    scores: np.ndarray = field(repr=False)
    design: DesignResult | None = None
    bases: list = field(default_factory=list)
    pmf: object = None
    runtimes: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "input": self.label,
            "criterion": self.criterion,
            "n_bases": self.n_bases,
            "log_det": self.log_det,
            "log_det_ci95": self.log_det_ci,
            "trace_inv": self.trace_inv,
            "trace_inv_ci95": self.trace_inv_ci,
        }


def _windows(u: np.ndarray, horizon: int, count: int, rng) -> list:
    starts = rng.integers(0, len(u) - horizon, size=count)
    return [(u[s], u[s + 1:s + horizon + 1]) for s in starts]


def evaluate_input(config: ExperimentConfig, u, label: str, criterion: str | None = None) -> Report:
    """Information estimate of a long input sequence from windowed replications."""
    model = get_model(config.model)
    u = np.asarray(u, dtype=float)
    rng = np.random.default_rng(derive_seed(config.seed, _EVAL, 0))
    windows = _windows(u, config.horizon, config.eval_realizations, rng)
    scores = sample_scores(model, config.theta0, windows, config.smoother,
                           derive_seed(config.seed, _EVAL, 1), config.threads)
    F = check_info_matrix(estimate_fim(scores))
    ld_ci, ti_ci = bootstrap_halfwidths(scores, derive_seed(config.seed, _BOOT), config.bootstrap)
    return Report(label=label, criterion=criterion or "", n_bases=0, log_det=log_det(F),
                  log_det_ci=ld_ci, trace_inv=trace_inv(F), trace_inv_ci=ti_ci,
                  fim=F, inputs=u, scores=scores)


def baseline_input(kind: str, n: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if kind == "binary":
        return rng.choice(np.array([-1.0, 1.0]), size=n)
    if kind == "uniform":
        return rng.uniform(-1.0, 1.0, size=n)
    raise ValueError(f"unknown baseline {kind!r}; choose from {BASELINES}")


def run_baseline(config: ExperimentConfig, kind: str) -> Report:
    t0 = time.perf_counter()
    try:
        u = baseline_input(kind, config.n_seq, derive_seed(config.seed, _BASELINE, BASELINES.index(kind)))
    except Exception as exc:
        raise StageError("baseline-input", exc) from exc
    try:
        rep = evaluate_input(config, u, kind)
    except Exception as exc:
        raise StageError("evaluate", exc) from exc
    rep.runtimes["evaluate"] = time.perf_counter() - t0
    return rep


def run_pipeline(config: ExperimentConfig, bases: list[BasisInput] | None = None,
                 dump_cycles_path=None) -> Report:
    """Design an input for ``config`` and evaluate the sampled realisation."""
    model = get_model(config.model)
    criterion = Criterion.parse(config.criterion)
    runtimes = {}

    def stage(name, fn):
        t0 = time.perf_counter()
        try:
            out = fn()
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        runtimes[name] = time.perf_counter() - t0
        logger.info("stage %s done in %.2fs", name, runtimes[name])
        return out

    if bases is None:
        alphabet = Alphabet(config.alphabet)
        bases = stage("cycles", lambda: basis_inputs(alphabet, config.memory, config.max_nodes))
    if dump_cycles_path:
        dump_cycles(dump_cycles_path, [b.cycle for b in bases])
    logger.info("%d basis inputs", len(bases))
    design = stage("design", lambda: run_mc_design(
        model, config.theta0, bases, criterion, config.K, config.M, config.horizon,
        config.smoother, derive_seed(config.seed, _DESIGN), config.threads))
    pmf = stage("pmf", lambda: mix_pmfs(design.gamma_star, [b.uniform_pmf for b in bases]))
    u = stage("sample", lambda: sample_input(
        build_chain(pmf, config.burn_in, config.n_seq), derive_seed(config.seed, _CHAIN)))
    label = f"optimal({criterion.value})"
    rep = stage("evaluate", lambda: evaluate_input(config, u, label, criterion.value))
    rep.n_bases = len(bases)
    rep.design, rep.bases, rep.pmf = design, bases, pmf
    rep.runtimes = runtimes
    return rep


# ---------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_report(rep: Report, out_dir, config: ExperimentConfig | None = None) -> list[str]:
    """Write CSV tables (byte-reproducible) plus a JSON run summary with timings."""
    os.makedirs(out_dir, exist_ok=True)
    tag = rep.label.replace("(", "_").replace(")", "")
    paths = []

    def path(name):
        p = os.path.join(out_dir, name)
        paths.append(p)
        return p

    row = rep.row()
    _write_csv(path(f"summary_{tag}.csv"), list(row), [list(row.values())])
    _write_csv(path(f"fim_{tag}.csv"), [f"c{j}" for j in range(rep.fim.shape[1])], rep.fim.tolist())
    _write_csv(path(f"input_{tag}.csv"), ["u"], [[v] for v in rep.inputs])
    if rep.design is not None:
        ci = rep.design.ci_halfwidth
        _write_csv(path("gamma.csv"), ["index", "cycle", "gamma", "ci95"],
                   [[j, str(b.cycle), g, None if ci is None else ci[j]]
                    for j, (b, g) in enumerate(zip(rep.bases, rep.design.gamma_star))])
        _write_csv(path("gamma_samples.csv"), ["k", "objective"] + [f"g{j}" for j in range(len(rep.bases))],
                   [[k, o, *g] for k, (o, g) in enumerate(zip(rep.design.objective_trace,
                                                              rep.design.gamma_samples))])
        alpha = rep.pmf.alphabet
        _write_csv(path("pmf.csv"), ["node", "prob"],
                   [[alpha.format_node(n), float(rep.pmf.probs[n])] for n in np.ndindex(rep.pmf.probs.shape)])
    meta = {"report": {k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                       for k, v in row.items()},
            "runtimes_s": rep.runtimes}
    if config is not None:
        meta["config"] = config.to_dict()
    with open(path(f"run_{tag}.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    return paths


def format_table(reports: list[Report]) -> str:
    lines = [f"{'input':<16}{'log det':>12}{'(+-95%)':>10}{'tr inv':>14}{'(+-95%)':>12}"]
    for r in reports:
        lines.append(f"{r.label:<16}{r.log_det:>12.4f}{r.log_det_ci:>10.3f}"
                     f"{r.trace_inv:>14.4e}{r.trace_inv_ci:>12.2e}")
    return "\n".join(lines)
