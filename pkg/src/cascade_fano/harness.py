"""Seeded Monte Carlo recovery experiments.

For every ``n`` in the grid and every trial, a true parent set is drawn
uniformly, ``n`` cascades are simulated from it, and the chosen estimator
is scored on exact recovery.  Trial seeds come from
``numpy.random.SeedSequence(master_seed, spawn_key=(n_index, trial_index))``
so every trial is reproducible on its own and results do not depend on
execution order or the number of worker processes.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import ThresholdReport, fano_threshold
from .errors import FormatError, ParameterError
from .inference import Dataset, get_estimator
from .model import MODELS, Hypothesis, ModelParams, simulate_continuous_times, simulate_discrete_times
from .transmission import TransmissionSpec

CONFIG_KEYS = (
    "model", "p", "k", "theta0", "family", "lambda", "sigma", "mu", "T",
    "estimator", "n_grid", "trials", "seed", "out",
)
RESULT_COLUMNS = ("n", "trials", "failures", "failure_rate", "wilson95", "n_star", "n_floor")
WILSON_Z95 = 1.959963984540054


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    model: str
    estimator: str
    n_grid: tuple[int, ...]
    trials: int
    master_seed: int
    spec: TransmissionSpec | None = None
    out: str | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"unknown model {self.model!r}")
        if self.model == "continuous" and self.spec is None:
            raise ParameterError("continuous experiments need a transmission spec")
        get_estimator(self.estimator)
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ParameterError(f"n_grid must be strictly increasing positive counts: {grid}")
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if not (0 <= self.master_seed < 2**64):
            raise ParameterError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "n_grid", grid)

    def echo(self) -> dict:
        out = {
            "model": self.model,
            "p": self.params.p,
            "k": self.params.k,
            "theta0": self.params.theta0,
            "estimator": self.estimator,
            "n_grid": list(self.n_grid),
            "trials": self.trials,
            "seed": self.master_seed,
        }
        if self.spec is not None:
            out["family"] = self.spec.family
            out["T"] = self.spec.horizon
            for key, value in (("lambda", self.spec.lam), ("sigma", self.spec.sigma), ("mu", self.spec.mu)):
                if value is not None:
                    out[key] = value
        return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse a flat ``key = value`` config; ``#`` starts a comment."""
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise FormatError(f"expected 'key = value', got {line!r}", line=lineno)
        if key not in CONFIG_KEYS:
            raise FormatError(f"unknown config key {key!r}", line=lineno)
        if key in raw:
            raise FormatError(f"duplicate config key {key!r}", line=lineno)
        raw[key] = (value, lineno)

    def get(key, conv, default=None):
        if key not in raw:
            if default is None:
                raise FormatError(f"missing required config key {key!r}")
            return default
        value, lineno = raw[key]
        try:
            return conv(value)
        except ValueError as exc:
            raise FormatError(f"bad value for {key}: {exc}", line=lineno) from None

    def grid(value):
        return tuple(int(x) for x in value.split(",") if x.strip())

    model = get("model", str)
    try:
        params = ModelParams(get("p", int), get("k", int), get("theta0", float))
        spec = None
        if model == "continuous":
            spec = TransmissionSpec(
                get("family", str, "exponential"),
                get("T", float),
                lam=get("lambda", float) if "lambda" in raw else None,
                sigma=get("sigma", float) if "sigma" in raw else None,
                mu=get("mu", float) if "mu" in raw else None,
            )
        return ExperimentConfig(
            params=params,
            model=model,
            estimator=get("estimator", str, "ml"),
            n_grid=get("n_grid", grid),
            trials=get("trials", int),
            master_seed=get("seed", int),
            spec=spec,
            out=get("out", str) if "out" in raw else None,
        )
    except ParameterError as exc:
        raise FormatError(str(exc)) from None


def read_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def trial_seed(master_seed: int, n_index: int, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(n_index, trial_index))


def draw_truth(params: ModelParams, rng: np.random.Generator) -> Hypothesis:
    """A uniformly random ``k``-subset of ``{1..p}``."""
    picked = rng.choice(params.p, size=params.k, replace=False)
    return Hypothesis(tuple(sorted(int(i) + 1 for i in picked)))


def run_trial(config: ExperimentConfig, n_index: int, trial_index: int) -> bool:
    """True when the estimator misses the true parent set."""
    rng = np.random.default_rng(trial_seed(config.master_seed, n_index, trial_index))
    truth = draw_truth(config.params, rng)
    n = config.n_grid[n_index]
    if config.model == "discrete":
        times = simulate_discrete_times(config.params, truth, n, rng)
    else:
        times = simulate_continuous_times(config.params, truth, config.spec, n, rng)
    data = Dataset(config.params, config.model, times, config.spec)
    return get_estimator(config.estimator)(data) != truth


def _run_chunk(args) -> list[tuple[int, bool]]:
    config, tasks = args
    return [(n_index, run_trial(config, n_index, t)) for n_index, t in tasks]


def wilson_halfwidth(failures: int, trials: int, z: float = WILSON_Z95) -> float:
    """Half-width of the Wilson score interval for a binomial proportion."""
    phat = failures / trials
    denom = 1.0 + z * z / trials
    return z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom


def wilson_interval(failures: int, trials: int, z: float = WILSON_Z95) -> tuple[float, float]:
    phat = failures / trials
    centre = (phat + z * z / (2.0 * trials)) / (1.0 + z * z / trials)
    half = wilson_halfwidth(failures, trials, z)
    return centre - half, centre + half


@dataclass(frozen=True)
class ResultRow:
    n: int
    trials: int
    failures: int
    failure_rate: float
    wilson95: float
    n_star: float
    n_floor: int

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.failures, self.trials)


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple[ResultRow, ...]
    config: ExperimentConfig
    threshold: ThresholdReport
    version: str = field(default=__version__)

    def provenance(self) -> dict:
        return {
            "tool": "cascade-fano",
            "version": self.version,
            "config": self.config.echo(),
            "seed_derivation": "numpy.random.SeedSequence(seed, spawn_key=(n_index, trial_index))",
            "threshold": {
                k: v for k, v in asdict(self.threshold).items() if v is not None
            },
        }


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Run every (n, trial) cell of the config; ``jobs > 1`` uses worker processes."""
    threshold = fano_threshold(config.params, config.model, config.spec)
    tasks = [(i, t) for i in range(len(config.n_grid)) for t in range(config.trials)]
    failures = [0] * len(config.n_grid)
    if jobs <= 1:
        outcomes = ((i, run_trial(config, i, t)) for i, t in tasks)
    else:
        size = max(1, math.ceil(len(tasks) / (4 * jobs)))
        chunks = [(config, tasks[s : s + size]) for s in range(0, len(tasks), size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = [o for chunk in pool.map(_run_chunk, chunks) for o in chunk]
    for i, failed in outcomes:
        failures[i] += int(failed)
    rows = tuple(
        ResultRow(
            n=n,
            trials=config.trials,
            failures=f,
            failure_rate=f / config.trials,
            wilson95=wilson_halfwidth(f, config.trials),
            n_star=threshold.n_star,
            n_floor=threshold.n_floor,
        )
        for n, f in zip(config.n_grid, failures)
    )
    return ExperimentResult(rows=rows, config=config, threshold=threshold)


def fmt(x: float) -> str:
    """15-significant-digit rendering used for all machine output."""
    return f"{x:.15g}"


def results_csv(result: ExperimentResult) -> str:
    lines = [",".join(RESULT_COLUMNS)]
    for r in result.rows:
        lines.append(
            f"{r.n},{r.trials},{r.failures},{fmt(r.failure_rate)},{fmt(r.wilson95)},"
            f"{fmt(r.n_star)},{r.n_floor}"
        )
    return "\n".join(lines) + "\n"


def provenance_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".provenance.json")


def write_results(path, result: ExperimentResult) -> None:
    """Write the result CSV and its ``<path>.provenance.json`` sidecar."""
    Path(path).write_bytes(results_csv(result).encode("utf-8"))
    sidecar = json.dumps(result.provenance(), indent=2, sort_keys=True) + "\n"
    provenance_path(path).write_bytes(sidecar.encode("utf-8"))


def read_results(path) -> list[ResultRow]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or tuple(lines[0].split(",")) != RESULT_COLUMNS:
        raise FormatError("unexpected result header", line=1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(RESULT_COLUMNS):
            raise FormatError(f"expected {len(RESULT_COLUMNS)} fields", line=lineno)
        n, trials, failures, rate, half, n_star, n_floor = parts
        rows.append(ResultRow(int(n), int(trials), int(failures), float(rate), float(half), float(n_star), int(n_floor)))
    return rows
