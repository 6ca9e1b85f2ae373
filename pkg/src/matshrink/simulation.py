"""Seeded Monte Carlo harness for PRIR studies.

Every replication ``r`` of scenario ``s`` draws from its own stream
``rng_stream(base_seed, s, 1, r)``; the mean matrix of a scenario comes from
``rng_stream(base_seed, s, 0)``.  Replications are processed in fixed-size
chunks and reduced in chunk order, so results are bit-identical for any
number of worker processes.  All estimators in a replication share the same
``(X, S)`` draw, and so do the baselines ``X`` and ``S/n``.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .conditions import EstimatorConfig, Label, default_config
from .errors import ShrinkageError
from .estimators import em_mean, g1_cov, g2_cov, g_mean, gb_cov, gb_mean
from .model import (
    CovKind,
    ModelDims,
    ScenarioSpec,
    ThetaMode,
    build_scenario,
    build_theta,
    rng_stream,
    sample_matrix_normal,
    sample_wishart,
)
from .risk import loss_scalar_quad, loss_stein, prir_with_se

logger = logging.getLogger(__name__)

CHUNK = 500

CSV_HEADER = (
    "p,n,m,s0,q,cov_kind,estimator,prir_theta,se_theta,prir_sigma,se_sigma,"
    "prir_kl,se_kl,reps,seed"
)


class ConfigError(ShrinkageError, ValueError):
    """Experiment configuration failed schema validation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid experiment config:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class ExperimentGrid:
    scenarios: list
    estimators: list
    replications: int
    base_seed: int
    theta_mode: ThetaMode = ThetaMode.FIXED_PER_SCENARIO

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError(["replications must be >= 1"])
        object.__setattr__(self, "estimators", [Label(e) for e in self.estimators])
        object.__setattr__(self, "theta_mode", ThetaMode(self.theta_mode))


@dataclass
class RiskReport:
    scenario: ScenarioSpec
    estimator: Label
    prir_theta: float = float("nan")
    se_theta: float = float("nan")
    prir_sigma: float = float("nan")
    se_sigma: float = float("nan")
    prir_kl: float = float("nan")
    se_kl: float = float("nan")
    reps: int = 0
    seed: int = 0
    error: str | None = None
    baseline: dict = field(default_factory=dict, repr=False)


# -- estimator application ----------------------------------------------------

def apply_config(config: EstimatorConfig, X, S, n: int):
    """Return ``(mean_estimate, cov_estimate)``; the EM pair uses ``S/n``."""
    m, p = np.shape(X)[-2:]
    if config.label is Label.GB:
        return gb_mean(X, S, float(config.mean_params)), gb_cov(X, S, config.cov_params)
    if config.label is Label.EM:
        return em_mean(X, S, n), np.asarray(S) / n
    g = config.mean_params
    mean = g_mean(X, S, g.alpha, g.beta)
    if p > m:
        cov = g1_cov(X, S, n, g.alpha, g.beta)
    else:
        cov = g2_cov(X, S, n, g.alpha, g.beta)
    return mean, cov


def _draw_chunk(spec, s_index, reps, base_seed, theta_mode, Theta, Sigma):
    dims = spec.dims
    Xs = np.empty((len(reps), dims.m, dims.p))
    Ss = np.empty((len(reps), dims.p, dims.p))
    Thetas = np.empty_like(Xs)
    for k, r in enumerate(reps):
        rng = rng_stream(base_seed, s_index, 1, r)
        Th = Theta
        if theta_mode is ThetaMode.PER_REPLICATION:
            Th = build_theta(dims, spec.s0, spec.q, rng)
        Thetas[k] = Th
        Xs[k] = sample_matrix_normal(Th, Sigma, rng)
        Ss[k] = sample_wishart(dims.n, Sigma, rng)
    return Xs, Ss, Thetas


def _chunk_losses(args):
    spec, s_index, reps, base_seed, theta_mode, Theta, Sigma, configs = args
    dims = spec.dims
    X, S, Th = _draw_chunk(spec, s_index, reps, base_seed, theta_mode, Theta, Sigma)
    m = dims.m
    base_q = loss_scalar_quad(X, Th, Sigma)
    base_s = loss_stein(S / dims.n, Sigma)
    out = {"base": (base_q, base_s, 0.5 * m * base_s + 0.5 * base_q)}
    for name, config in configs.items():
        try:
            mean, cov = apply_config(config, X, S, dims.n)
            lq = loss_scalar_quad(mean, Th, Sigma)
            ls = loss_stein(cov, Sigma)
            out[name] = (lq, ls, 0.5 * m * ls + 0.5 * lq)
        except (ShrinkageError, np.linalg.LinAlgError) as exc:
            out[name] = exc
    return out


def scenario_losses(spec: ScenarioSpec, s_index: int, configs: dict, replications: int,
                    base_seed: int, theta_mode=ThetaMode.FIXED_PER_SCENARIO, jobs: int = 1):
    """Per-replication losses ``{name: (L_Q, L_S, D_KL)}`` plus ``"base"``.

    A configuration that fails in any chunk maps to the raised exception.
    """
    theta_mode = ThetaMode(theta_mode)
    params = build_scenario(spec, rng_stream(base_seed, s_index, 0))
    chunks = [range(i, min(i + CHUNK, replications)) for i in range(0, replications, CHUNK)]
    tasks = [(spec, s_index, c, base_seed, theta_mode, params.Theta, params.Sigma, configs)
             for c in chunks]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_chunk_losses, tasks))
    else:
        parts = [_chunk_losses(t) for t in tasks]
    merged = {}
    for name in parts[0]:
        failed = next((p[name] for p in parts if isinstance(p[name], Exception)), None)
        if failed is not None:
            merged[name] = failed
        else:
            merged[name] = tuple(np.concatenate([p[name][k] for p in parts]) for k in range(3))
    return merged, params


def run_experiment(grid: ExperimentGrid, jobs: int = 1) -> list[RiskReport]:
    """Run every (scenario, estimator) cell of the grid; failing cells carry ``error``."""
    reports = []
    for s_index, spec in enumerate(grid.scenarios):
        configs = {}
        errors = {}
        for label in grid.estimators:
            try:
                configs[label.value] = default_config(spec.dims, label)
            except ShrinkageError as exc:
                errors[label.value] = f"{type(exc).__name__}: {exc}"
        losses, _ = scenario_losses(spec, s_index, configs, grid.replications,
                                    grid.base_seed, grid.theta_mode, jobs)
        base = losses["base"]
        mp = spec.dims.m * spec.dims.p
        base_mean = float(np.mean(base[0]))
        base_se = float(np.std(base[0], ddof=1) / np.sqrt(base[0].size)) if base[0].size > 1 else float("nan")
        logger.info("scenario %d: mean L_Q(X) = %.4f (analytic %d, se %.4f)", s_index, base_mean, mp, base_se)
        for label in grid.estimators:
            rep = RiskReport(spec, label, reps=grid.replications, seed=grid.base_seed,
                             baseline={"mean_lq": base_mean, "se_lq": base_se, "mp": mp})
            name = label.value
            result = errors.get(name, losses.get(name))
            if isinstance(result, str):
                rep.error = result
            elif isinstance(result, Exception):
                rep.error = f"{type(result).__name__}: {result}"
            else:
                rep.prir_theta, rep.se_theta = prir_with_se(base[0], result[0])
                rep.prir_kl, rep.se_kl = prir_with_se(base[2], result[2])
                if label is not Label.EM:
                    rep.prir_sigma, rep.se_sigma = prir_with_se(base[1], result[1])
            reports.append(rep)
    return reports


# -- configuration files ------------------------------------------------------

def _as_dims(entry, problems, where):
    try:
        if isinstance(entry, dict):
            return ModelDims(m=int(entry["m"]), p=int(entry["p"]), n=int(entry["n"]))
        p, n, m = entry
        return ModelDims(m=int(m), p=int(p), n=int(n))
    except (KeyError, TypeError, ValueError) as exc:
        problems.append(f"{where}: expected {{p, n, m}} or [p, n, m], got {entry!r} ({exc})")
        return None


def _parse_q(value):
    if isinstance(value, str) and "/" in value:
        num, den = value.split("/")
        return float(num) / float(den)
    return float(value)


def grid_from_mapping(cfg: dict) -> ExperimentGrid:
    """Build a grid from a parsed config; every schema violation is reported at once.

    Keys: ``dims`` (list of ``{p, n, m}``), ``s0`` (list), ``q`` (list; "1/2"
    allowed), ``cov_kinds`` (list of EQUICORR/AR), ``estimators`` (list of
    GB/G1/G2/EM), ``reps`` (int >= 1), ``seed`` (int), optional ``theta_mode``.
    """
    problems = []
    if not isinstance(cfg, dict):
        raise ConfigError(["top level must be a mapping"])
    known = {"dims", "s0", "q", "cov_kinds", "estimators", "reps", "seed", "theta_mode"}
    for key in sorted(set(cfg) - known):
        problems.append(f"unknown key {key!r}")
    for key in sorted(known - {"theta_mode"} - set(cfg)):
        problems.append(f"missing key {key!r}")

    def listed(key):
        v = cfg.get(key, [])
        if not isinstance(v, list) or not v:
            if key in cfg:
                problems.append(f"{key!r} must be a nonempty list")
            return []
        return v

    dims = [d for i, e in enumerate(listed("dims")) if (d := _as_dims(e, problems, f"dims[{i}]"))]
    s0s, qs, kinds, labels = [], [], [], []
    for i, v in enumerate(listed("s0")):
        try:
            s0s.append(float(v))
            if s0s[-1] < 0:
                problems.append(f"s0[{i}] must be >= 0")
        except (TypeError, ValueError):
            problems.append(f"s0[{i}] is not a number: {v!r}")
    for i, v in enumerate(listed("q")):
        try:
            qs.append(_parse_q(v))
        except (TypeError, ValueError, ZeroDivisionError):
            problems.append(f"q[{i}] is not a number: {v!r}")
    for i, v in enumerate(listed("cov_kinds")):
        try:
            kinds.append(CovKind(str(v).upper()))
        except ValueError:
            problems.append(f"cov_kinds[{i}] must be EQUICORR or AR, got {v!r}")
    for i, v in enumerate(listed("estimators")):
        try:
            labels.append(Label(str(v).upper()))
        except ValueError:
            problems.append(f"estimators[{i}] must be one of GB, G1, G2, EM, got {v!r}")
    reps = cfg.get("reps")
    if "reps" in cfg and (not isinstance(reps, int) or isinstance(reps, bool) or reps < 1):
        problems.append(f"reps must be an integer >= 1, got {reps!r}")
    seed = cfg.get("seed")
    if "seed" in cfg and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        problems.append(f"seed must be a nonnegative integer, got {seed!r}")
    mode = cfg.get("theta_mode", ThetaMode.FIXED_PER_SCENARIO.value)
    try:
        mode = ThetaMode(str(mode).upper())
    except ValueError:
        problems.append(f"theta_mode must be FIXED_PER_SCENARIO or PER_REPLICATION, got {mode!r}")
    if problems:
        raise ConfigError(problems)
    # q has no effect when s0 = 0, so those scenarios appear once
    scenarios = [
        ScenarioSpec(d, s0, q, kind, seed)
        for q, s0, d, kind in itertools.product(qs, s0s, dims, kinds)
        if s0 != 0 or q == qs[0]
    ]
    return ExperimentGrid(scenarios, labels, reps, seed, mode)


def load_grid(path) -> ExperimentGrid:
    try:
        cfg = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"YAML parse error: {exc}"]) from exc
    return grid_from_mapping(cfg)


# -- reports ------------------------------------------------------------------

def _fmt(x) -> str:
    return "nan" if x != x else f"{x:.6g}"


def report_rows(reports) -> list[str]:
    rows = [CSV_HEADER]
    for r in reports:
        d = r.scenario.dims
        rows.append(",".join([
            str(d.p), str(d.n), str(d.m), _fmt(r.scenario.s0), _fmt(r.scenario.q),
            r.scenario.cov_kind.value, r.estimator.value,
            _fmt(r.prir_theta), _fmt(r.se_theta), _fmt(r.prir_sigma), _fmt(r.se_sigma),
            _fmt(r.prir_kl), _fmt(r.se_kl), str(r.reps), str(r.seed),
        ]))
    return rows


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.txt")


def emit_report(reports, path, grid: ExperimentGrid | None = None) -> tuple[Path, Path]:
    """Write the CSV report and a key-value manifest next to it."""
    if not reports:
        raise ValueError("no reports to write")
    path = Path(path)
    path.write_text("\n".join(report_rows(reports)) + "\n")
    lines = [f"toolkit_version = {__version__}", f"rows = {len(reports)}"]
    if grid is not None:
        lines += [
            f"replications = {grid.replications}",
            f"base_seed = {grid.base_seed}",
            f"theta_mode = {grid.theta_mode.value}",
            f"estimators = {','.join(e.value for e in grid.estimators)}",
            f"scenarios = {len(grid.scenarios)}",
        ]
        for i, s in enumerate(grid.scenarios):
            d = s.dims
            lines.append(f"scenario.{i} = p={d.p} n={d.n} m={d.m} s0={s.s0:g} q={s.q:g} cov={s.cov_kind.value}")
    seen = set()
    for r in reports:
        key = id(r.scenario)
        if key in seen or not r.baseline:
            continue
        seen.add(key)
        b = r.baseline
        lines.append(f"baseline_lq.{len(seen) - 1} = {b['mean_lq']:.6g} (analytic {b['mp']}, se {b['se_lq']:.3g})")
    for r in reports:
        if r.error:
            d = r.scenario.dims
            lines.append(f"error.p{d.p}_n{d.n}_m{d.m}_s{r.scenario.s0:g}.{r.estimator.value} = {r.error}")
    mpath = manifest_path(path)
    mpath.write_text("\n".join(lines) + "\n")
    return path, mpath
