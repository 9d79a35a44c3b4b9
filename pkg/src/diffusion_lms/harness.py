"""Monte Carlo experiment harness.

A JSON config describes one experiment: a topology, signal and noise models,
the algorithms to compare, and the Monte Carlo budget.  Every algorithm in a
run consumes exactly the same regressor and noise streams (common random
numbers), the topology and the realized per-node variances are fixed across
runs unless asked otherwise, and per-run seeds are derived from the master
seed by counter so results do not depend on scheduling or worker count.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import MsdCurve, msd
from .filters import (
    SIGN_MINUS,
    SIGN_PLUS,
    SIMULATABLE,
    FilterHyperparams,
    NetworkState,
    adapt_all,
    combine_all,
    normalize_algorithm,
)
from .network import gen_geometric_topology, gen_random_topology, uniform_combination
from .signals import NoiseModel, RegressorProfile, gen_unknown_system

# Spawn keys reserved under the master seed.
_KEY_TOPOLOGY = 0
_KEY_PROFILE = 1
_KEY_PILOT = 2
_KEY_RUN_BASE = 16


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass
class VarianceSpec:
    """Scalar, uniform-range, or explicit per-node variance setting."""

    kind: str  # "scalar" | "range" | "explicit"
    value: float | None = None
    low: float | None = None
    high: float | None = None
    values: list | None = None

    def realize(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == "scalar":
            return np.full(shape, self.value, dtype=float)
        if self.kind == "range":
            return rng.uniform(self.low, self.high, shape)
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != tuple(np.atleast_1d(shape)):
            raise ConfigError(
                f"explicit variance list has shape {arr.shape}, expected {tuple(np.atleast_1d(shape))}"
            )
        return arr

    def to_json(self):
        if self.kind == "scalar":
            return self.value
        if self.kind == "range":
            return {"low": self.low, "high": self.high}
        return self.values


@dataclass
class TopologySpec:
    kind: str  # "random" | "geometric"
    nodes: int
    edge_probability: float | None = None
    radius: float | None = None


@dataclass
class RegressorSpec:
    kind: str
    variance: VarianceSpec
    correlation: float = 0.0


@dataclass
class NoiseSpec:
    gaussian_variance: VarianceSpec
    impulse_probability: float = 0.0
    impulse_variance: float = 0.0


@dataclass
class AlgorithmSpec:
    name: str
    step_size: float


@dataclass
class ExperimentConfig:
    topology: TopologySpec
    filter_length: int
    regressors: RegressorSpec
    noise: NoiseSpec
    algorithms: list[AlgorithmSpec]
    iterations: int
    runs: int
    seed: int
    system_drift_std: float = 0.0
    variance_sign: str = SIGN_PLUS
    initial_variance: float = 1.0
    assumed_noise_variance: float | None = None
    fresh_topology_per_run: bool = False
    workers: int = 1
    output_dir: str | None = None

    def to_dict(self) -> dict:
        return {
            "topology": {
                k: v for k, v in asdict(self.topology).items() if v is not None
            },
            "filter_length": self.filter_length,
            "regressors": {
                "kind": self.regressors.kind,
                "variance": self.regressors.variance.to_json(),
                "correlation": self.regressors.correlation,
            },
            "noise": {
                "gaussian_variance": self.noise.gaussian_variance.to_json(),
                "impulsive": None
                if self.noise.impulse_probability == 0.0
                else {
                    "probability": self.noise.impulse_probability,
                    "variance": self.noise.impulse_variance,
                },
            },
            "algorithms": [asdict(a) for a in self.algorithms],
            "iterations": self.iterations,
            "runs": self.runs,
            "seed": self.seed,
            "system_drift_std": self.system_drift_std,
            "variance_sign": self.variance_sign,
            "initial_variance": self.initial_variance,
            "assumed_noise_variance": self.assumed_noise_variance,
            "fresh_topology_per_run": self.fresh_topology_per_run,
            "workers": self.workers,
            "output_dir": self.output_dir,
        }

    def canonical_json(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json()).hexdigest()


# ---------------------------------------------------------------------------
# Parsing and validation.


def _expect_mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    return value


def _get(mapping, key, path, required=True, default=None):
    if key not in mapping:
        if required:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    return mapping[key]


def _number(value, path, low=None, high=None, integer=False, strict_low=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    if integer and int(value) != value:
        raise ConfigError(f"{path}: expected an integer")
    if low is not None and (value <= low if strict_low else value < low):
        op = ">" if strict_low else ">="
        raise ConfigError(f"{path}: must be {op} {low}")
    if high is not None and value > high:
        raise ConfigError(f"{path}: must be <= {high}")
    return int(value) if integer else float(value)


def _parse_variance(value, path, positive=True) -> VarianceSpec:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        v = float(value)
        if positive and v <= 0:
            raise ConfigError(f"{path}: variance must be positive")
        if v < 0:
            raise ConfigError(f"{path}: variance must be nonnegative")
        return VarianceSpec("scalar", value=v)
    if isinstance(value, dict):
        low = _number(_get(value, "low", path), f"{path}.low", low=0.0,
                      strict_low=positive)
        high = _number(_get(value, "high", path), f"{path}.high", low=0.0,
                       strict_low=positive)
        if high < low:
            raise ConfigError(f"{path}.high: must be >= low")
        return VarianceSpec("range", low=low, high=high)
    if isinstance(value, list):
        return VarianceSpec("explicit", values=value)
    raise ConfigError(f"{path}: expected a number, a low/high object, or a list")


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = _expect_mapping(raw, "config")

    topo_raw = _expect_mapping(_get(raw, "topology", "config"), "topology")
    kind = _get(topo_raw, "kind", "topology")
    if kind not in ("random", "geometric"):
        raise ConfigError("topology.kind: must be 'random' or 'geometric'")
    nodes = _number(_get(topo_raw, "nodes", "topology"), "topology.nodes",
                    low=2, integer=True)
    if kind == "random":
        p = _number(_get(topo_raw, "edge_probability", "topology"),
                    "topology.edge_probability", low=0.0, high=1.0)
        topology = TopologySpec("random", nodes, edge_probability=p)
    else:
        r = _number(_get(topo_raw, "radius", "topology"), "topology.radius",
                    low=0.0, strict_low=True)
        topology = TopologySpec("geometric", nodes, radius=r)

    filter_length = _number(_get(raw, "filter_length", "config"),
                            "filter_length", low=1, integer=True)

    reg_raw = _expect_mapping(_get(raw, "regressors", "config"), "regressors")
    reg_kind = _get(reg_raw, "kind", "regressors")
    if reg_kind not in ("white", "diagonal", "correlated"):
        raise ConfigError("regressors.kind: must be 'white', 'diagonal', or 'correlated'")
    reg_var = _parse_variance(_get(reg_raw, "variance", "regressors"),
                              "regressors.variance")
    correlation = _number(_get(reg_raw, "correlation", "regressors",
                               required=False, default=0.0),
                          "regressors.correlation", low=0.0)
    if correlation >= 1.0:
        raise ConfigError("regressors.correlation: must lie in [0, 1)")
    if reg_kind != "correlated" and correlation != 0.0:
        raise ConfigError("regressors.correlation: only meaningful for kind 'correlated'")
    regressors = RegressorSpec(reg_kind, reg_var, correlation)

    noise_raw = _expect_mapping(_get(raw, "noise", "config"), "noise")
    gauss = _parse_variance(_get(noise_raw, "gaussian_variance", "noise"),
                            "noise.gaussian_variance", positive=False)
    imp_raw = _get(noise_raw, "impulsive", "noise", required=False)
    if imp_raw is None:
        noise = NoiseSpec(gauss)
    else:
        imp_raw = _expect_mapping(imp_raw, "noise.impulsive")
        prob = _number(_get(imp_raw, "probability", "noise.impulsive"),
                       "noise.impulsive.probability", low=0.0, high=1.0)
        var = _number(_get(imp_raw, "variance", "noise.impulsive"),
                      "noise.impulsive.variance", low=0.0,
                      strict_low=prob > 0.0)
        noise = NoiseSpec(gauss, prob, var)

    algs_raw = _get(raw, "algorithms", "config")
    if not isinstance(algs_raw, list) or not algs_raw:
        raise ConfigError("algorithms: expected a nonempty list")
    algorithms = []
    seen = set()
    for idx, entry in enumerate(algs_raw):
        path = f"algorithms[{idx}]"
        entry = _expect_mapping(entry, path)
        try:
            name = normalize_algorithm(_get(entry, "name", path))
        except ValueError as exc:
            raise ConfigError(f"{path}.name: {exc}") from None
        if name not in SIMULATABLE:
            raise ConfigError(f"{path}.name: {name} has published costs only; "
                              "it cannot be simulated")
        if name in seen:
            raise ConfigError(f"{path}.name: duplicate algorithm {name}")
        seen.add(name)
        mu = _number(_get(entry, "step_size", path), f"{path}.step_size",
                     low=0.0, strict_low=True)
        algorithms.append(AlgorithmSpec(name, mu))

    iterations = _number(_get(raw, "iterations", "config"), "iterations",
                         low=1, integer=True)
    runs = _number(_get(raw, "runs", "config"), "runs", low=1, integer=True)
    seed = _number(_get(raw, "seed", "config"), "seed", low=0, integer=True)

    drift = _number(_get(raw, "system_drift_std", "config", required=False,
                         default=0.0), "system_drift_std", low=0.0)
    sign = _get(raw, "variance_sign", "config", required=False, default=SIGN_PLUS)
    if sign not in (SIGN_PLUS, SIGN_MINUS):
        raise ConfigError("variance_sign: must be 'plus' or 'minus'")
    init_var = _number(_get(raw, "initial_variance", "config", required=False,
                            default=1.0), "initial_variance", low=0.0,
                       strict_low=True)
    assumed = _get(raw, "assumed_noise_variance", "config", required=False)
    if assumed is not None:
        assumed = _number(assumed, "assumed_noise_variance", low=0.0)
    fresh = _get(raw, "fresh_topology_per_run", "config", required=False,
                 default=False)
    if not isinstance(fresh, bool):
        raise ConfigError("fresh_topology_per_run: expected true or false")
    workers = _number(_get(raw, "workers", "config", required=False, default=1),
                      "workers", low=1, integer=True)
    output_dir = _get(raw, "output_dir", "config", required=False)
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError("output_dir: expected a string path")

    return ExperimentConfig(
        topology=topology,
        filter_length=filter_length,
        regressors=regressors,
        noise=noise,
        algorithms=algorithms,
        iterations=iterations,
        runs=runs,
        seed=seed,
        system_drift_std=drift,
        variance_sign=sign,
        initial_variance=init_var,
        assumed_noise_variance=assumed,
        fresh_topology_per_run=fresh,
        workers=workers,
        output_dir=output_dir,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# Experiment assembly.


def _seed_seq(seed: int, key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(key,))


def build_topology(config: ExperimentConfig, seed_key: int = _KEY_TOPOLOGY):
    """The experiment's topology and uniform combination weights."""
    spec = config.topology
    ss = _seed_seq(config.seed, seed_key)
    if spec.kind == "random":
        topo = gen_random_topology(spec.nodes, spec.edge_probability, ss)
    else:
        topo = gen_geometric_topology(spec.nodes, spec.radius, ss)
    return topo, uniform_combination(topo)


def realize_models(config: ExperimentConfig):
    """Draw the per-node variances once and build the signal/noise models."""
    rng = np.random.default_rng(_seed_seq(config.seed, _KEY_PROFILE))
    n, m = config.topology.nodes, config.filter_length
    shape = (n, m) if config.regressors.kind == "diagonal" else (n,)
    reg_var = config.regressors.variance.realize(rng, shape)
    profile = RegressorProfile(
        config.regressors.kind, reg_var, m, config.regressors.correlation
    )
    gauss = config.noise.gaussian_variance.realize(rng, (n,))
    noise_model = NoiseModel(
        gauss, config.noise.impulse_probability, config.noise.impulse_variance
    )
    return profile, noise_model


def generate_run_data(
    config: ExperimentConfig,
    profile: RegressorProfile,
    noise_model: NoiseModel,
    run_key: int,
):
    """All randomness one run needs: regressors, measurements, true weights.

    Returns ``(X, d, wo)`` with X of shape (T, N, M), d of shape (T, N), and
    wo either the static (M,) system or its (T, M) random-walk trajectory.
    Every algorithm in the run consumes these same arrays.
    """
    t, n, m = config.iterations, config.topology.nodes, config.filter_length
    run_ss = _seed_seq(config.seed, run_key)
    system_ss, data_ss = run_ss.spawn(2)
    system = gen_unknown_system(m, system_ss, config.system_drift_std)

    data_rng = np.random.default_rng(data_ss)
    x = np.empty((t, n, m))
    for node in range(n):
        x[:, node, :] = profile.stream(node, data_rng).draw_block(t)
    noise = noise_model.sample_block(data_rng, t)

    if config.system_drift_std > 0.0:
        sys_rng = np.random.default_rng(system_ss.spawn(1)[0])
        drift = sys_rng.normal(0.0, config.system_drift_std, (t, m))
        drift[0] = 0.0
        wo = system.weights[None, :] + np.cumsum(drift, axis=0)
        d = np.einsum("tnm,tm->tn", x, wo) + noise
    else:
        wo = system.weights
        d = x @ wo + noise
    return x, d, wo


def _hyperparams(config: ExperimentConfig, noise_model: NoiseModel) -> FilterHyperparams:
    n = config.topology.nodes
    if config.assumed_noise_variance is None:
        observed = np.array(noise_model.gaussian_variance)
    else:
        observed = np.full(n, config.assumed_noise_variance)
    return FilterHyperparams.broadcast(
        n, config.system_drift_std**2, observed, config.variance_sign
    )


def simulate_algorithm(
    x: np.ndarray,
    d: np.ndarray,
    wo: np.ndarray,
    algorithm: str,
    mu: float,
    combination,
    hyper: FilterHyperparams,
    initial_variance: float = 1.0,
    record_alpha: bool = False,
):
    """Drive one algorithm over one run's data.

    The MSD is recorded at the top of every iteration, so entry 0 is the
    zero-start deviation and entry i reflects i completed updates.  If the
    state stops being finite the remaining curve is pinned to infinity and
    the divergence iteration is reported.
    """
    t, n, m = x.shape
    state = NetworkState.zeros(n, m, initial_variance)
    drifting = wo.ndim == 2
    curve = np.empty(t)
    alphas = np.empty((t, n)) if record_alpha else None
    diverged_at = None
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for i in range(t):
            value = msd(wo[i] if drifting else wo, state.weights)
            if not np.isfinite(value):
                curve[i:] = np.inf
                if record_alpha:
                    alphas[i:] = np.nan
                diverged_at = i
                break
            curve[i] = value
            phi, variances, alpha = adapt_all(
                state, x[i], d[i], algorithm, mu, hyper
            )
            state.weights = combine_all(phi, combination)
            state.variances = variances
            if record_alpha:
                alphas[i] = 0.0 if alpha is None else alpha
    return curve, diverged_at, alphas


@dataclass
class RunResult:
    """Ensemble-averaged outcome of one experiment."""

    curves: dict[str, MsdCurve]
    config: ExperimentConfig
    config_hash: str
    run_seeds: list[dict]
    wall_clock_seconds: float
    diverged: dict[str, int | None] = field(default_factory=dict)


def _execute_run(config: ExperimentConfig, run_index: int):
    if config.fresh_topology_per_run:
        # Third child of the run seed, so data streams stay aligned with the
        # shared-topology case.
        run_ss = _seed_seq(config.seed, _KEY_RUN_BASE + run_index)
        topo_ss = run_ss.spawn(3)[2]
        spec = config.topology
        if spec.kind == "random":
            topo = gen_random_topology(spec.nodes, spec.edge_probability, topo_ss)
        else:
            topo = gen_geometric_topology(spec.nodes, spec.radius, topo_ss)
        combination = uniform_combination(topo)
    else:
        _, combination = build_topology(config)
    profile, noise_model = realize_models(config)
    hyper = _hyperparams(config, noise_model)
    x, d, wo = generate_run_data(
        config, profile, noise_model, _KEY_RUN_BASE + run_index
    )
    curves = {}
    diverged = {}
    for alg in config.algorithms:
        curve, div, _ = simulate_algorithm(
            x, d, wo, alg.name, alg.step_size, combination, hyper,
            config.initial_variance,
        )
        curves[alg.name] = curve
        diverged[alg.name] = div
    return run_index, curves, diverged


def _run_worker(args):
    return _execute_run(*args)


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> RunResult:
    """Execute the full Monte Carlo experiment described by ``config``.

    ``workers`` overrides the config value; any worker count yields the same
    ensemble averages because runs are seeded by counter and reduced in run
    order.
    """
    started = time.perf_counter()
    workers = config.workers if workers is None else workers
    jobs = [(config, r) for r in range(config.runs)]
    if workers > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_worker, jobs))
    else:
        outcomes = [_execute_run(*job) for job in jobs]
    outcomes.sort(key=lambda item: item[0])

    names = [a.name for a in config.algorithms]
    totals = {name: np.zeros(config.iterations) for name in names}
    diverged: dict[str, int | None] = {name: None for name in names}
    for _, curves, run_diverged in outcomes:
        for name in names:
            totals[name] += curves[name]
            div = run_diverged[name]
            if div is not None and (diverged[name] is None or div < diverged[name]):
                diverged[name] = div

    curves = {}
    for alg in config.algorithms:
        curves[alg.name] = MsdCurve(
            totals[alg.name] / config.runs,
            metadata={
                "algorithm": alg.name,
                "step_size": alg.step_size,
                "runs": config.runs,
                "iterations": config.iterations,
            },
        )
    run_seeds = [
        {"entropy": config.seed, "spawn_key": [_KEY_RUN_BASE + r]}
        for r in range(config.runs)
    ]
    return RunResult(
        curves=curves,
        config=config,
        config_hash=config.hash(),
        run_seeds=run_seeds,
        wall_clock_seconds=time.perf_counter() - started,
        diverged=diverged,
    )


def pilot_alpha(config: ExperimentConfig, iterations: int = 500) -> np.ndarray:
    """Steady-state per-node step-size snapshot from a short pilot run.

    Runs the probabilistic filter for ``iterations`` iterations under the
    pilot seed and averages the recorded step sizes over the second half.
    """
    pilot_config = replace(config, iterations=iterations)
    _, combination = build_topology(config)
    profile, noise_model = realize_models(config)
    hyper = _hyperparams(config, noise_model)
    x, d, wo = generate_run_data(pilot_config, profile, noise_model, _KEY_PILOT)
    mu = next(
        (a.step_size for a in config.algorithms if a.name == "DPLMS"), 1.0
    )
    _, _, alphas = simulate_algorithm(
        x, d, wo, "DPLMS", mu, combination, hyper,
        config.initial_variance, record_alpha=True,
    )
    return alphas[iterations // 2 :].mean(axis=0)


# ---------------------------------------------------------------------------
# Output emission.


def version_string() -> str:
    """Package version, extended with the git revision when available."""
    here = Path(__file__).resolve().parent
    try:
        described = subprocess.run(
            ["git", "-C", str(here), "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
        )
        if described.returncode == 0 and described.stdout.strip():
            return f"{__version__}+g{described.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _csv_name(algorithm: str) -> str:
    return "msd_" + algorithm.lower().replace("-", "_") + ".csv"


def emit_csv(result: RunResult, out_dir, config_file_sha256: str | None = None):
    """Write one MSD CSV per algorithm plus a JSON manifest.

    Returns the written paths, manifest last.  CSV bytes depend only on the
    curves, so identical configs and seeds reproduce identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    csv_files = {}
    for name, curve in result.curves.items():
        path = out / _csv_name(name)
        curve.write_csv(path)
        csv_files[name] = path.name
        paths.append(path)
    manifest = {
        "version": version_string(),
        "config": result.config.to_dict(),
        "config_hash": result.config_hash,
        "seeds": {"master": result.config.seed, "runs": result.run_seeds},
        "algorithms": list(result.curves),
        "csv_files": csv_files,
        "diverged": result.diverged,
        "wall_clock_seconds": result.wall_clock_seconds,
    }
    if config_file_sha256 is not None:
        manifest["config_file_sha256"] = config_file_sha256
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    paths.append(manifest_path)
    return paths
