"""Experiment configuration, seeded run orchestration, presets and CSV output.

A configuration is a TOML document (``schema_version = 1``)::

    schema_version = 1
    name = "my_run"
    horizon = 200000          # slots per run
    runs = 5
    master_seed = 0
    frame_length = 5000       # default for frame-based policies
    frame_lengths = []        # optional sweep; horizon becomes horizon_factor * T
    horizon_factor = 10

    [topology]
    kind = "grid"             # grid | ring | path | random | file
    rows = 4
    cols = 4

    [traffic]
    kind = "uniform"          # uniform | scaled | ring
    loads = [0.07, 0.08]      # lambda (uniform), multiplier (scaled), epsilon (ring)
    rate_seed = 0

    [[policies]]
    kind = "akucb"            # akucb | dakucb | ucb_gmm | mwm
    k = 3
    p = 0.2

    [metrics]
    regret = false
    trace_every = 0
    window_fraction = 0.0     # tail of each frame checked against the near-optimal set

    [toggles]
    reset_schedule = true
    draw_when_empty = true
    exact_mwm_large = false
    collision = "prefer_matched"

Every random stream is derived from ``master_seed`` by :func:`derive_seed`,
keyed by a purpose name, the load index and the run index. Policies that
share a load and run therefore see the same arrivals, channels and protocol
draws, and results do not depend on execution order.
"""

from __future__ import annotations

import copy
import dataclasses
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .augment import COLLISION_RULES, PREFER_MATCHED
from .matching import MAX_BNB_LINKS
from .metrics import (
    REGRET_COLUMNS,
    STABILITY_COLUMNS,
    TRACE_COLUMNS,
    RegretAccumulator,
    log_checkpoints,
    write_csv,
)
from .network import (
    NetworkGraph,
    grid_topology,
    path_topology,
    random_topology,
    ring_topology,
)
from .policies import AKUCB, DIST_AKUCB, MWM_GENIE, UCB_GMM, PolicySpec, build_policy
from .simulate import simulate
from .traffic import TrafficModel, make_grid_experiment_traffic, make_ring_experiment

SCHEMA_VERSION = 1
OUT_DIR_ENV = "AKUCB_OUT_DIR"
WINDOW_COLUMNS = ("policy", "lambda", "run", "frame", "outside", "slots")


class ConfigError(ValueError):
    pass


def derive_seed(master_seed: int, purpose: str, *keys: int) -> np.random.SeedSequence:
    """Child seed for ``purpose`` (hashed with CRC-32) and integer ``keys``."""
    return np.random.SeedSequence(master_seed, spawn_key=(zlib.crc32(purpose.encode()), *keys))


@dataclass(frozen=True)
class TopologySpec:
    kind: str = "grid"
    rows: int = 4
    cols: int = 4
    n: int = 6
    n_nodes: int = 50
    n_links: int = 200
    seed: int | None = None
    path: str | None = None

    def build(self, master_seed: int) -> NetworkGraph:
        if self.kind == "grid":
            return grid_topology(self.rows, self.cols)
        if self.kind == "ring":
            return ring_topology(self.n)
        if self.kind == "path":
            return path_topology(self.n)
        if self.kind == "random":
            seed = self.seed if self.seed is not None else derive_seed(master_seed, "topology")
            return random_topology(self.n_nodes, self.n_links, seed)
        if self.kind == "file":
            if not self.path:
                raise ConfigError("topology kind 'file' needs a path")
            return NetworkGraph.load(self.path)
        raise ConfigError(f"unknown topology kind {self.kind!r}")


@dataclass(frozen=True)
class TrafficSpec:
    kind: str = "uniform"
    loads: tuple[float, ...] = (0.08,)
    rate_seed: int = 0
    mu_range: tuple[float, float] = (0.25, 0.75)
    rho_range: tuple[float, float] = (0.4, 0.7)
    initial_queues: tuple[int, ...] | None = None

    def build(self, g: NetworkGraph, load: float, frame_length: int = 6000) -> tuple[TrafficModel, np.ndarray | None]:
        """Traffic model and initial queues (``None`` means all empty).

        Ring traffic scales its initial queues with ``frame_length``.
        """
        q0 = None if self.initial_queues is None else np.array(self.initial_queues, dtype=np.int64)
        if self.kind == "uniform":
            return make_grid_experiment_traffic(g, load, self.rate_seed, self.mu_range), q0
        if self.kind == "scaled":
            rng = np.random.default_rng(self.rate_seed)
            mu = rng.uniform(*self.mu_range, size=g.link_count)
            rho = rng.uniform(*self.rho_range, size=g.link_count)
            return TrafficModel(load * rho, mu), q0
        if self.kind == "ring":
            if g.link_count != 6 or g.node_count != 6:
                raise ConfigError("ring traffic needs the 6-link ring topology")
            ex = make_ring_experiment(load, frame_length)
            return ex.traffic, (ex.initial_queues if q0 is None else q0)
        raise ConfigError(f"unknown traffic kind {self.kind!r}")


@dataclass(frozen=True)
class MetricsSpec:
    regret: bool = False
    checkpoints: tuple[int, ...] = ()
    trace_every: int = 0
    window_fraction: float = 0.0


@dataclass(frozen=True)
class Toggles:
    reset_schedule: bool = True
    draw_when_empty: bool = True
    exact_mwm_large: bool = False
    collision: str = PREFER_MATCHED


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    horizon: int
    topology: TopologySpec
    traffic: TrafficSpec
    policies: tuple[PolicySpec, ...]
    runs: int = 1
    master_seed: int = 0
    frame_length: int = 5000
    frame_lengths: tuple[int, ...] = ()
    horizon_factor: int = 10
    metrics: MetricsSpec = field(default_factory=MetricsSpec)
    toggles: Toggles = field(default_factory=Toggles)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}")
        if self.horizon < 1 or self.runs < 1:
            raise ConfigError("horizon and runs must be positive")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        if not self.traffic.loads:
            raise ConfigError("traffic.loads must not be empty")
        if self.toggles.collision not in COLLISION_RULES:
            raise ConfigError(f"collision must be one of {COLLISION_RULES}")
        if any(t < 1 for t in self.frame_lengths) or self.horizon_factor < 1:
            raise ConfigError("frame lengths and horizon_factor must be positive")
        if not 0.0 <= self.metrics.window_fraction <= 1.0:
            raise ConfigError("window_fraction must lie in [0, 1]")
        names = [p.name for p, _ in self.expanded_policies()]
        if len(set(names)) != len(names):
            raise ConfigError(f"policy names must be unique, got {names}; set 'label' to disambiguate")

    def expanded_policies(self) -> list[tuple[PolicySpec, int]]:
        """Each policy paired with its horizon, with any frame-length sweep unrolled."""
        out = []
        for spec in self.policies:
            if self.frame_lengths and spec.uses_frames:
                for T in self.frame_lengths:
                    label = f"{spec.name}_T{T}"
                    out.append((dataclasses.replace(spec, frame_length=T, label=label), self.horizon_factor * T))
            else:
                out.append((spec, self.horizon))
        return out


def _tuple(x):
    return tuple(x) if isinstance(x, (list, tuple)) else x


def _section(cls, data: Mapping[str, Any] | None, where: str):
    data = dict(data or {})
    known = {f.name for f in dataclasses.fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown key(s) in [{where}]: {sorted(extra)}")
    try:
        return cls(**{k: _tuple(v) for k, v in data.items()})
    except TypeError as exc:
        raise ConfigError(f"bad [{where}] section: {exc}") from exc


def _policy(data: Mapping[str, Any], default_T: int) -> PolicySpec:
    data = dict(data)
    data.setdefault("frame_length", default_T)
    extra = set(data) - {f.name for f in dataclasses.fields(PolicySpec)}
    if extra:
        raise ConfigError(f"unknown key(s) in [[policies]]: {sorted(extra)}")
    try:
        return PolicySpec(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad policy {data}: {exc}") from exc


def config_from_dict(data: Mapping[str, Any]) -> ExperimentConfig:
    data = copy.deepcopy(dict(data))
    top_known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    extra = set(data) - top_known
    if extra:
        raise ConfigError(f"unknown top-level key(s): {sorted(extra)}")
    for key in ("name", "horizon", "policies"):
        if key not in data:
            raise ConfigError(f"missing required key {key!r}")
    T = int(data.get("frame_length", 5000))
    try:
        return ExperimentConfig(
            name=str(data["name"]),
            horizon=int(data["horizon"]),
            topology=_section(TopologySpec, data.get("topology"), "topology"),
            traffic=_section(TrafficSpec, data.get("traffic"), "traffic"),
            policies=tuple(_policy(p, T) for p in data["policies"]),
            runs=int(data.get("runs", 1)),
            master_seed=int(data.get("master_seed", 0)),
            frame_length=T,
            frame_lengths=tuple(int(x) for x in data.get("frame_lengths", ())),
            horizon_factor=int(data.get("horizon_factor", 10)),
            metrics=_section(MetricsSpec, data.get("metrics"), "metrics"),
            toggles=_section(Toggles, data.get("toggles"), "toggles"),
            schema_version=int(data.get("schema_version", SCHEMA_VERSION)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> dict[str, Any]:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def parse_value(text: str) -> Any:
    """Interpret an override value as TOML, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    """Apply ``a.b=value`` assignments to a raw config dict (copied)."""
    data = copy.deepcopy(data)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r}: {part!r} is not a section")
        node[parts[-1]] = parse_value(value.strip())
    return data


# ---------------------------------------------------------------- presets

def _grid_policies(ks=(2, 3, 4), extra=()) -> list[dict]:
    return [{"kind": AKUCB, "k": k, "p": 0.2} for k in ks] + list(extra)


def _preset_regret_grid(desk: bool) -> dict:
    T = 100_000 if desk else 1_000_000
    return {
        "name": "fig_regret_grid" + ("_desk" if desk else ""),
        "horizon": T, "frame_length": T, "runs": 10,
        "topology": {"kind": "grid", "rows": 4, "cols": 4},
        "traffic": {"kind": "uniform", "loads": [0.08], "rate_seed": 0},
        "policies": _grid_policies(extra=[{"kind": DIST_AKUCB, "k": 3, "p": 0.2}]),
        "metrics": {"regret": True, "window_fraction": 0.1},
    }


STABILITY_LOADS = [0.06, 0.07, 0.08, 0.084, 0.088, 0.09, 0.095, 0.1]


def _preset_stability_grid(desk: bool) -> dict:
    return {
        "name": "fig_stability_grid" + ("_desk" if desk else ""),
        "horizon": 200_000 if desk else 1_000_000,
        "frame_length": 5000,
        "runs": 5 if desk else 10,
        "topology": {"kind": "grid", "rows": 4, "cols": 4},
        "traffic": {"kind": "uniform", "loads": STABILITY_LOADS, "rate_seed": 0},
        "policies": [{"kind": MWM_GENIE}, {"kind": UCB_GMM}]
        + _grid_policies(extra=[{"kind": DIST_AKUCB, "k": 3, "p": 0.2}]),
    }


def _preset_frame_size(desk: bool) -> dict:
    Ts = [100, 1000, 10_000, 100_000, 200_000] if desk else [1000, 10_000, 100_000, 1_000_000, 2_000_000]
    return {
        "name": "fig_frame_size" + ("_desk" if desk else ""),
        "horizon": 10 * Ts[-1], "frame_lengths": Ts, "horizon_factor": 10, "runs": 10,
        "topology": {"kind": "grid", "rows": 4, "cols": 4},
        "traffic": {"kind": "uniform", "loads": [0.07, 0.08, 0.084, 0.088, 0.09], "rate_seed": 0},
        "policies": [{"kind": AKUCB, "k": 3, "p": 0.2}],
    }


def _preset_ring(desk: bool) -> dict:
    return {
        "name": "fig_ring" + ("_desk" if desk else ""),
        "horizon": 300_000 if desk else 3_000_000,
        "frame_length": 6000, "runs": 5,
        "topology": {"kind": "ring", "n": 6},
        "traffic": {"kind": "ring", "loads": [0.08]},
        "policies": [{"kind": AKUCB, "k": 3, "p": 0.2}, {"kind": DIST_AKUCB, "k": 3, "p": 0.2}, {"kind": UCB_GMM}],
        "metrics": {"trace_every": 6000},
    }


def _preset_random(desk: bool) -> dict:
    return {
        "name": "fig_random" + ("_desk" if desk else ""),
        "horizon": 50_000 if desk else 500_000,
        "frame_length": 500, "runs": 10,
        "topology": {"kind": "random", "n_nodes": 50, "n_links": 200, "seed": 0},
        "traffic": {"kind": "scaled", "loads": [0.1, 0.2, 0.3, 0.4, 0.5], "rate_seed": 0},
        "policies": [{"kind": UCB_GMM}] + _grid_policies(ks=(2, 3, 4))
        + [{"kind": DIST_AKUCB, "k": 3, "p": 0.2}],
    }


_PRESET_BUILDERS = {
    "fig_regret_grid": (_preset_regret_grid, "4x4 grid, one long frame, regret and alpha-regret curves"),
    "fig_stability_grid": (_preset_stability_grid, "4x4 grid, arrival-rate sweep, end-of-run queue totals"),
    "fig_frame_size": (_preset_frame_size, "4x4 grid, frame-length sweep for A^3-UCB"),
    "fig_ring": (_preset_ring, "6-link ring where greedy scheduling fails, queue traces"),
    "fig_random": (_preset_random, "50-node random network, arrival-rate sweep"),
}


def preset_names() -> list[str]:
    names = []
    for base in _PRESET_BUILDERS:
        names += [base, base + "_desk"]
    return names


def preset_description(name: str) -> str:
    base = name.removesuffix("_desk")
    desc = _PRESET_BUILDERS[base][1]
    return desc + (" (desk scale)" if name.endswith("_desk") else "")


def preset(name: str) -> dict[str, Any]:
    """Raw config dict for a named preset (``<name>_desk`` for desk scale)."""
    desk = name.endswith("_desk")
    base = name.removesuffix("_desk")
    if base not in _PRESET_BUILDERS:
        raise KeyError(name)
    data = _PRESET_BUILDERS[base][0](desk)
    data["schema_version"] = SCHEMA_VERSION
    return data


# ---------------------------------------------------------------- execution

@dataclass
class RunOutput:
    policy: str
    load: float
    run: int
    end_total: int
    trace: list[tuple[int, int]]
    regret_rows: list[tuple]
    window_rows: list[tuple]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    outputs: list[RunOutput]
    files: list[Path]

    def stability_rows(self) -> list[tuple]:
        return [(o.policy, o.load, o.run, o.end_total) for o in self.outputs]

    def mean_end_queue(self, policy: str, load: float) -> float:
        vals = [o.end_total for o in self.outputs if o.policy == policy and np.isclose(o.load, load)]
        if not vals:
            raise KeyError(f"no runs for {policy!r} at load {load}")
        return float(np.mean(vals))


def policy_alpha(spec: PolicySpec) -> float:
    if spec.kind in (AKUCB, DIST_AKUCB):
        return (spec.k - 1) / (spec.k + 1)
    return 0.5


def _task(cfg: ExperimentConfig, pol_idx: int, load_idx: int, run: int) -> RunOutput:
    spec, horizon = cfg.expanded_policies()[pol_idx]
    load = cfg.traffic.loads[load_idx]
    g = cfg.topology.build(cfg.master_seed)
    traffic, q0 = cfg.traffic.build(g, load, cfg.frame_length)
    tog = cfg.toggles
    if spec.kind == MWM_GENIE and g.link_count > MAX_BNB_LINKS and not tog.exact_mwm_large:
        raise ConfigError(
            f"MWM genie on {g.link_count} links exceeds the exact-search limit of {MAX_BNB_LINKS}; "
            "set toggles.exact_mwm_large = true"
        )
    policy = build_policy(
        spec, g, traffic.service, derive_seed(cfg.master_seed, "protocol", load_idx, run),
        collision=tog.collision, reset_schedule=tog.reset_schedule, allow_large_mwm=tog.exact_mwm_large,
    )
    T = spec.frame_length
    acc = None
    if cfg.metrics.regret and spec.uses_frames:
        L = g.link_count
        extra = [L, 10 * L, T // 10, *cfg.metrics.checkpoints]
        window = None
        if cfg.metrics.window_fraction > 0:
            n = max(1, int(round(T * cfg.metrics.window_fraction)))
            window = (T - n + 1, T)
        acc = RegretAccumulator(g, traffic.service, policy_alpha(spec), log_checkpoints(T, extra),
                                allow_large=tog.exact_mwm_large, window=window)
    res = simulate(
        g, traffic, policy, horizon, T, derive_seed(cfg.master_seed, "traffic", load_idx, run),
        initial_queues=q0, run=run, regret=acc, trace_every=cfg.metrics.trace_every,
        draw_when_empty=tog.draw_when_empty,
    )
    regret_rows = acc.rows if acc else []
    window_rows = []
    if acc and acc.window:
        window_rows = [(spec.name, load, run, f + 1, out, n) for f, (out, n) in enumerate(acc.outside_by_frame)]
    trace = list(res.trace)
    if q0 is not None and cfg.metrics.trace_every:
        trace.insert(0, (0, int(np.sum(q0))))
    return RunOutput(spec.name, load, run, res.end_total, trace, regret_rows, window_rows)


def _task_star(args) -> RunOutput:
    return _task(*args)


def resolve_out_dir(cfg: ExperimentConfig, out_dir: str | Path | None) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    base = os.environ.get(OUT_DIR_ENV)
    return Path(base) / cfg.name if base else Path("results") / cfg.name


def _fmt_load(x: float) -> str:
    return f"{x:g}".replace(".", "p")


def write_outputs(cfg: ExperimentConfig, outputs: Sequence[RunOutput], out_dir: Path) -> list[Path]:
    files = []
    path = out_dir / "stability.csv"
    write_csv(path, STABILITY_COLUMNS, [(o.policy, o.load, o.run, o.end_total) for o in outputs])
    files.append(path)
    if cfg.metrics.trace_every:
        path = out_dir / "trace.csv"
        write_csv(path, TRACE_COLUMNS, [(o.policy, o.load, o.run, t, q) for o in outputs for t, q in o.trace])
        files.append(path)
    multi = len(cfg.traffic.loads) > 1
    groups: dict[tuple[str, float], list[tuple]] = {}
    for o in outputs:
        if o.regret_rows:
            groups.setdefault((o.policy, o.load), []).extend(o.regret_rows)
    for (name, load), rows in groups.items():
        suffix = f"_lambda{_fmt_load(load)}" if multi else ""
        path = out_dir / f"regret_{name}{suffix}.csv"
        write_csv(path, REGRET_COLUMNS, rows)
        files.append(path)
    window_rows = [r for o in outputs for r in o.window_rows]
    if window_rows:
        path = out_dir / "near_optimal.csv"
        write_csv(path, WINDOW_COLUMNS, window_rows)
        files.append(path)
    return files


def summary_table(result: ExperimentResult) -> str:
    cfg = result.config
    lines = [f"{'policy':<24}{'load':>10}{'runs':>6}{'mean end queue':>18}{'last norm. regret':>20}"]
    for spec, _ in cfg.expanded_policies():
        for load in cfg.traffic.loads:
            outs = [o for o in result.outputs if o.policy == spec.name and o.load == load]
            ends = [o.end_total for o in outs]
            finals = [o.regret_rows[-1][5] for o in outs if o.regret_rows]
            reg = f"{np.mean(finals):.2f}" if finals else "-"
            lines.append(f"{spec.name:<24}{load:>10g}{len(outs):>6}{np.mean(ends):>18.1f}{reg:>20}")
    return "\n".join(lines)


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None, *, parallel: int = 1,
                   write: bool = True, verbose: bool = False) -> ExperimentResult:
    """Execute every (policy, load, run) task, write CSVs and return the results.

    Outputs are ordered by policy, load and run regardless of ``parallel``.
    """
    tasks = [
        (cfg, pi, li, run)
        for pi in range(len(cfg.expanded_policies()))
        for li in range(len(cfg.traffic.loads))
        for run in range(cfg.runs)
    ]
    # Fail fast on topology and traffic errors before spawning workers.
    g = cfg.topology.build(cfg.master_seed)
    cfg.traffic.build(g, cfg.traffic.loads[0], cfg.frame_length)
    if parallel > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outputs = list(pool.map(_task_star, tasks))
    else:
        outputs = [_task_star(t) for t in tasks]
    files: list[Path] = []
    if write:
        files = write_outputs(cfg, outputs, resolve_out_dir(cfg, out_dir))
    result = ExperimentResult(cfg, outputs, files)
    if verbose:
        print(summary_table(result))
    return result
