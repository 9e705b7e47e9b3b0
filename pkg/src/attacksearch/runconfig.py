"""Declarative run configuration: one YAML tree drives every CLI mode.

Unknown keys are rejected and every constraint violation names the key and
the line it came from. Omitted keys take the documented defaults; the
text produced by `emit_defaults` parses back to the all-default config.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import yaml

from .configspace import AttackFamily, ConfigSpace, default_config_space
from .evaluation import UtilityWeights
from .search import SearchParams
from .victims import LinearWorldModelVictim, surface_task

MODES = ("search", "oracle", "theory", "bench", "memory", "report")
METHOD_FULL = "attacksearch"
METHOD_RANDOM = "random"
METHOD_FEEDBACK_ONLY = "feedback-only"
METHODS = (METHOD_FULL, METHOD_RANDOM, METHOD_FEEDBACK_ONLY)


class RunConfigError(ValueError):
    def __init__(self, message: str, key: str = "", line: int | None = None):
        location = f" (key {key!r}" + (f", line {line})" if line else ")") if key else ""
        super().__init__(message + location)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class VictimSpec:
    kind: str = "surface"          # surface | linear
    task_id: str = "task-000"
    task_seed: int = 0
    noise: float = 0.0             # surface victims only
    horizon: int = 10
    action_count: int = 6
    obs_dim: int = 64
    latent_dim: int = 12
    grid_size: int = 5
    weight_seed: int = 0
    baseline_episodes: int = 3
    dump_trajectories: bool = False


@dataclass(frozen=True)
class SpaceSpec:
    families: tuple[str, ...] = tuple(f.value for f in AttackFamily)
    restarts: tuple[int, ...] = (1,)
    rhos: tuple[float, ...] = (0.75,)
    seeds: tuple[int, ...] = (0,)
    epsilons: dict = field(default_factory=dict)   # family -> list of ints
    steps: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SearchSpec:
    budget: int = 16
    batch: int = 4
    alpha: float = 0.5
    alpha_schedule: str = "constant"
    beta: float = 50.0
    spread: float = 2.0
    scout_episodes: int = 2
    confirm_episodes: int = 5
    confirm_top_k: int = 2
    update_memory: bool = False
    dump_proposals: bool = False


@dataclass(frozen=True)
class RetrievalSpec:
    memory_path: str = ""
    top_k: int = 3
    strength: float = 0.6          # mixing weight toward retrieved configs


@dataclass(frozen=True)
class WeightsSpec:
    flip: float = 0.25
    runtime: float = 0.15
    variability: float = 0.05


@dataclass(frozen=True)
class OracleSpec:
    episodes: int = 0              # 0: deterministic victims only


@dataclass(frozen=True)
class TheorySpec:
    identity_tuples: int = 1000
    hitting_trials: int = 20000
    random_pairs: int = 10
    pair_trials: int = 4000
    coverage_trials: int = 200
    coverage_episodes: int = 50
    delta: float = 0.1
    eta: float = 0.05


@dataclass(frozen=True)
class BenchSpec:
    tasks: int = 10
    family_seed: int = 0
    noise: float = 0.2
    methods: tuple[str, ...] = METHODS


@dataclass(frozen=True)
class MemorySpec:
    tasks: int = 20
    family_seed: int = 0


@dataclass(frozen=True)
class RunConfig:
    mode: str = "search"
    seed: int = 0
    out_dir: str = "out"
    victim: VictimSpec = VictimSpec()
    space: SpaceSpec = SpaceSpec()
    weights: WeightsSpec = WeightsSpec()
    search: SearchSpec = SearchSpec()
    retrieval: RetrievalSpec = RetrievalSpec()
    oracle: OracleSpec = OracleSpec()
    theory: TheorySpec = TheorySpec()
    bench: BenchSpec = BenchSpec()
    memory: MemorySpec = MemorySpec()


# ----------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------


def _line_map(text: str) -> dict[tuple, int]:
    """Dotted-path -> 1-based line number, from the YAML node graph."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark else None
        raise RunConfigError(f"invalid YAML: {exc}", line=line) from None
    lines: dict[tuple, int] = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                key_path = path + (str(key_node.value),)
                lines[key_path] = key_node.start_mark.line + 1
                walk(value_node, key_path)

    if root is not None:
        walk(root, ())
    return lines


def _type_name(expected) -> str:
    return {int: "integer", float: "real", str: "string", bool: "boolean"}[expected]


class _Parser:
    def __init__(self, data: dict, lines: dict[tuple, int]):
        self.data = data
        self.lines = lines

    def line(self, path: tuple) -> int | None:
        return self.lines.get(path)

    def key(self, path: tuple) -> str:
        return ".".join(str(p) for p in path)

    def fail(self, path: tuple, message: str):
        raise RunConfigError(message, key=self.key(path), line=self.line(path))

    def scalar(self, mapping: dict, path: tuple, name: str, expected, default):
        if name not in mapping:
            return default
        value = mapping[name]
        full = path + (name,)
        if expected is bool:
            if not isinstance(value, bool):
                self.fail(full, f"expected boolean, got {value!r}")
            return value
        if expected is int:
            if isinstance(value, bool) or not isinstance(value, int):
                self.fail(full, f"expected integer, got {value!r}")
            return value
        if expected is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                self.fail(full, f"expected real, got {value!r}")
            return float(value)
        if expected is str:
            if not isinstance(value, str):
                self.fail(full, f"expected string, got {value!r}")
            return value
        raise AssertionError(expected)

    def sequence(self, mapping: dict, path: tuple, name: str, expected, default):
        if name not in mapping:
            return default
        value = mapping[name]
        full = path + (name,)
        if not isinstance(value, list):
            self.fail(full, f"expected a list of {_type_name(expected)}s, got {value!r}")
        out = []
        for item in value:
            if expected is float and isinstance(item, int) and not isinstance(item, bool):
                item = float(item)
            if isinstance(item, bool) or not isinstance(item, expected):
                self.fail(full, f"expected a list of {_type_name(expected)}s, got {item!r}")
            out.append(item)
        return tuple(out)

    def submapping(self, mapping: dict, path: tuple, name: str) -> dict:
        value = mapping.get(name)
        if value is None:
            return {}
        full = path + (name,)
        if not isinstance(value, dict):
            self.fail(full, f"expected a mapping, got {value!r}")
        return value

    def check_keys(self, mapping: dict, path: tuple, allowed) -> None:
        for key in mapping:
            if key not in allowed:
                self.fail(path + (str(key),), f"unknown key {key!r}")


def _spec_field_names(spec_cls) -> tuple[str, ...]:
    return tuple(f.name for f in fields(spec_cls))


def parse_run_config_text(text: str) -> RunConfig:
    lines = _line_map(text)
    data = yaml.safe_load(text)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise RunConfigError("run configuration must be a mapping at the top level")
    parser = _Parser(data, lines)
    parser.check_keys(data, (), ("mode", "seed", "out_dir", "victim", "space", "weights",
                                 "search", "retrieval", "oracle", "theory", "bench",
                                 "memory"))

    mode = parser.scalar(data, (), "mode", str, "search")
    if mode not in MODES:
        parser.fail(("mode",), f"mode must be one of {MODES}, got {mode!r}")
    seed = parser.scalar(data, (), "seed", int, 0)
    if seed < 0:
        parser.fail(("seed",), "seed must be >= 0")
    out_dir = parser.scalar(data, (), "out_dir", str, "out")

    victim = _parse_victim(parser)
    space = _parse_space(parser)
    weights = _parse_weights(parser)
    search = _parse_search(parser)
    retrieval = _parse_retrieval(parser)
    oracle = _parse_oracle(parser)
    theory = _parse_theory(parser)
    bench = _parse_bench(parser)
    memory = _parse_memory(parser)
    return RunConfig(mode=mode, seed=seed, out_dir=out_dir, victim=victim, space=space,
                     weights=weights, search=search, retrieval=retrieval, oracle=oracle,
                     theory=theory, bench=bench, memory=memory)


def parse_run_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise RunConfigError(f"cannot read run configuration: {exc}") from None
    return parse_run_config_text(text)


def _parse_victim(parser: _Parser) -> VictimSpec:
    section = parser.submapping(parser.data, (), "victim")
    path = ("victim",)
    parser.check_keys(section, path, _spec_field_names(VictimSpec))
    d = VictimSpec()
    spec = VictimSpec(
        kind=parser.scalar(section, path, "kind", str, d.kind),
        task_id=parser.scalar(section, path, "task_id", str, d.task_id),
        task_seed=parser.scalar(section, path, "task_seed", int, d.task_seed),
        noise=parser.scalar(section, path, "noise", float, d.noise),
        horizon=parser.scalar(section, path, "horizon", int, d.horizon),
        action_count=parser.scalar(section, path, "action_count", int, d.action_count),
        obs_dim=parser.scalar(section, path, "obs_dim", int, d.obs_dim),
        latent_dim=parser.scalar(section, path, "latent_dim", int, d.latent_dim),
        grid_size=parser.scalar(section, path, "grid_size", int, d.grid_size),
        weight_seed=parser.scalar(section, path, "weight_seed", int, d.weight_seed),
        baseline_episodes=parser.scalar(section, path, "baseline_episodes", int,
                                        d.baseline_episodes),
        dump_trajectories=parser.scalar(section, path, "dump_trajectories", bool,
                                        d.dump_trajectories),
    )
    if spec.kind not in ("surface", "linear"):
        parser.fail(path + ("kind",), f"kind must be 'surface' or 'linear', got {spec.kind!r}")
    if spec.noise < 0:
        parser.fail(path + ("noise",), "noise must be >= 0")
    if spec.horizon < 1 or spec.baseline_episodes < 1:
        parser.fail(path, "horizon and baseline_episodes must be >= 1")
    return spec


def _parse_space(parser: _Parser) -> SpaceSpec:
    section = parser.submapping(parser.data, (), "space")
    path = ("space",)
    parser.check_keys(section, path, _spec_field_names(SpaceSpec))
    d = SpaceSpec()
    families = parser.sequence(section, path, "families", str, d.families)
    valid = tuple(f.value for f in AttackFamily)
    for fam in families:
        if fam not in valid:
            parser.fail(path + ("families",), f"unknown family {fam!r}; valid: {valid}")
    if not families:
        parser.fail(path + ("families",), "need at least one family")

    def override(name):
        sub = parser.submapping(section, path, name)
        out = {}
        for fam, grid in sub.items():
            if fam not in valid:
                parser.fail(path + (name, fam), f"unknown family {fam!r}")
            if (not isinstance(grid, list) or not grid
                    or any(isinstance(g, bool) or not isinstance(g, int) for g in grid)):
                parser.fail(path + (name, fam), "grid must be a non-empty list of integers")
            out[fam] = tuple(grid)
        return out

    spec = SpaceSpec(
        families=families,
        restarts=parser.sequence(section, path, "restarts", int, d.restarts),
        rhos=parser.sequence(section, path, "rhos", float, d.rhos),
        seeds=parser.sequence(section, path, "seeds", int, d.seeds),
        epsilons=override("epsilons"),
        steps=override("steps"),
    )
    if not spec.restarts or not spec.rhos or not spec.seeds:
        parser.fail(path, "restarts, rhos, and seeds grids must be non-empty")
    return spec


def _parse_weights(parser: _Parser) -> WeightsSpec:
    section = parser.submapping(parser.data, (), "weights")
    path = ("weights",)
    parser.check_keys(section, path, _spec_field_names(WeightsSpec))
    d = WeightsSpec()
    spec = WeightsSpec(
        flip=parser.scalar(section, path, "flip", float, d.flip),
        runtime=parser.scalar(section, path, "runtime", float, d.runtime),
        variability=parser.scalar(section, path, "variability", float, d.variability),
    )
    for name in ("flip", "runtime", "variability"):
        if getattr(spec, name) < 0:
            parser.fail(path + (name,), f"{name} weight must be >= 0")
    return spec


def _parse_search(parser: _Parser) -> SearchSpec:
    section = parser.submapping(parser.data, (), "search")
    path = ("search",)
    parser.check_keys(section, path, _spec_field_names(SearchSpec))
    d = SearchSpec()
    spec = SearchSpec(
        budget=parser.scalar(section, path, "budget", int, d.budget),
        batch=parser.scalar(section, path, "batch", int, d.batch),
        alpha=parser.scalar(section, path, "alpha", float, d.alpha),
        alpha_schedule=parser.scalar(section, path, "alpha_schedule", str,
                                     d.alpha_schedule),
        beta=parser.scalar(section, path, "beta", float, d.beta),
        spread=parser.scalar(section, path, "spread", float, d.spread),
        scout_episodes=parser.scalar(section, path, "scout_episodes", int, d.scout_episodes),
        confirm_episodes=parser.scalar(section, path, "confirm_episodes", int,
                                       d.confirm_episodes),
        confirm_top_k=parser.scalar(section, path, "confirm_top_k", int, d.confirm_top_k),
        update_memory=parser.scalar(section, path, "update_memory", bool, d.update_memory),
        dump_proposals=parser.scalar(section, path, "dump_proposals", bool,
                                     d.dump_proposals),
    )
    if not (spec.budget >= spec.batch >= 1):
        parser.fail(path, "need budget >= batch >= 1")
    if not (0.0 <= spec.alpha <= 1.0):
        parser.fail(path + ("alpha",), "alpha must lie in [0, 1]")
    if spec.alpha_schedule not in ("constant", "harmonic"):
        parser.fail(path + ("alpha_schedule",), "alpha_schedule must be 'constant' or 'harmonic'")
    if spec.beta < 0 or spec.spread < 0:
        parser.fail(path, "beta and spread must be >= 0")
    if spec.scout_episodes < 1 or spec.confirm_episodes < 1 or spec.confirm_top_k < 1:
        parser.fail(path, "episode counts and confirm_top_k must be >= 1")
    return spec


def _parse_retrieval(parser: _Parser) -> RetrievalSpec:
    section = parser.submapping(parser.data, (), "retrieval")
    path = ("retrieval",)
    parser.check_keys(section, path, _spec_field_names(RetrievalSpec))
    d = RetrievalSpec()
    spec = RetrievalSpec(
        memory_path=parser.scalar(section, path, "memory_path", str, d.memory_path),
        top_k=parser.scalar(section, path, "top_k", int, d.top_k),
        strength=parser.scalar(section, path, "strength", float, d.strength),
    )
    if spec.top_k < 1:
        parser.fail(path + ("top_k",), "top_k must be >= 1")
    if not (0.0 <= spec.strength <= 1.0):
        parser.fail(path + ("strength",), "strength must lie in [0, 1]")
    return spec


def _parse_oracle(parser: _Parser) -> OracleSpec:
    section = parser.submapping(parser.data, (), "oracle")
    path = ("oracle",)
    parser.check_keys(section, path, _spec_field_names(OracleSpec))
    d = OracleSpec()
    spec = OracleSpec(episodes=parser.scalar(section, path, "episodes", int, d.episodes))
    if spec.episodes < 0:
        parser.fail(path + ("episodes",), "episodes must be >= 0")
    return spec


def _parse_theory(parser: _Parser) -> TheorySpec:
    section = parser.submapping(parser.data, (), "theory")
    path = ("theory",)
    parser.check_keys(section, path, _spec_field_names(TheorySpec))
    d = TheorySpec()
    spec = TheorySpec(
        identity_tuples=parser.scalar(section, path, "identity_tuples", int,
                                      d.identity_tuples),
        hitting_trials=parser.scalar(section, path, "hitting_trials", int,
                                     d.hitting_trials),
        random_pairs=parser.scalar(section, path, "random_pairs", int, d.random_pairs),
        pair_trials=parser.scalar(section, path, "pair_trials", int, d.pair_trials),
        coverage_trials=parser.scalar(section, path, "coverage_trials", int,
                                      d.coverage_trials),
        coverage_episodes=parser.scalar(section, path, "coverage_episodes", int,
                                        d.coverage_episodes),
        delta=parser.scalar(section, path, "delta", float, d.delta),
        eta=parser.scalar(section, path, "eta", float, d.eta),
    )
    for name in ("identity_tuples", "hitting_trials", "random_pairs", "pair_trials",
                 "coverage_trials", "coverage_episodes"):
        if getattr(spec, name) < 1:
            parser.fail(path + (name,), f"{name} must be >= 1")
    if not (0.0 < spec.delta < 1.0):
        parser.fail(path + ("delta",), "delta must lie in (0, 1)")
    if spec.eta < 0:
        parser.fail(path + ("eta",), "eta must be >= 0")
    return spec


def _parse_bench(parser: _Parser) -> BenchSpec:
    section = parser.submapping(parser.data, (), "bench")
    path = ("bench",)
    parser.check_keys(section, path, _spec_field_names(BenchSpec))
    d = BenchSpec()
    spec = BenchSpec(
        tasks=parser.scalar(section, path, "tasks", int, d.tasks),
        family_seed=parser.scalar(section, path, "family_seed", int, d.family_seed),
        noise=parser.scalar(section, path, "noise", float, d.noise),
        methods=parser.sequence(section, path, "methods", str, d.methods),
    )
    if spec.tasks < 1:
        parser.fail(path + ("tasks",), "tasks must be >= 1")
    if spec.noise < 0:
        parser.fail(path + ("noise",), "noise must be >= 0")
    for method in spec.methods:
        if method not in METHODS:
            parser.fail(path + ("methods",), f"unknown method {method!r}; valid: {METHODS}")
    if not spec.methods:
        parser.fail(path + ("methods",), "need at least one method")
    return spec


def _parse_memory(parser: _Parser) -> MemorySpec:
    section = parser.submapping(parser.data, (), "memory")
    path = ("memory",)
    parser.check_keys(section, path, _spec_field_names(MemorySpec))
    d = MemorySpec()
    spec = MemorySpec(
        tasks=parser.scalar(section, path, "tasks", int, d.tasks),
        family_seed=parser.scalar(section, path, "family_seed", int, d.family_seed),
    )
    if spec.tasks < 1:
        parser.fail(path + ("tasks",), "tasks must be >= 1")
    return spec


# ----------------------------------------------------------------------
# Factories
# ----------------------------------------------------------------------


def build_space(config: RunConfig) -> ConfigSpace:
    families = tuple(AttackFamily(f) for f in config.space.families)
    eps_over = {AttackFamily(f): tuple(v) for f, v in config.space.epsilons.items()}
    steps_over = {AttackFamily(f): tuple(v) for f, v in config.space.steps.items()}
    eps_over = {f: v for f, v in eps_over.items() if f in families}
    steps_over = {f: v for f, v in steps_over.items() if f in families}
    return default_config_space(
        families=families,
        restarts=config.space.restarts,
        rhos=config.space.rhos,
        seeds=config.space.seeds,
        epsilon_overrides=eps_over,
        steps_overrides=steps_over,
    )


def build_victim(config: RunConfig):
    v = config.victim
    if v.kind == "surface":
        return surface_task(v.task_id, v.task_seed, v.noise, v.horizon, v.action_count)
    return LinearWorldModelVictim(
        task_id=v.task_id, obs_dim=v.obs_dim, latent_dim=v.latent_dim,
        grid_size=v.grid_size, horizon=v.horizon, weight_seed=v.weight_seed)


def build_weights(config: RunConfig) -> UtilityWeights:
    w = config.weights
    return UtilityWeights(flip=w.flip, runtime=w.runtime, variability=w.variability)


def build_search_params(config: RunConfig, seed: int | None = None) -> SearchParams:
    s = config.search
    return SearchParams(
        budget=s.budget, batch_size=s.batch, alpha=s.alpha,
        alpha_schedule=s.alpha_schedule, beta=s.beta, spread=s.spread,
        scout_episodes=s.scout_episodes, confirm_episodes=s.confirm_episodes,
        confirm_top_k=s.confirm_top_k,
        seed=config.seed if seed is None else seed)


# ----------------------------------------------------------------------
# Defaults emission
# ----------------------------------------------------------------------


def _yaml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return value if value else "''"
    return str(value)


def _yaml_list(values) -> str:
    return "[" + ", ".join(_yaml_scalar(v) for v in values) + "]"


def emit_defaults() -> str:
    """The all-default configuration, one documented key per line."""
    d = RunConfig()
    lines = [
        "# attacksearch run configuration (all keys shown with their defaults)",
        f"mode: {d.mode}                 # {' | '.join(MODES)}",
        f"seed: {d.seed}",
        f"out_dir: {d.out_dir}",
        "",
        "victim:",
        f"  kind: {d.victim.kind}          # surface | linear",
        f"  task_id: {d.victim.task_id}",
        f"  task_seed: {d.victim.task_seed}",
        f"  noise: {_yaml_scalar(d.victim.noise)}            # return-noise scale; surface only",
        f"  horizon: {d.victim.horizon}",
        f"  action_count: {d.victim.action_count}       # surface only",
        f"  obs_dim: {d.victim.obs_dim}           # linear only",
        f"  latent_dim: {d.victim.latent_dim}        # linear only",
        f"  grid_size: {d.victim.grid_size}          # linear only",
        f"  weight_seed: {d.victim.weight_seed}        # linear only",
        f"  baseline_episodes: {d.victim.baseline_episodes}",
        f"  dump_trajectories: {_yaml_scalar(d.victim.dump_trajectories)}",
        "",
        "space:",
        f"  families: {_yaml_list(d.space.families)}",
        f"  restarts: {_yaml_list(d.space.restarts)}",
        f"  rhos: {_yaml_list(d.space.rhos)}",
        f"  seeds: {_yaml_list(d.space.seeds)}",
        "  epsilons: {}          # per-family grid overrides, e.g. {apgd-ce: [2, 4, 8]}",
        "  steps: {}             # per-family grid overrides",
        "",
        "weights:",
        f"  flip: {_yaml_scalar(d.weights.flip)}",
        f"  runtime: {_yaml_scalar(d.weights.runtime)}",
        f"  variability: {_yaml_scalar(d.weights.variability)}",
        "",
        "search:",
        f"  budget: {d.search.budget}            # distinct configurations to evaluate",
        f"  batch: {d.search.batch}",
        f"  alpha: {_yaml_scalar(d.search.alpha)}            # proposal update rate",
        f"  alpha_schedule: {d.search.alpha_schedule}   # constant | harmonic",
        f"  beta: {_yaml_scalar(d.search.beta)}             # exploitation temperature",
        f"  spread: {_yaml_scalar(d.search.spread)}           # neighborhood deposit weight",
        f"  scout_episodes: {d.search.scout_episodes}",
        f"  confirm_episodes: {d.search.confirm_episodes}",
        f"  confirm_top_k: {d.search.confirm_top_k}",
        f"  update_memory: {_yaml_scalar(d.search.update_memory)}",
        f"  dump_proposals: {_yaml_scalar(d.search.dump_proposals)}",
        "",
        "retrieval:",
        f"  memory_path: {_yaml_scalar(d.retrieval.memory_path)}       # empty disables retrieval",
        f"  top_k: {d.retrieval.top_k}",
        f"  strength: {_yaml_scalar(d.retrieval.strength)}        # warm-start mixing weight in [0, 1]",
        "",
        "oracle:",
        f"  episodes: {d.oracle.episodes}           # 0 = refuse non-deterministic victims",
        "",
        "theory:",
        f"  identity_tuples: {d.theory.identity_tuples}",
        f"  hitting_trials: {d.theory.hitting_trials}",
        f"  random_pairs: {d.theory.random_pairs}",
        f"  pair_trials: {d.theory.pair_trials}",
        f"  coverage_trials: {d.theory.coverage_trials}",
        f"  coverage_episodes: {d.theory.coverage_episodes}",
        f"  delta: {_yaml_scalar(d.theory.delta)}",
        f"  eta: {_yaml_scalar(d.theory.eta)}",
        "",
        "bench:",
        f"  tasks: {d.bench.tasks}",
        f"  family_seed: {d.bench.family_seed}",
        f"  noise: {_yaml_scalar(d.bench.noise)}",
        f"  methods: {_yaml_list(d.bench.methods)}",
        "",
        "memory:",
        f"  tasks: {d.memory.tasks}",
        f"  family_seed: {d.memory.family_seed}",
    ]
    return "\n".join(lines) + "\n"
