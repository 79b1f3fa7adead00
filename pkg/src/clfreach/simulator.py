"""Closed-loop episode engine and batch experiment harness.

Each step renders ground-truth labels for the current scene, asks the
configured proposal source for per-cell predictions, selects the admitted
cell with the minimal predicted value, low-pass filters its control, and
integrates the joint angles with explicit Euler at the camera rate.  An
episode ends when the selected value drops below the grasp threshold
(success then additionally requires the tool point within the category's
positional tolerance) or on timeout.

Everything is driven by named rng streams derived from the episode seed, so
runs are bit-reproducible and batch results do not depend on worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .arbitration import ArbitratorState, momentum_update, select, should_grasp
from .controller import ClfParams, resolve_goal, clf_value
from .errors import ConfigError, FaultError
from .perception import (
    CameraModel,
    GridSpec,
    NoiseParams,
    noisy_proposals,
    oracle_proposals,
    render_labels,
)
from .scene import (
    PerturbationEvent,
    Scene,
    SceneSampleConfig,
    apply_event,
    sample_initial_joints,
    sample_scene,
)

DEFAULT_DT = 1.0 / 60.0
DEFAULT_MAX_TIME = 30.0


@dataclass(frozen=True)
class EpisodeConfig:
    chain: object
    camera: CameraModel
    grid: GridSpec
    seed: int
    scene: Scene | None = None
    scene_config: SceneSampleConfig | None = None
    init_q: np.ndarray | None = None
    clf: ClfParams = ClfParams()
    arbitrator: ArbitratorState = ArbitratorState()
    source: str = "oracle"
    noise: NoiseParams = NoiseParams()
    dt: float = DEFAULT_DT
    max_time: float = DEFAULT_MAX_TIME
    schedule: tuple = ()

    def __post_init__(self):
        if self.dt <= 0 or self.max_time <= self.dt:
            raise ConfigError("need dt > 0 and max_time > dt")
        if self.scene is None and self.scene_config is None:
            raise ConfigError("either a fixed scene or a scene sampler is required")
        if self.source not in ("oracle", "noisy"):
            raise ConfigError(f"unknown proposal source {self.source!r}")
        object.__setattr__(self, "schedule",
                           tuple(sorted(self.schedule, key=lambda e: e.time)))


@dataclass(frozen=True)
class StepRecord:
    t: float
    theta: np.ndarray
    cell: tuple | None
    v_hat_min: float | None
    u_hat: np.ndarray | None
    u_bar: np.ndarray | None
    v_true: float | None
    instance: int | None


@dataclass(frozen=True)
class EpisodeOutcome:
    success: bool
    reason: str  # Converged | Timeout | Fault
    time_to_grasp: float | None
    final_positional_error: float | None
    target_instance: int | None


def episode_rngs(seed: int) -> tuple:
    """Independent (scene, init, noise) generators for one episode seed."""
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(c) for c in children)


def episode_seed(master_seed: int, *indices: int) -> int:
    """Stable per-episode seed derived from the master seed and indices."""
    state = np.random.SeedSequence([master_seed, *indices]).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


def episode_scene(config: EpisodeConfig) -> Scene:
    """The initial scene an episode with this config will see."""
    scene_rng, _, _ = episode_rngs(config.seed)
    if config.scene is not None:
        return config.scene
    return sample_scene(config.scene_config, scene_rng)


def _check_finite(name: str, *values) -> None:
    for v in values:
        if v is None:
            continue
        if not np.all(np.isfinite(v)):
            raise FaultError(f"non-finite {name}: {v}")


def run_episode(config: EpisodeConfig, proposal_fn=None) -> tuple[list, EpisodeOutcome]:
    """Run one episode; returns (records, outcome).

    proposal_fn overrides the configured source, mapping (labels, rng) to a
    ProposalGrid; used by tests to inject pathological predictions.
    """
    scene_rng, init_rng, noise_rng = episode_rngs(config.seed)
    scene = config.scene if config.scene is not None else sample_scene(
        config.scene_config, scene_rng)
    workspace = scene.workspace
    if config.init_q is not None:
        q = np.asarray(config.init_q, dtype=float).reshape(6).copy()
    else:
        q = sample_initial_joints(config.chain, workspace, init_rng)

    if proposal_fn is None:
        if config.source == "oracle":
            proposal_fn = lambda labels, rng: oracle_proposals(labels)
        else:
            proposal_fn = lambda labels, rng: noisy_proposals(labels, config.noise, rng)

    chain = config.chain
    arb = config.arbitrator
    k = config.clf.k
    events = list(config.schedule)
    next_event = 0
    records: list[StepRecord] = []
    n_steps = int(round(config.max_time / config.dt))
    last_sel_instance = None

    def positional_error(theta, instance_id):
        inst = scene.get(instance_id)
        h = chain.forward(theta, check=False)
        goal = resolve_goal(h, inst.world_goals(), k)
        return float(np.linalg.norm(h.translation - goal.translation))

    try:
        for step_idx in range(n_steps):
            t = step_idx * config.dt
            while next_event < len(events) and events[next_event].time <= t + config.dt / 2:
                scene = apply_event(scene, events[next_event])
                next_event += 1

            labels = render_labels(scene, chain, q, config.camera, config.grid,
                                   config.clf)
            props = proposal_fn(labels, noise_rng)
            sel = select(props, arb.score_threshold)

            if sel is not None:
                owner = labels.by_cell().get(sel.cell)
                inst_id = owner.instance_id if owner is not None else None
                arb, u_bar = momentum_update(arb, sel.u_hat)
                _check_finite("step", q, sel.v_hat, sel.u_hat, u_bar)
                v_true = None
                if inst_id is not None:
                    h = chain.forward(q, check=False)
                    goal = resolve_goal(h, scene.get(inst_id).world_goals(), k)
                    v_true = clf_value(h, goal, k)
                    last_sel_instance = inst_id
                records.append(StepRecord(
                    t=t, theta=q.copy(), cell=sel.cell, v_hat_min=sel.v_hat,
                    u_hat=sel.u_hat, u_bar=u_bar.copy(), v_true=v_true,
                    instance=inst_id))
                if should_grasp(sel.v_hat, arb.grasp_threshold):
                    if inst_id is not None:
                        err = positional_error(q, inst_id)
                        tol = scene.get(inst_id).category.tolerance
                        success = err <= tol
                    else:
                        err, success = None, False
                    return records, EpisodeOutcome(
                        success=success, reason="Converged", time_to_grasp=t,
                        final_positional_error=err, target_instance=inst_id)
                q = np.clip(q + config.dt * u_bar, chain.limit_lo, chain.limit_hi)
            else:
                records.append(StepRecord(
                    t=t, theta=q.copy(), cell=None, v_hat_min=None, u_hat=None,
                    u_bar=None if arb.u_bar is None else arb.u_bar.copy(),
                    v_true=None, instance=None))
    except FaultError:
        return records, EpisodeOutcome(
            success=False, reason="Fault", time_to_grasp=None,
            final_positional_error=None, target_instance=last_sel_instance)

    err = (positional_error(q, last_sel_instance)
           if last_sel_instance is not None else None)
    return records, EpisodeOutcome(
        success=False, reason="Timeout", time_to_grasp=None,
        final_positional_error=err, target_instance=last_sel_instance)


def record_to_dict(rec: StepRecord) -> dict:
    return {
        "t": rec.t,
        "theta": [float(x) for x in rec.theta],
        "cell": None if rec.cell is None else [int(rec.cell[0]), int(rec.cell[1])],
        "v_hat_min": None if rec.v_hat_min is None else float(rec.v_hat_min),
        "u_hat": None if rec.u_hat is None else [float(x) for x in rec.u_hat],
        "u_bar": None if rec.u_bar is None else [float(x) for x in rec.u_bar],
        "v_true": None if rec.v_true is None else float(rec.v_true),
        "instance": None if rec.instance is None else int(rec.instance),
    }


def record_from_dict(obj: dict) -> StepRecord:
    return StepRecord(
        t=float(obj["t"]),
        theta=np.asarray(obj["theta"], dtype=float),
        cell=None if obj["cell"] is None else (int(obj["cell"][0]), int(obj["cell"][1])),
        v_hat_min=obj["v_hat_min"],
        u_hat=None if obj["u_hat"] is None else np.asarray(obj["u_hat"], dtype=float),
        u_bar=None if obj["u_bar"] is None else np.asarray(obj["u_bar"], dtype=float),
        v_true=obj["v_true"],
        instance=obj["instance"],
    )


def write_log(path, records) -> None:
    with open(path, "w") as f:
        for rec in records:
            f.write(json.dumps(record_to_dict(rec)) + "\n")


def read_log(path) -> list:
    records = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(record_from_dict(json.loads(line)))
    return records


def outcome_to_dict(outcome: EpisodeOutcome) -> dict:
    return {
        "success": outcome.success,
        "reason": outcome.reason,
        "time_to_grasp": outcome.time_to_grasp,
        "final_positional_error": outcome.final_positional_error,
        "target_instance": outcome.target_instance,
    }


@dataclass(frozen=True)
class BatchBucket:
    category: str
    instances: int
    episodes: int
    successes: int

    @property
    def rate(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0


@dataclass(frozen=True)
class BatchResult:
    buckets: tuple
    master_seed: int

    @property
    def episodes(self) -> int:
        return sum(b.episodes for b in self.buckets)

    @property
    def successes(self) -> int:
        return sum(b.successes for b in self.buckets)

    @property
    def overall_rate(self) -> float:
        return self.successes / self.episodes if self.episodes else 0.0

    def to_dict(self) -> dict:
        return {
            "seed": self.master_seed,
            "buckets": [
                {"category": b.category, "instances": b.instances,
                 "episodes": b.episodes, "successes": b.successes,
                 "rate": b.rate}
                for b in self.buckets
            ],
            "overall": {"episodes": self.episodes, "successes": self.successes,
                        "rate": self.overall_rate},
        }

    def to_text(self) -> str:
        lines = [f"{'category':<12} {'instances':>9} {'episodes':>8} "
                 f"{'successes':>9} {'rate':>7}"]
        for b in self.buckets:
            lines.append(f"{b.category:<12} {b.instances:>9d} {b.episodes:>8d} "
                         f"{b.successes:>9d} {b.rate:>7.3f}")
        lines.append(f"{'overall':<12} {'-':>9} {self.episodes:>8d} "
                     f"{self.successes:>9d} {self.overall_rate:>7.3f}")
        return "\n".join(lines) + "\n"


def _episode_success(config: EpisodeConfig) -> bool:
    _, outcome = run_episode(config)
    return outcome.success


def _bucket_configs(template: EpisodeConfig, categories: dict, category: str,
                    instances: int, episodes: int, master_seed: int,
                    bucket_idx: int) -> list:
    if template.scene_config is None:
        raise ConfigError("batch runs need a scene sampler in the config")
    base = template.scene_config
    scene_cfg = replace(base, target_category=categories[category],
                        instance_count=instances)
    return [
        replace(template, scene_config=scene_cfg, scene=None, init_q=None,
                seed=episode_seed(master_seed, bucket_idx, ep))
        for ep in range(episodes)
    ]


def run_batch(template: EpisodeConfig, categories: dict, category_names: list,
              instance_counts: list, episodes: int, master_seed: int,
              workers: int = 1) -> BatchResult:
    """Per-(category, instance count) success table.

    Episode seeds derive from (master seed, bucket, index), so the table is
    identical for any worker count.
    """
    if episodes < 1:
        raise ConfigError("episode count must be >= 1")
    if not category_names:
        raise ConfigError("category list must not be empty")
    if not instance_counts:
        raise ConfigError("instance count list must not be empty")
    jobs = []
    spans = []
    for b, (cat, count) in enumerate(
            (c, n) for c in category_names for n in instance_counts):
        cfgs = _bucket_configs(template, categories, cat, count, episodes,
                               master_seed, b)
        spans.append((cat, count, len(jobs), len(cfgs)))
        jobs.extend(cfgs)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_episode_success, jobs, chunksize=1))
    else:
        results = [_episode_success(c) for c in jobs]
    buckets = tuple(
        BatchBucket(category=cat, instances=count, episodes=n,
                    successes=sum(results[start:start + n]))
        for cat, count, start, n in spans
    )
    return BatchResult(buckets=buckets, master_seed=master_seed)
