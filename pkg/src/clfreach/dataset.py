"""Synthetic dataset generation: sampled scenes and start poses with grid labels.

Samples are emitted as JSON lines, one scene/configuration/label snapshot per
line, fully determined by (master seed, index).  To densify coverage near
targets, half of the start configurations are resampled by sliding partway
along the controller's own descent flow toward a random target.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .controller import ClfParams, velocity_control
from .geometry import pose_from_json, pose_to_json
from .perception import CameraModel, GridLabels, GridSpec, LabelCell, render_labels
from .scene import (
    ObjectCategory,
    Scene,
    SceneInstance,
    SceneSampleConfig,
    Workspace,
    sample_initial_joints,
    sample_scene,
)


@dataclass(frozen=True)
class DatasetConfig:
    chain: object
    camera: CameraModel
    grid: GridSpec
    scene_config: SceneSampleConfig
    clf: ClfParams = ClfParams()
    boost_prob: float = 0.5
    boost_range: tuple = (0.2, 0.8)
    boost_dt: float = 0.05
    boost_max_steps: int = 600


@dataclass(frozen=True)
class DatasetSample:
    seed: int
    index: int
    scene: Scene
    theta: np.ndarray
    labels: GridLabels


def _flow_boost(cfg: DatasetConfig, scene: Scene, q: np.ndarray,
                rng: np.random.Generator) -> np.ndarray:
    """Resample q partway along the descent flow toward a random target."""
    targets = scene.targets()
    inst = targets[int(rng.integers(len(targets)))]
    goals = inst.world_goals()
    path = [q.copy()]
    cur = q.copy()
    for _ in range(cfg.boost_max_steps):
        out = velocity_control(cfg.chain, cur, goals, cfg.clf)
        if out.value < cfg.clf.grasp_threshold:
            break
        cur = np.clip(cur + cfg.boost_dt * out.u,
                      cfg.chain.limit_lo, cfg.chain.limit_hi)
        path.append(cur.copy())
    frac = rng.uniform(*cfg.boost_range)
    return path[int(round(frac * (len(path) - 1)))]


def generate_dataset(cfg: DatasetConfig, n_samples: int, master_seed: int):
    """Yield n_samples DatasetSample records, deterministic per (seed, index)."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    for index in range(n_samples):
        ss = np.random.SeedSequence([master_seed, index])
        scene_rng, init_rng, boost_rng = map(np.random.default_rng, ss.spawn(3))
        scene = sample_scene(cfg.scene_config, scene_rng)
        q = sample_initial_joints(cfg.chain, cfg.scene_config.workspace, init_rng)
        if cfg.boost_prob > 0 and boost_rng.random() < cfg.boost_prob:
            q = _flow_boost(cfg, scene, q, boost_rng)
        labels = render_labels(scene, cfg.chain, q, cfg.camera, cfg.grid, cfg.clf)
        yield DatasetSample(seed=master_seed, index=index, scene=scene,
                            theta=q, labels=labels)


def workspace_to_dict(w: Workspace) -> dict:
    return {
        "radius_band": [float(w.radius_band[0]), float(w.radius_band[1])],
        "cone_half_angle": float(w.cone_half_angle),
        "table_bounds": [[float(b) for b in ax] for ax in w.table_bounds],
        "center": [float(c) for c in w.center],
        "min_z": float(w.min_z),
        "radius_window": float(w.radius_window),
    }


def workspace_from_dict(obj: dict) -> Workspace:
    return Workspace(
        radius_band=tuple(obj["radius_band"]),
        cone_half_angle=float(obj["cone_half_angle"]),
        table_bounds=tuple(tuple(ax) for ax in obj["table_bounds"]),
        center=tuple(obj["center"]),
        min_z=float(obj["min_z"]),
        radius_window=float(obj["radius_window"]),
    )


def scene_to_dict(scene: Scene) -> dict:
    return {
        "table_height": float(scene.table_height),
        "workspace": workspace_to_dict(scene.workspace),
        "instances": [
            {"id": int(i.id), "category": i.category.name,
             "distractor": bool(i.is_distractor), "pose": pose_to_json(i.pose)}
            for i in scene.instances
        ],
    }


def scene_from_dict(obj: dict, categories: dict) -> Scene:
    instances = tuple(
        SceneInstance(
            id=int(rec["id"]),
            category=categories[rec["category"]],
            pose=pose_from_json(rec["pose"]),
            is_distractor=bool(rec["distractor"]),
        )
        for rec in obj["instances"]
    )
    return Scene(instances, float(obj["table_height"]),
                 workspace_from_dict(obj["workspace"]))


def sample_to_dict(sample: DatasetSample) -> dict:
    grid = sample.labels.grid
    return {
        "seed": int(sample.seed),
        "index": int(sample.index),
        "scene": scene_to_dict(sample.scene),
        "theta": [float(x) for x in sample.theta],
        "grid": {"rows": grid.rows, "cols": grid.cols, "stride": grid.stride},
        "cells": [
            {"r": c.row, "c": c.col, "id": c.instance_id, "y": c.y,
             "V": float(c.value), "u": [float(x) for x in c.u]}
            for c in sample.labels.cells
        ],
    }


def sample_from_dict(obj: dict, categories: dict) -> DatasetSample:
    grid = GridSpec(stride=int(obj["grid"]["stride"]), cols=int(obj["grid"]["cols"]),
                    rows=int(obj["grid"]["rows"]))
    cells = tuple(
        LabelCell(row=int(c["r"]), col=int(c["c"]), instance_id=int(c["id"]),
                  y=int(c["y"]), value=float(c["V"]),
                  u=np.asarray(c["u"], dtype=float))
        for c in obj["cells"]
    )
    return DatasetSample(
        seed=int(obj["seed"]), index=int(obj["index"]),
        scene=scene_from_dict(obj["scene"], categories),
        theta=np.asarray(obj["theta"], dtype=float),
        labels=GridLabels(grid=grid, cells=cells),
    )


def write_dataset(path, cfg: DatasetConfig, n_samples: int, master_seed: int) -> int:
    """Stream samples to a JSON-lines file; returns the number written."""
    count = 0
    with open(path, "w") as f:
        for sample in generate_dataset(cfg, n_samples, master_seed):
            f.write(json.dumps(sample_to_dict(sample)) + "\n")
            count += 1
    return count
