"""JSON configuration loading, default materialization, and run manifests.

A config file describes the chain, camera, workspace, categories, scene
sampler (or a fixed scene), controller and arbitrator parameters, the noise
model, and simulation timing.  Every field has a default; ``resolved``
carries the fully materialized dictionary that the manifest records so any
output can be reproduced exactly.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .arbitration import ArbitratorState
from .controller import ClfParams, goalset_from_json, goalset_to_json
from .dataset import (
    DatasetConfig,
    scene_from_dict,
    scene_to_dict,
    workspace_from_dict,
    workspace_to_dict,
)
from .errors import ConfigError
from .geometry import Pose, pose_from_json, pose_to_json
from .kinematics import chain_from_dict, chain_to_dict, ur5_chain
from .perception import CameraModel, GridSpec, NoiseParams, look_at_camera
from .scene import (
    AddInstance,
    MoveInstance,
    ObjectCategory,
    PerturbationEvent,
    RemoveInstance,
    SceneInstance,
    SceneSampleConfig,
    Workspace,
    builtin_categories,
)


def default_camera() -> CameraModel:
    return look_at_camera(eye=(-0.40, 0.0, 0.55), target=(0.50, 0.0, 0.0))


def camera_to_dict(cam: CameraModel) -> dict:
    return {
        "fx": float(cam.fx), "fy": float(cam.fy),
        "cx": float(cam.cx), "cy": float(cam.cy),
        "width": int(cam.width), "height": int(cam.height),
        "extrinsic": pose_to_json(cam.extrinsic),
    }


def camera_from_dict(obj: dict) -> CameraModel:
    return CameraModel(
        fx=float(obj["fx"]), fy=float(obj["fy"]),
        cx=float(obj["cx"]), cy=float(obj["cy"]),
        width=int(obj["width"]), height=int(obj["height"]),
        extrinsic=pose_from_json(obj["extrinsic"]),
    )


def category_to_dict(cat: ObjectCategory) -> dict:
    return {
        "name": cat.name,
        "goals": goalset_to_json(cat.goals),
        "tolerance": float(cat.tolerance),
        "half_extents": [float(x) for x in cat.half_extents],
    }


def category_from_dict(obj: dict) -> ObjectCategory:
    return ObjectCategory(
        name=obj["name"],
        goals=goalset_from_json(obj["goals"]),
        tolerance=float(obj["tolerance"]),
        half_extents=np.asarray(obj["half_extents"], dtype=float),
    )


def default_config() -> dict:
    """Fully materialized default configuration as a JSON-able dictionary."""
    cats = builtin_categories()
    return {
        "chain": chain_to_dict(ur5_chain()),
        "camera": camera_to_dict(default_camera()),
        "workspace": workspace_to_dict(Workspace()),
        "table_height": 0.0,
        "categories": {name: category_to_dict(c) for name, c in cats.items()},
        "scene": {
            "targets": "mug",
            "max_instances": 3,
            "instance_count": None,
            "distractors": "block",
            "distractor_range": [1, 3],
        },
        "clf": {"k": 5.0, "grasp_threshold": 0.005},
        "arbitrator": {"eta": 0.5, "score_threshold": 0.5},
        "noise": {"sigma_v": 0.01, "sigma_u": 0.0, "fp_rate": 0.0,
                  "fn_rate": 0.0, "fp_v_range": [0.0, 1.0]},
        "sim": {"dt": 1.0 / 60.0, "max_time": 30.0},
        "dataset": {"boost_prob": 0.5, "boost_range": [0.2, 0.8],
                    "boost_dt": 0.05, "boost_max_steps": 600},
        "batch": {"categories": ["mug", "table_leg", "spam_can"]},
    }


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


@dataclass(frozen=True)
class ResolvedConfig:
    """All defaults materialized, with the source dictionary kept for manifests."""

    resolved: dict
    chain: object
    camera: CameraModel
    grid: GridSpec
    workspace: Workspace
    categories: dict
    scene_config: SceneSampleConfig | None
    fixed_scene: object
    clf: ClfParams
    arbitrator: ArbitratorState
    noise: NoiseParams
    dt: float
    max_time: float
    batch_categories: list
    dataset: dict


def resolve_config(obj: dict) -> ResolvedConfig:
    cfg = _merge(default_config(), obj)
    try:
        chain = chain_from_dict(cfg["chain"])
        camera = camera_from_dict(cfg["camera"])
        grid = GridSpec.for_camera(camera)
        workspace = workspace_from_dict(cfg["workspace"])
        categories = {name: category_from_dict(c)
                      for name, c in cfg["categories"].items()}
        clf = ClfParams(k=float(cfg["clf"]["k"]),
                        grasp_threshold=float(cfg["clf"]["grasp_threshold"]))
        arb = ArbitratorState(
            eta=float(cfg["arbitrator"]["eta"]),
            score_threshold=float(cfg["arbitrator"]["score_threshold"]),
            grasp_threshold=float(cfg["clf"]["grasp_threshold"]),
        )
        noise = NoiseParams(
            sigma_v=float(cfg["noise"]["sigma_v"]),
            sigma_u=float(cfg["noise"]["sigma_u"]),
            fp_rate=float(cfg["noise"]["fp_rate"]),
            fn_rate=float(cfg["noise"]["fn_rate"]),
            fp_v_range=tuple(cfg["noise"]["fp_v_range"]),
        )
        scene_spec = cfg["scene"]
        fixed_scene = None
        scene_config = None
        if "instances" in scene_spec:
            fixed_scene = scene_from_dict(
                {"table_height": cfg["table_height"],
                 "workspace": cfg["workspace"], **scene_spec},
                categories)
        else:
            if scene_spec["targets"] not in categories:
                raise ConfigError(f"unknown target category {scene_spec['targets']!r}")
            distractors = scene_spec.get("distractors")
            scene_config = SceneSampleConfig(
                target_category=categories[scene_spec["targets"]],
                max_instances=int(scene_spec["max_instances"]),
                instance_count=(None if scene_spec.get("instance_count") is None
                                else int(scene_spec["instance_count"])),
                distractor_category=(categories[distractors]
                                     if distractors else None),
                distractor_range=tuple(scene_spec.get("distractor_range", (1, 3))),
                table_height=float(cfg["table_height"]),
                workspace=workspace,
                camera=camera,
            )
        batch_categories = list(cfg["batch"]["categories"])
        for name in batch_categories:
            if name not in categories:
                raise ConfigError(f"unknown batch category {name!r}")
        return ResolvedConfig(
            resolved=cfg, chain=chain, camera=camera, grid=grid,
            workspace=workspace, categories=categories,
            scene_config=scene_config, fixed_scene=fixed_scene, clf=clf,
            arbitrator=arb, noise=noise, dt=float(cfg["sim"]["dt"]),
            max_time=float(cfg["sim"]["max_time"]),
            batch_categories=batch_categories, dataset=cfg["dataset"],
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_config(path) -> ResolvedConfig:
    try:
        with open(path) as f:
            obj = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"--config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--config: {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"--config: {path} must contain a JSON object")
    return resolve_config(obj)


def dataset_config(rc: ResolvedConfig) -> DatasetConfig:
    if rc.scene_config is None:
        raise ConfigError("dataset generation needs a scene sampler, not a fixed scene")
    ds = rc.dataset
    return DatasetConfig(
        chain=rc.chain, camera=rc.camera, grid=rc.grid,
        scene_config=rc.scene_config, clf=rc.clf,
        boost_prob=float(ds["boost_prob"]),
        boost_range=tuple(ds["boost_range"]),
        boost_dt=float(ds["boost_dt"]),
        boost_max_steps=int(ds["boost_max_steps"]),
    )


def parse_schedule(items, categories: dict) -> tuple:
    """Perturbation schedule from a JSON list.

    Records look like {"time": 3.0, "remove": 1}, {"time": 1.0, "move":
    {"id": 0, "pose": {...}}}, or {"time": 2.0, "add": {instance record}}.
    """
    events = []
    for rec in items:
        t = float(rec["time"])
        if "remove" in rec:
            events.append(PerturbationEvent(t, RemoveInstance(int(rec["remove"]))))
        elif "move" in rec:
            mv = rec["move"]
            events.append(PerturbationEvent(
                t, MoveInstance(int(mv["id"]), pose_from_json(mv["pose"]))))
        elif "add" in rec:
            ad = rec["add"]
            inst = SceneInstance(
                id=int(ad["id"]), category=categories[ad["category"]],
                pose=pose_from_json(ad["pose"]),
                is_distractor=bool(ad.get("distractor", False)),
            )
            events.append(PerturbationEvent(t, AddInstance(inst)))
        else:
            raise ConfigError(f"schedule record needs add/remove/move: {rec}")
    return tuple(events)


def load_schedule(path, categories: dict) -> tuple:
    try:
        with open(path) as f:
            items = json.load(f)
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        raise ConfigError(f"--schedule: cannot read {path}: {exc}") from exc
    if not isinstance(items, list):
        raise ConfigError("--schedule: file must contain a JSON list")
    return parse_schedule(items, categories)


def manifest(command: str, seed: int, rc: ResolvedConfig, extra: dict | None = None) -> dict:
    out = {
        "tool": "clfreach",
        "version": __version__,
        "command": command,
        "seed": int(seed),
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": rc.resolved,
    }
    if extra:
        out.update(extra)
    return out


def write_manifest(path, data: dict) -> None:
    with open(path, "w") as f:
        json.dump(data, f, indent=2, sort_keys=False)
        f.write("\n")
