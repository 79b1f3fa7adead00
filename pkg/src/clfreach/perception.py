"""Pinhole camera, grid-cell rasterization, labels, and proposal sources.

The image is divided into 8x8-pixel cells.  An instance owns every cell
whose center falls inside the convex hull of its projected box corners;
contested cells go to the instance whose center is nearest the camera.  All
cells of one instance carry the same supervision pair (value, control).

Proposal sources stand in for a learned predictor over the same per-cell
contract: the oracle copies the labels verbatim, the noisy source perturbs
them and injects false positives/negatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import ClfParams, velocity_control
from .errors import ConfigError
from .geometry import Pose
from .scene import Scene, SceneInstance

DEFAULT_WIDTH = 512
DEFAULT_HEIGHT = 384
GRID_STRIDE = 8


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus extrinsic pose (camera frame in world)."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    extrinsic: Pose = Pose.identity()

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ConfigError("principal point must lie inside the image")

    def world_to_camera(self) -> Pose:
        return self.extrinsic.inverse()


def look_at_camera(eye, target, fx: float = 500.0, fy: float = 500.0,
                   width: int = DEFAULT_WIDTH, height: int = DEFAULT_HEIGHT) -> CameraModel:
    """Camera at eye with the optical axis through target, image y pointing down."""
    eye = np.asarray(eye, dtype=float)
    fwd = np.asarray(target, dtype=float) - eye
    fwd = fwd / np.linalg.norm(fwd)
    x = np.cross(fwd, np.array([0.0, 0.0, 1.0]))
    if np.linalg.norm(x) < 1e-9:
        x = np.array([1.0, 0.0, 0.0])
    x = x / np.linalg.norm(x)
    y = np.cross(fwd, x)
    r = np.column_stack([x, y, fwd])
    return CameraModel(fx=fx, fy=fy, cx=width / 2.0, cy=height / 2.0,
                       width=width, height=height, extrinsic=Pose(r, eye))


def project_point(cam: CameraModel, p_world) -> tuple[float, float] | None:
    """Pixel coordinates of a world point, or None if behind the camera."""
    p = cam.world_to_camera().apply(np.asarray(p_world, dtype=float))
    if p[2] <= 1e-6:
        return None
    return (cam.fx * p[0] / p[2] + cam.cx, cam.fy * p[1] / p[2] + cam.cy)


def camera_depth(cam: CameraModel, p_world) -> float:
    return float(cam.world_to_camera().apply(np.asarray(p_world, dtype=float))[2])


@dataclass(frozen=True)
class GridSpec:
    stride: int = GRID_STRIDE
    cols: int = DEFAULT_WIDTH // GRID_STRIDE
    rows: int = DEFAULT_HEIGHT // GRID_STRIDE

    @classmethod
    def for_camera(cls, cam: CameraModel, stride: int = GRID_STRIDE) -> "GridSpec":
        if cam.width % stride or cam.height % stride:
            raise ConfigError("image size must be divisible by the cell stride")
        return cls(stride=stride, cols=cam.width // stride, rows=cam.height // stride)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the cell containing pixel (x, y)."""
        return (int(np.floor(y / self.stride)), int(np.floor(x / self.stride)))

    def cell_bounds(self, row: int, col: int) -> tuple[float, float, float, float]:
        """Half-open pixel extent (x0, y0, x1, y1) covered by a cell."""
        s = self.stride
        return (col * s, row * s, (col + 1) * s, (row + 1) * s)


def _convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, counterclockwise, no duplicate endpoint."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def cross2(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and cross2(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.array(lower[:-1] + upper[:-1])


def _covered_cells(hull: np.ndarray, grid: GridSpec) -> set:
    """Grid cells whose centers the hull covers, half-open boundary rule.

    A center exactly on the hull boundary counts only when the edge's outward
    normal points toward -x (or straight -y), the rasterizer top-left rule;
    abutting hulls therefore never claim the same center twice.
    """
    if len(hull) < 3:
        return set()
    s = grid.stride
    x0, y0 = hull.min(axis=0)
    x1, y1 = hull.max(axis=0)
    c0 = max(int(np.floor((x0 - s / 2) / s)), 0)
    c1 = min(int(np.ceil((x1 - s / 2) / s)), grid.cols - 1)
    r0 = max(int(np.floor((y0 - s / 2) / s)), 0)
    r1 = min(int(np.ceil((y1 - s / 2) / s)), grid.rows - 1)
    if c1 < c0 or r1 < r0:
        return set()
    cols = np.arange(c0, c1 + 1)
    rows = np.arange(r0, r1 + 1)
    cx = cols * s + s / 2.0
    cy = rows * s + s / 2.0
    px, py = np.meshgrid(cx, cy)  # (nr, nc)
    inside = np.ones(px.shape, dtype=bool)
    n = len(hull)
    for i in range(n):
        ax, ay = hull[i]
        bx, by = hull[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        cross = ex * (py - ay) - ey * (px - ax)
        nx, ny = ey, -ex  # outward normal of a CCW edge
        include_boundary = nx < -1e-12 or (abs(nx) <= 1e-12 and ny < 0)
        if include_boundary:
            inside &= cross >= -1e-9
        else:
            inside &= cross > 1e-9
    rr, cc = np.nonzero(inside)
    return {(int(rows[r]), int(cols[c])) for r, c in zip(rr, cc)}


def footprint_cells(cam: CameraModel, grid: GridSpec, inst: SceneInstance) -> frozenset:
    """Cells covered by the projected hull of the instance's box corners."""
    w2c = cam.world_to_camera()
    pts_cam = w2c.apply(inst.corners())
    pts_cam = pts_cam[pts_cam[:, 2] > 1e-6]
    if len(pts_cam) == 0:
        return frozenset()
    px = np.column_stack([
        cam.fx * pts_cam[:, 0] / pts_cam[:, 2] + cam.cx,
        cam.fy * pts_cam[:, 1] / pts_cam[:, 2] + cam.cy,
    ])
    return frozenset(_covered_cells(_convex_hull(px), grid))


@dataclass(frozen=True)
class LabelCell:
    row: int
    col: int
    instance_id: int
    y: int
    value: float
    u: np.ndarray


@dataclass(frozen=True)
class GridLabels:
    grid: GridSpec
    cells: tuple

    def by_cell(self) -> dict:
        return {(c.row, c.col): c for c in self.cells}


@dataclass(frozen=True)
class ProposalCell:
    row: int
    col: int
    score: float
    v_hat: float
    u_hat: np.ndarray


@dataclass(frozen=True)
class ProposalGrid:
    grid: GridSpec
    cells: tuple


def render_labels(scene: Scene, chain, q, cam: CameraModel, grid: GridSpec,
                  params: ClfParams = ClfParams()) -> GridLabels:
    """Ground-truth per-cell labels for the non-distractor instances.

    Contested cells belong to the instance with the smaller camera-frame
    depth at its center; every cell of an instance carries the identical
    (value, control) pair evaluated against that instance's goal family.
    """
    owner: dict = {}
    depth: dict = {}
    targets = scene.targets()
    for inst in targets:
        d = camera_depth(cam, inst.center())
        if d <= 1e-6:
            continue
        for cell in footprint_cells(cam, grid, inst):
            if cell not in owner or d < depth[cell]:
                owner[cell] = inst.id
                depth[cell] = d
    controls = {}
    for inst in targets:
        if inst.id in set(owner.values()):
            out = velocity_control(chain, q, inst.world_goals(), params)
            controls[inst.id] = (out.value, out.u)
    cells = []
    for (row, col) in sorted(owner):
        inst_id = owner[(row, col)]
        value, u = controls[inst_id]
        cells.append(LabelCell(row=row, col=col, instance_id=inst_id, y=1,
                               value=value, u=u))
    return GridLabels(grid=grid, cells=tuple(cells))


def oracle_proposals(labels: GridLabels) -> ProposalGrid:
    """Zero-error stand-in for the predictor: labels pass through verbatim."""
    cells = tuple(
        ProposalCell(row=c.row, col=c.col, score=1.0, v_hat=c.value, u_hat=c.u)
        for c in labels.cells
    )
    return ProposalGrid(grid=labels.grid, cells=cells)


@dataclass(frozen=True)
class NoiseParams:
    """Error model for the noisy proposal source; rates in [0, 1]."""

    sigma_v: float = 0.0
    sigma_u: float = 0.0
    fp_rate: float = 0.0
    fn_rate: float = 0.0
    fp_v_range: tuple = (0.0, 1.0)

    def __post_init__(self):
        if not (0 <= self.fp_rate <= 1 and 0 <= self.fn_rate <= 1):
            raise ConfigError("fp_rate and fn_rate must be in [0, 1]")
        if self.sigma_v < 0 or self.sigma_u < 0:
            raise ConfigError("noise sigmas must be >= 0")


def noisy_proposals(labels: GridLabels, noise: NoiseParams,
                    rng: np.random.Generator) -> ProposalGrid:
    """Perturbed proposals: dropped foregrounds, value/control noise, false
    positives on background cells.

    Zero-sigma channels pass values through bit-identically, so a source
    configured with only fp_rate differs from the oracle only by extra cells.
    """
    cells = []
    foreground = set()
    for c in labels.cells:
        foreground.add((c.row, c.col))
        if noise.fn_rate > 0 and rng.random() < noise.fn_rate:
            continue
        v = c.value
        if noise.sigma_v > 0:
            v = max(v + rng.normal(0.0, noise.sigma_v), 0.0)
        u = c.u
        if noise.sigma_u > 0:
            u = u + rng.normal(0.0, noise.sigma_u, size=6)
        cells.append(ProposalCell(row=c.row, col=c.col, score=1.0, v_hat=v, u_hat=u))
    if noise.fp_rate > 0:
        background = [(r, c) for r in range(labels.grid.rows)
                      for c in range(labels.grid.cols) if (r, c) not in foreground]
        hits = rng.random(len(background)) < noise.fp_rate
        lo, hi = noise.fp_v_range
        for (row, col), hit in zip(background, hits):
            if hit:
                cells.append(ProposalCell(
                    row=row, col=col, score=1.0,
                    v_hat=float(rng.uniform(lo, hi)),
                    u_hat=rng.uniform(-1.0, 1.0, size=6),
                ))
    return ProposalGrid(grid=labels.grid, cells=tuple(cells))
