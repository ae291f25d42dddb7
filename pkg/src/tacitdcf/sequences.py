"""Sequence loading and deterministic synthetic scenario generation.

Synthetic scenarios render a textured target moving over a textured
background with exact ground truth, at desk scale:

  * ``static``    - target does not move;
  * ``translate`` - constant per-frame (dx, dy) motion;
  * ``zoom``      - target size grows by a fixed per-frame factor, with
                    optional illumination flicker and position dither
                    ("wobble") to stress scale stability;
  * ``occlude``   - an opaque bar crosses the target for a span of frames;
  * ``restyle``   - the target texture is swapped at a given frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from tacitdcf.errors import StackFormatError

Box = tuple[float, float, float, float]

SCENARIOS = ("static", "translate", "zoom", "occlude", "restyle")


@dataclass
class Sequence:
    name: str
    frames: list[np.ndarray] | None  # in-memory (H, W, 3) float frames
    paths: list[Path] | None         # or on-disk frames, loaded lazily
    ground_truth: list[Box]

    def __post_init__(self):
        count = len(self.frames) if self.frames is not None else len(self.paths or [])
        if count != len(self.ground_truth):
            raise ValueError(
                f"{count} frames but {len(self.ground_truth)} ground-truth boxes"
            )

    def __len__(self) -> int:
        return len(self.ground_truth)

    def frame(self, i: int) -> np.ndarray:
        if self.frames is not None:
            return self.frames[i]
        img = Image.open(self.paths[i]).convert("RGB")
        return np.asarray(img, dtype=float) / 255.0


def load_otb_sequence(directory: str | Path) -> Sequence:
    """Load a sequence laid out in the common benchmark convention:
    ``img/`` with numbered frames plus ``groundtruth_rect.txt`` holding one
    ``x,y,w,h`` line per frame (comma or tab separated, 1-based pixels,
    converted to 0-based here)."""
    directory = Path(directory)
    img_dir = directory / "img"
    gt_file = directory / "groundtruth_rect.txt"
    if not img_dir.is_dir():
        raise FileNotFoundError(f"missing image directory {img_dir}")
    if not gt_file.is_file():
        raise FileNotFoundError(f"missing ground truth file {gt_file}")
    paths = sorted(
        p for p in img_dir.iterdir()
        if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp")
    )
    boxes = []
    for lineno, line in enumerate(gt_file.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.replace("\t", ",").replace(" ", ",").split(",")
        parts = [p for p in parts if p]
        if len(parts) != 4:
            raise StackFormatError(
                f"ground truth line {lineno} has {len(parts)} fields, expected 4",
                offset=lineno,
            )
        try:
            x, y, w, h = (float(p) for p in parts)
        except ValueError as exc:
            raise StackFormatError(
                f"ground truth line {lineno} is not numeric: {line!r}", offset=lineno
            ) from exc
        boxes.append((x - 1.0, y - 1.0, w, h))
    if len(paths) != len(boxes):
        raise StackFormatError(
            f"{len(paths)} frames but {len(boxes)} ground-truth lines",
            offset=len(boxes),
        )
    return Sequence(name=directory.name, frames=None, paths=paths, ground_truth=boxes)


def write_sequence(seq: Sequence, directory: str | Path) -> Path:
    """Write frames as PNGs plus a 1-based groundtruth_rect.txt."""
    directory = Path(directory)
    img_dir = directory / "img"
    img_dir.mkdir(parents=True, exist_ok=True)
    for i in range(len(seq)):
        frame = np.clip(seq.frame(i) * 255.0, 0, 255).astype(np.uint8)
        Image.fromarray(frame).save(img_dir / f"{i + 1:04d}.png")
    lines = [
        f"{x + 1.0:.2f},{y + 1.0:.2f},{w:.2f},{h:.2f}"
        for x, y, w, h in seq.ground_truth
    ]
    (directory / "groundtruth_rect.txt").write_text("\n".join(lines) + "\n")
    return directory


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of one synthetic scenario."""

    scenario: str = "translate"
    frames: int = 50
    frame_size: tuple[int, int] = (240, 160)   # (width, height)
    target_size: tuple[int, int] = (32, 32)
    start: tuple[int, int] | None = None       # top-left; default near corner
    dx: float = 3.0
    dy: float = 0.0
    zoom_rate: float = 1.01                    # per-frame size factor
    flicker: float = 0.0                       # illumination wobble amplitude
    dither: float = 0.0                        # position wobble amplitude (px)
    occlude_span: tuple[int, int] = (15, 25)   # frames with the bar drawn
    occluder_width: int = 12
    restyle_frame: int = 20
    seed: int = 0


def synth_sequence(spec: ScenarioSpec) -> Sequence:
    """Render a deterministic synthetic sequence with exact ground truth."""
    if spec.scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {spec.scenario!r}, know {SCENARIOS}")
    if spec.frames < 1:
        raise ValueError("need at least one frame")
    rng = np.random.default_rng(spec.seed)
    fw, fh = spec.frame_size
    tw, th = spec.target_size
    background = _texture(rng, fh, fw, cell=6, low=0.25, high=0.75)
    target_tex = _texture(rng, th * 4, tw * 4, cell=2, low=0.0, high=1.0)
    restyle_tex = _texture(rng, th * 4, tw * 4, cell=2, low=0.0, high=1.0)

    if spec.start is None:
        x0 = fw // 8
        y0 = (fh - th) // 2
    else:
        x0, y0 = spec.start

    frames = []
    boxes: list[Box] = []
    for t in range(spec.frames):
        frame = background.copy()
        tex = target_tex
        if spec.scenario == "restyle" and t >= spec.restyle_frame:
            tex = restyle_tex

        if spec.scenario == "zoom":
            scale = spec.zoom_rate ** t
            w_t, h_t = tw * scale, th * scale
            cx = x0 + tw / 2.0
            cy = y0 + th / 2.0
            if spec.dither:
                cx += spec.dither * np.sin(2.2 * t)
                cy += spec.dither * np.cos(1.7 * t)
            box = (cx - w_t / 2.0, cy - h_t / 2.0, w_t, h_t)
        else:
            step_x = spec.dx if spec.scenario in ("translate",) else 0.0
            step_y = spec.dy if spec.scenario in ("translate",) else 0.0
            box = (x0 + step_x * t, y0 + step_y * t, float(tw), float(th))

        _check_inside(box, fw, fh, t)
        _paste_target(frame, tex, box)

        if spec.scenario == "occlude" and spec.occlude_span[0] <= t < spec.occlude_span[1]:
            span = max(spec.occlude_span[1] - spec.occlude_span[0], 1)
            progress = (t - spec.occlude_span[0]) / span
            bar_x = int(box[0] - spec.occluder_width + progress * (box[2] + 2 * spec.occluder_width))
            lo = max(0, bar_x)
            hi = min(fw, bar_x + spec.occluder_width)
            if hi > lo:
                frame[:, lo:hi, :] = 0.5

        if spec.flicker:
            gain = 1.0 + spec.flicker * np.sin(2.0 * np.pi * t / 7.0)
            frame = np.clip(frame * gain, 0.0, 1.0)

        frames.append(frame)
        boxes.append(box)
    name = f"{spec.scenario}-{spec.seed}"
    return Sequence(name=name, frames=frames, paths=None, ground_truth=boxes)


def _check_inside(box: Box, fw: int, fh: int, t: int) -> None:
    x, y, w, h = box
    if x < 0 or y < 0 or x + w > fw or y + h > fh:
        raise ValueError(
            f"target leaves the {fw}x{fh} frame at frame {t}: box {box}"
        )


def _texture(rng: np.random.Generator, h: int, w: int, cell: int,
             low: float, high: float) -> np.ndarray:
    """Smooth random RGB texture: low-resolution noise bilinearly upsampled."""
    gh = max(2, h // cell + 2)
    gw = max(2, w // cell + 2)
    grid = rng.uniform(low, high, size=(gh, gw, 3))
    rows = np.linspace(0, gh - 1.001, h)
    cols = np.linspace(0, gw - 1.001, w)
    r0 = np.floor(rows).astype(int)
    c0 = np.floor(cols).astype(int)
    fr = (rows - r0)[:, None, None]
    fc = (cols - c0)[None, :, None]
    top = grid[r0][:, c0] * (1 - fc) + grid[r0][:, c0 + 1] * fc
    bot = grid[r0 + 1][:, c0] * (1 - fc) + grid[r0 + 1][:, c0 + 1] * fc
    return top * (1 - fr) + bot * fr


def _paste_target(frame: np.ndarray, tex: np.ndarray, box: Box) -> None:
    """Resample the target texture to the box size and paste it (rounded to
    the pixel grid; ground truth keeps the exact float box)."""
    x, y, w, h = box
    xi, yi = int(round(x)), int(round(y))
    wi, hi = max(1, int(round(w))), max(1, int(round(h)))
    rows = np.linspace(0, tex.shape[0] - 1.001, hi)
    cols = np.linspace(0, tex.shape[1] - 1.001, wi)
    r0 = np.floor(rows).astype(int)
    c0 = np.floor(cols).astype(int)
    fr = (rows - r0)[:, None, None]
    fc = (cols - c0)[None, :, None]
    top = tex[r0][:, c0] * (1 - fc) + tex[r0][:, c0 + 1] * fc
    bot = tex[r0 + 1][:, c0] * (1 - fc) + tex[r0 + 1][:, c0 + 1] * fc
    patch = top * (1 - fr) + bot * fr
    frame[yi : yi + hi, xi : xi + wi, :] = patch
