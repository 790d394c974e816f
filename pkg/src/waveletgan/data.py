"""Sequence ingestion, dataset manifests, and clip windowing.

Frames are grayscale (luma) arrays in [0, 1]. A training example is a
ClipWindow: one compressed target frame, its 2N compressed temporal
neighbors, and the matching pristine frame. Windows near sequence ends
replicate the edge frame so every target has a full neighbor set.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import IngestError, ManifestError
from .wavelet import Frame

IMAGE_EXTENSIONS = {".png", ".pgm", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff"}


def _load_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            if img.mode != "L":
                img = img.convert("L")  # Pillow's ITU-R 601-2 luma for color inputs
            arr = np.asarray(img, dtype=np.float32)
    except OSError as exc:
        raise IngestError(f"cannot read image {path}: {exc}") from exc
    return arr / 255.0


def _parse_dims(text: str, source: str) -> tuple[int, int]:
    """Parse 'WxH' into (width, height)."""
    parts = text.lower().replace("x", " ").split()
    if len(parts) != 2:
        raise IngestError(f"bad dimension spec {text!r} from {source}, expected WxH")
    try:
        w, h = int(parts[0]), int(parts[1])
    except ValueError:
        raise IngestError(f"bad dimension spec {text!r} from {source}, expected WxH") from None
    if w < 1 or h < 1:
        raise IngestError(f"dimensions must be positive, got {w}x{h} from {source}")
    return w, h


def _load_raw(path: Path, dims: tuple[int, int] | None) -> np.ndarray:
    if dims is None:
        sidecar = path.with_name(path.name + ".dims")
        if not sidecar.exists():
            raise IngestError(
                f"raw file {path} needs dims=(width, height) or a sidecar {sidecar.name}"
            )
        dims = _parse_dims(sidecar.read_text().strip(), str(sidecar))
    width, height = dims
    data = np.fromfile(path, dtype=np.uint8)
    frame_size = width * height
    if data.size == 0 or frame_size == 0 or data.size % frame_size != 0:
        raise IngestError(
            f"raw file {path} holds {data.size} bytes, not a multiple of {width}x{height}"
        )
    frames = data.reshape(-1, height, width).astype(np.float32) / 255.0
    return frames


def load_sequence(
    path: str | Path,
    *,
    seq_id: str | None = None,
    qp: int | None = None,
    dims: tuple[int, int] | None = None,
) -> list[Frame]:
    """Load a frame sequence from an image directory or a raw planar file.

    A directory is read as its sorted image files (one frame each); a plain
    file is read as concatenated 8-bit grayscale frames whose size comes
    from `dims` (width, height) or a `<name>.dims` sidecar containing "WxH".
    """
    path = Path(path)
    if seq_id is None:
        seq_id = path.stem if path.is_file() else path.name
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS)
        if not files:
            raise IngestError(f"no image files in {path}")
        arrays = [_load_image(p) for p in files]
        first = arrays[0].shape
        for p, arr in zip(files, arrays):
            if arr.shape != first:
                raise IngestError(
                    f"frame size mismatch in {path}: {p.name} is {arr.shape}, expected {first}"
                )
        stack = arrays
    elif path.is_file():
        stack = list(_load_raw(path, dims))
    else:
        raise IngestError(f"no such sequence: {path}")
    return [
        Frame(samples=arr, seq_id=seq_id, index=i, qp=qp) for i, arr in enumerate(stack)
    ]


@dataclass
class SequencePair:
    """A compressed sequence aligned with its pristine original."""

    compressed: list[Frame]
    groundtruth: list[Frame]
    qp: int

    def __post_init__(self):
        if len(self.compressed) == 0:
            raise IngestError("empty sequence pair")
        if len(self.compressed) != len(self.groundtruth):
            raise IngestError(
                f"length mismatch: {len(self.compressed)} compressed vs "
                f"{len(self.groundtruth)} groundtruth frames"
            )
        for c, g in zip(self.compressed, self.groundtruth):
            if c.samples.shape != g.samples.shape:
                raise IngestError(
                    f"frame {c.index}: size mismatch {c.samples.shape} vs {g.samples.shape}"
                )

    @property
    def seq_id(self) -> str:
        return self.compressed[0].seq_id

    def __len__(self) -> int:
        return len(self.compressed)


def load_pair(
    compressed_path: str | Path,
    groundtruth_path: str | Path,
    qp: int,
    *,
    dims: tuple[int, int] | None = None,
) -> SequencePair:
    comp = load_sequence(compressed_path, qp=qp, dims=dims)
    gt = load_sequence(groundtruth_path, dims=dims)
    return SequencePair(compressed=comp, groundtruth=gt, qp=qp)


@dataclass
class ClipWindow:
    """One enhancement target with its temporal context.

    `neighbors` holds the 2N compressed frames [t-N .. t-1, t+1 .. t+N];
    `groundtruth` is None for inference-only windows.
    """

    target: Frame
    neighbors: list[Frame]
    groundtruth: Frame | None = None

    @property
    def n_neighbors(self) -> int:
        return len(self.neighbors) // 2


def _window_indices(t: int, length: int, n: int) -> list[int]:
    left = [min(max(t - k, 0), length - 1) for k in range(n, 0, -1)]
    right = [min(max(t + k, 0), length - 1) for k in range(1, n + 1)]
    return left + right


def windows_from_frames(
    frames: list[Frame],
    n_neighbors: int,
    groundtruth: list[Frame] | None = None,
) -> list[ClipWindow]:
    """Build one window per frame, replicating edge frames as needed."""
    if n_neighbors < 1:
        raise ValueError(f"n_neighbors must be >= 1, got {n_neighbors}")
    if not frames:
        raise IngestError("cannot window an empty sequence")
    if groundtruth is not None and len(groundtruth) != len(frames):
        raise IngestError("groundtruth length does not match sequence length")
    windows = []
    for t in range(len(frames)):
        idx = _window_indices(t, len(frames), n_neighbors)
        windows.append(
            ClipWindow(
                target=frames[t],
                neighbors=[frames[i] for i in idx],
                groundtruth=None if groundtruth is None else groundtruth[t],
            )
        )
    return windows


def make_clip_windows(pair: SequencePair, n_neighbors: int) -> list[ClipWindow]:
    return windows_from_frames(pair.compressed, n_neighbors, pair.groundtruth)


def random_crop_aligned(
    window: ClipWindow,
    size: int,
    seed: int,
    alignment: int = 8,
) -> ClipWindow:
    """Crop the same random size x size patch from every frame of a window.

    The patch edge must be a multiple of `alignment` so that level-3 packet
    transforms of the crop stay well-defined.
    """
    h, w = window.target.samples.shape
    if size < alignment or size % alignment != 0:
        raise ValueError(f"crop size {size} is not a positive multiple of {alignment}")
    if size > h or size > w:
        raise ValueError(f"crop size {size} exceeds frame size {h}x{w}")
    rng = np.random.default_rng(seed)
    top = int(rng.integers(0, h - size + 1))
    left = int(rng.integers(0, w - size + 1))

    def cut(frame: Frame) -> Frame:
        return Frame(
            samples=frame.samples[top : top + size, left : left + size],
            seq_id=frame.seq_id,
            index=frame.index,
            qp=frame.qp,
        )

    return ClipWindow(
        target=cut(window.target),
        neighbors=[cut(f) for f in window.neighbors],
        groundtruth=None if window.groundtruth is None else cut(window.groundtruth),
    )


def window_seed(global_seed: int, seq_id: str, index: int) -> int:
    """Stable per-window RNG seed from (run seed, sequence, frame index)."""
    digest = hashlib.sha256(f"{global_seed}:{seq_id}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass
class ManifestEntry:
    compressed: Path
    groundtruth: Path
    qp: int
    line: int


def parse_manifest(path: str | Path) -> list[ManifestEntry]:
    """Parse a dataset manifest.

    Each non-blank, non-comment line reads
    `<compressed_path> <groundtruth_path> <qp>`; paths are resolved
    relative to the manifest's directory, `#` starts a comment.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ManifestError(
                f"{path.name}:{lineno}: expected 'compressed groundtruth qp', got {raw!r}"
            )
        comp, gt, qp_text = parts
        try:
            qp = int(qp_text)
        except ValueError:
            raise ManifestError(f"{path.name}:{lineno}: qp must be an integer, got {qp_text!r}") from None
        if qp < 0:
            raise ManifestError(f"{path.name}:{lineno}: qp must be >= 0, got {qp}")
        entries.append(
            ManifestEntry(
                compressed=(base / comp).resolve(),
                groundtruth=(base / gt).resolve(),
                qp=qp,
                line=lineno,
            )
        )
    if not entries:
        raise ManifestError(f"{path.name}: no entries")
    return entries


def load_manifest_pairs(path: str | Path) -> list[SequencePair]:
    return [load_pair(e.compressed, e.groundtruth, e.qp) for e in parse_manifest(path)]


def write_frames_png(frames: list[Frame], out_dir: str | Path, prefix: str = "frame") -> list[Path]:
    """Serialize frames as 8-bit PNGs (clamped to [0, 1], round-half-up)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(frames):
        arr = np.clip(np.asarray(frame.samples, dtype=np.float64), 0.0, 1.0)
        quantized = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
        p = out_dir / f"{prefix}_{i:04d}.png"
        Image.fromarray(quantized, mode="L").save(p)
        paths.append(p)
    return paths
