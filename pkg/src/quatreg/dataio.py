"""Image ingestion, dataset manifests, corruption generators and a synthetic benchmark.

Color images become pure quaternion matrices ``R i + G j + B k`` with channels
scaled to [0, 1]. All randomness flows through an explicit
``numpy.random.Generator`` so a (recipe, seed) pair fixes every output bit.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from PIL import Image

from .classify import LabeledDictionary
from .errors import ConfigError, UnsupportedFormat
from .quat_core import QuaternionMatrix, frobenius_norm

SUPPORTED_FORMATS = {"PNG", "PPM"}
_EIGHT_BIT_MODES = {"RGB", "RGBA", "L", "LA", "P", "1"}


def _resize_rgb(rgb: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of a float ``(H, W, 3)`` array to ``size = (M, N)``."""
    m, n = size
    if rgb.shape[:2] == (m, n):
        return rgb.copy()
    chans = [
        np.asarray(Image.fromarray(rgb[..., c].astype(np.float32)).resize((n, m), Image.BILINEAR))
        for c in range(rgb.shape[2])
    ]
    return np.stack(chans, axis=-1).astype(float)


def load_image(path, target_size: Optional[tuple[int, int]] = None) -> QuaternionMatrix:
    """Read an 8-bit RGB PNG or binary PPM as a pure quaternion matrix.

    Channels are divided by 255 and, if ``target_size`` is given, bilinearly
    resized to ``(rows, cols)``. Missing files raise ``OSError``.
    """
    path = Path(path)
    with Image.open(path) as im:
        if im.format not in SUPPORTED_FORMATS:
            raise UnsupportedFormat(f"{path}: format {im.format} is not PNG or PPM")
        if im.mode not in _EIGHT_BIT_MODES:
            raise UnsupportedFormat(f"{path}: mode {im.mode} is not 8-bit")
        rgb = np.asarray(im.convert("RGB"), dtype=float) / 255.0
    if target_size is not None:
        rgb = np.clip(_resize_rgb(rgb, target_size), 0.0, 1.0)
    return QuaternionMatrix.from_rgb(rgb)


def save_image(q: QuaternionMatrix, path) -> None:
    """Write the imaginary parts of ``q`` as an 8-bit RGB image (format from suffix)."""
    rgb = np.clip(q.to_rgb(), 0.0, 1.0)
    Image.fromarray(np.round(rgb * 255).astype(np.uint8)).save(path)


@dataclass
class ManifestEntry:
    path: Path
    class_id: int
    split: Literal["train", "test"]


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    image_size: tuple[int, int]

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def validate(self) -> None:
        train_classes = {e.class_id for e in self.split("train")}
        missing = {e.class_id for e in self.entries} - train_classes
        if missing:
            raise ConfigError(f"classes without training images: {sorted(missing)}")


def read_manifest(path, image_size: tuple[int, int]) -> DatasetManifest:
    """Parse a ``path,classId,split`` CSV. Relative paths resolve against the manifest's folder.

    A first line that does not parse as a record (e.g. a header) is skipped.
    """
    path = Path(path)
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 3:
                raise ConfigError(f"{path}:{lineno}: expected path,classId,split")
            p, cid, split = (c.strip() for c in row)
            try:
                cid = int(cid)
            except ValueError:
                if lineno == 1:
                    continue
                raise ConfigError(f"{path}:{lineno}: class id {cid!r} is not an integer") from None
            if split not in ("train", "test"):
                raise ConfigError(f"{path}:{lineno}: split must be train or test, got {split!r}")
            if cid < 1:
                raise ConfigError(f"{path}:{lineno}: class ids start at 1")
            p = Path(p)
            entries.append(ManifestEntry(p if p.is_absolute() else path.parent / p, cid, split))
    manifest = DatasetManifest(entries, tuple(image_size))
    manifest.validate()
    return manifest


@dataclass(frozen=True)
class CorruptionRecipe:
    block_fraction: float = 0.0
    block_source: Literal["image", "noise"] = "image"
    sp_probability: float = 0.0
    gaussian_variance: float = 0.0
    seed: int = 0
    block_image: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.block_fraction <= 1.0:
            raise ValueError(f"block_fraction must lie in [0, 1], got {self.block_fraction}")
        if self.block_source not in ("image", "noise"):
            raise ValueError(f"block_source must be 'image' or 'noise', got {self.block_source!r}")
        if not 0.0 <= self.sp_probability <= 1.0:
            raise ValueError(f"sp_probability must lie in [0, 1], got {self.sp_probability}")
        if self.gaussian_variance < 0:
            raise ValueError("gaussian_variance must be nonnegative")

    @property
    def is_clean(self) -> bool:
        return self.block_fraction == 0 and self.sp_probability == 0 and self.gaussian_variance == 0


def default_patch(rows: int = 64, cols: int = 64) -> QuaternionMatrix:
    """Procedural stand-in for an unrelated natural image: colored rings over a gradient."""
    y, x = np.mgrid[0:rows, 0:cols]
    y = y / max(rows - 1, 1)
    x = x / max(cols - 1, 1)
    r = np.hypot(x - 0.4, y - 0.6)
    rgb = np.stack([
        0.5 + 0.5 * np.sin(14 * r),
        0.5 + 0.5 * np.cos(9 * x + 3 * y),
        0.3 + 0.6 * y * (1 - x),
    ], axis=-1)
    return QuaternionMatrix.from_rgb(np.clip(rgb, 0.0, 1.0))


def block_dims(shape: tuple[int, int], fraction: float) -> tuple[int, int]:
    """Block height/width with area close to ``fraction * M * N`` and the image's aspect ratio."""
    m, n = shape
    if fraction <= 0:
        return 0, 0
    area = fraction * m * n
    if area < 1:
        raise ValueError(f"block fraction {fraction} covers less than one pixel of a {m}x{n} image")
    h = min(m, max(1, round(m * math.sqrt(fraction))))
    w = min(n, max(1, round(area / h)))
    return h, w


def occlude_block(img: QuaternionMatrix, recipe: CorruptionRecipe, rng: np.random.Generator,
                  patch: Optional[QuaternionMatrix] = None, return_mask: bool = False):
    """Paste a rectangular block at a uniformly random position.

    The block is filled from ``patch`` (resized; default procedural patch) when
    ``recipe.block_source == "image"``, or with uniform random colors for
    ``"noise"``.
    """
    m, n = img.shape
    mask = np.zeros((m, n), dtype=bool)
    h, w = block_dims(img.shape, recipe.block_fraction)
    if h == 0:
        return (img, mask) if return_mask else img
    top = int(rng.integers(0, m - h + 1))
    left = int(rng.integers(0, n - w + 1))
    if recipe.block_source == "noise":
        fill = rng.random((h, w, 3))
    else:
        if patch is None:
            patch = load_image(recipe.block_image) if recipe.block_image else default_patch()
        fill = np.clip(_resize_rgb(patch.to_rgb(), (h, w)), 0.0, 1.0)
    rgb = img.to_rgb()
    rgb[top:top + h, left:left + w] = fill
    mask[top:top + h, left:left + w] = True
    out = QuaternionMatrix.from_rgb(rgb)
    return (out, mask) if return_mask else out


def add_mixed_noise(img: QuaternionMatrix, recipe: CorruptionRecipe, rng: np.random.Generator,
                    return_mask: bool = False):
    """Salt-and-pepper followed by additive Gaussian noise, clamped to [0, 1].

    A pixel is hit with probability ``sp_probability``; each channel of a hit
    pixel independently becomes 0 or 1 with equal odds. Gaussian noise of
    variance ``gaussian_variance`` is then added to every channel.
    """
    rgb = img.to_rgb()
    m, n, _ = rgb.shape
    hit = rng.random((m, n)) < recipe.sp_probability
    values = (rng.random((m, n, 3)) < 0.5).astype(float)
    rgb = np.where(hit[..., None], values, rgb)
    if recipe.gaussian_variance > 0:
        rgb = rgb + rng.normal(0.0, math.sqrt(recipe.gaussian_variance), size=rgb.shape)
    out = QuaternionMatrix.from_rgb(np.clip(rgb, 0.0, 1.0))
    return (out, hit) if return_mask else out


def corrupt(img: QuaternionMatrix, recipe: CorruptionRecipe, rng: np.random.Generator,
            patch: Optional[QuaternionMatrix] = None) -> QuaternionMatrix:
    """Block occlusion (if any) followed by mixed noise (if any)."""
    if recipe.block_fraction > 0:
        img = occlude_block(img, recipe, rng, patch)
    if recipe.sp_probability > 0 or recipe.gaussian_variance > 0:
        img = add_mixed_noise(img, recipe, rng)
    return img


@dataclass
class SyntheticDataset:
    dictionary: LabeledDictionary
    test: list[tuple[QuaternionMatrix, int]]
    templates: list[QuaternionMatrix] = field(repr=False)
    noise_scale: float = 0.0


def _template(rng: np.random.Generator, shape: tuple[int, int], rank: int) -> QuaternionMatrix:
    m, n = shape
    u = rng.random((m, rank))
    v = rng.random((n, rank))
    coef = rng.random((rank, 3))
    # sum_r u_r * (c_r1 i + c_r2 j + c_r3 k) * v_r^T: quaternion rank <= `rank`
    rgb = np.einsum("mr,nr,rc->mnc", u, v, coef)
    rgb *= 0.85 / rgb.max()
    return QuaternionMatrix.from_rgb(rgb)


def synth_dataset(n_classes: int, per_class: int, size: tuple[int, int] = (8, 8), seed: int = 0,
                  test_per_class: int = 2, noise: float = 0.02, rank: int = 3,
                  separation: float = 5.0) -> SyntheticDataset:
    """Separable desk-scale stand-in for a color face database.

    Each class has a random rank-``rank`` pure quaternion template; training
    and test images are the template plus i.i.d. Gaussian noise of standard
    deviation ``noise`` per channel (clamped to [0, 1]). Templates are redrawn
    until every pair is at least ``separation`` times the expected Frobenius
    norm of the within-class noise apart.
    """
    if n_classes < 2:
        raise ValueError("need at least two classes")
    if per_class < 1 or test_per_class < 0:
        raise ValueError("per_class must be >= 1 and test_per_class >= 0")
    rng = np.random.default_rng(seed)
    m, n = size
    noise_norm = noise * math.sqrt(3 * m * n)
    templates: list[QuaternionMatrix] = []
    for _ in range(1000 * n_classes):
        if len(templates) == n_classes:
            break
        t = _template(rng, size, rank)
        if all(frobenius_norm(t - o) >= separation * noise_norm for o in templates):
            templates.append(t)
    else:
        raise RuntimeError("could not draw well-separated templates; lower `separation` or `noise`")

    def sample(t: QuaternionMatrix) -> QuaternionMatrix:
        rgb = t.to_rgb() + rng.normal(0.0, noise, size=(m, n, 3))
        return QuaternionMatrix.from_rgb(np.clip(rgb, 0.0, 1.0))

    images, labels, test = [], [], []
    for k, t in enumerate(templates, start=1):
        for _ in range(per_class):
            images.append(sample(t))
            labels.append(k)
    for k, t in enumerate(templates, start=1):
        for _ in range(test_per_class):
            test.append((sample(t), k))
    return SyntheticDataset(LabeledDictionary(images, labels, n_classes), test, templates, noise_norm)
