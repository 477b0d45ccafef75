"""Deterministic synthetic hyperspectral scenes with implanted anomalies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import ndimage

from ._validation import check_int, check_real
from .cube import HsiCube, TruthMask
from .exceptions import GenerationError, ParameterError

MAX_PLACEMENT_ATTEMPTS = 1000


@dataclass(frozen=True)
class SceneSpec:
    width: int = 64
    height: int = 64
    bands: int = 30
    endmembers: int = 3
    noise_sigma: float = 0.01
    anomaly_count: int = 8
    anomaly_size: int = 1
    anomaly_contrast: float = 0.5
    layout: str = "uniform"
    seed: int = 0
    abundance_scale: int = 25  # pixel spacing of the smooth abundance field

    def validate(self) -> None:
        check_int(self.width, "width", low=1)
        check_int(self.height, "height", low=1)
        check_int(self.bands, "bands", low=2)
        E = check_int(self.endmembers, "endmembers", low=1)
        check_real(self.noise_sigma, "noise_sigma", low=0)
        n = check_int(self.anomaly_count, "anomaly_count", low=0)
        s = check_int(self.anomaly_size, "anomaly_size", low=1)
        check_real(self.anomaly_contrast, "anomaly_contrast", low=0)
        check_int(self.abundance_scale, "abundance_scale", low=1)
        if self.layout not in ("uniform", "split"):
            raise ParameterError(f"layout must be 'uniform' or 'split', got {self.layout!r}")
        if self.layout == "split" and E < 2:
            raise ParameterError("split layout needs at least 2 endmembers")
        if E >= self.bands:
            raise ParameterError(f"endmembers ({E}) must be fewer than bands ({self.bands})")
        if n * s * s > 0.05 * self.width * self.height:
            raise ParameterError(
                f"{n} anomalies of {s}x{s} exceed 5% of a {self.width}x{self.height} scene")


def endmember_spectra(rng: np.random.Generator, count: int, bands: int) -> np.ndarray:
    """Smooth positive spectra, each a sum of 2-3 Gaussian bumps over band index."""
    grid = np.arange(bands, dtype=np.float64)
    out = np.full((count, bands), 0.05)
    for e in range(count):
        for _ in range(int(rng.integers(2, 4))):
            center = rng.uniform(0, bands - 1)
            width = rng.uniform(0.08, 0.25) * bands
            amp = rng.uniform(0.2, 1.0)
            out[e] += amp * np.exp(-0.5 * ((grid - center) / width) ** 2)
    return out


def smooth_abundances(rng: np.random.Generator, h: int, w: int, count: int, spacing: int) -> np.ndarray:
    """Dirichlet(1,...,1) abundances on a coarse grid, bilinearly interpolated."""
    gh = max(2, -(-h // spacing) + 1)
    gw = max(2, -(-w // spacing) + 1)
    coarse = rng.dirichlet(np.ones(count), size=(gh, gw))
    yy = np.linspace(0, gh - 1, h)
    xx = np.linspace(0, gw - 1, w)
    cy, cx = np.meshgrid(yy, xx, indexing="ij")
    out = np.stack([ndimage.map_coordinates(coarse[..., e], [cy, cx], order=1, mode="nearest")
                    for e in range(count)], axis=-1)
    return out / out.sum(axis=-1, keepdims=True)


def orthogonal_direction(rng: np.random.Generator, basis: np.ndarray) -> np.ndarray:
    """Random unit vector orthogonal to the row space of ``basis``."""
    q, _ = np.linalg.qr(basis.T)
    for _ in range(100):
        v = rng.standard_normal(basis.shape[1])
        v -= q @ (q.T @ v)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm
    raise GenerationError("could not draw a direction orthogonal to the endmember span")


def _place_blocks(rng, h, w, n, s):
    occupied = np.zeros((h, w), dtype=bool)
    corners = []
    if n and (s > h or s > w):
        raise GenerationError(f"anomaly size {s} does not fit a {w}x{h} scene; use a smaller size")
    for b in range(n):
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            y, x = int(rng.integers(0, h - s + 1)), int(rng.integers(0, w - s + 1))
            if not occupied[y:y + s, x:x + s].any():
                occupied[y:y + s, x:x + s] = True
                corners.append((y, x))
                break
        else:
            raise GenerationError(
                f"could not place anomaly {b + 1} of {n} after {MAX_PLACEMENT_ATTEMPTS} attempts; "
                "use fewer or smaller anomalies")
    return corners, occupied


def gen_scene(spec: SceneSpec) -> Tuple[HsiCube, TruthMask]:
    """Generate a cube and its truth mask from ``spec``.

    Background pixels are mixtures of smooth endmember spectra under a
    spatially smooth abundance field plus i.i.d. Gaussian noise.  Each anomaly
    block gets its own spectrum: the clean background of a random pixel pushed by
    ``anomaly_contrast`` along a direction orthogonal to the endmember span.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    h, w, b, E = spec.height, spec.width, spec.bands, spec.endmembers
    M = endmember_spectra(rng, E, b)
    if spec.layout == "uniform":
        ab = smooth_abundances(rng, h, w, E, spec.abundance_scale)
    else:
        half = w // 2
        left = list(range(0, (E + 1) // 2))
        right = list(range((E + 1) // 2, E))
        ab = np.zeros((h, w, E))
        ab[:, :half, left] = smooth_abundances(rng, h, half, len(left), spec.abundance_scale) if half else 0
        ab[:, half:, right] = smooth_abundances(rng, h, w - half, len(right), spec.abundance_scale)
    clean = ab @ M
    data = clean.copy()
    corners, mask = _place_blocks(rng, h, w, spec.anomaly_count, spec.anomaly_size)
    s = spec.anomaly_size
    for y, x in corners:
        # base is the clean background of a random pixel, so the in-span part is globally typical
        base = clean[int(rng.integers(0, h)), int(rng.integers(0, w))]
        data[y:y + s, x:x + s] = base + spec.anomaly_contrast * orthogonal_direction(rng, M)
    # noise drawn last so the noise field is the only thing a seed change is guaranteed to alter
    data = data + rng.normal(0.0, spec.noise_sigma, size=data.shape) if spec.noise_sigma > 0 else data
    name = f"synth-{spec.layout}-s{spec.seed}"
    return HsiCube(data, wavelengths=None, name=name), TruthMask(mask)
