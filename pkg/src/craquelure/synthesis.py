"""Synthetic craquelure generation.

Produces aligned triplets (clean image, crack mask, damaged image) by
rasterizing stochastic cubic Bezier crack networks on the clean source
at its native resolution: curve origins uniform over the canvas, curve
lengths tied to the sampling budget (about one sample per pixel), inner
control points perturbed around the chord, tapered stamp radii that
peak mid-curve, optional branching, then a 2x2 erosion + 5x5 Gaussian
blur + threshold to soften mask edges. Image and mask are resized to
the target size afterwards and the crack-gray fill is burned into the
resized clean image, so the damaged/clean pair stays byte-identical
off-mask at the delivered resolution.

Determinism contract: one seeded generator drives a whole triplet, and
every stochastic draw happens in a fixed, documented order, so identical
(source image, spec) inputs give byte-identical triplets. Per triplet
the order is:

1. curve count (one ``integers`` draw);
2. per top-level curve: :func:`sample_curve` draws (p0.x, p0.y,
   direction angle, chord length, p1 noise pair, p2 noise pair), then
   :func:`rasterize_crack` draws all stamp radii in one vectorized
   ``normal`` call, then one branch attempt per curve: a ``uniform``
   split position followed by the :func:`spawn_branch` draws, recursing
   into children depth-first up to ``branch_depth``.

Points are (x, y) in pixel coordinates, x along the width axis; pixel
centers sit at integer coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from PIL import Image
from scipy import ndimage

__all__ = [
    "CrackSpec",
    "BezierCurve",
    "Triplet",
    "bezier_eval",
    "bezier_tangent",
    "sample_curve",
    "rasterize_crack",
    "spawn_branch",
    "refine_mask",
    "apply_damage",
    "resize_bilinear",
    "generate_triplet",
    "derive_seed",
    "procedural_painting",
]


def _as_interval(value, lo_bound=None, hi_bound=None, name="interval"):
    if np.isscalar(value):
        value = (value, value)
    lo, hi = float(value[0]), float(value[1])
    if lo > hi:
        raise ValueError(f"{name}: empty interval [{lo}, {hi}]")
    if lo_bound is not None and lo < lo_bound:
        raise ValueError(f"{name}: lower bound {lo} < {lo_bound}")
    if hi_bound is not None and hi > hi_bound:
        raise ValueError(f"{name}: upper bound {hi} > {hi_bound}")
    return (lo, hi)


@dataclass
class CrackSpec:
    """Stochastic parameters of one synthetic crack network.

    ``branch_prob`` is the interval the per-curve branching probability
    is drawn from (a scalar collapses to a point interval). The branch
    geometry fields (rotation, scale, split range, depth) are rendering
    conventions, exposed mainly so tests can pin them.
    """

    curve_count_range: tuple[int, int] = (80, 150)
    samples_range: tuple[int, int] = (80, 180)
    control_sigma: float = 8.0
    taper_alpha: float = 2.0
    radius_sigma: float = 0.5
    branch_prob: tuple[float, float] = (0.3, 0.5)
    branch_angle_deg: tuple[float, float] = (20.0, 60.0)
    branch_scale: tuple[float, float] = (0.4, 0.7)
    branch_t_range: tuple[float, float] = (0.2, 0.8)
    branch_depth: int = 2
    crack_gray: int = 40
    mask_threshold: int = 50
    blur_kernel: int = 5
    blur_sigma: float = 2.0
    erosion_kernel: int = 2
    target_size: tuple[int, int] = (598, 375)  # (width, height)
    seed: int = 0

    def __post_init__(self):
        lo, hi = int(self.curve_count_range[0]), int(self.curve_count_range[1])
        if lo > hi or lo < 0:
            raise ValueError("curve_count_range must be a nonempty non-negative interval")
        self.curve_count_range = (lo, hi)
        lo, hi = int(self.samples_range[0]), int(self.samples_range[1])
        if lo > hi or lo < 2:
            raise ValueError("samples_range must be a nonempty interval with low >= 2")
        self.samples_range = (lo, hi)
        if self.taper_alpha <= 0.0:
            raise ValueError("taper_alpha must be > 0")
        if self.radius_sigma < 0.0:
            raise ValueError("radius_sigma must be >= 0")
        self.branch_prob = _as_interval(self.branch_prob, 0.0, 1.0, "branch_prob")
        self.branch_angle_deg = _as_interval(self.branch_angle_deg, name="branch_angle_deg")
        self.branch_scale = _as_interval(self.branch_scale, name="branch_scale")
        self.branch_t_range = _as_interval(self.branch_t_range, 0.0, 1.0, "branch_t_range")
        if not 0 <= self.crack_gray <= 255:
            raise ValueError("crack_gray must be an 8-bit intensity")
        w, h = int(self.target_size[0]), int(self.target_size[1])
        if w < 1 or h < 1:
            raise ValueError("target_size must be at least 1x1")
        self.target_size = (w, h)


@dataclass(frozen=True)
class BezierCurve:
    """Cubic Bezier control polygon; points are float (x, y) pairs."""

    p0: tuple[float, float]
    p1: tuple[float, float]
    p2: tuple[float, float]
    p3: tuple[float, float]

    def __post_init__(self):
        for p in (self.p0, self.p1, self.p2, self.p3):
            if not (math.isfinite(p[0]) and math.isfinite(p[1])):
                raise ValueError("control points must be finite")

    def points(self) -> np.ndarray:
        return np.array([self.p0, self.p1, self.p2, self.p3], dtype=np.float64)


@dataclass
class Triplet:
    """Aligned (clean, mask, damaged) unit of synthetic supervision."""

    clean: np.ndarray
    mask: np.ndarray
    damaged: np.ndarray

    def __post_init__(self):
        if self.mask.shape != self.clean.shape[:2] or self.damaged.shape != self.clean.shape:
            raise ValueError("triplet members must share dimensions")
        off = ~self.mask
        if not np.array_equal(self.damaged[off], self.clean[off]):
            raise ValueError("damaged image differs from clean outside the mask")


# Sampling rate along a curve: dense enough that tapered tip disks
# (radius down to ~0.5 px) still overlap into a connected stroke.
SAMPLES_PER_PIXEL = 2.0


def _pt(arr) -> tuple[float, float]:
    return (float(arr[0]), float(arr[1]))


def bezier_eval(curve: BezierCurve, t) -> np.ndarray:
    """Evaluate the cubic at parameter(s) t in [0, 1].

    Scalar t gives a (2,) point; an array of n values gives (n, 2).
    """
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise ValueError("t must lie in [0, 1]")
    p = curve.points()
    u = 1.0 - t_arr
    coeff = np.stack([u**3, 3.0 * u**2 * t_arr, 3.0 * u * t_arr**2, t_arr**3], axis=-1)
    return coeff @ p


def bezier_tangent(curve: BezierCurve, t: float) -> np.ndarray:
    """Derivative of the cubic at scalar t (not normalized)."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    p0, p1, p2, p3 = curve.points()
    u = 1.0 - t
    return 3.0 * u * u * (p1 - p0) + 6.0 * u * t * (p2 - p1) + 3.0 * t * t * (p3 - p2)


def sample_curve(
    rng: np.random.Generator, width: int, height: int, spec: CrackSpec
) -> BezierCurve:
    """Draw one crack trajectory over a width x height canvas.

    The origin is uniform over the canvas; the far endpoint lies at a
    uniformly random direction and a chord length drawn so that the
    per-curve sampling budget (``samples_range`` points at roughly two
    samples per pixel of chord) spans its full range. The inner control
    points sit at the 1/3 and 2/3 chord positions plus isotropic
    Gaussian noise of scale ``control_sigma``, which bends the curve
    without detaching it from its chord. Parts of a curve may leave the
    canvas; rasterization clips them.

    Draw order: p0.x, p0.y, direction angle, chord length, p1 noise
    pair, p2 noise pair.
    """
    p0 = np.array([rng.uniform(0.0, width), rng.uniform(0.0, height)])
    theta = rng.uniform(0.0, 2.0 * math.pi)
    length = rng.uniform(
        spec.samples_range[0] / SAMPLES_PER_PIXEL, spec.samples_range[1] / SAMPLES_PER_PIXEL
    )
    chord = length * np.array([math.cos(theta), math.sin(theta)])
    p3 = p0 + chord
    p1 = p0 + chord / 3.0 + rng.normal(0.0, spec.control_sigma, 2)
    p2 = p0 + 2.0 * chord / 3.0 + rng.normal(0.0, spec.control_sigma, 2)
    return BezierCurve(_pt(p0), _pt(p1), _pt(p2), _pt(p3))


def _stamp_disk(canvas: np.ndarray, cx: float, cy: float, r: float) -> None:
    if r < 0.0:
        return
    h, w = canvas.shape
    x0 = max(int(math.floor(cx - r)), 0)
    x1 = min(int(math.ceil(cx + r)), w - 1)
    y0 = max(int(math.floor(cy - r)), 0)
    y1 = min(int(math.ceil(cy + r)), h - 1)
    if x0 > x1 or y0 > y1:
        return
    yy, xx = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
    canvas[y0 : y1 + 1, x0 : x1 + 1] |= (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r


def rasterize_crack(
    curve: BezierCurve, spec: CrackSpec, rng: np.random.Generator, canvas: np.ndarray
) -> None:
    """Stamp tapered disks along the curve into a boolean canvas (in place).

    The sample count follows the chord length (about two samples per
    pixel) clamped to ``samples_range``; stamp radii are Gaussian around
    ``taper_alpha * (1 - |t - 0.5|)``, so thickness peaks mid-curve and
    thins toward both tips. Disks outside the canvas are clipped.
    """
    p = curve.points()
    chord_len = float(np.hypot(*(p[3] - p[0])))
    lo, hi = spec.samples_range
    n = int(np.clip(round(SAMPLES_PER_PIXEL * chord_len), lo, hi))
    t = np.linspace(0.0, 1.0, n)
    centers = bezier_eval(curve, t)
    means = spec.taper_alpha * (1.0 - np.abs(t - 0.5))
    radii = np.maximum(rng.normal(means, spec.radius_sigma), 0.0)
    for (cx, cy), r in zip(centers, radii):
        _stamp_disk(canvas, cx, cy, r)


def spawn_branch(
    parent: BezierCurve, t_split: float, rng: np.random.Generator, spec: CrackSpec
) -> BezierCurve | None:
    """Maybe start a child crack at the parent's ``t_split`` point.

    The branch fires with a probability drawn from ``branch_prob``; the
    child chord is the parent tangent rotated by a random signed angle in
    ``branch_angle_deg`` and scaled by a factor in ``branch_scale``, and
    its control points are perturbed exactly like a fresh curve.

    Draw order: probability, fire test, rotation sign, rotation angle,
    scale, p1 noise pair, p2 noise pair.
    """
    if not 0.0 < t_split < 1.0:
        raise ValueError("t_split must lie strictly inside (0, 1)")
    p_branch = rng.uniform(*spec.branch_prob)
    if rng.random() >= p_branch:
        return None
    q0 = bezier_eval(parent, t_split)
    tangent = bezier_tangent(parent, t_split)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    theta = sign * math.radians(rng.uniform(*spec.branch_angle_deg))
    scale = rng.uniform(*spec.branch_scale)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    chord = scale * np.array(
        [cos_t * tangent[0] - sin_t * tangent[1], sin_t * tangent[0] + cos_t * tangent[1]]
    )
    q3 = q0 + chord
    q1 = q0 + chord / 3.0 + rng.normal(0.0, spec.control_sigma, 2)
    q2 = q0 + 2.0 * chord / 3.0 + rng.normal(0.0, spec.control_sigma, 2)
    return BezierCurve(_pt(q0), _pt(q1), _pt(q2), _pt(q3))


def _erode2x2(mask: np.ndarray) -> np.ndarray:
    """2x2 binary erosion anchored top-left; off-canvas counts as background."""
    out = mask.copy()
    out[:-1, :] &= mask[1:, :]
    out[:, :-1] &= mask[:, 1:]
    out[:-1, :-1] &= mask[1:, 1:]
    out[-1, :] = False
    out[:, -1] = False
    return out


def _gaussian_kernel_1d(size: int, sigma: float) -> np.ndarray:
    r = size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def refine_mask(raw: np.ndarray, spec: CrackSpec) -> np.ndarray:
    """Soften a raw rasterized mask: 2x2 erosion, Gaussian blur, threshold.

    The blur runs on the 0/255 rendering with replicate borders; a pixel
    stays crack iff its blurred value is strictly above
    ``mask_threshold``.
    """
    eroded = _erode2x2(np.asarray(raw, dtype=bool))
    rendered = np.where(eroded, 255.0, 0.0)
    k = _gaussian_kernel_1d(spec.blur_kernel, spec.blur_sigma)
    blurred = ndimage.correlate1d(rendered, k, axis=0, mode="nearest")
    blurred = ndimage.correlate1d(blurred, k, axis=1, mode="nearest")
    return blurred > spec.mask_threshold


def apply_damage(clean: np.ndarray, mask: np.ndarray, spec: CrackSpec) -> np.ndarray:
    """Burn the crack-gray value into every masked pixel (all channels)."""
    clean = np.asarray(clean)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != clean.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match image {clean.shape[:2]}")
    damaged = clean.copy()
    damaged[mask] = spec.crack_gray
    return damaged


def resize_bilinear(image: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize to (width, height)."""
    return np.asarray(Image.fromarray(image).resize(size, Image.BILINEAR), dtype=np.uint8)


def resize_mask(mask: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Resize a boolean mask to (width, height); majority coverage wins.

    The mask is rendered 0/255, resized bilinearly like the images it
    annotates, and re-thresholded at half intensity.
    """
    rendered = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    return resize_bilinear(rendered, size) > 127


def _grow_network(
    curve: BezierCurve,
    depth: int,
    rng: np.random.Generator,
    spec: CrackSpec,
    canvas: np.ndarray,
) -> None:
    rasterize_crack(curve, spec, rng, canvas)
    if depth >= spec.branch_depth:
        return
    t_split = rng.uniform(*spec.branch_t_range)
    child = spawn_branch(curve, t_split, rng, spec)
    if child is not None:
        _grow_network(child, depth + 1, rng, spec, canvas)


def generate_triplet(clean_source: np.ndarray, spec: CrackSpec) -> Triplet:
    """Produce an aligned (clean, mask, damaged) triplet from an RGB source.

    The crack network is grown and refined on the source at its native
    resolution (the paper-scale pixel constants apply there), then image
    and mask are resized to ``target_size`` and the damage is burned in
    at the delivered resolution. The whole network derives from
    ``spec.seed``; see the module docstring for the draw-order contract.
    """
    clean_source = np.asarray(clean_source)
    if clean_source.ndim != 3 or clean_source.shape[2] != 3:
        raise ValueError("clean source must be an RGB image")
    src_h, src_w = clean_source.shape[:2]
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.curve_count_range
    count = int(rng.integers(lo, hi + 1))
    raw = np.zeros((src_h, src_w), dtype=bool)
    for _ in range(count):
        _grow_network(sample_curve(rng, src_w, src_h, spec), 0, rng, spec, raw)
    src_mask = refine_mask(raw, spec)
    clean = resize_bilinear(clean_source, spec.target_size)
    mask = resize_mask(src_mask, spec.target_size)
    damaged = apply_damage(clean, mask, spec)
    return Triplet(clean=clean, mask=mask, damaged=damaged)


def derive_seed(master_seed: int, index: int) -> int:
    """Stable per-image seed from (master seed, image index)."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def triplet_for_index(
    clean_source: np.ndarray, spec: CrackSpec, master_seed: int, index: int
) -> tuple[Triplet, int]:
    """Generate the index-th triplet of a dataset run; returns (triplet, seed)."""
    seed = derive_seed(master_seed, index)
    return generate_triplet(clean_source, replace(spec, seed=seed)), seed


def procedural_painting(
    seed: int,
    target_size: tuple[int, int] = (598, 375),
    scale: float = 3.6,
) -> np.ndarray:
    """Stand-in "clean painting": a pointillist canvas of bright daubs.

    Returns an RGB source of ``scale`` times ``target_size``, with the
    highlight structure sized so it reads correctly after the generator
    downscales it to the target. Used by the demos and the frozen
    evaluation corpus when no real scan collection is at hand.

    The dense bright daubs (value ~246 over a mid ground ~158) matter
    for two reasons: the morphological closing of such a surface sits
    near the daub level everywhere, so dark fissures keep the contrast
    the default detector threshold expects, and the daubs give the
    surface high local variance that distinguishes structure-preserving
    fills from flat averaging.
    """
    rng = np.random.default_rng(seed)
    wt, ht = target_size
    w, h = int(round(wt * scale)), int(round(ht * scale))
    spacing = 2.6 * scale
    radius = 1.15 * scale
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    grid_x = np.arange(0.0, w + spacing, spacing)
    grid_y = np.arange(0.0, h + spacing, spacing)
    daubs = np.zeros((h, w), dtype=bool)
    for cy in grid_y:
        jx = rng.uniform(-0.35 * spacing, 0.35 * spacing, len(grid_x))
        jy = cy + rng.uniform(-0.35 * spacing, 0.35 * spacing, len(grid_x))
        for j, cx in enumerate(grid_x):
            px, py = cx + jx[j], jy[j]
            x0 = int(max(px - radius - 1, 0))
            x1 = int(min(px + radius + 2, w))
            y0 = int(max(py - radius - 1, 0))
            y1 = int(min(py + radius + 2, h))
            if x0 >= x1 or y0 >= y1:
                continue
            window = (xx[y0:y1, x0:x1] - px) ** 2 + (yy[y0:y1, x0:x1] - py) ** 2
            daubs[y0:y1, x0:x1] |= window <= radius * radius
    img = np.empty((h, w, 3), dtype=np.float64)
    for c in range(3):
        grain = ndimage.gaussian_filter(rng.normal(0.0, 1.0, (h, w)), sigma=1.0 * scale)
        grain *= 8.0 / max(grain.std(), 1e-9)
        img[:, :, c] = np.where(
            daubs,
            246.0 + rng.uniform(-3.0, 3.0),
            158.0 + rng.uniform(-4.0, 4.0) + grain,
        )
    return np.clip(np.floor(img + 0.5), 70, 252).astype(np.uint8)
