"""Mixture distributions with known positive support, and pool datasets.

A pool is drawn i.i.d. from ``p * P_plus + (1 - p) * P_minus``.  Each side is
a weighted mixture of components; a component is a density (uniform, or a
Gaussian truncated to its region) over a box or a ball.  The positive support
is the union of the positive components' regions, and membership in it is
what the optimal learner needs, so every sampled point carries that flag.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, FormatError, SamplingError
from .rng import make_rng

MAX_REJECTION_ATTEMPTS = 10**6
PRESETS = ("cube-overlap", "two-clusters", "ball-in-sea")


def _as_points(x, dim):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ConfigError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return arr


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``[low, high]``."""

    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self):
        low = tuple(float(v) for v in self.low)
        high = tuple(float(v) for v in self.high)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        if len(low) != len(high) or not low:
            raise ConfigError("box low/high must be non-empty and of equal length")
        if not all(lo < hi for lo, hi in zip(low, high)):
            raise ConfigError(f"box needs low < high on every axis, got {low} / {high}")

    @property
    def dim(self) -> int:
        return len(self.low)

    @property
    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in zip(self.low, self.high))

    def contains(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        return np.all((pts >= self.low) & (pts <= self.high), axis=1)

    def sample_uniform(self, rng, k):
        low = np.asarray(self.low)
        return low + (np.asarray(self.high) - low) * rng.random((k, self.dim))

    def to_dict(self):
        return {"kind": "box", "low": list(self.low), "high": list(self.high)}


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball."""

    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.center:
            raise ConfigError("ball center must be non-empty")
        if not self.radius > 0:
            raise ConfigError(f"ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        d = self.dim
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * self.radius**d

    def contains(self, x) -> np.ndarray:
        pts = _as_points(x, self.dim)
        diff = pts - np.asarray(self.center)
        return np.einsum("ij,ij->i", diff, diff) <= self.radius**2

    def sample_uniform(self, rng, k):
        direction = rng.standard_normal((k, self.dim))
        norms = np.linalg.norm(direction, axis=1, keepdims=True)
        # a zero normal draw has probability 0; guard anyway
        norms[norms == 0] = 1.0
        r = self.radius * rng.random((k, 1)) ** (1.0 / self.dim)
        pts = np.asarray(self.center) + direction / norms * r
        # rounding can push a point a hair outside; pull it back to the center
        outside = ~self.contains(pts)
        if outside.any():
            pts[outside] = np.asarray(self.center)
        return pts

    def to_dict(self):
        return {"kind": "ball", "center": list(self.center), "radius": self.radius}


Region = Box | Ball


def region_from_dict(d) -> Region:
    kind = d.get("kind")
    if kind == "box":
        return Box(d["low"], d["high"])
    if kind == "ball":
        return Ball(d["center"], d["radius"])
    raise ConfigError(f"unknown region kind {kind!r}")


@dataclass(frozen=True)
class ComponentSpec:
    """One mixture component: a density restricted to ``region``.

    ``density`` is ``"uniform"`` or ``"gaussian"``; the Gaussian is truncated
    to the region and needs ``mean`` and a per-axis ``std``.
    """

    region: Region
    density: str = "uniform"
    weight: float = 1.0
    mean: tuple[float, ...] | None = None
    std: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.density not in ("uniform", "gaussian"):
            raise ConfigError(f"unknown density {self.density!r}")
        if not 0 < self.weight <= 1:
            raise ConfigError(f"component weight must be in (0, 1], got {self.weight}")
        if self.density == "gaussian":
            if self.mean is None or self.std is None:
                raise ConfigError("gaussian component needs mean and std")
            mean = tuple(float(v) for v in self.mean)
            std = tuple(float(v) for v in self.std)
            if len(mean) != self.region.dim or len(std) != self.region.dim:
                raise ConfigError("gaussian mean/std must match the region dimension")
            if not all(s > 0 for s in std):
                raise ConfigError("gaussian std must be positive on every axis")
            object.__setattr__(self, "mean", mean)
            object.__setattr__(self, "std", std)

    def sample(self, rng, k, name="component"):
        if k == 0:
            return np.empty((0, self.region.dim))
        if self.density == "uniform":
            return self.region.sample_uniform(rng, k)
        out = np.empty((k, self.region.dim))
        pending = np.arange(k)
        attempts = 0
        while pending.size:
            attempts += 1
            if attempts > MAX_REJECTION_ATTEMPTS:
                raise SamplingError(
                    f"{name}: truncated Gaussian rejection exceeded "
                    f"{MAX_REJECTION_ATTEMPTS} attempts per point"
                )
            cand = rng.normal(self.mean, self.std, size=(pending.size, self.region.dim))
            ok = self.region.contains(cand)
            out[pending[ok]] = cand[ok]
            pending = pending[~ok]
        return out

    def to_dict(self):
        d = {"region": self.region.to_dict(), "density": self.density, "weight": self.weight}
        if self.density == "gaussian":
            d["mean"] = list(self.mean)
            d["std"] = list(self.std)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            region=region_from_dict(d["region"]),
            density=d.get("density", "uniform"),
            weight=float(d.get("weight", 1.0)),
            mean=d.get("mean"),
            std=d.get("std"),
        )


@dataclass(frozen=True)
class DistributionSpec:
    dim: int
    mixture_p: float
    positive_components: tuple[ComponentSpec, ...]
    negative_components: tuple[ComponentSpec, ...]
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "positive_components", tuple(self.positive_components))
        object.__setattr__(self, "negative_components", tuple(self.negative_components))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError(f"dim must be a positive integer, got {self.dim}")
        if not 0 < self.mixture_p < 1:
            raise ConfigError(f"mixture p must be in (0, 1), got {self.mixture_p}")
        for side, comps in (("positive", self.positive_components),
                            ("negative", self.negative_components)):
            if not comps:
                raise ConfigError(f"at least one {side} component is required")
            if any(c.region.dim != self.dim for c in comps):
                raise ConfigError(f"{side} component dimension differs from dim={self.dim}")
            total = sum(c.weight for c in comps)
            if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
                raise ConfigError(f"{side} component weights sum to {total}, not 1")

    @property
    def n_positive_components(self) -> int:
        return len(self.positive_components)

    def to_dict(self):
        return {
            "dim": self.dim,
            "p": self.mixture_p,
            "positive": [c.to_dict() for c in self.positive_components],
            "negative": [c.to_dict() for c in self.negative_components],
        }

    @classmethod
    def from_dict(cls, d, name="custom"):
        try:
            return cls(
                dim=int(d["dim"]),
                mixture_p=float(d["p"]),
                positive_components=[ComponentSpec.from_dict(c) for c in d["positive"]],
                negative_components=[ComponentSpec.from_dict(c) for c in d["negative"]],
                name=name,
            )
        except KeyError as exc:
            raise ConfigError(f"distribution is missing field {exc.args[0]!r}") from None


def contains_positive_support(spec: DistributionSpec, x) -> np.ndarray | bool:
    """Closed membership test for the positive support.

    Returns a bool for a single point, a boolean array for an ``(k, D)`` array.
    """
    single = np.ndim(x) == 1
    pts = _as_points(x, spec.dim)
    inside = np.zeros(len(pts), dtype=bool)
    for comp in spec.positive_components:
        inside |= comp.region.contains(pts)
    return bool(inside[0]) if single else inside


def make_preset(name: str, dim: int, p: float) -> DistributionSpec:
    """Build one of the named benchmark distributions.

    cube-overlap
        positives uniform on ``[0, 1]^D``, negatives uniform on ``[-1, 2]^D``.
    two-clusters
        positives split evenly between ``[0, 1]^D`` and ``[3, 4] x [0, 1]^(D-1)``,
        negatives uniform on ``[-1, 5] x [-1, 2]^(D-1)``.
    ball-in-sea
        positives uniform on the unit ball at the origin, negatives uniform on
        ``[-3, 3]^D``.
    """
    if int(dim) != dim or dim < 1:
        raise ConfigError(f"dim must be a positive integer, got {dim}")
    dim = int(dim)
    if name == "cube-overlap":
        pos = [ComponentSpec(Box([0.0] * dim, [1.0] * dim))]
        neg = [ComponentSpec(Box([-1.0] * dim, [2.0] * dim))]
    elif name == "two-clusters":
        rest_lo, rest_hi = [0.0] * (dim - 1), [1.0] * (dim - 1)
        pos = [
            ComponentSpec(Box([0.0] + rest_lo, [1.0] + rest_hi), weight=0.5),
            ComponentSpec(Box([3.0] + rest_lo, [4.0] + rest_hi), weight=0.5),
        ]
        neg = [ComponentSpec(Box([-1.0] + [-1.0] * (dim - 1), [5.0] + [2.0] * (dim - 1)))]
    elif name == "ball-in-sea":
        pos = [ComponentSpec(Ball([0.0] * dim, 1.0))]
        neg = [ComponentSpec(Box([-3.0] * dim, [3.0] * dim))]
    else:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return DistributionSpec(dim, p, pos, neg, name=name)


@dataclass(frozen=True, eq=False)
class Dataset:
    """A realized pool.

    ``in_support`` is ``None`` when support membership is unknown (ingested
    data); otherwise a boolean array aligned with ``points``.
    """

    points: np.ndarray
    labels: np.ndarray
    in_support: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64, order="C")
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise ConfigError(f"points must be a non-empty (n, D) array, got {points.shape}")
        labels = np.array(self.labels, dtype=bool)
        if labels.shape != (len(points),):
            raise ConfigError("labels must have one entry per point")
        points.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        if self.in_support is not None:
            sup = np.array(self.in_support, dtype=bool)
            if sup.shape != labels.shape:
                raise ConfigError("in_support must have one entry per point")
            if np.any(labels & ~sup):
                raise ConfigError("a positive point lies outside the positive support")
            sup.setflags(write=False)
            object.__setattr__(self, "in_support", sup)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def support_known(self) -> bool:
        return self.in_support is not None


def sample_dataset(spec: DistributionSpec, n: int, seed: int) -> Dataset:
    """Draw ``n`` i.i.d. points from ``spec``; deterministic in ``(spec, n, seed)``."""
    if int(n) != n or n < 1:
        raise ConfigError(f"n must be a positive integer, got {n}")
    n = int(n)
    rng = make_rng(seed)
    labels = rng.random(n) < spec.mixture_p
    points = np.empty((n, spec.dim))
    for side, comps in ((True, spec.positive_components), (False, spec.negative_components)):
        idx = np.flatnonzero(labels == side)
        weights = np.array([c.weight for c in comps])
        which = rng.choice(len(comps), size=idx.size, p=weights / weights.sum())
        for c, comp in enumerate(comps):
            sel = idx[which == c]
            tag = f"{'positive' if side else 'negative'} component {c}"
            points[sel] = comp.sample(rng, sel.size, name=tag)
    return Dataset(points, labels, contains_positive_support(spec, points), seed)


def _parse_float(cell):
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_dataset(path, keep_support: bool = False) -> Dataset:
    """Read a pool from CSV: D coordinate columns, then a 0/1 label column.

    Lines starting with ``#`` are skipped; a first line with no numeric cell
    is a header.  A header ending in an ``in_support`` column (as written by
    :func:`save_dataset`) marks that column as support flags, which are
    dropped unless ``keep_support`` is set.
    """
    path = Path(path)
    rows: list[list[float]] = []
    labels: list[bool] = []
    support: list[bool] = []
    header = None
    width = None
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            if not cells or (len(cells) == 1 and not cells[0].strip()):
                continue
            if cells[0].lstrip().startswith("#"):
                continue
            cells = [c.strip() for c in cells]
            if header is None and not rows and all(_parse_float(c) is None for c in cells):
                header = [c.lower() for c in cells]
                continue
            if width is None:
                width = len(cells)
                if header is not None and len(header) != width:
                    raise FormatError(
                        f"{width} columns but the header has {len(header)}", row=lineno
                    )
                has_support = header is not None and header[-1] == "in_support"
                if width < (3 if has_support else 2):
                    raise FormatError("need at least one coordinate and a label column", row=lineno)
            elif len(cells) != width:
                raise FormatError(f"expected {width} columns, found {len(cells)}", row=lineno)
            flag_cells = cells[-2:] if has_support else cells[-1:]
            coord_cells = cells[: width - len(flag_cells)]
            coords = [_parse_float(c) for c in coord_cells]
            if any(v is None for v in coords):
                bad = coord_cells[coords.index(None)]
                raise FormatError(f"non-numeric coordinate {bad!r}", row=lineno)
            flags = []
            for c in flag_cells:
                if c not in ("0", "1"):
                    raise FormatError(f"label/flag must be 0 or 1, got {c!r}", row=lineno)
                flags.append(c == "1")
            rows.append(coords)
            labels.append(flags[0])
            if has_support:
                support.append(flags[1])
    if not rows:
        raise FormatError(f"{path}: no data rows")
    in_support = np.array(support) if (support and keep_support) else None
    try:
        return Dataset(np.array(rows), np.array(labels), in_support, None)
    except ConfigError as exc:
        raise FormatError(str(exc)) from None


def save_dataset(dataset: Dataset, path, comment: str | None = None) -> None:
    """Write ``dataset`` as CSV; coordinates use shortest round-trip repr."""
    cols = [f"x{j}" for j in range(dataset.dim)] + ["label"]
    if dataset.support_known:
        cols.append("in_support")
    lines = []
    if comment is not None:
        lines.append("# " + comment)
    lines.append(",".join(cols))
    sup = dataset.in_support
    for i, row in enumerate(dataset.points.tolist()):
        cells = [repr(v) for v in row]
        cells.append("1" if dataset.labels[i] else "0")
        if sup is not None:
            cells.append("1" if sup[i] else "0")
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def positive_support_mass(spec: DistributionSpec, samples: int = 200_000, seed: int = 0) -> float:
    """Monte Carlo estimate of P(positive support) under the full mixture."""
    return float(sample_dataset(spec, samples, seed).in_support.mean())


__all__: Sequence[str] = [
    "Ball", "Box", "ComponentSpec", "Dataset", "DistributionSpec", "PRESETS",
    "contains_positive_support", "load_dataset", "make_preset", "sample_dataset",
    "save_dataset", "region_from_dict", "positive_support_mass",
]
