"""Agent placement: Poisson point processes on unions of triangles."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class ConfigurationError(ValueError):
    """Raised for inconsistent model or run configuration."""


@dataclass(frozen=True)
class Triangle:
    t1: tuple[float, float]
    t2: tuple[float, float]
    t3: tuple[float, float]

    def __post_init__(self):
        for name in ("t1", "t2", "t3"):
            pt = tuple(float(c) for c in getattr(self, name))
            if len(pt) != 2 or not all(math.isfinite(c) for c in pt):
                raise ConfigurationError(f"triangle vertex {name} must be two finite numbers")
            object.__setattr__(self, name, pt)
        if self.area <= 0.0:
            raise ConfigurationError("degenerate triangle (zero area)")

    @classmethod
    def from_flat(cls, coords: Sequence[float]) -> "Triangle":
        if len(coords) != 6:
            raise ConfigurationError("a triangle needs exactly 6 coordinates")
        x1, y1, x2, y2, x3, y3 = coords
        return cls((x1, y1), (x2, y2), (x3, y3))

    def flat(self) -> list[float]:
        return [*self.t1, *self.t2, *self.t3]

    @property
    def area(self) -> float:
        (x1, y1), (x2, y2), (x3, y3) = self.t1, self.t2, self.t3
        return 0.5 * abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1))

    def vertices(self) -> np.ndarray:
        return np.array([self.t1, self.t2, self.t3], dtype=float)

    def contains(self, points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Boolean mask of points inside or on the boundary."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        a, b, c = self.vertices()

        def side(p, q):
            return (q[0] - p[0]) * (pts[:, 1] - p[1]) - (q[1] - p[1]) * (pts[:, 0] - p[0])

        d1, d2, d3 = side(a, b), side(b, c), side(c, a)
        scale = tol * max(1.0, float(np.abs(self.vertices()).max()) ** 2)
        has_neg = (d1 < -scale) | (d2 < -scale) | (d3 < -scale)
        has_pos = (d1 > scale) | (d2 > scale) | (d3 > scale)
        return ~(has_neg & has_pos)


def equilateral(side: float = 1.0) -> Triangle:
    return Triangle((0.0, 0.0), (side, 0.0), (side / 2.0, side * math.sqrt(3.0) / 2.0))


@dataclass(frozen=True)
class Domain:
    triangles: tuple[Triangle, ...]
    rates: tuple[float, ...] = field(default=())

    def __post_init__(self):
        tris = tuple(self.triangles)
        if not tris:
            raise ConfigurationError("domain needs at least one triangle")
        rates = tuple(float(r) for r in self.rates) if self.rates else (1.0,) * len(tris)
        if len(rates) != len(tris):
            raise ConfigurationError("rates must have one entry per triangle")
        if any(r < 0 or not math.isfinite(r) for r in rates):
            raise ConfigurationError("rates must be finite and >= 0")
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "rates", rates)


PLACEMENTS = ("triangle", "unreflected")


def map_unit_square(tri: Triangle, x: np.ndarray, y: np.ndarray, fold: bool = True) -> np.ndarray:
    """Map (x, y) in the unit square onto ``tri``.

    Draws with x + y > 1 are reflected through (1/2, 1/2), which maps the
    upper half of the square onto the lower one without changing measure.
    With ``fold=False`` no reflection happens and the points fill the
    parallelogram spanned by the two edges leaving ``t1``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if fold:
        flip = x + y > 1.0
        x = np.where(flip, 1.0 - x, x)
        y = np.where(flip, 1.0 - y, y)
    a, b, c = tri.vertices()
    return a + x[..., None] * (b - a) + y[..., None] * (c - a)


def sample_point_in_triangle(tri: Triangle, rng: np.random.Generator) -> np.ndarray:
    x, y = rng.random(2)
    return map_unit_square(tri, x, y)


def sample_in_triangle(
    tri: Triangle, count: int, rng: np.random.Generator, fold: bool = True
) -> np.ndarray:
    """``count`` independent uniform points in ``tri`` as a (count, 2) array."""
    xy = rng.random((count, 2))
    return map_unit_square(tri, xy[:, 0], xy[:, 1], fold).reshape(count, 2)


def sample_population(
    domain: Domain,
    rng: np.random.Generator,
    fixed_n: int | None = None,
    placement: str = "triangle",
) -> np.ndarray:
    """Agent positions, shape (n, 2).

    With ``fixed_n`` the domain must be a single triangle and exactly that
    many points are placed; otherwise each triangle receives a
    Poisson(rate * area) count.  ``placement="unreflected"`` skips the fold
    (see ``map_unit_square``); it exists to compare against results produced
    that way and is not a uniform sample of the domain.
    """
    if placement not in PLACEMENTS:
        raise ConfigurationError(f"placement must be one of {PLACEMENTS}")
    fold = placement == "triangle"
    if fixed_n is not None:
        if len(domain.triangles) != 1:
            raise ConfigurationError("a fixed agent count requires a single-triangle domain")
        if fixed_n < 0:
            raise ConfigurationError("fixed_n must be >= 0")
        return sample_in_triangle(domain.triangles[0], int(fixed_n), rng, fold)

    chunks = []
    for tri, rate in zip(domain.triangles, domain.rates):
        count = int(rng.poisson(rate * tri.area))
        chunks.append(sample_in_triangle(tri, count, rng, fold))
    return np.concatenate(chunks, axis=0) if chunks else np.empty((0, 2))


def domain_diameter(domain: Domain) -> float:
    verts = np.concatenate([t.vertices() for t in domain.triangles])
    best = 0.0
    for p, q in itertools.combinations(verts, 2):
        best = max(best, float(np.hypot(*(p - q))))
    return best


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
