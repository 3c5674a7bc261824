"""Array layout, direction conventions, steering vectors, and region sampling.

Angle convention: directions are measured from the array axis (+x), so
broadside is 90 deg and the phase of a uniform-linear-array steering vector is
``2*pi*m*(spacing/wavelength)*cos(theta)``.  All angles are degrees in
[0, 180].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInput


@dataclass(frozen=True)
class ArrayGeometry:
    """Sensor positions (meters), reference element, and operating wavelength."""

    elements: np.ndarray  # (M, 3)
    wavelength: float
    reference_index: int = 0

    def __post_init__(self):
        elems = np.atleast_2d(np.asarray(self.elements, dtype=float))
        if elems.ndim != 2 or elems.shape[1] != 3 or elems.shape[0] < 1:
            raise InvalidInput(f"elements must be (M, 3), got {elems.shape}")
        if not np.isfinite(elems).all():
            raise InvalidInput("element positions must be finite")
        m = elems.shape[0]
        for i in range(m):
            for j in range(i + 1, m):
                if np.allclose(elems[i], elems[j]):
                    raise InvalidInput(f"elements {i} and {j} coincide")
        if not (0 <= self.reference_index < m):
            raise InvalidInput("reference_index out of range")
        if not (self.wavelength > 0):
            raise InvalidInput("wavelength must be positive")
        object.__setattr__(self, "elements", elems)

    @property
    def num_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def reference(self) -> np.ndarray:
        return self.elements[self.reference_index]

    @property
    def centroid(self) -> np.ndarray:
        return self.elements.mean(axis=0)

    @property
    def aperture(self) -> float:
        d = self.elements[:, None, :] - self.elements[None, :, :]
        return float(np.sqrt((d**2).sum(axis=2)).max())

    @classmethod
    def ula(cls, num_elements: int, spacing: float, wavelength: float,
            origin=(0.0, 0.0, 0.0), reference_index: int = 0) -> "ArrayGeometry":
        """Uniform linear array along +x starting at ``origin``."""
        origin = np.asarray(origin, dtype=float)
        elems = origin + np.outer(np.arange(num_elements) * spacing, np.array([1.0, 0.0, 0.0]))
        return cls(elems, wavelength, reference_index)


@dataclass(frozen=True)
class RectangleRegion:
    """Axis-aligned rectangle in an XY plane at fixed height ``z``.

    Degenerate extents (a segment or a point) are allowed.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z: float = 0.0

    def __post_init__(self):
        if not (self.x_min <= self.x_max and self.y_min <= self.y_max):
            raise InvalidInput("rectangle corners are inverted (empty region)")

    @classmethod
    def from_corners(cls, corner_a, corner_b) -> "RectangleRegion":
        a = np.asarray(corner_a, dtype=float)
        b = np.asarray(corner_b, dtype=float)
        if a.shape != (3,) or b.shape != (3,):
            raise InvalidInput("corners must be 3-D points")
        if a[2] != b[2]:
            raise InvalidInput("rectangle corners must share the same height")
        return cls(min(a[0], b[0]), max(a[0], b[0]), min(a[1], b[1]), max(a[1], b[1]), a[2])

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(self.x_min - 1e-12 <= p[0] <= self.x_max + 1e-12
                    and self.y_min - 1e-12 <= p[1] <= self.y_max + 1e-12
                    and abs(p[2] - self.z) <= 1e-12)


@dataclass(frozen=True)
class SectorRegion:
    """Union of disjoint annular sectors in the z=0 plane, centered at ``center``.

    ``angle_intervals`` is a list of (low, high) degree pairs in [0, 180];
    radii are meters.  Sampling is area-uniform (radius density proportional
    to r, angle uniform within the union weighted by angular width).
    """

    angle_intervals: tuple  # ((lo, hi), ...)
    radius_min: float
    radius_max: float
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.angle_intervals)
        if not ivs:
            raise InvalidInput("sector needs at least one angle interval")
        for lo, hi in ivs:
            if not (0.0 <= lo < hi <= 180.0):
                raise InvalidInput(f"angle interval ({lo}, {hi}) outside [0, 180] or empty")
        for (lo1, hi1) in ivs:
            for (lo2, hi2) in ivs:
                if (lo1, hi1) != (lo2, hi2) and lo1 < hi2 and lo2 < hi1:
                    raise InvalidInput("angle intervals overlap")
        if not (0 < self.radius_min <= self.radius_max):
            raise InvalidInput("radii must satisfy 0 < radius_min <= radius_max")
        object.__setattr__(self, "angle_intervals", ivs)

    def contains_angle(self, theta_deg: float, tol: float = 1e-9) -> bool:
        return any(lo - tol <= theta_deg <= hi + tol for lo, hi in self.angle_intervals)

    def contains(self, p) -> bool:
        v = np.asarray(p, dtype=float) - np.asarray(self.center)
        r = float(np.hypot(v[0], v[1]))
        if not (self.radius_min - 1e-9 <= r <= self.radius_max + 1e-9):
            return False
        theta = np.degrees(np.arctan2(v[1], v[0]))
        return self.contains_angle(theta)


Region = RectangleRegion | SectorRegion


@dataclass(frozen=True)
class DirectionGrid:
    """Uniform scan grid in degrees; the default covers [0, 180] at 0.1 deg."""

    start_deg: float = 0.0
    end_deg: float = 180.0
    step_deg: float = 0.1

    def __post_init__(self):
        if not (self.start_deg < self.end_deg and self.step_deg > 0):
            raise InvalidInput("grid needs start < end and step > 0")

    @property
    def num_points(self) -> int:
        return int(round((self.end_deg - self.start_deg) / self.step_deg)) + 1

    @property
    def angles(self) -> np.ndarray:
        return np.linspace(self.start_deg, self.end_deg, self.num_points)


def steering_vector(geom: ArrayGeometry, theta_deg: float) -> np.ndarray:
    """Phase-only steering vector d(theta); entry at the reference element is 1."""
    return steering_matrix(geom, np.array([theta_deg]))[0]


def steering_matrix(geom: ArrayGeometry, angles_deg) -> np.ndarray:
    """Stack of steering vectors, shape (num_angles, M).

    The phase at element m is ``2*pi/lambda * (p_m - p_ref) . u(theta)`` with
    ``u(theta) = (cos theta, sin theta, 0)``; for a ULA along +x this is
    ``2*pi*m*(spacing/lambda)*cos(theta)``.
    """
    angles = np.radians(np.asarray(angles_deg, dtype=float))
    u = np.stack([np.cos(angles), np.sin(angles), np.zeros_like(angles)], axis=-1)
    offsets = geom.elements - geom.reference
    phase = 2.0 * np.pi / geom.wavelength * (u @ offsets.T)
    return np.exp(1j * phase)


def simulated_steering_vector(geom: ArrayGeometry, source) -> np.ndarray:
    """Free-space transfer function from ``source`` to each element.

    Entry m is ``(1/r_m) * exp(-2j*pi*r_m/lambda)`` with r_m the source-element
    distance.  A source coinciding with an element raises InvalidInput.
    """
    source = np.asarray(source, dtype=float)
    if source.shape != (3,):
        raise InvalidInput("source must be a 3-D position")
    r = np.linalg.norm(geom.elements - source, axis=1)
    if np.any(r <= 0.0):
        raise InvalidInput("source coincides with an array element")
    return np.exp(-2j * np.pi * r / geom.wavelength) / r


def sample_positions(region: Region, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. area-uniform positions from ``region``, shape (n, 3)."""
    if n < 1:
        raise InvalidInput("n must be >= 1")
    if isinstance(region, RectangleRegion):
        x = rng.uniform(region.x_min, region.x_max, size=n)
        y = rng.uniform(region.y_min, region.y_max, size=n)
        return np.column_stack([x, y, np.full(n, region.z)])
    if isinstance(region, SectorRegion):
        widths = np.array([hi - lo for lo, hi in region.angle_intervals])
        choice = rng.choice(len(widths), size=n, p=widths / widths.sum())
        u = rng.uniform(size=n)
        theta = np.array([region.angle_intervals[k][0] for k in choice]) + u * widths[choice]
        # radius density proportional to r for area uniformity
        r2 = rng.uniform(region.radius_min**2, region.radius_max**2, size=n)
        r = np.sqrt(r2)
        theta_rad = np.radians(theta)
        pts = np.column_stack([r * np.cos(theta_rad), r * np.sin(theta_rad), np.zeros(n)])
        return pts + np.asarray(region.center)
    raise InvalidInput(f"unsupported region type {type(region)!r}")


def true_doa(geom: ArrayGeometry, source) -> float:
    """Ground-truth direction of ``source`` in degrees.

    Angle between the +x array axis and the projection of
    ``source - centroid`` onto the XY plane, in [0, 180].  The centroid is the
    reference point because a finite-range wavefront's best-fit plane-wave
    direction across the aperture is taken from the array center.
    """
    v = np.asarray(source, dtype=float) - geom.centroid
    norm = np.hypot(v[0], v[1])
    if norm == 0.0:
        return 90.0
    return float(np.degrees(np.arccos(np.clip(v[0] / norm, -1.0, 1.0))))
