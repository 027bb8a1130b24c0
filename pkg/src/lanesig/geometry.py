"""Geographic node sets and their discretized polar flow views."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

MILES_PER_DEGREE = 69.0
TWO_PI = 2.0 * math.pi

NODE_CSV_HEADER = ("id", "lat", "lon", "measure")


class NodeKind(str, Enum):
    FC = "FC"
    ZIP3 = "Zip3"
    DESTINATION = "destination"
    OTHER = "other"


@dataclass(frozen=True)
class GeoNode:
    """A weighted point: latitude/longitude in degrees plus a nonnegative measure.

    The measure is whatever the caller wants summed per polar bin: package
    counts, capacity, or a constant 1 for plain density.
    """

    id: str
    lat: float
    lon: float
    measure: float = 1.0

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"node {self.id!r}: lat {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"node {self.id!r}: lon {self.lon} outside [-180, 180]")
        if not (self.measure >= 0.0):
            raise ValueError(f"node {self.id!r}: measure must be nonnegative")


@dataclass(frozen=True)
class NodeSet:
    """A collection of nodes with unique ids."""

    nodes: tuple[GeoNode, ...]
    kind: NodeKind = NodeKind.OTHER

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        seen: set[str] = set()
        for node in self.nodes:
            if node.id in seen:
                raise ValueError(f"duplicate node id {node.id!r} in set")
            seen.add(node.id)

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[GeoNode]:
        return iter(self.nodes)

    def get(self, node_id: str) -> GeoNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def total_measure(self) -> float:
        return float(sum(node.measure for node in self.nodes))

    def scaled(self, factor: float) -> "NodeSet":
        """Same geometry with every measure multiplied by ``factor``."""
        return NodeSet(
            tuple(
                GeoNode(n.id, n.lat, n.lon, n.measure * factor) for n in self.nodes
            ),
            self.kind,
        )

    @classmethod
    def from_csv(cls, path: str | Path, kind: NodeKind = NodeKind.OTHER) -> "NodeSet":
        """Load ``id,lat,lon,measure`` rows; raises with the offending line number."""
        nodes = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != NODE_CSV_HEADER:
                raise ValueError(
                    f"{path}: expected header {','.join(NODE_CSV_HEADER)!r}, got {header!r}"
                )
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 4:
                    raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
                try:
                    nodes.append(
                        GeoNode(row[0], float(row[1]), float(row[2]), float(row[3]))
                    )
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from exc
        return cls(tuple(nodes), kind)


def write_node_csv(nodes: Iterable[GeoNode], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(NODE_CSV_HEADER)
        for node in nodes:
            writer.writerow([node.id, repr(node.lat), repr(node.lon), repr(node.measure)])


@dataclass(frozen=True)
class PolarGrid:
    """Discretization of the plane around an origin into angle and range bins.

    All bins are half-open ``[lo, hi)``. ``r_unit`` selects whether ``r_step``
    is in lat-lon degrees or in miles; miles are derived from planar degree
    distance at 69 miles per degree. The default covers most of the
    continental US: 4 quadrant directions by seventeen 100-mile rings.
    """

    theta_bins: int = 4
    r_bins: int = 17
    r_step: float = 100.0
    r_unit: str = "miles"

    def __post_init__(self) -> None:
        if self.theta_bins < 1:
            raise ValueError("theta_bins must be >= 1")
        if self.r_bins < 1:
            raise ValueError("r_bins must be >= 1")
        if not (self.r_step > 0.0):
            raise ValueError("r_step must be positive")
        if self.r_unit not in ("degrees", "miles"):
            raise ValueError(f"r_unit must be 'degrees' or 'miles', got {self.r_unit!r}")

    @property
    def theta_width(self) -> float:
        return TWO_PI / self.theta_bins

    @property
    def max_radius(self) -> float:
        """Outer edge of the last ring, in grid units."""
        return self.r_bins * self.r_step

    def radius_from_degrees(self, r_degrees: float) -> float:
        """Convert a planar degree distance into this grid's range unit."""
        if self.r_unit == "miles":
            return r_degrees * MILES_PER_DEGREE
        return r_degrees

    def direction_labels(self) -> tuple[str, ...]:
        """Compass labels for the quadrant preset, generic names otherwise."""
        if self.theta_bins == 4:
            return ("NE", "NW", "SW", "SE")
        return tuple(f"dir{k}" for k in range(self.theta_bins))


@dataclass(frozen=True, eq=False)
class PolarMatrix:
    """Measure totals on a (direction bin, range bin) grid around one origin."""

    values: np.ndarray
    origin_id: str
    grid: PolarGrid

    def __post_init__(self) -> None:
        expected = (self.grid.theta_bins, self.grid.r_bins)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != grid shape {expected}")
        self.values.setflags(write=False)


def to_polar(origin: GeoNode, node: GeoNode) -> tuple[float, float]:
    """Polar coordinates of ``node`` as seen from ``origin``.

    The range is planar Euclidean distance in lat-lon degrees. The angle is
    measured from due East rotating counter-clockwise (East 0, North pi/2,
    West pi, South 3*pi/2) and always lands in ``[0, 2*pi)``. A node
    coincident with the origin maps to ``(0.0, 0.0)``.
    """
    dlat = node.lat - origin.lat
    dlon = node.lon - origin.lon
    r = math.hypot(dlat, dlon)
    if r == 0.0:
        return 0.0, 0.0
    theta = math.atan2(dlat, dlon)
    if theta < 0.0:
        theta += TWO_PI
    if theta >= TWO_PI:
        # adding 2*pi to a tiny negative angle can round up to exactly 2*pi
        theta = 0.0
    return r, theta


def polar_bin(r_degrees: float, theta: float, grid: PolarGrid) -> tuple[int, int] | None:
    """Map polar coordinates to (direction row, range column), or None if out of range."""
    r = grid.radius_from_degrees(r_degrees)
    col = int(r // grid.r_step)
    if col >= grid.r_bins:
        return None
    row = int(theta // grid.theta_width)
    if row >= grid.theta_bins:
        # theta < 2*pi is guaranteed, but the division may still round up
        row = grid.theta_bins - 1
    return row, col


def polar_matrix(origin: GeoNode, nodes: NodeSet, grid: PolarGrid) -> PolarMatrix:
    """Sum node measures into a polar matrix viewed from ``origin``.

    Nodes at or beyond the outer ring edge are dropped, not clamped. An empty
    set yields an all-zero matrix.
    """
    values = np.zeros((grid.theta_bins, grid.r_bins))
    for node in nodes:
        r, theta = to_polar(origin, node)
        binned = polar_bin(r, theta, grid)
        if binned is None:
            continue
        row, col = binned
        values[row, col] += node.measure
    return PolarMatrix(values, origin.id, grid)
