"""Fixed library of arc motion primitives.

Each primitive is an initial point turn followed by two constant-curvature
arcs of 1.65 m each, for a 3.3 m path. The default library is the
Cartesian product of 18 point-turn angles (multiples of 20 degrees,
including none) and 13 signed curvatures for each arc: 18 * 13 * 13 =
3042 trajectories.

Trajectory headings are measured from the +y axis, counterclockwise
positive: the robot starts at the origin facing up the map, so the
zero-rotation straight primitive runs along +y and ends at (0, 3.3, 0).
Positive curvature bends left (toward -x). Waypoints are spaced 6 cm in
arc length, with a shorter final segment closing each arc exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np


class InvalidConfig(ValueError):
    """Action-space construction inputs have the wrong shape."""


# 13 signed curvatures (1/m): radii 2, 3, 4, 6, 10, 20 m each way plus
# straight. Kept shallow enough that 6 cm chords undercount each arc by
# less than 1e-4 relative.
DEFAULT_CURVATURES = tuple(
    float(Fraction(num, den))
    for num, den in (
        (-1, 2), (-1, 3), (-1, 4), (-1, 6), (-1, 10), (-1, 20),
        (0, 1),
        (1, 20), (1, 10), (1, 6), (1, 4), (1, 3), (1, 2),
    )
)

# 18 point-turn angles: multiples of 20 degrees including no rotation.
DEFAULT_ROTATIONS = tuple(math.radians(20.0 * k) for k in range(18))

ARC_LENGTH = 1.65
STEP_SPACING = 0.06


@dataclass(frozen=True)
class PrimitiveSpec:
    """One motion primitive: point turn + two arcs.

    ``rotation`` is the initial in-place turn in radians; ``curvature1``
    and ``curvature2`` are the signed arc curvatures in 1/m (0 for
    straight); each arc is ``arc_length`` meters.
    """

    rotation: float
    curvature1: float
    curvature2: float
    arc_length: float = ARC_LENGTH

    def mirrored(self) -> "PrimitiveSpec":
        """Reflection across the +y axis: negate rotation and curvatures."""
        return PrimitiveSpec(
            rotation=-self.rotation,
            curvature1=-self.curvature1,
            curvature2=-self.curvature2,
            arc_length=self.arc_length,
        )


@dataclass(frozen=True)
class Trajectory:
    """A primitive discretized into (x, y, yaw) waypoints.

    ``waypoints[0]`` is the post-rotation start pose (0, 0, rotation);
    consecutive waypoints are ``step_spacing`` apart in arc length except
    for the shorter closing segment of each arc.
    """

    spec: PrimitiveSpec
    waypoints: np.ndarray  # shape (n, 3)
    step_spacing: float = STEP_SPACING

    @property
    def chord_length(self) -> float:
        """Total length of the waypoint polyline."""
        d = np.diff(self.waypoints[:, :2], axis=0)
        return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


def build_action_space(
    curvatures=DEFAULT_CURVATURES,
    rotations=DEFAULT_ROTATIONS,
    arc_length: float = ARC_LENGTH,
) -> list[PrimitiveSpec]:
    """Cartesian product of rotations and the two arc curvatures.

    Ordering is rotation-major, then curvature1, then curvature2, and is
    the stable trajectory-ID order used everywhere downstream.
    """
    curvatures = tuple(float(c) for c in curvatures)
    rotations = tuple(float(r) for r in rotations)
    if not curvatures or not rotations:
        raise InvalidConfig("curvature and rotation sets must be nonempty")
    if len(curvatures) != len(set(curvatures)):
        raise InvalidConfig("curvature set contains duplicates")
    if len(rotations) != len(set(rotations)):
        raise InvalidConfig("rotation set contains duplicates")
    return [
        PrimitiveSpec(rotation=rot, curvature1=k1, curvature2=k2, arc_length=arc_length)
        for rot in rotations
        for k1 in curvatures
        for k2 in curvatures
    ]


def default_action_space() -> list[PrimitiveSpec]:
    """The standard 18 x 13 x 13 = 3042 primitive library."""
    space = build_action_space()
    assert len(space) == 3042
    return space


def _arc_points(x0: float, y0: float, yaw0: float, curvature: float,
                arc_length: float, spacing: float) -> np.ndarray:
    """Waypoints along one arc, excluding its start pose.

    Heading h(yaw) = (-sin yaw, cos yaw); closed-form integration along a
    circle of radius 1/|curvature| (or a line for curvature 0).
    """
    n_full = int(math.floor(arc_length / spacing + 1e-12))
    s = np.arange(1, n_full + 1) * spacing
    if n_full == 0 or s[-1] < arc_length - 1e-12:
        s = np.append(s, arc_length)
    yaw = yaw0 + curvature * s
    if curvature == 0.0:
        x = x0 - s * math.sin(yaw0)
        y = y0 + s * math.cos(yaw0)
    else:
        x = x0 + (np.cos(yaw) - math.cos(yaw0)) / curvature
        y = y0 + (np.sin(yaw) - math.sin(yaw0)) / curvature
    return np.column_stack([x, y, yaw])


def discretize(spec: PrimitiveSpec, spacing: float = STEP_SPACING) -> Trajectory:
    """Trace a primitive into equally spaced waypoints.

    The point turn contributes only the start pose (0, 0, rotation); the
    second arc starts from the first arc's exact end pose. With 6 cm
    spacing and 1.65 m arcs each arc contributes 28 waypoints (27 full
    steps plus its endpoint), giving 57 waypoints per trajectory
    including the start.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    start = np.array([[0.0, 0.0, spec.rotation]])
    arc1 = _arc_points(0.0, 0.0, spec.rotation, spec.curvature1, spec.arc_length, spacing)
    x1, y1, yaw1 = arc1[-1]
    arc2 = _arc_points(x1, y1, yaw1, spec.curvature2, spec.arc_length, spacing)
    waypoints = np.concatenate([start, arc1, arc2], axis=0)
    return Trajectory(spec=spec, waypoints=waypoints, step_spacing=spacing)


def write_manifest(space: list[PrimitiveSpec], path) -> None:
    """Dump the action space as a text manifest with stable IDs.

    One line per primitive: index, rotation in degrees, curvature1,
    curvature2 (repr precision, whitespace separated).
    """
    lines = ["# index rotation_deg curvature1 curvature2"]
    for i, spec in enumerate(space):
        lines.append(
            f"{i} {math.degrees(spec.rotation):.6f} {spec.curvature1!r} {spec.curvature2!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> list[PrimitiveSpec]:
    """Parse a manifest written by ``write_manifest``."""
    space = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        idx, rot_deg, k1, k2 = line.split()
        if int(idx) != len(space):
            raise ValueError(f"manifest indices out of order at {raw!r}")
        space.append(
            PrimitiveSpec(
                rotation=math.radians(float(rot_deg)),
                curvature1=float(k1),
                curvature2=float(k2),
            )
        )
    return space
