"""Skid-steer robot geometry and static pose on terrain.

The platform is rigid: four wheel contacts are point samples of the
terrain at the wheel centers, and the chassis attitude is the
least-squares plane through them. With contacts at the corners of the
(wheelbase x wheel_track) rectangle the fit has a closed form:

    p = (zFL + zFR - zRL - zRR) / (2 * wheelbase)    forward slope
    q = (zFL - zFR + zRL - zRR) / (2 * wheel_track)  leftward slope
    r = mean(z)                                      height at center

Pose yaw is measured from the +x axis, counterclockwise; at yaw 0 the
robot faces +x and the front wheels sit at x + wheelbase/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .terrain import ElevationMap

_DEFAULT_CONFIG = Path(__file__).parent / "robot_default.cfg"

_CONFIG_FIELDS_M = (
    "wheelbase", "wheel_track", "wheel_width",
    "body_length", "body_width",
    "ride_height", "max_step",
)


@dataclass(frozen=True)
class RobotConfig:
    """Geometric and mobility parameters of the simulated platform.

    Lengths in meters, ``max_tilt`` in radians. The shipped defaults
    approximate a mid-size 4-wheel skid-steer platform and are meant to
    be overridden from a config file, never baked into logic.
    """

    wheelbase: float
    wheel_track: float
    wheel_width: float
    body_length: float
    body_width: float
    ride_height: float
    max_step: float
    max_tilt: float

    def __post_init__(self):
        for name in ("wheelbase", "wheel_track", "wheel_width", "body_length",
                     "body_width", "ride_height", "max_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.max_tilt < math.pi / 2:
            raise ValueError("max_tilt must be in (0, pi/2) radians")
        if self.body_length < self.wheelbase or self.body_width < self.wheel_track:
            raise ValueError("body footprint must cover the wheel footprint")

    @property
    def half_diagonal(self) -> float:
        """Center-to-corner reach of the body rectangle."""
        return 0.5 * math.hypot(self.body_length, self.body_width)

    @classmethod
    def from_file(cls, path) -> "RobotConfig":
        """Load from a plain-text ``key = value`` file.

        All fields are required; lengths in meters, tilt limit in degrees
        (``max_tilt_deg``), converted to radians on load.
        """
        from .terrain import _parse_kv_file

        raw = _parse_kv_file(Path(path))
        missing = [k for k in (*_CONFIG_FIELDS_M, "max_tilt_deg") if k not in raw]
        if missing:
            raise ValueError(f"robot config {path} is missing fields: {', '.join(missing)}")
        kwargs = {k: float(raw[k]) for k in _CONFIG_FIELDS_M}
        kwargs["max_tilt"] = math.radians(float(raw["max_tilt_deg"]))
        return cls(**kwargs)

    @classmethod
    def default(cls) -> "RobotConfig":
        return cls.from_file(_DEFAULT_CONFIG)


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(a + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose:
    """Static chassis pose: world position, heading, and attitude.

    ``z`` is the fitted contact-plane height under the robot center;
    ``pitch`` is the terrain slope angle along the forward axis, ``roll``
    along the leftward axis (both positive when the ground rises that
    way). yaw is normalized to (-pi, pi].
    """

    x: float
    y: float
    yaw: float
    z: float
    roll: float
    pitch: float

    @property
    def tilt(self) -> float:
        """Angle between the contact-plane normal and world vertical."""
        return math.atan(math.hypot(math.tan(self.pitch), math.tan(self.roll)))


@dataclass(frozen=True)
class WheelContacts:
    """Four wheel contact points (x, y, z), ordered FL, FR, RL, RR."""

    points: np.ndarray  # shape (4, 3)

    @property
    def z(self) -> np.ndarray:
        return self.points[:, 2]


def wheel_offsets(cfg: RobotConfig) -> np.ndarray:
    """Body-frame wheel centers (FL, FR, RL, RR), shape (4, 2)."""
    hl = cfg.wheelbase / 2.0
    ht = cfg.wheel_track / 2.0
    return np.array([[hl, ht], [hl, -ht], [-hl, ht], [-hl, -ht]])


def rotate_offsets(offsets: np.ndarray, yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    x = offsets[:, 0] * c - offsets[:, 1] * s
    y = offsets[:, 0] * s + offsets[:, 1] * c
    return np.stack([x, y], axis=1)


def wheel_positions(cfg: RobotConfig, x: float, y: float, yaw: float) -> np.ndarray:
    """World (x, y) of the four wheel centers at the given pose, (4, 2)."""
    return rotate_offsets(wheel_offsets(cfg), yaw) + np.array([x, y])


def fit_contact_plane(cfg: RobotConfig, z: np.ndarray):
    """Closed-form least-squares plane through four corner contacts.

    Returns (p, q, r): forward slope, leftward slope, and plane height at
    the robot center, in the body frame.
    """
    z_fl, z_fr, z_rl, z_rr = z
    p = (z_fl + z_fr - z_rl - z_rr) / (2.0 * cfg.wheelbase)
    q = (z_fl - z_fr + z_rl - z_rr) / (2.0 * cfg.wheel_track)
    r = 0.25 * (z_fl + z_fr + z_rl + z_rr)
    return p, q, r


def solve_pose(cfg: RobotConfig, emap: ElevationMap, x: float, y: float, yaw: float):
    """Place the robot at (x, y, yaw) and solve its static pose.

    Samples the terrain under each wheel, fits the contact plane, and
    reads attitude off the fitted normal. Returns (Pose, WheelContacts);
    raises OutOfBounds if a wheel leaves the map.
    """
    xy = wheel_positions(cfg, x, y, yaw)
    z = np.asarray(emap.elevation_at(xy[:, 0], xy[:, 1]))
    p, q, r = fit_contact_plane(cfg, z)
    pose = Pose(
        x=x, y=y, yaw=normalize_angle(yaw),
        z=float(r), roll=math.atan(q), pitch=math.atan(p),
    )
    contacts = WheelContacts(points=np.column_stack([xy, z]))
    return pose, contacts
