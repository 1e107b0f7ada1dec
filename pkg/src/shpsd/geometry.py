"""Spherical microphone array geometry."""

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .sphmath import SphericalDirection, num_modes


@dataclass
class ArrayGeometry:
    """Microphone positions on a sphere of given radius.

    `order` is the maximum spherical harmonic order the array supports; the
    number of microphones must satisfy Q >= (order+1)^2.
    """

    mic_dirs: list
    radius: float = 0.042
    kind: str = "open"
    order: int = 4

    def __post_init__(self):
        if self.kind not in ("open", "rigid"):
            raise ValueError(f"array kind must be 'open' or 'rigid', got {self.kind!r}")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if len(self.mic_dirs) < num_modes(self.order):
            raise ValueError(
                f"need at least {num_modes(self.order)} microphones for order "
                f"{self.order}, got {len(self.mic_dirs)}"
            )
        seen = {(round(d.theta, 9), round(d.phi, 9)) for d in self.mic_dirs}
        if len(seen) != len(self.mic_dirs):
            raise ValueError("microphone directions must be distinct")

    @property
    def num_mics(self):
        return len(self.mic_dirs)

    def mic_positions(self):
        """Cartesian microphone positions, shape (Q, 3)."""
        return self.radius * np.array([d.to_cartesian() for d in self.mic_dirs])


def load_mic_directions(path):
    """Read a geometry CSV with theta_deg,phi_deg rows."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError("geometry CSV must have two columns: theta_deg,phi_deg")
    return [SphericalDirection.from_degrees(t, p) for t, p in data]


def default_mic_directions():
    """Near-uniform 32-point spherical layout (pentakis-dodecahedron vertices)."""
    with resources.as_file(resources.files("shpsd.data") / "mic32.csv") as p:
        return load_mic_directions(p)


def default_geometry(radius=0.042, kind="open", order=4):
    return ArrayGeometry(
        mic_dirs=default_mic_directions(), radius=radius, kind=kind, order=order
    )
