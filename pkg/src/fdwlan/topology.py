"""Hexagonal cell grid and uniform station drops."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# axial-coordinate neighbour directions, counter-clockwise
_HEX_DIRS = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)]
_CELLS_PER_RINGS = {0: 1, 1: 7, 2: 19}


@dataclass
class Topology:
    ap_positions: np.ndarray  # (n_cells, 2)
    sta_positions: list[np.ndarray]  # per cell, (n_per_cell, 2)
    cell_radius: float
    association: list[int] = field(default_factory=list)  # STA global index -> cell

    def __post_init__(self):
        if not self.association:
            self.association = [c for c, stas in enumerate(self.sta_positions) for _ in range(len(stas))]

    @property
    def n_cells(self) -> int:
        return len(self.ap_positions)

    @property
    def n_stas(self) -> int:
        return sum(len(s) for s in self.sta_positions)

    def node_table(self):
        """Rows of (node id, role, x, y, cell id); APs first, then STAs cell by cell."""
        rows = []
        for c, (x, y) in enumerate(self.ap_positions):
            rows.append((c, "AP", float(x), float(y), c))
        nid = self.n_cells
        for c, stas in enumerate(self.sta_positions):
            for x, y in stas:
                rows.append((nid, "STA", float(x), float(y), c))
                nid += 1
        return rows

    def positions(self) -> np.ndarray:
        return np.array([(r[2], r[3]) for r in self.node_table()]).reshape(-1, 2)

    def cells(self) -> np.ndarray:
        return np.array([r[4] for r in self.node_table()], dtype=int)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("node_id\trole\tx\ty\tcell_id\n")
            for nid, role, x, y, c in self.node_table():
                fh.write(f"{nid}\t{role}\t{x:.6f}\t{y:.6f}\t{c}\n")


def generate_hex_grid(rings: int, cell_radius: float, spacing: float | None = None) -> np.ndarray:
    """Centres of a hexagonal cluster of 1, 7 or 19 cells, centre cell at the origin.

    Neighbouring centres are ``spacing`` apart, ``sqrt(3) * cell_radius`` unless given.
    """
    if rings not in _CELLS_PER_RINGS:
        raise ConfigError(f"rings must be 0, 1 or 2, got {rings!r}")
    if not cell_radius > 0:
        raise ConfigError(f"cell_radius must be positive, got {cell_radius!r}")
    if spacing is None:
        spacing = math.sqrt(3.0) * cell_radius

    centres = [(0, 0)]
    for ring in range(1, rings + 1):
        q, r = _HEX_DIRS[4][0] * ring, _HEX_DIRS[4][1] * ring
        for d in range(6):
            for _ in range(ring):
                centres.append((q, r))
                q += _HEX_DIRS[d][0]
                r += _HEX_DIRS[d][1]

    out = np.empty((len(centres), 2))
    for i, (q, r) in enumerate(centres):
        # axial -> cartesian, pointy-top orientation
        out[i, 0] = spacing * (q + r / 2.0)
        out[i, 1] = spacing * (r * math.sqrt(3.0) / 2.0)
    return out


def sample_disc(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    # sqrt on the radius keeps the density uniform over the area
    rad = radius * np.sqrt(rng.random(n))
    ang = rng.random(n) * 2.0 * math.pi
    return np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))


def place_stations(grid: np.ndarray, n_per_cell: int, cell_radius: float, rng: np.random.Generator) -> Topology:
    if n_per_cell < 1:
        raise ConfigError(f"n_per_cell must be >= 1, got {n_per_cell!r}")
    grid = np.asarray(grid, dtype=float).reshape(-1, 2)
    stas = [centre + sample_disc(n_per_cell, cell_radius, rng) for centre in grid]
    return Topology(ap_positions=grid, sta_positions=stas, cell_radius=cell_radius)
